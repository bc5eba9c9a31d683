"""Constructors for the state families used throughout the package.

Secret subsystems are labelled ``A1 .. AN`` and single shields ``A'1 .. A'N``
unless a constructor reproduces a specific named layout (the counterexamples,
the three-player private-state network and the Example-2 families, which use
``A, B, C`` with shields ``A'1, B'2, ...``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .exceptions import DecompositionUnavailableError, DimensionMismatchError, LayoutError
from .qmath import (
    LocalOperator,
    QuantumState,
    Role,
    Subsystem,
    SystemLayout,
    apply_local,
    as_rng,
    embed_operator,
    parity_strings,
    permute_subsystems,
    random_density_matrix,
    random_state_vector,
    random_unitary,
    reduced_matrix,
    state_from_amplitudes,
    tensor,
)

PLAYER_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _check_unitary(u: np.ndarray, what: str) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatchError(f"{what}: not a square matrix")
    err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
    if err > DEFAULT_TOLERANCES.unitarity:
        raise DimensionMismatchError(f"{what}: not unitary (deviation {err:.2e})")
    return u


def _as_sigma(sigma, dim: int, what: str = "sigma") -> np.ndarray:
    s = np.asarray(sigma, dtype=complex)
    if s.ndim == 1 and s.shape == (dim,):
        return s / np.linalg.norm(s)
    if s.ndim == 2 and s.shape == (dim, dim):
        return s
    raise DimensionMismatchError(f"{what} has shape {s.shape}, expected ({dim},) or ({dim}, {dim})")


# ---------------------------------------------------------------------------
# GHZ and GSS


def ghz_state(n: int, d: int = 2) -> QuantumState:
    """Uniform superposition over the zero-sum dit strings, no shields."""
    if n < 2 or d < 2:
        raise ValueError("ghz_state needs n >= 2 and d >= 2")
    layout = SystemLayout(tuple(Subsystem(f"A{k}", k, Role.SECRET, d) for k in range(1, n + 1)))
    amp = d ** (-(n - 1) / 2)
    return state_from_amplitudes(layout, {s: amp for s in parity_strings(n, d)})


@dataclass(frozen=True, eq=False)
class GssSpec:
    """Recipe for a twisted GSS state in chained pairwise form.

    ``pair_unitaries[t]`` maps ``(a, b)`` to a unitary on the shields of
    players ``order[t]`` and ``order[t+1]`` (those two players' shield
    subsystems concatenated in that order).  ``a`` is the running digit sum
    ``i_{order[0]} + ... + i_{order[t]}`` and ``b`` the digit of
    ``order[t+1]``.  Missing keys mean identity; ``(0, 0)`` must be identity.

    ``sigma`` is a vector or density matrix on all shields, players in
    increasing order.  ``sigma_components`` optionally records sigma as a
    convex combination of player-wise product states,
    ``[(weight, (rho_1, ..., rho_N)), ...]``, used for separability
    certificates.
    """

    n_players: int
    d: int
    order: tuple[int, ...]
    shield_dims: tuple[tuple[int, ...], ...]
    pair_unitaries: tuple[Mapping[tuple[int, int], np.ndarray], ...]
    sigma: np.ndarray = field(repr=False)
    shield_labels: tuple[tuple[str, ...], ...] | None = None
    secret_labels: tuple[str, ...] | None = None
    sigma_components: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        n, d = self.n_players, self.d
        if n < 2 or d < 2:
            raise ValueError("GssSpec needs n_players >= 2 and d >= 2")
        order = tuple(int(x) for x in self.order)
        if sorted(order) != list(range(1, n + 1)):
            raise LayoutError(f"order {order} is not a permutation of players 1..{n}")
        object.__setattr__(self, "order", order)
        sd = []
        for entry in self.shield_dims:
            dims = (entry,) if isinstance(entry, (int, np.integer)) else tuple(entry)
            sd.append(tuple(int(x) for x in dims if int(x) > 1))
        if len(sd) != n:
            raise DimensionMismatchError("shield_dims needs one entry per player")
        object.__setattr__(self, "shield_dims", tuple(sd))
        if self.shield_labels is None:
            labels = tuple(
                (f"A'{k}",) if len(dims) == 1 else tuple(f"A'{k}.{m}" for m in range(1, len(dims) + 1))
                for k, dims in zip(range(1, n + 1), sd)
            )
            object.__setattr__(self, "shield_labels", labels)
        else:
            labels = tuple(tuple(x) for x in self.shield_labels)
            if any(len(lab) != len(dims) for lab, dims in zip(labels, sd)):
                raise LayoutError("shield_labels do not match shield_dims")
            object.__setattr__(self, "shield_labels", labels)
        if self.secret_labels is None:
            object.__setattr__(self, "secret_labels", tuple(f"A{k}" for k in range(1, n + 1)))
        if len(self.pair_unitaries) != n - 1:
            raise DimensionMismatchError("pair_unitaries needs one family per adjacent pair in the order")
        fams = []
        for t, fam in enumerate(self.pair_unitaries):
            dim = self.player_shield_dim(order[t]) * self.player_shield_dim(order[t + 1])
            clean = {}
            for (a, b), u in dict(fam).items():
                if not (0 <= a < d and 0 <= b < d):
                    raise ValueError(f"pair family {t}: index {(a, b)} outside Z_{d} x Z_{d}")
                u = _check_unitary(u, f"pair family {t} member {(a, b)}")
                if u.shape[0] != dim:
                    raise DimensionMismatchError(
                        f"pair family {t} member {(a, b)} has size {u.shape[0]}, shields need {dim}"
                    )
                clean[(int(a), int(b))] = u
            if (0, 0) in clean and np.max(np.abs(clean[(0, 0)] - np.eye(dim))) > 1e-10:
                raise ValueError(f"pair family {t}: U^(0,0) must be the identity")
            fams.append(clean)
        object.__setattr__(self, "pair_unitaries", tuple(fams))
        object.__setattr__(self, "sigma", _as_sigma(self.sigma, self.shield_dim))

    def player_shield_dim(self, player: int) -> int:
        return math.prod(self.shield_dims[player - 1])

    @property
    def shield_dim(self) -> int:
        return math.prod(math.prod(x) for x in self.shield_dims)

    @property
    def shield_layout(self) -> SystemLayout:
        subs = []
        for k in range(1, self.n_players + 1):
            for lab, dim in zip(self.shield_labels[k - 1], self.shield_dims[k - 1]):
                subs.append(Subsystem(lab, k, Role.SHIELD, dim))
        return SystemLayout(tuple(subs))

    @property
    def layout(self) -> SystemLayout:
        secrets = SystemLayout(
            tuple(Subsystem(lab, k, Role.SECRET, self.d) for k, lab in enumerate(self.secret_labels, 1))
        )
        return secrets.concat(self.shield_layout)

    def _pair_targets(self, t: int) -> tuple[str, ...]:
        a, b = self.order[t], self.order[t + 1]
        return self.shield_labels[a - 1] + self.shield_labels[b - 1]

    def embedded_pair(self, t: int, a: int, b: int) -> np.ndarray:
        """Pair unitary ``t`` at ``(a, b)`` as a matrix on the full shield space."""
        cache = self.__dict__.setdefault("_embed_cache", {})
        key = (t, a, b)
        if key not in cache:
            u = self.pair_unitaries[t].get((a, b))
            if u is None:
                cache[key] = np.eye(self.shield_dim, dtype=complex)
            else:
                targets = self._pair_targets(t)
                if not targets:
                    cache[key] = u[0, 0] * np.eye(self.shield_dim, dtype=complex)
                else:
                    cache[key] = embed_operator(u, targets, self.shield_layout)
        return cache[key]

    def chain_unitary(self, digits: Sequence[int]) -> np.ndarray:
        """Shield unitary for the secret string ``digits`` (indexed by player)."""
        x = [int(digits[p - 1]) % self.d for p in self.order]
        out = np.eye(self.shield_dim, dtype=complex)
        j = x[0]
        for t in range(self.n_players - 1):
            out = out @ self.embedded_pair(t, j, x[t + 1])
            j = (j + x[t + 1]) % self.d
        return out


def gss_from_spec(spec: GssSpec) -> QuantumState:
    """Assemble ``d^{-(N-1)} sum_{I,J} |I><J| (x) U_I sigma U_J^dagger`` over zero-sum strings."""
    n, d = spec.n_players, spec.d
    dsh = spec.shield_dim
    iso = np.zeros((d**n * dsh, dsh), dtype=complex)
    for digits in parity_strings(n, d):
        idx = int(np.ravel_multi_index(digits, (d,) * n))
        iso[idx * dsh:(idx + 1) * dsh] = spec.chain_unitary(digits)
    norm = d ** (n - 1)
    if spec.sigma.ndim == 1:
        return QuantumState(spec.layout, iso @ spec.sigma / np.sqrt(norm))
    return QuantumState.from_density(spec.layout, iso @ spec.sigma @ iso.conj().T / norm)


@dataclass(frozen=True, eq=False)
class TwistDecomposition:
    """Split ``U_I = U^{rest}(I without i_k) V^{i_k}`` for one player ``k``."""

    player: int
    spec: GssSpec = field(repr=False)
    v_unitaries: tuple[np.ndarray, ...] = field(repr=False)

    def rest_unitary(self, digits: Mapping[int, int]) -> np.ndarray:
        """Unitary on the other players' shields for their digits ``{player: digit}``."""
        spec = self.spec
        x = [int(digits[p]) % spec.d for p in spec.order[:-1]]
        out = np.eye(spec.shield_dim, dtype=complex)
        j = x[0]
        for t in range(spec.n_players - 2):
            out = out @ spec.embedded_pair(t, j, x[t + 1])
            j = (j + x[t + 1]) % spec.d
        return out

    def conditional_shield_states(self) -> list[np.ndarray]:
        """``V^i sigma V^i^dagger`` for each value ``i`` of the player's digit."""
        sig = self.spec.sigma
        rho = np.outer(sig, sig.conj()) if sig.ndim == 1 else sig
        return [v @ rho @ v.conj().T for v in self.v_unitaries]


def player_decomposition(spec: GssSpec, player: int) -> TwistDecomposition:
    """Decomposition of the chained twist for the last player of ``spec.order``.

    With player ``k`` last, the final pair factor is controlled by ``i_k``
    alone on the parity support, so it plays the role of ``V^{i_k}``.
    """
    if player != spec.order[-1]:
        raise DecompositionUnavailableError(
            f"player {player} is not last in the chain order {spec.order}; "
            "no pairwise decomposition available"
        )
    t = spec.n_players - 2
    v = tuple(spec.embedded_pair(t, (-i) % spec.d, i) for i in range(spec.d))
    return TwistDecomposition(player, spec, v)


def ghz_spec(n: int, d: int = 2) -> GssSpec:
    """The untwisted, shield-free spec whose state is ``ghz_state(n, d)``."""
    return GssSpec(n, d, tuple(range(1, n + 1)), ((),) * n, ({},) * (n - 1), np.ones(1))


def local_twist_spec(n: int, d: int, local_unitaries, sigma, shield_dims=None, order=None, **kw) -> GssSpec:
    """Spec whose twist is ``U_I = (x)_k L_k^{i_k}`` with ``L_k^i`` on player k's shield.

    ``local_unitaries[k-1][i]`` is ``L_{k}^{i}``; ``L_k^0`` must be the identity.
    Written in chained form for ``order``: the first pair carries
    ``L^{a} (x) L^{b}``, later pairs ``1 (x) L^{b}``.
    """
    order = tuple(range(1, n + 1)) if order is None else tuple(order)
    if shield_dims is None:
        shield_dims = tuple((np.asarray(local_unitaries[k][0]).shape[0],) for k in range(n))
    fams = []
    for t in range(n - 1):
        a_player, b_player = order[t], order[t + 1]
        fam = {}
        for a in range(d):
            for b in range(d):
                lb = np.asarray(local_unitaries[b_player - 1][b], dtype=complex)
                if t == 0:
                    la = np.asarray(local_unitaries[a_player - 1][a], dtype=complex)
                else:
                    la = np.eye(np.asarray(local_unitaries[a_player - 1][0]).shape[0])
                fam[(a, b)] = np.kron(la, lb)
        fams.append(fam)
    return GssSpec(n, d, order, tuple(shield_dims), tuple(fams), sigma, **kw)


def random_gss_spec(n: int, d: int = 2, shield_dim: int = 2, seed=None, *, sigma_rank: int | None = None,
                    pure: bool = False, order=None) -> GssSpec:
    """Seeded GSS spec with local controlled twists and a random shield state."""
    rng = as_rng(seed)
    locals_ = [
        [np.eye(shield_dim, dtype=complex)] + [random_unitary(shield_dim, rng) for _ in range(d - 1)]
        for _ in range(n)
    ]
    dsh = shield_dim**n
    sigma = random_state_vector(dsh, rng) if pure else random_density_matrix(dsh, rng, sigma_rank)
    if order is None:
        order = tuple(int(x) + 1 for x in rng.permutation(n))
    return local_twist_spec(n, d, locals_, sigma, ((shield_dim,),) * n, order)


def random_chain_spec(n: int, d: int = 2, shield_dim: int = 2, seed=None, *, sigma_rank: int | None = None,
                      pure: bool = False, order=None) -> GssSpec:
    """Seeded spec with generic (entangling) pair unitaries.

    Such chains are in general NOT GSS states; they serve as leaky members of
    the chained family.
    """
    rng = as_rng(seed)
    fams = []
    for _ in range(n - 1):
        fam = {(a, b): random_unitary(shield_dim**2, rng) for a in range(d) for b in range(d) if (a, b) != (0, 0)}
        fams.append(fam)
    dsh = shield_dim**n
    sigma = random_state_vector(dsh, rng) if pure else random_density_matrix(dsh, rng, sigma_rank)
    order = tuple(range(1, n + 1)) if order is None else tuple(order)
    return GssSpec(n, d, order, ((shield_dim,),) * n, tuple(fams), sigma)


# ---------------------------------------------------------------------------
# counterexamples


def upsilon1() -> QuantumState:
    """Secret-sharing state whose third player reads the others' dits off A'3."""
    layout = SystemLayout(
        tuple(Subsystem(f"A{k}", k, Role.SECRET, 2) for k in (1, 2, 3))
        + tuple(Subsystem(f"A'{k}", k, Role.SHIELD, 2) for k in (1, 2, 3))
    )
    kets = [(0, 0, 0, 0, 0, 0), (0, 1, 1, 0, 0, 0), (1, 0, 1, 0, 0, 1), (1, 1, 0, 0, 0, 1)]
    return state_from_amplitudes(layout, {k: 0.5 for k in kets})


def upsilon2() -> QuantumState:
    """Secret-sharing state broken by a Bell measurement on A3 A4; shields all |0>."""
    layout = SystemLayout(
        tuple(Subsystem(f"A{k}", k, Role.SECRET, 2) for k in (1, 2, 3, 4))
        + tuple(Subsystem(f"A'{k}", k, Role.SHIELD, 2) for k in (1, 2, 3, 4))
    )
    c = 1 / (2 * np.sqrt(2))
    terms = {
        "0000": c, "0011": c, "0101": c, "0110": c,
        "1001": c, "1010": -c, "1100": c, "1111": -c,
    }
    return state_from_amplitudes(layout, {tuple(int(ch) for ch in s) + (0,) * 4: a for s, a in terms.items()})


# ---------------------------------------------------------------------------
# private states and the private-state network


@dataclass(frozen=True, eq=False)
class PrivateStateSpec:
    d: int
    twist_unitaries: tuple[np.ndarray, ...] = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    shield_dims: tuple[int, int] = (1, 1)

    def __post_init__(self):
        dims = tuple(int(x) for x in self.shield_dims)
        if len(dims) != 2:
            raise DimensionMismatchError("shield_dims must be a pair")
        object.__setattr__(self, "shield_dims", dims)
        dim = dims[0] * dims[1]
        if len(self.twist_unitaries) != self.d:
            raise DimensionMismatchError(f"need {self.d} twisting unitaries, got {len(self.twist_unitaries)}")
        us = []
        for i, u in enumerate(self.twist_unitaries):
            u = _check_unitary(u, f"twist unitary U_{i}")
            if u.shape[0] != dim:
                raise DimensionMismatchError(f"twist unitary U_{i} has size {u.shape[0]}, shields need {dim}")
            us.append(u)
        object.__setattr__(self, "twist_unitaries", tuple(us))
        object.__setattr__(self, "sigma", _as_sigma(self.sigma, dim))

    @classmethod
    def bell(cls, d: int = 2) -> "PrivateStateSpec":
        return cls(d, tuple(np.ones((1, 1)) for _ in range(d)), np.ones(1))

    @classmethod
    def random(cls, d: int = 2, shield_dim: int = 2, seed=None, pure: bool = True) -> "PrivateStateSpec":
        rng = as_rng(seed)
        n = shield_dim * shield_dim
        us = (np.eye(n),) + tuple(random_unitary(n, rng) for _ in range(d - 1))
        sigma = random_state_vector(n, rng) if pure else random_density_matrix(n, rng)
        return cls(d, us, sigma, (shield_dim, shield_dim))


def private_state(spec: PrivateStateSpec, labels=("A", "B", "A'", "B'"), players=(1, 2)) -> QuantumState:
    """``(1/d) sum_{i,i'} |ii><i'i'| (x) U_i sigma U_i'^dagger``.

    Layout: key of player a, key of player b, then the two shields (shields
    of dimension one are omitted).
    """
    d = spec.d
    ka, kb, sa, sb = labels
    pa, pb = players
    subs = [Subsystem(ka, pa, Role.SECRET, d), Subsystem(kb, pb, Role.SECRET, d)]
    if spec.shield_dims[0] > 1:
        subs.append(Subsystem(sa, pa, Role.SHIELD, spec.shield_dims[0]))
    if spec.shield_dims[1] > 1:
        subs.append(Subsystem(sb, pb, Role.SHIELD, spec.shield_dims[1]))
    dsh = spec.shield_dims[0] * spec.shield_dims[1]
    iso = np.zeros((d * d * dsh, dsh), dtype=complex)
    for i in range(d):
        idx = i * d + i
        iso[idx * dsh:(idx + 1) * dsh] = spec.twist_unitaries[i]
    layout = SystemLayout(tuple(subs))
    if spec.sigma.ndim == 1:
        return QuantumState(layout, iso @ spec.sigma / np.sqrt(d))
    return QuantumState.from_density(layout, iso @ spec.sigma @ iso.conj().T / d)


# key labels per pair for the three-player network: (first player's key, second's, shields)
EXAMPLE1_LABELS = {
    (1, 2): ("A1", "B2", "A'1", "B'2"),
    (2, 3): ("B1", "C2", "B'1", "C'2"),
    (3, 1): ("C1", "A2", "C'1", "A'2"),
}


def example1_network(spec_ab: PrivateStateSpec, spec_bc: PrivateStateSpec, spec_ca: PrivateStateSpec) -> QuantumState:
    """Three private states shared by Alice-Bob, Bob-Charlie and Charlie-Alice.

    Alice (player 1) holds key parts ``A1, A2``, Bob ``B1, B2``, Charlie
    ``C1, C2``; the k-th key part of each player is labelled ``X<k>``.
    """
    out = None
    for (pa, pb), spec in zip(EXAMPLE1_LABELS, (spec_ab, spec_bc, spec_ca)):
        part = private_state(spec, EXAMPLE1_LABELS[(pa, pb)], (pa, pb))
        out = part if out is None else tensor(out, part)
    return out


def example1_wiring() -> dict[int, tuple[tuple[str, int], ...]]:
    """Key-part pairs and signs for each player of :func:`example1_network`.

    For ``d = 2`` the signs are irrelevant and this is the plain
    ``|i, j> -> |i + j, j>`` wiring.
    """
    return {
        1: (("A1", 1), ("A2", 1)),
        2: (("B1", 1), ("B2", -1)),
        3: (("C1", -1), ("C2", -1)),
    }


def private_network(n: int, specs: Mapping[tuple[int, int], PrivateStateSpec]) -> QuantumState:
    """Complete graph of private states on ``n`` players.

    ``specs[(a, b)]`` (``a < b``) gives the private state of that edge.  The
    key of player ``a`` on the edge to ``b`` is labelled ``"A>B"`` (player
    names A, B, ...), shields ``"A'>B"``.
    """
    out = None
    for a, b in itertools.combinations(range(1, n + 1), 2):
        spec = specs[(a, b)]
        x, y = PLAYER_NAMES[a - 1], PLAYER_NAMES[b - 1]
        part = private_state(spec, (f"{x}>{y}", f"{y}>{x}", f"{x}'>{y}", f"{y}'>{x}"), (a, b))
        out = part if out is None else tensor(out, part)
    return out


def network_wiring(n: int) -> dict[int, tuple[tuple[str, int], ...]]:
    """Oriented wiring for :func:`private_network`.

    Player ``p``'s secret is ``sum_{q>p} e_pq - sum_{q<p} e_pq mod d``;
    the key part towards the smallest-indexed partner receives the sum.
    """
    wiring = {}
    for p in range(1, n + 1):
        x = PLAYER_NAMES[p - 1]
        parts = []
        for q in range(1, n + 1):
            if q != p:
                parts.append((f"{x}>{PLAYER_NAMES[q - 1]}", 1 if q > p else -1))
        wiring[p] = tuple(parts)
    return wiring


def w_matrix(d: int, signs: Sequence[int]) -> np.ndarray:
    """Permutation ``|k1, k2, ..> -> |sum_t s_t k_t, k2, ..>`` on ``len(signs)`` dits."""
    signs = [int(s) for s in signs]
    if signs[0] % d not in (1, d - 1):
        raise ValueError("the first sign must be +1 or -1")
    m = len(signs)
    n = d**m
    w = np.zeros((n, n))
    for digits in itertools.product(range(d), repeat=m):
        first = sum(s * k for s, k in zip(signs, digits)) % d
        src = np.ravel_multi_index(digits, (d,) * m)
        dst = np.ravel_multi_index((first,) + digits[1:], (d,) * m)
        w[dst, src] = 1.0
    return w


def apply_w_wiring(s: QuantumState, wiring: Mapping[int, Sequence]) -> QuantumState:
    """Fold each player's key parts into one secret dit.

    ``wiring[player]`` lists key labels, optionally as ``(label, sign)``.
    The first listed key part receives the signed sum and becomes the
    player's secret part; the remaining key parts become shield parts.
    """
    roles = {}
    out = s
    for player, parts in wiring.items():
        entries = [(p, 1) if isinstance(p, str) else (p[0], int(p[1])) for p in parts]
        labels = [lab for lab, _ in entries]
        dims = {s.layout[lab].dim for lab in labels}
        if len(dims) != 1:
            raise DimensionMismatchError(f"player {player}: key parts {labels} have unequal dimensions")
        d = dims.pop()
        out = apply_local(LocalOperator(tuple(labels), w_matrix(d, [sg for _, sg in entries])), out)
        roles[labels[0]] = Role.SECRET
        for lab in labels[1:]:
            roles[lab] = Role.SHIELD
    return QuantumState(s.layout.with_roles(roles), out.data)


# ---------------------------------------------------------------------------
# Werner states and the Example-2 families


def flip_operator(d: int) -> np.ndarray:
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[i * d + j, j * d + i] = 1.0
    return f


def _werner_layout(d: int, labels, players) -> SystemLayout:
    return SystemLayout.of(
        Subsystem(labels[0], players[0], Role.SHIELD, d),
        Subsystem(labels[1], players[1], Role.SHIELD, d),
    )


def werner_symmetric(d: int, labels=("X", "Y"), players=(1, 2)) -> QuantumState:
    """``(1 + F) / (d^2 + d)``."""
    if d < 2:
        raise ValueError("werner_symmetric needs d >= 2")
    rho = (np.eye(d * d) + flip_operator(d)) / (d * d + d)
    return QuantumState(_werner_layout(d, labels, players), rho)


def werner_antisymmetric(d: int, labels=("X", "Y"), players=(1, 2)) -> QuantumState:
    """``(1 - F) / (d^2 - d)``."""
    if d < 2:
        raise ValueError("werner_antisymmetric needs d >= 2")
    rho = (np.eye(d * d) - flip_operator(d)) / (d * d - d)
    return QuantumState(_werner_layout(d, labels, players), rho)


_PSI0_SUPPORT = [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]
# (rho flag, sigma flag, tau flag) attached to psi_0 .. psi_3
_EX2_FLAGS = [(0, 0, 0), (1, 0, 1), (1, 1, 0), (0, 1, 1)]
_EX2_SHIELDS = (("A'1", 1), ("B'2", 2), ("B'1", 2), ("C'2", 3), ("C'1", 3), ("A'2", 1))


def _ex2_psi(m: int) -> np.ndarray:
    """psi_0 (even-parity GHZ) and its Z_A, Z_B, Z_C phased versions."""
    v = np.zeros(8)
    for bits in _PSI0_SUPPORT:
        sign = -1 if m > 0 and bits[m - 1] else 1
        v[bits[0] * 4 + bits[1] * 2 + bits[2]] = 0.5 * sign
    return v


def _pair_dims(pair, dims, what):
    a0 = np.asarray(pair[0], dtype=complex)
    a1 = np.asarray(pair[1], dtype=complex)
    if a0.shape != a1.shape or a0.ndim != 2:
        raise DimensionMismatchError(f"{what}: the two operators must be square matrices of equal size")
    if dims is None:
        r = math.isqrt(a0.shape[0])
        if r * r != a0.shape[0]:
            raise DimensionMismatchError(f"{what}: cannot infer subsystem dims from size {a0.shape[0]}")
        dims = (r, r)
    dims = tuple(int(x) for x in dims)
    if dims[0] * dims[1] != a0.shape[0]:
        raise DimensionMismatchError(f"{what}: dims {dims} do not match size {a0.shape[0]}")
    return a0, a1, dims


def _support_projector(rho: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    v = v[:, w > cutoff]
    return v @ v.conj().T


def support_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the product of the two support projectors."""
    return float(np.linalg.norm(_support_projector(a) @ _support_projector(b)))


def example2_orthogonal(a, rho01, sigma01, tau01, *, rho_dims=None, sigma_dims=None, tau_dims=None,
                        tol: float = 1e-10) -> QuantumState:
    """Four-term mixture of Z-phased GHZ states with orthogonal shield flags.

    ``rho01`` lives on ``A'1 B'2``, ``sigma01`` on ``B'1 C'2`` and ``tau01``
    on ``C'1 A'2``; within each pair the two operators must have orthogonal
    supports.  Layout: ``A, B, C, A'1, B'2, B'1, C'2, C'1, A'2``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (4,) or np.any(a < -1e-12) or abs(a.sum() - 1) > 1e-10:
        raise ValueError("weights must be four nonnegative numbers summing to 1")
    pairs = []
    all_dims = []
    for pair, dims, what in ((rho01, rho_dims, "rho"), (sigma01, sigma_dims, "sigma"), (tau01, tau_dims, "tau")):
        x0, x1, dims = _pair_dims(pair, dims, what)
        ov = support_overlap(x0, x1)
        if ov > tol:
            raise ValueError(f"{what}_0 and {what}_1 supports overlap ({ov:.2e} > {tol:.1e})")
        pairs.append((x0 / np.trace(x0).real, x1 / np.trace(x1).real))
        all_dims.extend(dims)
    subs = [Subsystem(lab, p, Role.SECRET, 2) for lab, p in (("A", 1), ("B", 2), ("C", 3))]
    subs += [Subsystem(lab, p, Role.SHIELD, dm) for (lab, p), dm in zip(_EX2_SHIELDS, all_dims)]
    layout = SystemLayout(tuple(subs))
    gamma = 0
    for m, (r, s, t) in enumerate(_EX2_FLAGS):
        if a[m] == 0:
            continue
        psi = _ex2_psi(m)
        shield = np.kron(np.kron(pairs[0][r], pairs[1][s]), pairs[2][t])
        gamma = gamma + a[m] * np.kron(np.outer(psi, psi), shield)
    return QuantumState.from_density(layout, gamma)


def example2_werner(d: int, p: float) -> QuantumState:
    """Werner-shielded member of the Example-2 family; weights ``(p, p, 1/2-p, 1/2-p)``."""
    if not 0 <= p <= 0.5:
        raise ValueError(f"p = {p} outside [0, 1/2]")
    rs = werner_symmetric(d).data
    ra = werner_antisymmetric(d).data
    s0 = np.diag([1.0, 0, 0, 0])
    s1 = np.diag([0, 0, 0, 1.0])
    return example2_orthogonal((p, p, 0.5 - p, 0.5 - p), (rs, ra), (s0, s1), (rs, ra),
                               rho_dims=(d, d), sigma_dims=(2, 2), tau_dims=(d, d))


def _local_flag(x0, x1, dims, half: int, tol: float) -> np.ndarray | None:
    """``1 - 2 P`` on one half distinguishing the two flags, if they are locally orthogonal."""
    lay = SystemLayout.of(Subsystem("h1", 1, Role.SHIELD, dims[0]), Subsystem("h2", 2, Role.SHIELD, dims[1]))
    keep = ["h1"] if half == 0 else ["h2"]
    m0 = reduced_matrix(QuantumState.from_density(lay, x0), keep)
    m1 = reduced_matrix(QuantumState.from_density(lay, x1), keep)
    if support_overlap(m0, m1) > tol:
        return None
    return np.eye(dims[half]) - 2 * _support_projector(m1)


def _factor(x, dims, tol):
    lay = SystemLayout.of(Subsystem("h1", 1, Role.SHIELD, dims[0]), Subsystem("h2", 2, Role.SHIELD, dims[1]))
    st = QuantumState.from_density(lay, x)
    m1, m2 = reduced_matrix(st, ["h1"]), reduced_matrix(st, ["h2"])
    if np.linalg.norm(np.kron(m1, m2) - x) > tol:
        return None
    return m1, m2


def example2_orthogonal_spec(a, rho01, sigma01, tau01, *, rho_dims=None, sigma_dims=None, tau_dims=None,
                             tol: float = 1e-10) -> GssSpec:
    """Express :func:`example2_orthogonal` as a spec with local controlled twists.

    Requires each flag pair to be distinguishable on both of its halves
    separately (e.g. ``|00><00|`` versus ``|11><11|``); both Z-type twists
    then act locally and ``U_I = (x)_k L_k^{i_k}``.  Player shields are
    ``(A'1, A'2)``, ``(B'1, B'2)``, ``(C'1, C'2)``.
    """
    a = np.asarray(a, dtype=float)
    flags = []
    for pair, dims, what in ((rho01, rho_dims, "rho"), (sigma01, sigma_dims, "sigma"), (tau01, tau_dims, "tau")):
        x0, x1, dims = _pair_dims(pair, dims, what)
        x0, x1 = x0 / np.trace(x0).real, x1 / np.trace(x1).real
        z = [_local_flag(x0, x1, dims, h, tol) for h in (0, 1)]
        if z[0] is None or z[1] is None:
            raise DecompositionUnavailableError(
                f"{what} flags are not distinguishable on each half; no local twist decomposition"
            )
        flags.append((x0, x1, dims, z))
    (r0, r1, rd, rz), (s0, s1, sd, sz), (t0, t1, td, tz) = flags
    la = [np.eye(rd[0] * td[1]), np.kron(rz[0], tz[1])]
    lb = [np.eye(sd[0] * rd[1]), np.kron(sz[0], rz[1])]
    lc = [np.eye(td[0] * sd[1]), np.kron(tz[0], sz[1])]
    # pair order A'1 B'2 B'1 C'2 C'1 A'2 -> player order A'1 A'2 B'1 B'2 C'1 C'2
    pair_layout = SystemLayout(tuple(
        Subsystem(lab, p, Role.SHIELD, dm)
        for (lab, p), dm in zip(_EX2_SHIELDS, rd + sd + td)
    ))
    player_order = ["A'1", "A'2", "B'1", "B'2", "C'1", "C'2"]
    sig = 0
    components = []
    facs = [[_factor(x, dims, tol) for x in (x0, x1)] for x0, x1, dims, _ in flags]
    have_components = all(f is not None for pair in facs for f in pair)
    for m, (r, s, t) in enumerate(_EX2_FLAGS):
        if a[m] == 0:
            continue
        sig = sig + a[m] * np.kron(np.kron((r0, r1)[r], (s0, s1)[s]), (t0, t1)[t])
        if have_components:
            fr, fs, ft = facs[0][r], facs[1][s], facs[2][t]
            components.append((float(a[m]), (np.kron(fr[0], ft[1]), np.kron(fs[0], fr[1]), np.kron(ft[0], fs[1]))))
    sig_state = permute_subsystems(QuantumState.from_density(pair_layout, sig), player_order)
    return local_twist_spec(
        3, 2, [la, lb, lc], sig_state.data,
        shield_dims=((rd[0], td[1]), (sd[0], rd[1]), (td[0], sd[1])),
        shield_labels=(("A'1", "A'2"), ("B'1", "B'2"), ("C'1", "C'2")),
        secret_labels=("A", "B", "C"),
        sigma_components=tuple(components) if have_components else None,
    )
