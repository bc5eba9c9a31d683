"""Operational layer: condition (i), the GSS verifier, rounds, attacks, LOCC reduction, rates.

Players are identified by the integer ``player`` field of the layout's
secret subsystems; every player owns exactly one secret part.  A dishonest
coalition always holds its members' secret and shield parts, and the
eavesdropper holds a purification of the whole state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import DimensionMismatchError, LayoutError, NotGssError
from .infotheory import holevo_information, mutual_information
from .qmath import (
    LocalOperator,
    OutcomeDistribution,
    QuantumState,
    Role,
    Subsystem,
    SystemLayout,
    _normalise_labels,
    _reduce,
    apply_local,
    as_rng,
    measure_computational,
    partial_trace,
)

__all__ = [
    "Verdict",
    "ConditionIResult",
    "HolevoCheck",
    "VerificationReport",
    "check_condition_i",
    "verify_gss",
    "RoundTranscript",
    "simulate_round",
    "simulate_rounds",
    "bell_basis",
    "coalition_attack",
    "ReductionPlan",
    "shift_operator",
    "reduction_branches",
    "reduce_gss",
    "RateTerm",
    "devetak_winter_terms",
    "devetak_winter_rate",
]


class Verdict(str, Enum):
    GSS = "GSS"
    NOT_GSS = "NotGSS"


def _players_and_d(s: QuantumState) -> tuple[tuple[int, ...], tuple[str, ...], int]:
    players = s.layout.players
    if not players:
        raise LayoutError("layout has no players")
    secrets = tuple(s.layout.secret_label(p) for p in players)
    dims = {s.layout[label].dim for label in secrets}
    if len(dims) != 1:
        raise DimensionMismatchError(f"secret parts have unequal dimensions {sorted(dims)}")
    return players, secrets, dims.pop()


def _coalition_labels(s: QuantumState, coalition_players: Sequence[int]) -> list[str]:
    out: list[str] = []
    for p in coalition_players:
        out.extend(lab for lab in s.layout.labels_of(p) if s.layout[lab].role is not Role.REFERENCE)
    return out


# ---------------------------------------------------------------------------
# condition (i)


@dataclass(frozen=True)
class ConditionIResult:
    support_ok: bool
    uniform_ok: bool
    distribution: OutcomeDistribution
    leakage: float
    max_deviation: float

    def __iter__(self):
        # allows ``support_ok, uniform_ok, dist = check_condition_i(s)``
        return iter((self.support_ok, self.uniform_ok, self.distribution))


def check_condition_i(s: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES) -> ConditionIResult:
    """Secret-part statistics: support inside the zero-sum class, and uniformity on it."""
    players, secrets, d = _players_and_d(s)
    n = len(players)
    dist, _ = measure_computational(s, secrets, tol)
    leakage = sum(p for x, p in dist if sum(x) % d)
    target = d ** -(n - 1)
    max_dev = 0.0
    for head in itertools.product(range(d), repeat=n - 1):
        x = head + ((-sum(head)) % d,)
        max_dev = max(max_dev, abs(dist[x] - target))
    return ConditionIResult(leakage <= tol.leakage, max_dev <= tol.leakage, dist, float(leakage), float(max_dev))


# ---------------------------------------------------------------------------
# verifier


@dataclass(frozen=True)
class HolevoCheck:
    measured_player: int
    coalition: tuple[int, ...]
    chi: float

    def describe(self) -> str:
        names = ",".join(str(p) for p in self.coalition) or "-"
        return f"chi(i_{self.measured_player} : D={{{names}}} + E) = {self.chi:.12f}"

    def to_dict(self) -> dict:
        return {"measured_player": self.measured_player, "coalition": list(self.coalition), "chi": self.chi}


@dataclass(frozen=True)
class VerificationReport:
    support_ok: bool
    uniform_ok: bool
    leakage: float
    max_deviation: float
    holevo_checks: tuple[HolevoCheck, ...]
    verdict: Verdict
    witness: HolevoCheck | None
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)

    @property
    def is_gss(self) -> bool:
        return self.verdict is Verdict.GSS

    @property
    def max_chi(self) -> float:
        return max((c.chi for c in self.holevo_checks), default=0.0)

    def check(self, measured_player: int, coalition: Sequence[int]) -> HolevoCheck:
        key = tuple(sorted(coalition))
        for c in self.holevo_checks:
            if c.measured_player == measured_player and c.coalition == key:
                return c
        raise KeyError((measured_player, key))

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "support_ok": self.support_ok,
            "uniform_ok": self.uniform_ok,
            "leakage": self.leakage,
            "max_deviation": self.max_deviation,
            "max_chi": self.max_chi,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "holevo_checks": [c.to_dict() for c in self.holevo_checks],
            "tolerances": self.tolerances.as_dict(),
        }


def _coalitions(players: Sequence[int], exhaustive: bool):
    """(measured player, coalition) pairs to evaluate."""
    n = len(players)
    seen = set()
    if exhaustive:
        for k in players:
            others = [p for p in players if p != k]
            for size in range(0, n - 1):
                for dset in itertools.combinations(others, size):
                    yield k, dset
        return
    for k, l in itertools.combinations(players, 2):
        dset = tuple(p for p in players if p not in (k, l))
        for m in (k, l):
            if (m, dset) not in seen:
                seen.add((m, dset))
                yield m, dset


def verify_gss(s: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES, *, exhaustive: bool = False) -> VerificationReport:
    """Decide whether ``s`` is a GSS state.

    Condition (i) is checked on the secret-part statistics.  Security is
    checked by requiring zero Holevo information between each player's dit
    and every coalition of ``N - 2`` other players together with the
    eavesdropper (``exhaustive`` also covers all smaller coalitions).
    """
    players, secrets, d = _players_and_d(s)
    if len(players) < 2:
        raise LayoutError("verify_gss needs at least two players")
    cond = check_condition_i(s, tol)
    checks = []
    for k, dset in _coalitions(players, exhaustive):
        chi = holevo_information(s, s.layout.secret_label(k), _coalition_labels(s, dset),
                                 include_reference=True, tol=tol)
        checks.append(HolevoCheck(k, tuple(sorted(dset)), chi))
    worst = max((c.chi for c in checks), default=0.0)
    secure = worst <= tol.verdict
    witness = None
    if not secure:
        witness = next(c for c in checks if c.chi >= worst - 1e-12)
    ok = cond.support_ok and cond.uniform_ok and secure
    return VerificationReport(cond.support_ok, cond.uniform_ok, cond.leakage, cond.max_deviation,
                              tuple(checks), Verdict.GSS if ok else Verdict.NOT_GSS, witness, tol)


# ---------------------------------------------------------------------------
# secret-sharing rounds


@dataclass(frozen=True)
class RoundTranscript:
    outcomes: dict[int, int]
    dealer: int
    dealer_dit: int
    reconstructed: int

    @property
    def success(self) -> bool:
        return self.dealer_dit == self.reconstructed

    def to_dict(self) -> dict:
        return {"outcomes": {str(k): v for k, v in self.outcomes.items()}, "dealer": self.dealer,
                "dealer_dit": self.dealer_dit, "reconstructed": self.reconstructed, "success": self.success}


def _round_from_outcome(players, outcome, dealer: int, d: int) -> RoundTranscript:
    outcomes = dict(zip(players, (int(x) for x in outcome)))
    recon = (-sum(v for p, v in outcomes.items() if p != dealer)) % d
    return RoundTranscript(outcomes, dealer, outcomes[dealer], recon)


def simulate_rounds(s: QuantumState, dealer: int, n_rounds: int, seed=None, *,
                    require_gss: bool = True, tol: Tolerances = DEFAULT_TOLERANCES) -> list[RoundTranscript]:
    """Sample ``n_rounds`` computational measurements of all secret parts.

    The other players reconstruct the dealer's dit as minus the sum of their
    own dits.  By default the state must pass :func:`verify_gss` first; pass
    ``require_gss=False`` to run insecure states anyway.
    """
    players, secrets, d = _players_and_d(s)
    if dealer not in players:
        raise LayoutError(f"dealer {dealer} is not a player")
    if require_gss:
        report = verify_gss(s, tol)
        if not report.is_gss:
            raise NotGssError("state failed GSS verification; pass require_gss=False to override")
    dist, _ = measure_computational(s, secrets, tol)
    samples = dist.sample(as_rng(seed), size=n_rounds)
    return [_round_from_outcome(players, x, dealer, d) for x in samples]


def simulate_round(s: QuantumState, dealer: int, seed=None, **kw) -> RoundTranscript:
    return simulate_rounds(s, dealer, 1, seed, **kw)[0]


# ---------------------------------------------------------------------------
# coalition attacks


def bell_basis() -> np.ndarray:
    """Columns ``Phi+, Phi-, Psi+, Psi-`` of the two-qubit Bell basis."""
    r = 1 / math.sqrt(2)
    return np.array([[r, r, 0, 0], [0, 0, r, r], [0, 0, r, -r], [r, -r, 0, 0]], dtype=complex)


def coalition_attack(s: QuantumState, coalition, target_player: int, attack=None,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Classical mutual information (bits) between the target's dit and a coalition measurement.

    ``attack`` is a matrix whose columns form the measurement basis on the
    coalition subsystems (composite index in the order given), or a
    :class:`LocalOperator` carrying such a matrix.  ``None`` means the
    computational basis.
    """
    coalition = _normalise_labels(coalition)
    target = s.layout.secret_label(target_player)
    if target in coalition:
        raise LayoutError("the target's secret part cannot be in the coalition")
    if isinstance(attack, LocalOperator):
        if tuple(attack.targets) != tuple(coalition):
            raise LayoutError(f"attack targets {attack.targets} differ from coalition {tuple(coalition)}")
        attack = attack.matrix
    dc = math.prod(s.layout[lab].dim for lab in coalition)
    basis = np.eye(dc, dtype=complex) if attack is None else np.asarray(attack, dtype=complex)
    if basis.shape != (dc, dc):
        raise DimensionMismatchError(f"attack basis has shape {basis.shape}, coalition dimension is {dc}")
    err = float(np.max(np.abs(basis.conj().T @ basis - np.eye(dc))))
    if err > tol.unitarity:
        raise ValueError(f"attack basis is not orthonormal (deviation {err:.3e})")
    dist, conditionals = measure_computational(s, target, tol)
    joint: dict[tuple[int, int], float] = {}
    for (x,), cond in conditionals.items():
        axes = cond.layout.indices(coalition)
        rho = _reduce(cond.data, cond.layout.dims, axes)
        q = np.einsum("ij,ik,kj->j", basis.conj(), rho, basis).real
        for y, qy in enumerate(q):
            if qy > 0:
                joint[(x, y)] = dist[(x,)] * qy
    total = sum(joint.values())
    joint = {k: v / total for k, v in joint.items()}
    return mutual_information(OutcomeDistribution((s.layout[target].dim, dc), joint), (0,))


# ---------------------------------------------------------------------------
# LOCC reduction


@dataclass(frozen=True)
class ReductionPlan:
    keep: tuple[int, ...]
    measured_players: tuple[int, ...]
    correction_target: int

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(sorted(int(p) for p in self.keep)))
        object.__setattr__(self, "measured_players", tuple(sorted(int(p) for p in self.measured_players)))
        if len(self.keep) < 2:
            raise LayoutError("a reduction must keep at least two players")
        if set(self.keep) & set(self.measured_players):
            raise LayoutError("kept and measured players overlap")
        if self.correction_target not in self.keep:
            raise LayoutError(f"correction target {self.correction_target} is not kept")

    @classmethod
    def for_keep(cls, players: Sequence[int], keep: Sequence[int], correction_target: int | None = None) -> "ReductionPlan":
        keep = sorted(keep)
        unknown = set(keep) - set(players)
        if unknown:
            raise LayoutError(f"unknown players {sorted(unknown)}")
        measured = [p for p in players if p not in keep]
        target = keep[0] if correction_target is None else correction_target
        return cls(tuple(keep), tuple(measured), target)

    def check_layout(self, s: QuantumState) -> None:
        players = set(s.layout.players)
        if set(self.keep) | set(self.measured_players) != players:
            raise LayoutError(f"plan covers players {sorted(set(self.keep) | set(self.measured_players))}, "
                              f"state has {sorted(players)}")


def shift_operator(d: int, beta: int) -> np.ndarray:
    """``T_beta = sum_i |i + beta><i|``."""
    return np.roll(np.eye(d, dtype=complex), beta % d, axis=0)


def reduction_branches(s: QuantumState, plan: ReductionPlan,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> dict[tuple[int, ...], tuple[float, QuantumState]]:
    """All outcome branches ``{outcomes: (probability, corrected kept state)}``."""
    plan.check_layout(s)
    players, secrets, d = _players_and_d(s)
    if not plan.measured_players:
        return {(): (1.0, s)}
    measured = [s.layout.secret_label(p) for p in plan.measured_players]
    keep_labels = _coalition_labels(s, plan.keep)
    target = s.layout.secret_label(plan.correction_target)
    dist, conditionals = measure_computational(s, measured, tol)
    out = {}
    for x, cond in conditionals.items():
        if set(cond.layout.labels) != set(keep_labels):
            cond = partial_trace(cond, keep_labels)
        beta = sum(x) % d
        if beta:
            cond = apply_local(LocalOperator((target,), shift_operator(d, beta)), cond)
        out[x] = (dist[x], cond)
    return out


def reduce_gss(s: QuantumState, plan: ReductionPlan, mode: str = "sample", seed=None, *,
               outcome: Sequence[int] | None = None, keep_record: bool = True,
               record_label: str = "M", tol: Tolerances = DEFAULT_TOLERANCES) -> QuantumState:
    """Share a GSS state among ``plan.keep`` by LOCC.

    The measured players read their secret parts in the computational basis
    and announce the outcomes; their shields are discarded.  The correction
    target applies ``T_beta`` with ``beta`` the announced sum mod d.  In
    ``"sample"`` mode one branch is drawn (or ``outcome`` is taken).

    ``"average"`` mode returns the outcome-averaged channel output.  With
    ``keep_record`` the announced outcomes are kept as a classical register
    ``record_label`` among the correction target's shields.  Without it the
    branches are simply mixed; such a mixture of GSS states need not be GSS,
    because the purification then holds the branch label coherently.
    """
    branches = reduction_branches(s, plan, tol)
    if mode == "average":
        layout = next(iter(branches.values()))[1].layout
        if not keep_record or not plan.measured_players:
            rho = sum(p * b.density_matrix() for p, b in branches.values())
            return QuantumState.from_density(layout, rho)
        _, _, d = _players_and_d(s)
        m = len(plan.measured_players)
        while record_label in layout:
            record_label += "'"
        reg = SystemLayout.of(Subsystem(record_label, plan.correction_target, Role.SHIELD, d**m))
        rho = 0
        for x, (p, b) in branches.items():
            flag = np.zeros((d**m, d**m))
            k = int(np.ravel_multi_index(x, (d,) * m))
            flag[k, k] = 1.0
            rho = rho + p * np.kron(b.density_matrix(), flag)
        return QuantumState.from_density(layout.concat(reg), rho)
    if mode != "sample":
        raise ValueError(f"unknown reduction mode {mode!r}")
    if outcome is not None:
        key = tuple(int(v) for v in outcome)
        if key not in branches:
            raise ValueError(f"outcome {key} has zero probability")
        return branches[key][1]
    keys = list(branches)
    p = np.array([branches[k][0] for k in keys])
    return branches[keys[as_rng(seed).choice(len(keys), p=p / p.sum())]][1]


# ---------------------------------------------------------------------------
# Devetak-Winter rate


@dataclass(frozen=True)
class RateTerm:
    player: int
    coalition: tuple[int, ...]
    mutual_information: float
    chi: float

    @property
    def rate(self) -> float:
        return self.mutual_information - self.chi


def devetak_winter_terms(s: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES) -> list[RateTerm]:
    """``I(m_i : rest) - chi(m_i : D E)`` for every player and every coalition of at most N-2 others."""
    players, secrets, d = _players_and_d(s)
    if len(players) < 2:
        raise LayoutError("rates need at least two players")
    dist, _ = measure_computational(s, secrets, tol)
    terms = []
    for pos, i in enumerate(players):
        info = mutual_information(dist, (pos,))
        others = [p for p in players if p != i]
        for size in range(0, len(players) - 1):
            for dset in itertools.combinations(others, size):
                chi = holevo_information(s, secrets[pos], _coalition_labels(s, dset),
                                         include_reference=True, tol=tol)
                terms.append(RateTerm(i, dset, info, chi))
    return terms


def devetak_winter_rate(s: QuantumState, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Smallest Devetak-Winter term over players and coalitions, clamped at zero."""
    return max(min(t.rate for t in devetak_winter_terms(s, tol)), 0.0)
