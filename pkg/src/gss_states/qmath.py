"""Dense linear algebra over labelled multipartite systems.

Composite indices are big-endian mixed radix: the first subsystem of a
layout is the most significant digit.  Pure states are kept as vectors and
only promoted to density matrices when an operation needs it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import (
    DimensionMismatchError,
    InvalidStateError,
    LayoutError,
    NotHermitianError,
    NotUnitaryError,
)

__all__ = [
    "Role",
    "Subsystem",
    "SystemLayout",
    "QuantumState",
    "OperatorKind",
    "LocalOperator",
    "OutcomeDistribution",
    "hermitian_eig",
    "trace_norm",
    "tensor",
    "partial_trace",
    "partial_transpose",
    "permute_subsystems",
    "apply_local",
    "embed_operator",
    "purify",
    "measure_computational",
    "state_from_amplitudes",
    "random_unitary",
    "random_density_matrix",
    "random_state_vector",
    "as_rng",
]


class Role(str, Enum):
    SECRET = "secret"
    SHIELD = "shield"
    REFERENCE = "reference"


@dataclass(frozen=True)
class Subsystem:
    label: str
    player: int
    role: Role
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "player", int(self.player))
        if int(self.dim) != self.dim or self.dim < 1:
            raise LayoutError(f"subsystem {self.label!r}: dimension must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True)
class SystemLayout:
    """Ordered collection of labelled subsystems."""

    subsystems: tuple[Subsystem, ...] = ()

    def __post_init__(self):
        subs = tuple(
            s if isinstance(s, Subsystem) else Subsystem(*s) for s in self.subsystems
        )
        object.__setattr__(self, "subsystems", subs)
        labels = [s.label for s in subs]
        if len(set(labels)) != len(labels):
            dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
            raise LayoutError(f"duplicate subsystem labels: {dupes}")

    @classmethod
    def of(cls, *entries) -> "SystemLayout":
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.subsystems)

    def __iter__(self):
        return iter(self.subsystems)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __getitem__(self, label: str) -> Subsystem:
        return self.subsystems[self.index(label)]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def select(self, labels: Iterable[str]) -> "SystemLayout":
        """Sub-layout holding ``labels``, kept in layout order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        return SystemLayout(tuple(s for s in self.subsystems if s.label in wanted))

    def without(self, labels: Iterable[str]) -> "SystemLayout":
        drop = set(labels)
        for lab in drop:
            self.index(lab)
        return SystemLayout(tuple(s for s in self.subsystems if s.label not in drop))

    def concat(self, other: "SystemLayout") -> "SystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return SystemLayout(self.subsystems + other.subsystems)

    def with_roles(self, roles: Mapping[str, Role]) -> "SystemLayout":
        for lab in roles:
            self.index(lab)
        return SystemLayout(
            tuple(
                Subsystem(s.label, s.player, roles.get(s.label, s.role), s.dim)
                for s in self.subsystems
            )
        )

    @property
    def players(self) -> tuple[int, ...]:
        return tuple(sorted({s.player for s in self.subsystems if s.role is not Role.REFERENCE}))

    def labels_of(self, player: int, role: Role | None = None) -> tuple[str, ...]:
        return tuple(
            s.label
            for s in self.subsystems
            if s.player == player and s.role is not Role.REFERENCE and (role is None or s.role is role)
        )

    def labels_with_role(self, role: Role) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems if s.role is role)

    def secret_label(self, player: int) -> str:
        """The single secret subsystem of ``player``."""
        secrets = self.labels_of(player, Role.SECRET)
        if len(secrets) != 1:
            raise LayoutError(f"player {player} has {len(secrets)} secret subsystems, expected 1")
        return secrets[0]


class QuantumState:
    """Pure amplitude vector or density matrix over a :class:`SystemLayout`.

    The body is stored read-only.  Construction checks the cheap invariants
    (normalisation, Hermiticity, unit trace); positivity is checked by
    :meth:`validate`, which costs a full eigendecomposition.
    """

    __slots__ = ("layout", "_data")

    def __init__(self, layout: SystemLayout, data, *, tol: Tolerances = DEFAULT_TOLERANCES):
        if not isinstance(layout, SystemLayout):
            layout = SystemLayout(tuple(layout))
        arr = np.array(data, dtype=complex)
        n = layout.total_dim
        if arr.ndim == 1:
            if arr.shape != (n,):
                raise DimensionMismatchError(f"vector of length {arr.shape[0]} for layout of dim {n}")
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > tol.norm:
                raise InvalidStateError(f"state vector norm {norm!r} differs from 1")
        elif arr.ndim == 2:
            if arr.shape != (n, n):
                raise DimensionMismatchError(f"matrix of shape {arr.shape} for layout of dim {n}")
            asym = np.max(np.abs(arr - arr.conj().T)) if n else 0.0
            if asym > tol.hermiticity:
                raise NotHermitianError(asym, tol.hermiticity)
            tr = np.trace(arr).real
            if abs(tr - 1.0) > tol.trace:
                raise InvalidStateError(f"density matrix trace {tr!r} differs from 1")
        else:
            raise InvalidStateError("state body must be a vector or a square matrix")
        arr.setflags(write=False)
        self.layout = layout
        self._data = arr

    @classmethod
    def from_density(cls, layout, matrix, **kw) -> "QuantumState":
        m = np.asarray(matrix, dtype=complex)
        return cls(layout, (m + m.conj().T) / 2, **kw)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def is_pure(self) -> bool:
        return self._data.ndim == 1

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    @property
    def vector(self) -> np.ndarray:
        if not self.is_pure:
            raise InvalidStateError("state is mixed; no amplitude vector")
        return self._data

    def density_matrix(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self._data, self._data.conj())
        return self._data

    def as_mixed(self) -> "QuantumState":
        if not self.is_pure:
            return self
        return QuantumState(self.layout, self.density_matrix())

    def min_eigenvalue(self) -> float:
        if self.is_pure:
            return 0.0 if self.dim > 1 else 1.0
        return float(np.linalg.eigvalsh(self._data)[0])

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> "QuantumState":
        """Raise :class:`InvalidStateError` unless the state is positive semidefinite."""
        lam = self.min_eigenvalue()
        if lam < -tol.eig_negativity:
            raise InvalidStateError(
                f"density matrix has minimum eigenvalue {lam:.6e} < -{tol.eig_negativity:.1e}"
            )
        return self

    def __repr__(self) -> str:
        kind = "pure" if self.is_pure else "mixed"
        return f"QuantumState({kind}, labels={list(self.layout.labels)}, dims={list(self.layout.dims)})"


class OperatorKind(str, Enum):
    UNITARY = "unitary"
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class LocalOperator:
    targets: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)
    kind: OperatorKind = OperatorKind.UNITARY

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError("operator matrix must be square")
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.kind is OperatorKind.UNITARY:
            err = np.max(np.abs(mat @ mat.conj().T - np.eye(mat.shape[0])))
            if err > DEFAULT_TOLERANCES.unitarity:
                raise NotUnitaryError(f"U U^dagger deviates from identity by {err:.3e}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities of computational-basis outcomes (dit strings)."""

    dims: tuple[int, ...]
    probs: Mapping[tuple[int, ...], float]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        clean = {}
        for k, v in self.probs.items():
            key = tuple(int(x) for x in k)
            if len(key) != len(self.dims) or any(not 0 <= x < m for x, m in zip(key, self.dims)):
                raise ValueError(f"outcome {key} incompatible with dims {self.dims}")
            if v < -1e-12:
                raise ValueError(f"negative probability {v} for outcome {key}")
            clean[key] = max(float(v), 0.0)
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", dict(sorted(clean.items())))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def d(self) -> int:
        if len(set(self.dims)) != 1:
            raise ValueError("outcome alphabet is not uniform")
        return self.dims[0]

    def __getitem__(self, outcome: Sequence[int]) -> float:
        return self.probs.get(tuple(outcome), 0.0)

    def __iter__(self):
        return iter(self.probs.items())

    def as_array(self) -> np.ndarray:
        arr = np.zeros(self.dims)
        for k, v in self.probs.items():
            arr[k] = v
        return arr

    def marginal(self, positions: Sequence[int]) -> "OutcomeDistribution":
        out: dict[tuple[int, ...], float] = {}
        for k, v in self.probs.items():
            key = tuple(k[i] for i in positions)
            out[key] = out.get(key, 0.0) + v
        labels = tuple(self.labels[i] for i in positions) if self.labels else ()
        return OutcomeDistribution(tuple(self.dims[i] for i in positions), out, labels)

    def map(self, fn, dims: Sequence[int]) -> "OutcomeDistribution":
        """Push the distribution forward through ``fn: outcome -> outcome``."""
        out: dict[tuple[int, ...], float] = {}
        for k, v in self.probs.items():
            key = tuple(fn(k))
            out[key] = out.get(key, 0.0) + v
        return OutcomeDistribution(tuple(dims), out)

    def entropy(self) -> float:
        p = np.array([v for v in self.probs.values() if v > 0])
        return float(-(p * np.log2(p)).sum()) if p.size else 0.0

    def sample(self, rng, size: int | None = None):
        rng = as_rng(rng)
        keys = list(self.probs)
        p = np.array([self.probs[k] for k in keys])
        p = p / p.sum()
        if size is None:
            return keys[rng.choice(len(keys), p=p)]
        return [keys[i] for i in rng.choice(len(keys), size=size, p=p)]


# ---------------------------------------------------------------------------
# array helpers


def _contract(tensor: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``mat`` to the (composite) index formed by ``axes`` of ``tensor``."""
    axes = list(axes)
    k = len(axes)
    moved = np.moveaxis(tensor, axes, list(range(k)))
    shape = moved.shape
    flat = moved.reshape(math.prod(shape[:k]), -1)
    out = (mat @ flat).reshape(shape)
    return np.moveaxis(out, list(range(k)), axes)


def _reduce(data: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on axes ``keep`` (given in output order)."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    rest = [i for i in range(n) if i not in keep]
    dk = math.prod(dims[i] for i in keep)
    if data.ndim == 1:
        psi = data.reshape(dims) if n else data.reshape(())
        m = np.transpose(psi, keep + rest).reshape(dk, -1)
        return m @ m.conj().T
    dr = math.prod(dims[i] for i in rest)
    t = data.reshape(dims + dims)
    t = np.transpose(t, keep + rest + [n + i for i in keep] + [n + i for i in rest])
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ijkj->ik", t)


def _check_hermitian(h: np.ndarray, tol: float) -> None:
    asym = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if asym > tol:
        raise NotHermitianError(asym, tol)


# ---------------------------------------------------------------------------
# operations


def hermitian_eig(h, tol: float = DEFAULT_TOLERANCES.hermiticity):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in descending order.
    eigenvectors : ndarray
        Orthonormal eigenvectors as columns, matching ``eigenvalues``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError("hermitian_eig expects a square matrix")
    _check_hermitian(h, tol)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("trace_norm expects a square matrix")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.conj().T), initial=0.0) <= 1e-12 * scale:
        return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    layout = a.layout.concat(b.layout)
    if a.is_pure and b.is_pure:
        return QuantumState(layout, np.kron(a.data, b.data))
    return QuantumState(layout, np.kron(a.density_matrix(), b.density_matrix()))


def _normalise_labels(labels) -> list[str]:
    if isinstance(labels, str):
        return [labels]
    return list(labels)


def partial_trace(s: QuantumState, keep) -> QuantumState:
    """Reduced density operator on ``keep`` (result in layout order)."""
    keep = _normalise_labels(keep)
    if not keep:
        raise LayoutError("partial_trace needs a nonempty set of labels to keep")
    sub = s.layout.select(keep)
    axes = s.layout.indices(sub.labels)
    rho = _reduce(s.data, s.layout.dims, axes)
    return QuantumState.from_density(sub, rho)


def reduced_matrix(s: QuantumState, keep) -> np.ndarray:
    """Like :func:`partial_trace` but returns a bare array and accepts ``keep=[]``."""
    keep = _normalise_labels(keep)
    sub = s.layout.select(keep)
    return _reduce(s.data, s.layout.dims, s.layout.indices(sub.labels))


def partial_transpose(s: QuantumState, subset) -> np.ndarray:
    subset = _normalise_labels(subset)
    axes = s.layout.indices(subset)
    dims = list(s.layout.dims)
    n = len(dims)
    t = s.density_matrix().reshape(dims + dims)
    perm = list(range(2 * n))
    for i in axes:
        perm[i], perm[n + i] = n + i, i
    return np.transpose(t, perm).reshape(s.dim, s.dim)


def permute_subsystems(s: QuantumState, new_order) -> QuantumState:
    new_order = list(new_order)
    if sorted(new_order) != sorted(s.layout.labels) or len(new_order) != len(s.layout):
        raise LayoutError(f"{new_order} is not a permutation of {list(s.layout.labels)}")
    perm = s.layout.indices(new_order)
    layout = SystemLayout(tuple(s.layout.subsystems[i] for i in perm))
    dims = list(s.layout.dims)
    n = len(dims)
    if s.is_pure:
        data = np.transpose(s.data.reshape(dims), perm).reshape(-1)
    else:
        data = np.transpose(s.data.reshape(dims + dims), perm + [n + i for i in perm])
        data = data.reshape(s.dim, s.dim)
    return QuantumState(layout, data)


def _target_axes(op: LocalOperator, layout: SystemLayout) -> list[int]:
    axes = layout.indices(op.targets)
    if len(set(axes)) != len(axes):
        raise LayoutError("operator targets repeat a subsystem")
    dt = math.prod(layout.dims[i] for i in axes)
    if op.matrix.shape[0] != dt:
        raise DimensionMismatchError(
            f"operator of size {op.matrix.shape[0]} on targets {op.targets} of dim {dt}"
        )
    return axes


def apply_local(op: LocalOperator, s: QuantumState) -> QuantumState:
    """``U psi`` for pure states, ``U rho U^dagger`` for mixed ones."""
    axes = _target_axes(op, s.layout)
    dims = list(s.layout.dims)
    n = len(dims)
    if s.is_pure:
        out = _contract(s.data.reshape(dims), op.matrix, axes).reshape(-1)
        if op.kind is OperatorKind.GENERAL:
            out = out / np.linalg.norm(out)
        return QuantumState(s.layout, out)
    t = s.data.reshape(dims + dims)
    t = _contract(t, op.matrix, axes)
    t = _contract(t, op.matrix.conj(), [n + i for i in axes])
    out = t.reshape(s.dim, s.dim)
    if op.kind is OperatorKind.GENERAL:
        out = out / np.trace(out).real
    return QuantumState.from_density(s.layout, out)


def embed_operator(matrix, targets, layout: SystemLayout) -> np.ndarray:
    """Full matrix of ``matrix`` acting on ``targets`` and identity elsewhere."""
    op = LocalOperator(tuple(targets), matrix, OperatorKind.GENERAL)
    axes = _target_axes(op, layout)
    dims = list(layout.dims)
    eye = np.eye(layout.total_dim, dtype=complex).reshape(dims + dims)
    return _contract(eye, op.matrix, axes).reshape(layout.total_dim, layout.total_dim)


def purify(rho: QuantumState, rank_tol: float = DEFAULT_TOLERANCES.rank_cutoff,
           reference_label: str = "E") -> QuantumState:
    """Pure state on ``rho``'s layout plus an appended reference subsystem.

    The reference dimension equals the number of eigenvalues above
    ``rank_tol``; a pure input gets a one-dimensional reference.
    """
    while reference_label in rho.layout:
        reference_label += "'"
    if rho.is_pure:
        ref = SystemLayout.of(Subsystem(reference_label, 0, Role.REFERENCE, 1))
        return QuantumState(rho.layout.concat(ref), rho.data)
    w, v = hermitian_eig(rho.data)
    keep = w > rank_tol
    w, v = w[keep], v[:, keep]
    r = int(keep.sum())
    ref = SystemLayout.of(Subsystem(reference_label, 0, Role.REFERENCE, r))
    psi = (v * np.sqrt(w)[None, :]).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return QuantumState(rho.layout.concat(ref), psi)


def measure_computational(s: QuantumState, targets, tol: Tolerances = DEFAULT_TOLERANCES):
    """Computational-basis measurement of ``targets``.

    Returns the outcome distribution (outcomes ordered as ``targets``) and a
    map from each outcome of probability at least ``tol.min_probability`` to
    the normalised post-measurement state on the remaining subsystems.
    """
    targets = _normalise_labels(targets)
    if not targets:
        raise LayoutError("measure_computational needs at least one target")
    axes = s.layout.indices(targets)
    if len(set(axes)) != len(axes):
        raise LayoutError("measurement targets repeat a subsystem")
    dims = list(s.layout.dims)
    n = len(dims)
    rest = [i for i in range(n) if i not in axes]
    tdims = [dims[i] for i in axes]
    dt = math.prod(tdims)
    dr = math.prod(dims[i] for i in rest)
    rest_layout = SystemLayout(tuple(s.layout.subsystems[i] for i in rest))
    probs: dict[tuple[int, ...], float] = {}
    conditionals: dict[tuple[int, ...], QuantumState] = {}
    if s.is_pure:
        m = np.transpose(s.data.reshape(dims), axes + rest).reshape(dt, dr)
        p = np.einsum("ij,ij->i", m, m.conj()).real
        for x in range(dt):
            key = tuple(int(v) for v in np.unravel_index(x, tdims))
            probs[key] = p[x]
            if p[x] >= tol.min_probability:
                conditionals[key] = QuantumState(rest_layout, m[x] / np.sqrt(p[x]))
    else:
        t = s.data.reshape(dims + dims)
        t = np.transpose(t, axes + rest + [n + i for i in axes] + [n + i for i in rest])
        t = t.reshape(dt, dr, dt, dr)
        for x in range(dt):
            block = t[x, :, x, :]
            px = float(np.trace(block).real)
            key = tuple(int(v) for v in np.unravel_index(x, tdims))
            probs[key] = px
            if px >= tol.min_probability:
                conditionals[key] = QuantumState.from_density(rest_layout, block / px)
    total = sum(probs.values())
    probs = {k: v / total for k, v in probs.items() if v > 0}
    return OutcomeDistribution(tuple(tdims), probs, tuple(targets)), conditionals


def state_from_amplitudes(layout: SystemLayout, amplitudes: Mapping[Sequence[int], complex]) -> QuantumState:
    """Pure state from a sparse ``{digits: amplitude}`` map (digits in layout order)."""
    vec = np.zeros(layout.total_dim, dtype=complex)
    for digits, amp in amplitudes.items():
        vec[np.ravel_multi_index(tuple(digits), layout.dims)] += amp
    return QuantumState(layout, vec)


def parity_strings(n: int, d: int, t: int = 0):
    """Dit strings of length ``n`` over Z_d with digit sum congruent to ``t``."""
    for head in itertools.product(range(d), repeat=n - 1):
        yield head + ((t - sum(head)) % d,)


# ---------------------------------------------------------------------------
# seeded random objects


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    rng = as_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_state_vector(n: int, seed=None) -> np.ndarray:
    rng = as_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_density_matrix(n: int, seed=None, rank: int | None = None) -> np.ndarray:
    rng = as_rng(seed)
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
