"""Entropies, relative entropy, mutual information and Holevo information (bits)."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import LayoutError
from .qmath import OutcomeDistribution, QuantumState, _normalise_labels, measure_computational, reduced_matrix


def _entropy_of_spectrum(w: np.ndarray, cutoff: float) -> float:
    w = w[w > cutoff]
    return float(-(w * np.log2(w)).sum())


def von_neumann_entropy(rho, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``-sum lambda log2 lambda`` over eigenvalues above the entropy cutoff.

    Accepts a :class:`QuantumState` (pure states have zero entropy) or a
    bare density matrix.
    """
    if isinstance(rho, QuantumState):
        if rho.is_pure:
            return 0.0
        rho = rho.data
    rho = np.asarray(rho, dtype=complex)
    if rho.size == 1:
        return 0.0
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return max(_entropy_of_spectrum(w, tol.entropy_cutoff), 0.0)


def subsystem_entropy(state: QuantumState, labels, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Entropy of the reduced state on ``labels``.

    For pure states the smaller of ``labels`` and its complement is reduced,
    since both have the same spectrum.
    """
    labels = _normalise_labels(labels)
    lay = state.layout
    if state.is_pure:
        comp = [lab for lab in lay.labels if lab not in set(labels)]
        if math.prod(lay[lab].dim for lab in comp) < math.prod(lay[lab].dim for lab in labels):
            labels = comp
    return von_neumann_entropy(reduced_matrix(state, labels), tol)


def relative_entropy(rho, sigma, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``S(rho || sigma) = -S(rho) - Tr rho log2 sigma``.

    Returns ``math.inf`` when the support of ``rho`` is not contained in the
    support of ``sigma``.
    """
    r = rho.density_matrix() if isinstance(rho, QuantumState) else np.asarray(rho, dtype=complex)
    s = sigma.density_matrix() if isinstance(sigma, QuantumState) else np.asarray(sigma, dtype=complex)
    if r.shape != s.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {s.shape}")
    w, v = np.linalg.eigh((s + s.conj().T) / 2)
    inside = w > tol.support_cutoff
    # weight of rho on the kernel of sigma
    vk = v[:, ~inside]
    leak = float(np.einsum("ij,ik,kj->", vk.conj(), r, vk).real) if vk.size else 0.0
    if leak > tol.support_cutoff:
        return float("inf")
    vs = v[:, inside]
    diag = np.einsum("ij,ik,kj->j", vs.conj(), r, vs).real
    cross = -float(np.dot(diag, np.log2(w[inside])))
    return cross - von_neumann_entropy(r, tol)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def mutual_information(joint: OutcomeDistribution, x_positions: Sequence[int] = (0,)) -> float:
    """``H(X) + H(Y) - H(XY)`` where X is the outcome coordinates ``x_positions``."""
    x_positions = list(x_positions)
    y_positions = [i for i in range(len(joint.dims)) if i not in x_positions]
    hx = joint.marginal(x_positions).entropy()
    hy = joint.marginal(y_positions).entropy()
    return max(hx + hy - joint.entropy(), 0.0)


def holevo_information(state: QuantumState, measured, coalition, *, include_reference: bool = True,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Holevo information between computational outcomes on ``measured`` and ``coalition``.

    With ``include_reference`` the coalition also holds a purification of
    ``state``.  That case is evaluated through the complementary subsystems:
    for a purified state, the coalition-plus-reference entropy equals the
    entropy of everything the coalition does not hold, both before and after
    the measurement.
    """
    measured = _normalise_labels(measured)
    coalition = _normalise_labels(coalition)
    if not measured:
        raise LayoutError("holevo_information needs at least one measured subsystem")
    overlap = set(measured) & set(coalition)
    if overlap:
        raise LayoutError(f"measured and coalition subsystems overlap: {sorted(overlap)}")
    lay = state.layout
    lay.indices(measured)
    lay.indices(coalition)
    dist, conditionals = measure_computational(state, measured, tol)
    if include_reference:
        rest = [lab for lab in lay.labels if lab not in set(measured) | set(coalition)]
        s_avg = subsystem_entropy(state, list(measured) + rest, tol)
        s_cond = sum(dist[x] * subsystem_entropy(c, rest, tol) for x, c in conditionals.items())
    else:
        s_avg = subsystem_entropy(state, coalition, tol)
        s_cond = sum(dist[x] * subsystem_entropy(c, coalition, tol) for x, c in conditionals.items())
    return max(s_avg - s_cond, 0.0)
