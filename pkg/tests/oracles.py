"""Independent reference computations used by the tests.

Everything here works on bare numpy arrays with explicit index bookkeeping
and deliberately avoids the package's own routines, so agreement between
the two is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import string

import numpy as np


def dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj()) if psi.ndim == 1 else psi


def ptrace(rho, dims, keep):
    """Partial trace via a generated einsum string (kept axes in increasing order)."""
    rho = dm(rho)
    n = len(dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    keep = sorted(keep)
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = rho.reshape(list(dims) * 2)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return r.reshape(dk, dk)


def entropy(rho):
    """Von Neumann entropy in bits from singular values."""
    s = np.linalg.svd(dm(rho), compute_uv=False)
    s = s[s > 1e-14]
    return float(-(s * np.log2(s)).sum())


def sqrt_purification(rho):
    """``sum_ij (sqrt rho)_ij |i>|j>``: a purification with a full-size reference."""
    w, v = np.linalg.eigh(dm(rho))
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    return root.reshape(-1)


def _purified(state):
    """(vector, reference dim): pure inputs keep a trivial reference."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return state, 1
    return sqrt_purification(state), state.shape[0]


def _conditionals(psi, dims, measured, keep):
    """Outcome -> (probability, reduced state on ``keep``) for a pure vector."""
    n = len(dims)
    t = psi.reshape(dims)
    rest = [i for i in range(n) if i not in measured]
    rest_dims = [dims[i] for i in rest]
    kk = [rest.index(i) for i in keep]
    out = {}
    for x in itertools.product(*(range(dims[m]) for m in measured)):
        idx = [slice(None)] * n
        for m, v in zip(measured, x):
            idx[m] = v
        sub = t[tuple(idx)].reshape(-1)
        p = float(np.vdot(sub, sub).real)
        if p < 1e-14:
            continue
        out[x] = (p, ptrace(sub / np.sqrt(p), rest_dims, kk))
    return out


def holevo_oracle(state, dims, measured, coalition, with_reference=True):
    """Holevo information between a computational measurement of ``measured`` and ``coalition`` (+ E).

    ``state`` is a vector or a density matrix.  The reference is an explicit
    purification; each outcome is projected out and the conditional state
    of the coalition (and purifying system) is reduced directly.
    """
    dims = list(dims)
    if with_reference:
        psi, r = _purified(state)
        full_dims = dims + [r]
        keep = sorted(coalition) + [len(dims)]
        cond = _conditionals(psi, full_dims, list(measured), keep)
    else:
        # purify anyway, but keep only the coalition
        psi, r = _purified(state)
        cond = _conditionals(psi, dims + [r], list(measured), sorted(coalition))
    avg = sum(p * c for p, c in cond.values())
    return entropy(avg) - sum(p * entropy(c) for p, c in cond.values())


def conditional_states(state, dims, measured, coalition):
    """Coalition-plus-purification states conditioned on each outcome of ``measured``."""
    psi, r = _purified(state)
    out = _conditionals(psi, list(dims) + [r], [measured], sorted(coalition) + [len(dims)])
    return {x[0]: v for x, v in out.items()}


def brute_force_gss(rho, dims, secret_axes, player_axes, d, tol=1e-8):
    """GSS membership by direct comparison of conditional states.

    ``secret_axes[k]`` is the axis of player k's secret part, and
    ``player_axes[k]`` lists all of player k's axes.  The state is accepted
    when its secret statistics live on the zero-sum strings and, for every
    player and every coalition of all but one other player, the coalition's
    state (with a purification) does not depend on the player's outcome.
    """
    n = len(secret_axes)
    secret_marg = ptrace(dm(rho), dims, sorted(secret_axes))
    order = np.argsort(np.argsort(secret_axes))
    probs = np.diag(secret_marg).real
    for idx, p in enumerate(probs):
        digits = np.unravel_index(idx, [d] * n)
        digits = [digits[order[k]] for k in range(n)]
        if sum(digits) % d and p > 1e-10:
            return False
    for k in range(n):
        for l in range(n):
            if l == k:
                continue
            coalition = [ax for m in range(n) if m not in (k, l) for ax in player_axes[m]]
            cond = conditional_states(rho, dims, secret_axes[k], coalition)
            if len(cond) != d:
                return False
            mats = [c for _, c in cond.values()]
            for m in mats[1:]:
                if np.max(np.abs(m - mats[0])) > tol:
                    return False
    return True


def trace_norm_svd(m):
    return float(np.linalg.svd(m, compute_uv=False).sum())


def partial_transpose_loops(rho, dims, axes):
    """Partial transpose by explicit index swap over all matrix entries."""
    rho = dm(rho)
    dim = rho.shape[0]
    out = np.empty_like(rho)
    digits = [np.unravel_index(i, dims) for i in range(dim)]
    for i in range(dim):
        for j in range(dim):
            a, b = list(digits[i]), list(digits[j])
            for ax in axes:
                a[ax], b[ax] = b[ax], a[ax]
            out[i, j] = rho[np.ravel_multi_index(a, dims), np.ravel_multi_index(b, dims)]
    return out
