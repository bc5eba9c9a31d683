"""Numerical tolerances shared by every module.

Exact equalities (zero Holevo information, vanishing support outside the
parity class, unit trace) are tested against these values.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    eig_negativity: float = 1e-10
    trace: float = 1e-10
    norm: float = 1e-12
    unitarity: float = 1e-10
    rank_cutoff: float = 1e-12
    entropy_cutoff: float = 1e-14
    support_cutoff: float = 1e-12
    verdict: float = 1e-9
    leakage: float = 1e-10
    min_probability: float = 1e-14

    def with_overrides(self, **overrides: float) -> "Tolerances":
        unknown = set(overrides) - set(asdict(self))
        if unknown:
            raise KeyError(f"unknown tolerance field(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
