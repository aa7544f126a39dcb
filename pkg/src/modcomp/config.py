"""Run configuration: evaluation caps, output format and suite tolerances.

A configuration is a single JSON object.  Unknown keys are rejected so that
typos do not silently fall back to defaults.  Example::

    {"N": 60, "tol": 1e-12, "T": null, "c_max": null, "d_max": null,
     "m_max": null, "h": null, "format": "json",
     "tolerances": {"denominator": 1e-8}}
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .theta import EvalBudget

# Per-suite tolerances.  Each is the acceptance bound for the suite's
# identities; the observed residuals at the default budgets sit one or more
# orders of magnitude below (see README).
TOLERANCES = {
    "duality": 0.0,
    "class-numbers": 0.0,
    "denominator": 1e-8,
    "harmonic-examples": {"xi_hcal": 1e-6, "xi_E2": 1e-8, "laplace_hcal": 1e-5},
    "theta-transforms": 1e-4,
    "theta-diffeqs": 1e-4,
    "astar-prop12": {"lower_tau": 1e-4, "lower_z": 1e-4, "laplace": 1e-3},
    "astar-two-expansions": 1e-3,
    "astar-modularity": 1e-3,
    "cm-smoothness": 1e-3,
    "millson-shintani": 1e-3,
    "higher-weight": 1e-3,
    # |G_D(tau0)|/D must stay below this bound for every sampled D
    "growth-sanity": 5.0,
}

THREADS_ENV = "MODCOMP_THREADS"


@dataclass
class Config:
    N: int = 60
    tol: float = 1e-12
    T: float | None = None
    c_max: float | None = None
    d_max: int | None = None
    m_max: int | None = None
    h: float | None = None
    format: str = "json"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("N", "tol", "T", "c_max", "d_max", "m_max", "h"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"config: {name} must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError("config: format must be json or csv")
        unknown = set(self.tolerances) - set(TOLERANCES)
        if unknown:
            raise ValueError(f"config: unknown suites in tolerances: {sorted(unknown)}")

    def budget(self) -> EvalBudget:
        return EvalBudget(tol=self.tol, T=self.T, c_max=self.c_max, d_max=self.d_max,
                          m_max=self.m_max, N=self.N, h=self.h)

    def tolerance(self, suite: str):
        return self.tolerances.get(suite, TOLERANCES[suite])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"config: unknown keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike | None) -> "Config":
        if path is None:
            return cls()
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1
