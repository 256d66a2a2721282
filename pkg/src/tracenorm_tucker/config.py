"""Solver configuration and its flat ``key=value`` text form."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["SolverConfig", "ConfigError", "min_tau", "default_tau"]


class ConfigError(ValueError):
    pass


def min_tau(mu: float, n_modes: int, gamma: float) -> float:
    """Lower bound on the proximal constants for the Jacobi ADMM to converge."""
    return mu * (n_modes / (2.0 - gamma) - 1.0)


def default_tau(mu: float, n_modes: int, gamma: float) -> float:
    return 1.01 * max(min_tau(mu, n_modes, gamma), 0.0) + 1e-8


@dataclass
class SolverConfig:
    """Parameters shared by the convex and non-convex ADMM solvers.

    ``tau`` may be ``None`` (derived from ``mu`` each iteration), a scalar
    used for every block, or one value per block (``N`` for the factor
    solver, ``N + 1`` for the convex solver whose last block is X).
    """

    lam: float = 100.0
    mu0: float = 1e-4
    rho: float = 1.05
    mu_max: float = 1e10
    gamma: float = 1.0
    tau: float | Sequence[float] | None = None
    tol: float = 1e-5
    max_iter: int = 500
    weights: Sequence[float] | None = None
    adaptive_mu: bool = True
    inner_sweeps: int = 1
    n_jobs: int = 1

    @classmethod
    def ctd_defaults(cls, **overrides) -> "SolverConfig":
        """Defaults for the convex solver: fixed penalty."""
        base = dict(mu0=1.0, adaptive_mu=False, tol=1e-5, max_iter=500)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def nctd_defaults(cls, **overrides) -> "SolverConfig":
        base = dict(mu0=1e-4, rho=1.05, mu_max=1e10, adaptive_mu=True, tol=1e-5, max_iter=500)
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    # -- validation --------------------------------------------------------

    def validate(self, n_modes: int, n_blocks: int | None = None) -> None:
        """Raise :class:`ConfigError` if the configuration is unusable.

        With a fixed penalty and explicit ``tau`` the proximal constants
        must strictly exceed ``mu * (N / (2 - gamma) - 1)``.
        """
        n_blocks = n_modes if n_blocks is None else n_blocks
        if not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if not self.mu0 > 0:
            raise ConfigError(f"mu0 must be > 0, got {self.mu0}")
        if self.adaptive_mu and not 1.0 < self.rho <= 1.1:
            raise ConfigError(f"rho must lie in (1, 1.1], got {self.rho}")
        if self.mu_max < self.mu0:
            raise ConfigError("mu_max must be >= mu0")
        if not 0.0 < self.gamma < 2.0:
            raise ConfigError(f"gamma must lie in (0, 2), got {self.gamma}")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.inner_sweeps < 1:
            raise ConfigError("inner_sweeps must be >= 1")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n_modes,):
                raise ConfigError(f"need {n_modes} weights, got {w.size}")
            if np.any(w < 0):
                raise ConfigError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ConfigError(f"weights must sum to 1, sum is {w.sum()!r}")
        if self.tau is not None:
            taus = self.taus(self.mu0, n_modes, n_blocks)
            if np.any(taus <= 0):
                raise ConfigError("tau must be > 0")
            if not self.adaptive_mu:
                bound = min_tau(self.mu0, n_modes, self.gamma)
                if np.any(taus <= bound):
                    raise ConfigError(
                        f"tau={taus.tolist()} violates the convergence condition tau > {bound:.6g}"
                    )

    def taus(self, mu: float, n_modes: int, n_blocks: int) -> np.ndarray:
        if self.tau is None:
            return np.full(n_blocks, default_tau(mu, n_modes, self.gamma))
        taus = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if taus.size == 1:
            return np.full(n_blocks, float(taus[0]))
        if taus.size != n_blocks:
            raise ConfigError(f"need 1 or {n_blocks} tau values, got {taus.size}")
        return taus

    def mode_weights(self, n_modes: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(n_modes)
        return np.asarray(self.weights, dtype=float)

    # -- key=value text ----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, (list, tuple)):
                v = ",".join(repr(float(x)) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values: dict, base: "SolverConfig | None" = None) -> "SolverConfig":
        base = base or cls()
        kinds = {f.name: f for f in dataclasses.fields(cls)}
        changes = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key not in kinds:
                continue
            changes[key] = _coerce(key, raw)
        return dataclasses.replace(base, **changes)


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if key in ("adaptive_mu",):
        return raw.lower() in ("1", "true", "yes", "on")
    if key in ("max_iter", "inner_sweeps", "n_jobs"):
        return int(raw)
    if key in ("weights", "tau"):
        if raw.lower() in ("", "none"):
            return None
        vals = [float(x) for x in raw.split(",")]
        return vals[0] if key == "tau" and len(vals) == 1 else vals
    return float(raw)
