"""Result containers shared by every decomposition method."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import multi_mode_product


@dataclass
class FactorModel:
    """Tucker model ``core ×_1 U_1 ×_2 ... ×_N U_N``."""

    core: np.ndarray
    factors: list[np.ndarray]

    def __post_init__(self):
        if len(self.factors) != self.core.ndim:
            raise ValueError(f"{len(self.factors)} factors for an order-{self.core.ndim} core")
        for n, u in enumerate(self.factors):
            if u.ndim != 2 or u.shape[1] != self.core.shape[n]:
                raise ValueError(f"factor {n} has shape {u.shape}, core extent is {self.core.shape[n]}")

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self.core.shape)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(u.shape[0] for u in self.factors)

    def reconstruct(self) -> np.ndarray:
        return multi_mode_product(self.core, self.factors)

    def orthonormality_error(self) -> float:
        """Largest ``||U_n^T U_n - I||_max`` over the factors."""
        errs = [np.max(np.abs(u.T @ u - np.eye(u.shape[1]))) if u.size else 0.0 for u in self.factors]
        return float(max(errs, default=0.0))


@dataclass
class IterationRecord:
    iter: int
    residual: float
    rel_change: float
    objective: float
    wall_ms: float


@dataclass
class SolveReport:
    method: str
    converged: bool = False
    iterations: list[IterationRecord] = field(default_factory=list)
    wall_ms: float = 0.0
    message: str = ""

    @property
    def n_iter(self) -> int:
        return len(self.iterations)

    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.iterations])

    def rel_changes(self) -> np.ndarray:
        return np.array([r.rel_change for r in self.iterations])
