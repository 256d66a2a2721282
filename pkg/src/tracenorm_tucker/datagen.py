"""Synthetic Tucker problems, outliers, and recovery metrics."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import FactorModel
from .tensor import frob_norm, multi_mode_product

__all__ = [
    "RNG_ALGORITHM",
    "SUCCESS_RSE",
    "SynthSpec",
    "TrialOutcome",
    "gen_tucker",
    "add_outliers",
    "rse",
]

#: Bit generator behind every seeded draw (numpy ``default_rng``).
RNG_ALGORITHM = "PCG64"
SUCCESS_RSE = 1e-2


@dataclass
class SynthSpec:
    dims: tuple[int, ...] = (30, 30, 30)
    true_ranks: tuple[int, ...] = (5, 5, 5)
    noise_delta: float = 0.0
    outlier_ratio: float = 0.0
    outlier_range: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        ranks = self.true_ranks
        if isinstance(ranks, (int, np.integer)):
            ranks = (int(ranks),) * len(self.dims)
        self.true_ranks = tuple(int(r) for r in ranks)
        if len(self.true_ranks) != len(self.dims):
            raise ValueError("dims and true_ranks differ in length")
        if any(not 1 <= r <= d for r, d in zip(self.true_ranks, self.dims)):
            raise ValueError(f"true ranks {self.true_ranks} out of range for dims {self.dims}")
        if self.noise_delta < 0:
            raise ValueError("noise_delta must be >= 0")
        if not 0.0 <= self.outlier_ratio <= 1.0:
            raise ValueError("outlier_ratio must lie in [0, 1]")
        if self.outlier_range < 0:
            raise ValueError("outlier_range must be >= 0")

    def to_text(self) -> str:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out.append(f"{f.name}={v}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SynthSpec":
        values = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "SynthSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for key, val in values.items():
            key = key.replace("-", "_")
            if key not in names:
                continue
            if key in ("dims", "true_ranks") and isinstance(val, str):
                val = tuple(int(x) for x in val.split(","))
            elif key == "seed":
                val = int(val)
            elif key in ("noise_delta", "outlier_ratio", "outlier_range"):
                val = float(val)
            kw[key] = val
        return cls(**kw)


@dataclass
class TrialOutcome:
    rse: float
    est_ranks: tuple[int, ...] = ()
    iters: int = 0
    wall_ms: float = 0.0
    converged: bool = True
    success: bool = field(init=False)

    def __post_init__(self):
        self.success = bool(self.rse <= SUCCESS_RSE)


def gen_tucker(spec: SynthSpec):
    """Draw a Tucker tensor with Gaussian core and factors, plus its noisy copy.

    Returns ``(clean, noisy, truth)``. ``noisy`` is
    ``clean + noise_delta * Z`` with ``Z`` standard Gaussian, followed by
    additive sparse outliers when ``outlier_ratio > 0``. Everything is
    drawn from one ``default_rng(seed)`` stream, core first.
    """
    rng = np.random.default_rng(spec.seed)
    core = rng.standard_normal(spec.true_ranks)
    factors = [rng.standard_normal((d, r)) for d, r in zip(spec.dims, spec.true_ranks)]
    clean = multi_mode_product(core, factors)
    noisy = clean.copy()
    if spec.noise_delta > 0:
        noisy += spec.noise_delta * rng.standard_normal(spec.dims)
    if spec.outlier_ratio > 0:
        noisy = add_outliers(noisy, spec.outlier_ratio, spec.outlier_range, rng)
    return clean, noisy, FactorModel(core, factors)


def add_outliers(t: np.ndarray, ratio: float, value_range: float = 1.0, seed=None) -> np.ndarray:
    """Add uniform ``[-value_range, value_range]`` values at
    ``round(ratio * t.size)`` distinct positions chosen uniformly at random.

    ``seed`` may be an int or an existing ``numpy.random.Generator``.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = np.array(t, dtype=np.float64, copy=True)
    count = int(round(ratio * out.size))
    if count == 0:
        return out
    pos = rng.choice(out.size, size=count, replace=False)
    vals = rng.uniform(-value_range, value_range, size=count)
    flat = out.reshape(-1, order="F")
    flat[pos] += vals
    return flat.reshape(out.shape, order="F")


def rse(x: np.ndarray, t: np.ndarray) -> float:
    """Relative error ``||x - t||_F / ||t||_F``."""
    x = np.asarray(x)
    t = np.asarray(t)
    if x.shape != t.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {t.shape}")
    ref = frob_norm(t)
    if ref == 0:
        raise ValueError("reference tensor has zero norm")
    return frob_norm(x - t) / ref


def rank_match(est: Sequence[int], truth: Sequence[int]) -> bool:
    return tuple(est) == tuple(truth)
