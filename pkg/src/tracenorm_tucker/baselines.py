"""Truncated HOSVD and HOOI."""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .linalg import thin_svd
from .model import FactorModel, IterationRecord, SolveReport
from .tensor import frob_norm, multi_mode_product, unfold

__all__ = ["hosvd", "hooi", "check_ranks"]


def check_ranks(dims: Sequence[int], ranks: Sequence[int]) -> tuple[int, ...]:
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims):
        raise ValueError(f"need {len(dims)} ranks, got {len(ranks)}")
    for n, (r, d) in enumerate(zip(ranks, dims)):
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} out of range [1, {d}] for mode {n}")
    return ranks


def _leading_left(a: np.ndarray, r: int) -> np.ndarray:
    u = thin_svd(a).u
    return np.ascontiguousarray(u[:, :r])


def hosvd(t: np.ndarray, ranks: Sequence[int]) -> FactorModel:
    """Truncated higher-order SVD.

    ``U_n`` holds the leading ``R_n`` left singular vectors of the mode-n
    unfolding and the core is the projection of ``t`` onto them.
    """
    ranks = check_ranks(t.shape, ranks)
    factors = [_leading_left(unfold(t, n), r) for n, r in enumerate(ranks)]
    core = multi_mode_product(t, factors, transpose=True)
    return FactorModel(core, factors)


def hooi(
    t: np.ndarray,
    ranks: Sequence[int],
    max_iter: int = 100,
    tol: float = 1e-6,
    return_report: bool = False,
):
    """Higher-order orthogonal iteration for the best rank-(R_1..R_N) fit.

    Starts from :func:`hosvd` and sweeps the modes in order, each factor
    taken from the leading left singular vectors of
    ``unfold(t ×_{j != n} U_j^T, n)``. Stops when the relative change of
    ``||core||_F`` drops below ``tol``.

    Parameters
    ----------
    t : ndarray
        Data tensor.
    ranks : sequence of int
        Target multilinear rank.
    max_iter : int
        Maximum number of sweeps.
    tol : float
        Tolerance on the relative change of the fit.
    return_report : bool
        If True, also return a :class:`SolveReport` with one row per sweep
        (residual is ``||t - reconstruction||_F``).
    """
    ranks = check_ranks(t.shape, ranks)
    start = time.perf_counter()
    report = SolveReport("hooi")
    model = hosvd(t, ranks)
    factors = list(model.factors)
    t_sq = frob_norm(t) ** 2
    fit = frob_norm(model.core)
    prev_x = model.reconstruct()

    core = model.core
    for it in range(1, max_iter + 1):
        for n, r in enumerate(ranks):
            y = multi_mode_product(t, factors, transpose=True, skip=n)
            factors[n] = _leading_left(unfold(y, n), r)
        core = multi_mode_product(t, factors, transpose=True)
        new_fit = frob_norm(core)
        # orthonormal factors: ||t - x||^2 = ||t||^2 - ||core||^2
        residual = float(np.sqrt(max(t_sq - new_fit**2, 0.0)))
        x = multi_mode_product(core, factors)
        x_norm = frob_norm(prev_x)
        rel_x = frob_norm(x - prev_x) / x_norm if x_norm > 0 else 0.0
        prev_x = x
        report.iterations.append(
            IterationRecord(it, residual, rel_x, 0.5 * residual**2, 1e3 * (time.perf_counter() - start))
        )
        rel_fit = abs(new_fit - fit) / fit if fit > 0 else 0.0
        fit = new_fit
        if rel_fit < tol:
            report.converged = True
            break

    report.wall_ms = 1e3 * (time.perf_counter() - start)
    model = FactorModel(core, factors)
    if return_report:
        return model, report
    return model
