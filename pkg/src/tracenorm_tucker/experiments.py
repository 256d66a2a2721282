"""Experiment drivers behind the CLI: single solves, benchmark sweeps,
phase-transition grids and convergence traces.

Every driver returns plain row dictionaries; :func:`write_csv` turns them
into the CSV files the CLI emits.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .baselines import hooi, hosvd
from .config import SolverConfig
from .ctd import ctd_decompose
from .datagen import RNG_ALGORITHM, SynthSpec, TrialOutcome, gen_tucker, rse
from .io import format_float
from .kernels import backend
from .linalg import numerical_rank
from .model import FactorModel, SolveReport
from .nctd import nctd_decompose
from .tensor import unfold

log = logging.getLogger(__name__)

METHODS = ("hosvd", "hooi", "ctd", "nctd")

TRIAL_FIELDS = [
    "kind", "method", "dims", "true_rank", "given_rank", "delta", "outlier_ratio", "seed",
    "repeat", "rse", "success", "est_ranks", "iters", "converged", "wall_ms", "status",
]
PHASE_FIELDS = [
    "method", "axis", "level", "given_rank", "true_rank", "dims", "repeats",
    "successes", "success_fraction", "mean_rse",
]
TRACE_FIELDS = ["method", "seed", "iter", "residual", "rel_change", "objective", "wall_ms"]


@dataclass
class MethodConfigs:
    """Per-method solver settings used by the drivers."""

    ctd: SolverConfig = field(default_factory=SolverConfig.ctd_defaults)
    nctd: SolverConfig = field(default_factory=SolverConfig.nctd_defaults)
    hooi_max_iter: int = 100
    hooi_tol: float = 1e-6

    @classmethod
    def from_overrides(cls, overrides: dict) -> "MethodConfigs":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return cls(
            ctd=SolverConfig.ctd_defaults(**overrides),
            nctd=SolverConfig.nctd_defaults(**overrides),
        )


@dataclass
class MethodRun:
    method: str
    x: np.ndarray
    model: FactorModel
    est_ranks: tuple[int, ...]
    report: SolveReport

    @property
    def converged(self) -> bool:
        return self.report.converged


def _core_ranks(model: FactorModel) -> tuple[int, ...]:
    if model.core.size == 0:
        return tuple(0 for _ in model.factors)
    out = []
    for n in range(model.core.ndim):
        s = np.linalg.svd(unfold(model.core, n), compute_uv=False)
        out.append(numerical_rank(s))
    return tuple(out)


def run_method(
    method: str,
    t: np.ndarray,
    ranks: Sequence[int] | None,
    configs: MethodConfigs | None = None,
    seed: int = 0,
) -> MethodRun:
    """Decompose ``t`` with one of :data:`METHODS`.

    ``ranks`` is ignored by the convex method, which picks its own.
    """
    configs = configs or MethodConfigs()
    if method != "ctd" and ranks is None:
        raise ValueError(f"method {method!r} needs working ranks")
    start = time.perf_counter()
    if method == "hosvd":
        model = hosvd(t, ranks)
        report = SolveReport("hosvd", converged=True)
        x = model.reconstruct()
        est = _core_ranks(model)
    elif method == "hooi":
        model, report = hooi(t, ranks, configs.hooi_max_iter, configs.hooi_tol, return_report=True)
        x = model.reconstruct()
        est = _core_ranks(model)
    elif method == "ctd":
        res = ctd_decompose(t, configs.ctd)
        model, report, x, est = res.model, res.report, res.x, res.mode_ranks
    elif method == "nctd":
        res = nctd_decompose(t, ranks, configs.nctd, seed=seed)
        model, report = res.model, res.report
        x = model.reconstruct()
        est = _core_ranks(model)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    report.wall_ms = 1e3 * (time.perf_counter() - start)
    return MethodRun(method, x, model, tuple(int(r) for r in est), report)


def given_ranks_for(true_rank: int, n_modes: int, rank_factor: float = 1.2, given: int | None = None):
    r = given if given is not None else int(math.floor(rank_factor * true_rank))
    return (r,) * n_modes


def run_trial(
    method: str,
    spec: SynthSpec,
    given: Sequence[int],
    configs: MethodConfigs,
    data=None,
) -> tuple[TrialOutcome | None, str]:
    """One seeded solve scored against the clean tensor; never raises."""
    try:
        clean, noisy, _ = data if data is not None else gen_tucker(spec)
        given = tuple(min(g, d) for g, d in zip(given, spec.dims))
        run = run_method(method, noisy, given, configs, seed=spec.seed)
        out = TrialOutcome(rse(run.x, clean), run.est_ranks, run.report.n_iter, run.report.wall_ms, run.converged)
        return out, "ok" if run.converged else "max_iter"
    except Exception as exc:  # a failed trial is recorded, the sweep goes on
        log.warning("trial %s seed=%d failed: %s", method, spec.seed, exc)
        return None, f"error: {type(exc).__name__}: {exc}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (tuple, list)):
        return "x".join(str(x) for x in v)
    return v


def _trial_row(method, spec, given, repeat, outcome, status):
    row = {
        "kind": "trial",
        "method": method,
        "dims": spec.dims,
        "true_rank": spec.true_ranks[0],
        "given_rank": "" if method == "ctd" else given[0],
        "delta": spec.noise_delta,
        "outlier_ratio": spec.outlier_ratio,
        "seed": spec.seed,
        "repeat": repeat,
        "status": status,
    }
    if outcome is not None:
        row.update(
            rse=outcome.rse,
            success=outcome.success,
            est_ranks=outcome.est_ranks,
            iters=outcome.iters,
            converged=outcome.converged,
            wall_ms=outcome.wall_ms,
        )
    return row


def benchmark(
    base: SynthSpec,
    methods: Sequence[str],
    true_ranks: Sequence[int],
    repeats: int,
    configs: MethodConfigs | None = None,
    rank_factor: float = 1.2,
    given_rank: int | None = None,
) -> list[dict]:
    """Benchmark sweep: every method on ``repeats`` seeded problems per true rank.

    Trial ``i`` uses seed ``base.seed + i`` for both data and solver
    initialization, so all methods see identical tensors. Returns trial rows
    followed by one ``kind=mean`` row per (method, true rank).
    """
    configs = configs or MethodConfigs()
    rows = []
    for r in true_ranks:
        for rep in range(repeats):
            spec = SynthSpec(base.dims, r, base.noise_delta, base.outlier_ratio, base.outlier_range, base.seed + rep)
            data = gen_tucker(spec)
            given = given_ranks_for(r, len(spec.dims), rank_factor, given_rank)
            for method in methods:
                outcome, status = run_trial(method, spec, given, configs, data)
                rows.append(_trial_row(method, spec, given, rep, outcome, status))
    return rows + aggregate(rows)


def aggregate(rows: Iterable[dict]) -> list[dict]:
    """Mean rows per (method, true_rank) over successful-to-run trials."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("kind") != "trial":
            continue
        groups.setdefault((row["method"], row["true_rank"]), []).append(row)
    out = []
    for (method, r), grp in groups.items():
        ok = [g for g in grp if "rse" in g]
        first = grp[0]
        agg = {
            "kind": "mean",
            "method": method,
            "dims": first["dims"],
            "true_rank": r,
            "given_rank": first["given_rank"],
            "delta": first["delta"],
            "outlier_ratio": first["outlier_ratio"],
            "seed": "",
            "repeat": len(grp),
            "status": f"{len(ok)}/{len(grp)} ok",
        }
        if ok:
            agg.update(
                rse=float(np.mean([g["rse"] for g in ok])),
                success=float(np.mean([g["success"] for g in ok])),
                iters=float(np.mean([g["iters"] for g in ok])),
                converged=float(np.mean([g["converged"] for g in ok])),
                wall_ms=float(np.mean([g["wall_ms"] for g in ok])),
            )
        out.append(agg)
    return out


def phase(
    dims: Sequence[int],
    true_rank: int,
    given_ranks: Sequence[int],
    levels: Sequence[float],
    methods: Sequence[str],
    repeats: int,
    axis: str = "delta",
    configs: MethodConfigs | None = None,
    seed: int = 0,
    outlier_range: float = 1.0,
) -> list[dict]:
    """Success fraction per (method, given rank, level) cell.

    ``axis`` is ``"delta"`` (Gaussian noise level) or ``"outlier_ratio"``.
    The convex solver ignores the given rank, so it is solved once per
    (level, repeat) and its outcome shared across the rank axis.
    """
    if axis not in ("delta", "outlier_ratio"):
        raise ValueError(f"unknown axis {axis!r}")
    configs = configs or MethodConfigs()
    n_modes = len(dims)
    cells: dict[tuple, list] = {}
    for li, level in enumerate(levels):
        for rep in range(repeats):
            kw = {"noise_delta": level} if axis == "delta" else {"outlier_ratio": level}
            spec = SynthSpec(dims, true_rank, outlier_range=outlier_range, seed=seed + rep, **kw)
            data = gen_tucker(spec)
            for method in methods:
                shared = None
                for gr in given_ranks:
                    if method == "ctd" and shared is not None:
                        outcome = shared
                    else:
                        outcome, _ = run_trial(method, spec, (gr,) * n_modes, configs, data)
                        if method == "ctd":
                            shared = outcome
                    cells.setdefault((method, gr, li), []).append(outcome)
    rows = []
    for method in methods:
        for li, level in enumerate(levels):
            for gr in given_ranks:
                outs = cells[(method, gr, li)]
                good = [o for o in outs if o is not None]
                succ = sum(o.success for o in good)
                rows.append(
                    {
                        "method": method,
                        "axis": axis,
                        "level": level,
                        "given_rank": gr,
                        "true_rank": true_rank,
                        "dims": tuple(dims),
                        "repeats": len(outs),
                        "successes": succ,
                        "success_fraction": succ / len(outs),
                        "mean_rse": float(np.mean([o.rse for o in good])) if good else float("nan"),
                    }
                )
    return rows


def trace(spec: SynthSpec, methods: Sequence[str], given: Sequence[int], configs: MethodConfigs | None = None) -> list[dict]:
    """Per-iteration residual / relative-change rows for convergence plots."""
    configs = configs or MethodConfigs()
    _, noisy, _ = gen_tucker(spec)
    rows = []
    for method in methods:
        run = run_method(method, noisy, given, configs, seed=spec.seed)
        for rec in run.report.iterations:
            rows.append(
                {
                    "method": method,
                    "seed": spec.seed,
                    "iter": rec.iter,
                    "residual": rec.residual,
                    "rel_change": rec.rel_change,
                    "objective": rec.objective,
                    "wall_ms": rec.wall_ms,
                }
            )
    return rows


def write_csv(rows: Sequence[dict], path, fields: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in fields})


def provenance() -> str:
    return f"rng={RNG_ALGORITHM} kernels={backend()}"
