"""Command-line front end.

Subcommands: ``gen``, ``decompose``, ``benchmark``, ``phase``, ``trace``.
Settings come from built-in defaults, then an optional ``--config``
``key=value`` file, then command-line flags (later wins).

Exit codes: 0 converged / done, 1 usage or input error, 2 the solver hit
its iteration cap.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .datagen import SynthSpec, gen_tucker, rse
from .io import TensorFormatError, format_float, load_tensor, read_kv, write_tensor

log = logging.getLogger("tracenorm_tucker")

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2

DEFAULTS = {
    "method": "nctd",
    "dims": "30,30,30",
    "ranks": None,
    "true_rank": "5",
    "delta": "0",
    "outlier_ratio": "0",
    "outlier_range": "1.0",
    "given_ranks": "5,7,9,11,13,15",
    "axis": None,
    "rank_factor": "1.2",
    "lambda": None,
    "mu0": None,
    "rho": None,
    "gamma": None,
    "tol": None,
    "max_iter": None,
    "seed": "0",
    "repeats": "1",
    "out": None,
    "reference": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for the iteration cap
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _ints(text, name) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{name.replace('_', '-')}: expected comma-separated integers, got {text!r}")


def _floats(text, name) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{name.replace('_', '-')}: expected comma-separated numbers, got {text!r}")


def _single(values, name):
    if len(values) != 1:
        raise UsageError(f"--{name.replace('_', '-')} takes a single value here")
    return values[0]


def _add_common(p: argparse.ArgumentParser) -> None:
    # every flag defaults to None so that config-file values can fill gaps
    p.add_argument("--config", help="key=value settings file (flags override it)")
    p.add_argument("--method", help="hosvd, hooi, ctd or nctd (comma list for sweeps)")
    p.add_argument("--dims", help="tensor extents, e.g. 40,40,40")
    p.add_argument("--ranks", help="working ranks R_n (one value or one per mode)")
    p.add_argument("--true-rank", dest="true_rank", help="ground-truth rank (comma list for benchmark)")
    p.add_argument("--given-ranks", dest="given_ranks", help="phase grid: working ranks")
    p.add_argument("--rank-factor", dest="rank_factor", help="benchmark: R_n = floor(factor * r)")
    p.add_argument("--delta", help="Gaussian noise level (comma list for phase)")
    p.add_argument("--outlier-ratio", dest="outlier_ratio", help="fraction of corrupted entries (comma list for phase)")
    p.add_argument("--outlier-range", dest="outlier_range", help="outlier magnitude bound")
    p.add_argument("--axis", choices=["delta", "outlier_ratio"], help="phase grid axis")
    p.add_argument("--lambda", dest="lambda", help="data-fit weight")
    p.add_argument("--mu0", help="initial ADMM penalty")
    p.add_argument("--rho", help="penalty growth factor")
    p.add_argument("--gamma", help="dual relaxation")
    p.add_argument("--tol", help="stopping tolerance")
    p.add_argument("--max-iter", dest="max_iter", help="iteration cap")
    p.add_argument("--seed", help="base seed")
    p.add_argument("--repeats", help="trials per setting")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--reference", help="clean tensor to score the result against")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tracenorm-tucker", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("gen", help="write a synthetic Tucker problem")
    _add_common(p)
    p = sub.add_parser("decompose", help="decompose one tensor file")
    p.add_argument("input", help="TNSR v1 file, or .csv with --dims")
    _add_common(p)
    p = sub.add_parser("benchmark", help="methods x true ranks x repeats sweep")
    p.add_argument("spec_file", nargs="?", help="key=value settings (same keys as --config)")
    _add_common(p)
    p = sub.add_parser("phase", help="success-fraction grid over given rank x noise/outliers")
    _add_common(p)
    p = sub.add_parser("trace", help="per-iteration convergence rows")
    _add_common(p)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags."""
    settings = dict(DEFAULTS)
    files = [getattr(args, "config", None), getattr(args, "spec_file", None)]
    for f in files:
        if f:
            try:
                kv = read_kv(f)
            except OSError as exc:
                raise UsageError(f"cannot read {f}: {exc}")
            except ValueError as exc:
                raise UsageError(str(exc))
            for k, v in kv.items():
                if k == "lam":
                    k = "lambda"
                if k not in settings:
                    raise UsageError(f"{f}: unknown key {k!r}")
                settings[k] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            settings[k] = v
    return settings


def _solver_overrides(s: dict) -> dict:
    out = {}
    for key, name, conv in [
        ("lambda", "lam", float), ("mu0", "mu0", float), ("rho", "rho", float),
        ("gamma", "gamma", float), ("tol", "tol", float), ("max_iter", "max_iter", int),
    ]:
        if s[key] is not None:
            try:
                out[name] = conv(s[key])
            except ValueError:
                raise UsageError(f"--{key.replace('_', '-')}: bad value {s[key]!r}")
    return out


def _configs(s: dict) -> ex.MethodConfigs:
    ov = _solver_overrides(s)
    configs = ex.MethodConfigs.from_overrides(ov)
    if "max_iter" in ov:
        configs.hooi_max_iter = ov["max_iter"]
    return configs


def _methods(s: dict) -> list[str]:
    methods = [m.strip().lower() for m in str(s["method"]).split(",") if m.strip()]
    for m in methods:
        if m not in ex.METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(ex.METHODS)}")
    return methods


def _spec(s: dict, true_rank: int | None = None) -> SynthSpec:
    dims = _ints(s["dims"], "dims")
    r = true_rank if true_rank is not None else _single(_ints(s["true_rank"], "true_rank"), "true_rank")
    try:
        return SynthSpec(
            tuple(dims),
            r,
            _single(_floats(s["delta"], "delta"), "delta"),
            _single(_floats(s["outlier_ratio"], "outlier_ratio"), "outlier_ratio"),
            _single(_floats(s["outlier_range"], "outlier_range"), "outlier_range"),
            int(s["seed"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _out_dir(s: dict, default: str) -> Path:
    out = Path(s["out"] or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _out_file(s: dict, default: str) -> Path:
    out = Path(s["out"] or default)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands ------------------------------------------------------------


def cmd_gen(s: dict) -> int:
    spec = _spec(s)
    out = _out_dir(s, "synthetic")
    clean, noisy, truth = gen_tucker(spec)
    write_tensor(out / "clean.tnsr", clean)
    write_tensor(out / "noisy.tnsr", noisy)
    write_tensor(out / "core.tnsr", truth.core)
    for n, u in enumerate(truth.factors, 1):
        write_tensor(out / f"factor_{n}.tnsr", u)
    (out / "spec.txt").write_text(spec.to_text() + f"rng={ex.RNG_ALGORITHM}\n", encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_decompose(s: dict, input_path: str) -> int:
    method = _single(_methods(s), "method")
    # --dims only matters for CSV input; TNSR files carry their own extents
    dims = _ints(s["dims"], "dims") if input_path.lower().endswith(".csv") else None
    try:
        t = load_tensor(input_path, dims)
    except (OSError, TensorFormatError) as exc:
        raise UsageError(f"cannot load {input_path}: {exc}")
    ranks = None
    if method != "ctd":
        if s["ranks"] is None:
            raise UsageError(f"--ranks is required for method {method}")
        ranks = _ints(s["ranks"], "ranks")
        if len(ranks) == 1:
            ranks = ranks * t.ndim
    reference = None
    if s["reference"]:
        try:
            reference = load_tensor(s["reference"], dims)
        except (OSError, TensorFormatError) as exc:
            raise UsageError(f"cannot load reference: {exc}")
        if reference.shape != t.shape:
            raise UsageError(f"reference shape {reference.shape} differs from input {t.shape}")

    try:
        run = ex.run_method(method, t, ranks, _configs(s), seed=int(s["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc))

    out = _out_dir(s, f"{Path(input_path).stem}_{method}")
    write_tensor(out / "core.tnsr", run.model.core)
    for n, u in enumerate(run.model.factors, 1):
        write_tensor(out / f"factor_{n}.tnsr", u)
    write_tensor(out / "reconstruction.tnsr", run.x)
    trace_rows = [dict(method=method, seed=s["seed"], **vars(r)) for r in run.report.iterations]
    ex.write_csv(trace_rows, out / "trace.csv", ex.TRACE_FIELDS)

    rse_val = ""
    if reference is not None and np.linalg.norm(reference) > 0:
        rse_val = format_float(rse(run.x, reference))
    summary = {
        "method": method,
        "dims": "x".join(map(str, t.shape)),
        "rse": rse_val,
        "est_ranks": "x".join(map(str, run.est_ranks)),
        "iters": run.report.n_iter,
        "converged": int(run.converged),
        "wall_ms": format_float(run.report.wall_ms),
        "kernels": ex.backend(),
    }
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(summary) + "\n")
        fh.write(",".join(str(v) for v in summary.values()) + "\n")
    print(",".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK if run.converged else EXIT_MAX_ITER


def cmd_benchmark(s: dict) -> int:
    methods = _methods(s)
    true_ranks = _ints(s["true_rank"], "true_rank")
    base = _spec(s, true_ranks[0])
    given = None
    if s["ranks"] is not None:
        given = _single(_ints(s["ranks"], "ranks"), "ranks")
    rows = ex.benchmark(
        base, methods, true_ranks, int(s["repeats"]), _configs(s),
        rank_factor=float(s["rank_factor"]), given_rank=given,
    )
    out = _out_file(s, "benchmark.csv")
    ex.write_csv(rows, out, ex.TRIAL_FIELDS)
    print(f"wrote {len(rows)} rows to {out} ({ex.provenance()})")
    return EXIT_OK


def cmd_phase(s: dict) -> int:
    methods = _methods(s)
    deltas = _floats(s["delta"], "delta")
    ratios = _floats(s["outlier_ratio"], "outlier_ratio")
    axis = s["axis"] or ("outlier_ratio" if len(ratios) > 1 and len(deltas) == 1 else "delta")
    levels = deltas if axis == "delta" else ratios
    rows = ex.phase(
        _ints(s["dims"], "dims"),
        _single(_ints(s["true_rank"], "true_rank"), "true_rank"),
        _ints(s["given_ranks"], "given_ranks"),
        levels,
        methods,
        int(s["repeats"]),
        axis=axis,
        configs=_configs(s),
        seed=int(s["seed"]),
        outlier_range=float(s["outlier_range"]),
    )
    out = _out_file(s, f"phase_{axis}.csv")
    ex.write_csv(rows, out, ex.PHASE_FIELDS)
    print(f"wrote {len(rows)} cells to {out} ({ex.provenance()})")
    return EXIT_OK


def cmd_trace(s: dict) -> int:
    methods = _methods(s)
    spec = _spec(s)
    if s["ranks"] is not None:
        ranks = _ints(s["ranks"], "ranks")
        given = tuple(ranks * len(spec.dims)) if len(ranks) == 1 else tuple(ranks)
    else:
        given = ex.given_ranks_for(spec.true_ranks[0], len(spec.dims), float(s["rank_factor"]))
    rows = ex.trace(spec, methods, given, _configs(s))
    out = _out_file(s, "trace.csv")
    ex.write_csv(rows, out, ex.TRACE_FIELDS)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        s = resolve(args)
        if args.command == "gen":
            return cmd_gen(s)
        if args.command == "decompose":
            return cmd_decompose(s, args.input)
        if args.command == "benchmark":
            return cmd_benchmark(s)
        if args.command == "phase":
            return cmd_phase(s)
        if args.command == "trace":
            return cmd_trace(s)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except RuntimeError as exc:  # SVD failure or divergence
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
