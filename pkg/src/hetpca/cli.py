"""Command-line driver.

Subcommands:
    synth         write a synthetic dataset (matrix CSV + JSON sidecar)
    fit           run one solve on a matrix CSV (or a generated instance)
    sweep         grid sweep -> sweep.csv + ratios.csv
    lambda-curve  weight sensitivity study -> lambda_curve.csv
    cv-matrix     per-cell weight cross-validation -> cv_matrix.csv (+ meta)
    import        merge an external results CSV into an existing sweep

All subcommands accept --config <file> (TOML); explicit flags override the
config.  Exit code 0 on success, nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from . import harness, synth
from .model import (
    FixedSafe,
    GroupedNoise,
    KnownNoise,
    Manual,
    PerSampleNoise,
    SolverConfig,
)
from .solver import solve


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _synth_spec(cfg: dict, args) -> synth.SynthSpec:
    section = dict(cfg.get("synth", {}))
    if getattr(args, "ambient_dim", None) is not None:
        section["ambient_dim"] = args.ambient_dim
    if getattr(args, "subspace_dim", None) is not None:
        section["subspace_dim"] = args.subspace_dim
    if getattr(args, "group_sizes", None) is not None:
        section["group_sizes"] = args.group_sizes
    if getattr(args, "group_variances", None) is not None:
        section["group_variances"] = args.group_variances
    if getattr(args, "coord_range", None) is not None:
        section["coord_range"] = args.coord_range
    if getattr(args, "seed", None) is not None:
        section["seed"] = args.seed
    if "group_sizes" in section:
        section["group_sizes"] = tuple(int(v) for v in section["group_sizes"])
    if "group_variances" in section:
        section["group_variances"] = tuple(float(v) for v in section["group_variances"])
    return synth.SynthSpec(**section)


def _solver_options(cfg: dict, args) -> dict:
    section = dict(cfg.get("solver", {}))
    opts = {}
    if "tol_residual" in section:
        opts["tol_residual"] = float(section["tol_residual"])
    if "max_iters" in section:
        opts["max_iters"] = int(section["max_iters"])
    if "variance_floor" in section:
        opts["variance_floor"] = float(section["variance_floor"])
    if "variance_update_period" in section:
        opts["variance_update_period"] = int(section["variance_update_period"])
    if "mu_multiplier" in section:
        opts["mu_policy"] = FixedSafe(float(section["mu_multiplier"]))
    if "mu_manual" in section:
        opts["mu_policy"] = Manual(float(section["mu_manual"]))
    if getattr(args, "tol", None) is not None:
        opts["tol_residual"] = args.tol
    if getattr(args, "max_iters", None) is not None:
        opts["max_iters"] = args.max_iters
    return opts


def _lambda_policies(cfg: dict) -> dict:
    policies = {}
    for method, spec in cfg.get("lambda_policy", {}).items():
        kind = spec.get("kind", "fixed")
        if kind == "fixed":
            policies[method] = harness.FixedLambda(float(spec["factor"]))
        elif kind == "cv":
            factors = spec.get("factors")
            policies[method] = (
                harness.CvLambda(tuple(float(f) for f in factors))
                if factors
                else harness.CvLambda()
            )
        else:
            raise ValueError(f"lambda_policy.{method}: unknown kind {kind!r}")
    return policies


def _grid(cfg: dict, args, solver_options: dict) -> harness.SweepGrid:
    section = dict(cfg.get("grid", {}))
    kwargs = {}
    if "point_ratios" in section:
        kwargs["point_ratios"] = tuple(float(v) for v in section["point_ratios"])
    if "variance_ratios" in section:
        kwargs["variance_ratios"] = tuple(float(v) for v in section["variance_ratios"])
    if "trials" in section:
        kwargs["trials"] = int(section["trials"])
    if "methods" in section:
        kwargs["methods"] = tuple(section["methods"])
    if getattr(args, "trials", None) is not None:
        kwargs["trials"] = args.trials
    if getattr(args, "methods", None) is not None:
        kwargs["methods"] = tuple(args.methods.split(","))
    synth_section = cfg.get("synth", {})
    if "ambient_dim" in synth_section:
        kwargs["ambient_dim"] = int(synth_section["ambient_dim"])
    if "subspace_dim" in synth_section:
        kwargs["subspace_dim"] = int(synth_section["subspace_dim"])
    if getattr(args, "rank", None) is not None:
        kwargs["subspace_dim"] = args.rank
    policies = _lambda_policies(cfg)
    if policies:
        kwargs["lambda_policies"] = policies
    if solver_options:
        kwargs["solver_options"] = solver_options
    return harness.SweepGrid(**kwargs)


def _out_dir(cfg: dict, args) -> Path:
    out = getattr(args, "out_dir", None)
    if out is None:
        out = cfg.get("output", {}).get("dir", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_matrix(path: Path, matrix: np.ndarray):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])


def _read_vector(path) -> np.ndarray:
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            for item in row:
                if item.strip():
                    try:
                        values.append(float(item))
                    except ValueError as e:
                        raise ValueError(f"{path}: line {line_no}: non-numeric entry") from e
    if not values:
        raise ValueError(f"{path}: empty vector file")
    return np.asarray(values)


def _cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    spec = _synth_spec(cfg, args)
    out = Path(args.out) if args.out else _out_dir(cfg, args) / "synth.csv"
    matrix_path, sidecar = synth.export_csv(
        spec, out, include_truth=args.truth
    )
    print(f"wrote {matrix_path} and {sidecar}")
    return 0


def _cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    if args.infile:
        data = synth.read_matrix_csv(args.infile)
        truth_basis = None
    else:
        spec = _synth_spec(cfg, args)
        data, truth_basis, _, _ = synth.generate(spec)

    d, n = data.values.shape
    rank = args.rank if args.rank is not None else int(cfg.get("fit", {}).get("rank", 10))
    lam = args.lam
    if lam is None:
        lam = 2.0 * float(np.linalg.svd(data.values, compute_uv=False)[0])

    mode = args.noise_mode
    if mode == "known":
        if not args.variances:
            raise ValueError("--noise-mode known requires --variances <file>")
        noise = KnownNoise(_read_vector(args.variances))
    elif mode == "grouped":
        if not args.groups:
            raise ValueError("--noise-mode grouped requires --groups <file>")
        noise = GroupedNoise([int(v) for v in _read_vector(args.groups)])
    else:
        noise = PerSampleNoise()

    opts = _solver_options(cfg, args)
    config = SolverConfig(lam=lam, rank_hint=rank, **opts)
    report = solve(data, noise, config)

    out_dir = _out_dir(cfg, args)
    _write_matrix(out_dir / "basis.csv", report.estimate.basis)
    _write_matrix(out_dir / "denoised.csv", report.estimate.denoised)
    _write_matrix(out_dir / "variances.csv", report.estimate.estimated_variances.reshape(1, -1))
    summary = {
        "lambda": lam,
        "rank": rank,
        "noise_mode": mode,
        "shape": [d, n],
        "iterations": report.iterations_used,
        "converged": report.converged,
        "final_primal_residual": report.final_primal_residual,
        "warnings": report.warnings,
    }
    if truth_basis is not None:
        from .metrics import affinity_error

        summary["affinity_error_vs_truth"] = affinity_error(
            truth_basis, report.estimate.basis
        )
    (out_dir / "report.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    print(f"wrote basis/denoised/variances/report to {out_dir}")
    return 0


def _default_pairs(methods) -> list:
    pairs = []
    for a in methods:
        if a in harness.SOLVER_METHODS:
            for b in methods:
                if b != a:
                    pairs.append((a, b))
    return pairs


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid(cfg, args, _solver_options(cfg, args))
    base_seed = args.seed if args.seed is not None else int(cfg.get("grid", {}).get("base_seed", 0))
    result = harness.run_sweep(grid, base_seed=base_seed, workers=args.workers)
    out_dir = _out_dir(cfg, args)
    sweep_path = result.to_csv(out_dir / "sweep.csv")
    pair_spec = cfg.get("output", {}).get("ratio_pairs")
    if pair_spec:
        pairs = [tuple(p.split("/", 1)) for p in pair_spec]
    else:
        pairs = _default_pairs(grid.methods)
    ratio_path = None
    if pairs:
        ratio_path = result.ratios_to_csv(out_dir / "ratios.csv", pairs)
    print(f"wrote {sweep_path}" + (f" and {ratio_path}" if ratio_path else ""))
    return 0


def _cmd_lambda_curve(args) -> int:
    cfg = _load_config(args.config)
    curve_cfg = cfg.get("curve", {})
    spec_cfg = cfg.get("synth")
    spec = _synth_spec(cfg, args) if spec_cfg else None
    factors = curve_cfg.get("lambda_factors", harness.DEFAULT_LAMBDA_FACTORS)
    methods = tuple(curve_cfg.get("methods", ("hetpca-known", "pca", "wpca")))
    trials = args.trials if args.trials is not None else int(curve_cfg.get("trials", 25))
    base_seed = args.seed if args.seed is not None else int(curve_cfg.get("base_seed", 0))
    opts = _solver_options(cfg, args)
    grid = None
    if spec is not None or opts:
        ref = spec or synth.SynthSpec(group_sizes=(10, 490), group_variances=(0.25, 100.0))
        grid = harness.SweepGrid(
            point_ratios=(1,),
            variance_ratios=(1,),
            methods=methods,
            subspace_dim=ref.subspace_dim,
            ambient_dim=ref.ambient_dim,
            solver_options=opts,
        )
    rows = harness.run_lambda_curve(
        spec=spec, lambda_grid=factors, methods=methods, trials=trials,
        base_seed=base_seed, grid=grid,
    )
    out_dir = _out_dir(cfg, args)
    path = harness.lambda_curve_to_csv(rows, out_dir / "lambda_curve.csv")
    print(f"wrote {path}")
    return 0


def _cmd_cv_matrix(args) -> int:
    cfg = _load_config(args.config)
    grid = _grid(cfg, args, _solver_options(cfg, args))
    methods = tuple(
        m for m in grid.methods if harness.default_lambda_policy(m) is not None
    ) or ("hetpca-sample",)
    base_seed = args.seed if args.seed is not None else int(cfg.get("grid", {}).get("base_seed", 0))
    result = harness.run_cv_matrix(
        grid, methods=methods, base_seed=base_seed, evaluate=not args.no_evaluate
    )
    out_dir = _out_dir(cfg, args)
    path = result.to_csv(out_dir / "cv_matrix.csv")
    meta = dict(result.metadata)
    meta["global_factor"] = result.global_factor
    for m in methods:
        if result.tuned_errors:
            meta[f"within_10pct:{m}"] = result.within_fraction(m)
    (out_dir / "cv_matrix.meta.json").write_text(
        json.dumps(meta, indent=2, default=float), encoding="utf-8"
    )
    print(f"wrote {path} and {out_dir / 'cv_matrix.meta.json'}")
    return 0


def _cmd_import(args) -> int:
    existing = harness.SweepResult.from_csv(args.sweep)
    rows = harness.import_external_results(args.infile)
    merged = existing.merge(rows)
    out = Path(args.out) if args.out else Path(args.sweep)
    merged.to_csv(out)
    if args.pairs:
        pairs = [tuple(p.split("/", 1)) for p in args.pairs.split(",")]
        merged.ratios_to_csv(out.parent / "ratios.csv", pairs)
    print(f"merged {len(rows)} external rows into {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetpca",
        description="Low-rank subspace estimation for heteroscedastic data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        p.add_argument("--seed", type=int, help="base seed override")

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    add_common(p_synth)
    p_synth.add_argument("--out", help="matrix CSV path")
    p_synth.add_argument("--ambient-dim", type=int, dest="ambient_dim")
    p_synth.add_argument("--subspace-dim", type=int, dest="subspace_dim")
    p_synth.add_argument("--group-sizes", type=lambda s: [int(v) for v in s.split(",")],
                         dest="group_sizes", help="n1,n2")
    p_synth.add_argument("--group-variances", type=lambda s: [float(v) for v in s.split(",")],
                         dest="group_variances", help="v1,v2")
    p_synth.add_argument("--coord-range", type=float, dest="coord_range")
    p_synth.add_argument("--truth", action="store_true",
                         help="include the true basis/variances in the sidecar")

    p_fit = sub.add_parser("fit", help="run one solve")
    add_common(p_fit)
    p_fit.add_argument("--in", dest="infile", help="matrix CSV (one column per sample)")
    p_fit.add_argument("--lambda", dest="lam", type=float,
                       help="absolute regularization weight (default 2*||Y||_2)")
    p_fit.add_argument("--rank", type=int, help="subspace dimension k")
    p_fit.add_argument("--noise-mode", choices=("known", "per-sample", "grouped"),
                       default="per-sample")
    p_fit.add_argument("--variances", help="CSV of known variances (known mode)")
    p_fit.add_argument("--groups", help="CSV of group ids (grouped mode)")
    p_fit.add_argument("--tol", type=float, help="relative residual tolerance")
    p_fit.add_argument("--max-iters", dest="max_iters", type=int)
    p_fit.add_argument("--ambient-dim", type=int, dest="ambient_dim", help=argparse.SUPPRESS)
    p_fit.add_argument("--subspace-dim", type=int, dest="subspace_dim", help=argparse.SUPPRESS)
    p_fit.add_argument("--group-sizes", type=lambda s: [int(v) for v in s.split(",")],
                       dest="group_sizes", help=argparse.SUPPRESS)
    p_fit.add_argument("--group-variances", type=lambda s: [float(v) for v in s.split(",")],
                       dest="group_variances", help=argparse.SUPPRESS)
    p_fit.add_argument("--coord-range", type=float, dest="coord_range", help=argparse.SUPPRESS)

    p_sweep = sub.add_parser("sweep", help="grid sweep -> sweep.csv + ratios.csv")
    add_common(p_sweep)
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--methods", help="comma-separated method ids")
    p_sweep.add_argument("--rank", type=int, help="subspace dimension k")
    p_sweep.add_argument("--tol", type=float, help="solver tolerance")
    p_sweep.add_argument("--max-iters", dest="max_iters", type=int)
    p_sweep.add_argument("--workers", type=int, default=1)

    p_curve = sub.add_parser("lambda-curve", help="weight sensitivity -> lambda_curve.csv")
    add_common(p_curve)
    p_curve.add_argument("--trials", type=int)
    p_curve.add_argument("--tol", type=float)
    p_curve.add_argument("--max-iters", dest="max_iters", type=int)
    p_curve.add_argument("--ambient-dim", type=int, dest="ambient_dim", help=argparse.SUPPRESS)
    p_curve.add_argument("--subspace-dim", type=int, dest="subspace_dim", help=argparse.SUPPRESS)
    p_curve.add_argument("--group-sizes", type=lambda s: [int(v) for v in s.split(",")],
                         dest="group_sizes", help=argparse.SUPPRESS)
    p_curve.add_argument("--group-variances", type=lambda s: [float(v) for v in s.split(",")],
                         dest="group_variances", help=argparse.SUPPRESS)
    p_curve.add_argument("--coord-range", type=float, dest="coord_range", help=argparse.SUPPRESS)

    p_cv = sub.add_parser("cv-matrix", help="per-cell weight CV -> cv_matrix.csv")
    add_common(p_cv)
    p_cv.add_argument("--trials", type=int)
    p_cv.add_argument("--methods", help="comma-separated method ids")
    p_cv.add_argument("--rank", type=int)
    p_cv.add_argument("--tol", type=float)
    p_cv.add_argument("--max-iters", dest="max_iters", type=int)
    p_cv.add_argument("--no-evaluate", action="store_true",
                      help="skip tuned/global error evaluation")

    p_imp = sub.add_parser("import", help="merge external results into a sweep CSV")
    p_imp.add_argument("--in", dest="infile", required=True, help="external results CSV")
    p_imp.add_argument("--sweep", required=True, help="existing sweep.csv")
    p_imp.add_argument("--out", help="merged output (default: overwrite --sweep)")
    p_imp.add_argument("--pairs", help="comma-separated A/B pairs for ratios.csv")

    return parser


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "lambda-curve": _cmd_lambda_curve,
    "cv-matrix": _cmd_cv_matrix,
    "import": _cmd_import,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as e:  # noqa: BLE001 - single diagnostic exit path
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
