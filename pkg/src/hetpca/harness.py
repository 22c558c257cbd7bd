"""Experiment driver: grid sweeps, lambda cross-validation, CSV artifacts.

Reproduces the benchmark studies — ratio heatmaps over a (point ratio x
variance ratio) grid, lambda-sensitivity curves, and a per-cell
cross-validation matrix — and writes the delimited outputs consumed by the
rendering tool.

Conventions:
    - Group 1 is fixed at 10 samples with variance 1; a grid cell
      (point_ratio, variance_ratio) gives group 2 `10 * point_ratio` samples
      at variance `variance_ratio`.
    - Regularization weights are handled as *relative* factors: for the
      solver methods lambda = factor * ||Y||_2 of the instance; for robust
      PCA the sparsity weight = factor / sqrt(max(D, N)).  CSV rows record
      the absolute value actually used.
    - Every trial/validation instance derives its seed from
      (base_seed, labels...) via a stable hash, so any subset of the work
      can be reproduced independently and reruns are bit-identical
      (wall_time column aside).
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .baselines import pca, pca_subset, rpca, wpca
from .metrics import affinity_error
from .model import GroupedNoise, KnownNoise, PerSampleNoise, SolverConfig
from .solver import solve
from .synth import SynthSpec, derive_seed, generate

GROUP_ONE_SIZE = 10
GROUP_ONE_VARIANCE = 1.0

SOLVER_METHODS = ("hetpca-known", "hetpca-sample", "hetpca-grouped")
BASELINE_METHODS = ("pca", "pca-good", "wpca", "rpca")
KNOWN_METHODS = SOLVER_METHODS + BASELINE_METHODS

SWEEP_COLUMNS = (
    "point_ratio",
    "variance_ratio",
    "trial",
    "seed",
    "method",
    "lambda_used",
    "affinity_error",
    "iterations",
    "wall_time",
)

# 20 log-spaced relative weights spanning [1e-2, 1e2] (around the
# spectral-norm heuristic for the solver; around 1/sqrt(max(D,N)) for
# robust PCA).
DEFAULT_LAMBDA_FACTORS = tuple(np.logspace(-2.0, 2.0, 20).tolist())
DEFAULT_RPCA_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class FixedLambda:
    """Use one relative weight everywhere."""

    factor: float


@dataclass(frozen=True)
class CvLambda:
    """Cross-validate the relative weight per grid cell."""

    factors: Tuple[float, ...] = DEFAULT_LAMBDA_FACTORS

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(float(f) for f in self.factors))


@dataclass(frozen=True)
class PerCellLambda:
    """Use precomputed per-cell relative weights (e.g. from run_cv_matrix)."""

    factors: Dict[Tuple[float, float], float] = field(default_factory=dict)


LambdaPolicy = Union[FixedLambda, CvLambda, PerCellLambda, None]


def default_lambda_policy(method: str) -> LambdaPolicy:
    if method == "hetpca-known":
        return FixedLambda(2.0)
    if method in ("hetpca-sample", "hetpca-grouped"):
        return CvLambda(DEFAULT_LAMBDA_FACTORS)
    if method == "rpca":
        return CvLambda(DEFAULT_RPCA_FACTORS)
    return None


@dataclass(frozen=True)
class SweepGrid:
    """Sweep definition.

    Attributes:
        point_ratios: group-2 size as a multiple of the 10-sample group 1.
        variance_ratios: group-2 variance over the group-1 variance of 1.
        trials: Monte Carlo repetitions per cell.
        methods: method ids to run (see KNOWN_METHODS).
        lambda_policies: optional per-method overrides of the weight policy.
        subspace_dim: true subspace dimension k (and extracted basis size).
        ambient_dim: sample dimension D.
        solver_options: SolverConfig overrides (tol_residual, max_iters, ...).
        cv_validation: fresh realizations per cross-validation evaluation.
        protected_rank: solver rank hint override; 0 switches the solver
            methods to pure nuclear-norm mode while the extracted basis keeps
            subspace_dim columns.  None (default) protects subspace_dim.
    """

    point_ratios: Tuple[float, ...] = (1, 2, 4, 8, 16, 32)
    variance_ratios: Tuple[float, ...] = (1, 4, 16, 64, 256)
    trials: int = 25
    methods: Tuple[str, ...] = ("pca", "hetpca-known")
    lambda_policies: Dict[str, LambdaPolicy] = field(default_factory=dict)
    subspace_dim: int = 10
    ambient_dim: int = 100
    solver_options: Dict[str, float] = field(default_factory=dict)
    cv_validation: int = 5
    protected_rank: Optional[int] = None

    def __post_init__(self):
        if any(r <= 0 for r in self.point_ratios) or any(r <= 0 for r in self.variance_ratios):
            raise ValueError("grid ratios must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            if m not in KNOWN_METHODS and not m.startswith("external:"):
                raise ValueError(f"unknown method id {m!r}; known: {KNOWN_METHODS}")

    def policy_for(self, method: str) -> LambdaPolicy:
        if method in self.lambda_policies:
            return self.lambda_policies[method]
        return default_lambda_policy(method)

    def cell_spec(self, point_ratio: float, variance_ratio: float, seed: int) -> SynthSpec:
        n2 = int(round(GROUP_ONE_SIZE * point_ratio))
        return SynthSpec(
            ambient_dim=self.ambient_dim,
            subspace_dim=self.subspace_dim,
            group_sizes=(GROUP_ONE_SIZE, n2),
            group_variances=(GROUP_ONE_VARIANCE, GROUP_ONE_VARIANCE * variance_ratio),
            seed=seed,
        )


@dataclass
class SweepRow:
    point_ratio: float
    variance_ratio: float
    trial: int
    seed: int
    method: str
    lambda_used: float
    affinity_error: float
    iterations: int
    wall_time: float

    def key(self):
        return (self.point_ratio, self.variance_ratio, self.trial, self.method)


@dataclass
class SweepResult:
    """Sweep rows plus the per-cell weight choices that produced them."""

    rows: List[SweepRow] = field(default_factory=list)
    cv_choices: Dict[Tuple[float, float, str], float] = field(default_factory=dict)

    def sorted_rows(self) -> List[SweepRow]:
        return sorted(self.rows, key=lambda r: r.key())

    def mean_errors(self) -> Dict[Tuple[float, float, str], float]:
        """Per-(cell, method) mean affinity error over successful trials."""
        sums: Dict[Tuple[float, float, str], List[float]] = {}
        for r in self.rows:
            if math.isnan(r.affinity_error):
                continue
            sums.setdefault((r.point_ratio, r.variance_ratio, r.method), []).append(
                r.affinity_error
            )
        return {k: float(np.mean(v)) for k, v in sums.items()}

    def ratios(self, pairs: Sequence[Tuple[str, str]]) -> List[Tuple[float, float, str, float]]:
        """Per-cell ratios of per-method mean errors.

        Returns rows (point_ratio, variance_ratio, "A/B", mean_A / mean_B),
        sorted by cell then pair.
        """
        means = self.mean_errors()
        cells = sorted({(r.point_ratio, r.variance_ratio) for r in self.rows})
        out = []
        for pr, vr in cells:
            for a, b in pairs:
                num = means.get((pr, vr, a))
                den = means.get((pr, vr, b))
                if num is None or den is None or den == 0.0:
                    ratio = float("nan")
                else:
                    ratio = num / den
                out.append((pr, vr, f"{a}/{b}", ratio))
        return out

    def merge(self, new_rows: Sequence[SweepRow]) -> "SweepResult":
        """Concatenate rows, rejecting duplicate (cell, trial, method) keys."""
        existing = {r.key() for r in self.rows}
        dups = [r.key() for r in new_rows if r.key() in existing]
        if dups:
            raise ValueError(f"duplicate (cell, trial, method) keys: {dups}")
        return SweepResult(rows=self.sorted_rows() + sorted(new_rows, key=lambda r: r.key()),
                           cv_choices=dict(self.cv_choices))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for r in self.sorted_rows():
                writer.writerow(
                    [
                        repr(float(r.point_ratio)),
                        repr(float(r.variance_ratio)),
                        r.trial,
                        r.seed,
                        r.method,
                        repr(float(r.lambda_used)),
                        repr(float(r.affinity_error)),
                        r.iterations,
                        repr(float(r.wall_time)),
                    ]
                )
        return path

    @staticmethod
    def from_csv(path) -> "SweepResult":
        rows = list(_read_sweep_rows(path))
        return SweepResult(rows=rows)

    def ratios_to_csv(self, path, pairs: Sequence[Tuple[str, str]]) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["point_ratio", "variance_ratio", "method_pair", "mean_ratio"])
            for pr, vr, pair, ratio in self.ratios(pairs):
                writer.writerow([repr(float(pr)), repr(float(vr)), pair, repr(float(ratio))])
        return path


def _read_sweep_rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file (header row is mandatory)")
        missing = [c for c in SWEEP_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
        idx = {c: header.index(c) for c in SWEEP_COLUMNS}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                yield SweepRow(
                    point_ratio=float(row[idx["point_ratio"]]),
                    variance_ratio=float(row[idx["variance_ratio"]]),
                    trial=int(row[idx["trial"]]),
                    seed=int(row[idx["seed"]]),
                    method=row[idx["method"]],
                    lambda_used=float(row[idx["lambda_used"]]),
                    affinity_error=float(row[idx["affinity_error"]]),
                    iterations=int(row[idx["iterations"]]),
                    wall_time=float(row[idx["wall_time"]]),
                )
            except (ValueError, IndexError) as e:
                raise ValueError(f"{path}: line {line_no}: {e}") from e


def _solver_config(grid: SweepGrid, lam: float) -> SolverConfig:
    opts = dict(grid.solver_options)
    hint = grid.protected_rank if grid.protected_rank is not None else grid.subspace_dim
    return SolverConfig(lam=lam, rank_hint=hint, **opts)


def _run_single(
    grid: SweepGrid,
    method: str,
    factor: Optional[float],
    data,
    basis_true,
    variances_true,
    assignment,
) -> Tuple[float, float, int]:
    """Run one method on one instance.

    Returns:
        (affinity, lambda_used, iterations).
    """
    k = grid.subspace_dim
    yv = data.values
    if method == "pca":
        est = pca(data, k)
        return affinity_error(basis_true, est.basis), float("nan"), 0
    if method == "pca-good":
        good_group = 1 if variances_true[0] <= variances_true[-1] else 2
        keep = np.flatnonzero(np.asarray(assignment) == good_group)
        est = pca_subset(data, keep, k)
        return affinity_error(basis_true, est.basis), float("nan"), 0
    if method == "wpca":
        est = wpca(data, variances_true, k)
        return affinity_error(basis_true, est.basis), float("nan"), 0
    if method == "rpca":
        base = 1.0 / np.sqrt(max(yv.shape))
        weight = (factor if factor is not None else 1.0) * base
        low_rank, _ = rpca(data, weight)
        est = pca(low_rank, k)
        return affinity_error(basis_true, est.basis), weight, 0
    if method in SOLVER_METHODS:
        lam = (factor if factor is not None else 2.0) * float(
            np.linalg.svd(yv, compute_uv=False)[0]
        )
        if method == "hetpca-known":
            noise = KnownNoise(variances_true)
        elif method == "hetpca-sample":
            noise = PerSampleNoise()
        else:
            noise = GroupedNoise(assignment)
        report = solve(data, noise, _solver_config(grid, lam), output_rank=k)
        return (
            affinity_error(basis_true, report.estimate.basis),
            lam,
            report.iterations_used,
        )
    raise ValueError(f"unknown method id {method!r}")


def cross_validate_lambda(
    spec: SynthSpec,
    method: str,
    lambda_grid: Sequence[float],
    grid: Optional[SweepGrid] = None,
    validation: int = 5,
    base_seed: int = 0,
) -> float:
    """Pick the relative weight minimizing mean affinity error.

    Oracle-style cross-validation: each candidate is scored on `validation`
    fresh realizations drawn from `spec` with distinct derived seeds, and the
    winner is the grid entry with the lowest mean error (ties go to the
    smallest weight).

    Args:
        spec: the dataset distribution to tune on.
        method: method id (must accept a weight: solver methods or rpca).
        lambda_grid: candidate relative weights (see module conventions).
        grid: sweep context for solver options / dimensions (defaults match
            the spec's dimensions).
        validation: number of fresh realizations per candidate.
        base_seed: seed namespace for the validation draws.

    Returns:
        The winning grid entry.

    Raises:
        ValueError: empty grid, or every candidate failed on every draw.
    """
    candidates = [float(f) for f in lambda_grid]
    if not candidates:
        raise ValueError("lambda_grid must be nonempty")
    if grid is None:
        grid = SweepGrid(
            point_ratios=(1,),
            variance_ratios=(1,),
            methods=(method,) if method in KNOWN_METHODS else ("pca",),
            subspace_dim=spec.subspace_dim,
            ambient_dim=spec.ambient_dim,
        )
    instances = []
    for rep in range(validation):
        seed = derive_seed(base_seed, "cv", spec.group_sizes, spec.group_variances, rep)
        instances.append(generate(replace(spec, seed=seed)))
    scores: List[Tuple[float, float]] = []
    failures: List[str] = []
    for cand in sorted(candidates):
        errs = []
        for data, basis_true, variances_true, assignment in instances:
            try:
                err, _, _ = _run_single(
                    grid, method, cand, data, basis_true, variances_true, assignment
                )
                errs.append(err)
            except Exception as e:  # noqa: BLE001 - failures are data, not control flow
                failures.append(f"weight {cand:g}: {type(e).__name__}: {e}")
        if errs:
            scores.append((float(np.mean(errs)), cand))
    if not scores:
        raise ValueError(
            "cross-validation failed for every candidate weight: " + "; ".join(failures)
        )
    best_score = min(s for s, _ in scores)
    # ties -> smallest weight; candidates were scored in ascending order
    for score, cand in scores:
        if score == best_score:
            return cand
    raise AssertionError("unreachable")


def run_sweep(
    grid: SweepGrid,
    base_seed: int = 0,
    workers: int = 1,
) -> SweepResult:
    """Run every (cell, trial, method) and collect rows.

    Cross-validated methods first tune their weight per cell (fresh
    validation realizations), then all trials run at the tuned weight.
    Individual method failures are recorded as rows with NaN affinity and
    the sweep continues.  Rows are merged in deterministic (cell, trial,
    method) order regardless of worker scheduling.
    """
    result = SweepResult()
    cells = [(float(pr), float(vr)) for pr in grid.point_ratios for vr in grid.variance_ratios]

    # Per-cell weight selection for CV policies.
    factors: Dict[Tuple[float, float, str], Optional[float]] = {}
    for pr, vr in cells:
        spec = grid.cell_spec(pr, vr, seed=0)
        for method in grid.methods:
            policy = grid.policy_for(method)
            if isinstance(policy, CvLambda):
                chosen = cross_validate_lambda(
                    spec,
                    method,
                    policy.factors,
                    grid=grid,
                    validation=grid.cv_validation,
                    base_seed=derive_seed(base_seed, "cv-cell", pr, vr, method),
                )
                factors[(pr, vr, method)] = chosen
                result.cv_choices[(pr, vr, method)] = chosen
            elif isinstance(policy, PerCellLambda):
                if (pr, vr) not in policy.factors:
                    raise ValueError(f"PerCellLambda missing factor for cell ({pr}, {vr})")
                factors[(pr, vr, method)] = policy.factors[(pr, vr)]
                result.cv_choices[(pr, vr, method)] = policy.factors[(pr, vr)]
            elif isinstance(policy, FixedLambda):
                factors[(pr, vr, method)] = policy.factor
            else:
                factors[(pr, vr, method)] = None

    def one_trial_rows(cell_trial) -> List[SweepRow]:
        (pr, vr), trial = cell_trial
        seed = derive_seed(base_seed, pr, vr, trial)
        data, basis_true, variances_true, assignment = generate(
            grid.cell_spec(pr, vr, seed=seed)
        )
        rows = []
        for method in grid.methods:
            t0 = time.perf_counter()
            try:
                err, lam_used, iters = _run_single(
                    grid, method, factors[(pr, vr, method)],
                    data, basis_true, variances_true, assignment,
                )
            except Exception:  # noqa: BLE001 - failed row, sweep continues
                err, lam_used, iters = float("nan"), float("nan"), 0
            rows.append(
                SweepRow(
                    point_ratio=pr,
                    variance_ratio=vr,
                    trial=trial,
                    seed=seed,
                    method=method,
                    lambda_used=lam_used,
                    affinity_error=err,
                    iterations=iters,
                    wall_time=time.perf_counter() - t0,
                )
            )
        return rows

    work = [((pr, vr), trial) for pr, vr in cells for trial in range(grid.trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(one_trial_rows, work):
                result.rows.extend(rows)
    else:
        for item in work:
            result.rows.extend(one_trial_rows(item))
    result.rows = result.sorted_rows()
    return result


def run_lambda_curve(
    spec: Optional[SynthSpec] = None,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_FACTORS,
    methods: Sequence[str] = ("hetpca-known", "pca", "wpca"),
    trials: int = 25,
    base_seed: int = 0,
    grid: Optional[SweepGrid] = None,
) -> List[Tuple[float, str, float, float]]:
    """Mean and max affinity error per (relative weight, method).

    Weight-independent methods (pca, pca-good, wpca) are computed once per
    trial and replicated across the grid so curves share trial instances.

    Args:
        spec: dataset distribution; defaults to the 500-sample two-group
            study (10 samples at variance 0.25, 490 at variance 100).

    Returns:
        Rows (lambda_factor, method, mean_affinity, max_affinity) sorted by
        (lambda_factor, method).
    """
    candidates = sorted(float(f) for f in lambda_grid)
    if not candidates:
        raise ValueError("lambda_grid must be nonempty")
    if spec is None:
        spec = SynthSpec(group_sizes=(10, 490), group_variances=(0.25, 100.0))
    if grid is None:
        grid = SweepGrid(
            point_ratios=(1,),
            variance_ratios=(1,),
            methods=tuple(methods),
            subspace_dim=spec.subspace_dim,
            ambient_dim=spec.ambient_dim,
        )
    instances = []
    for trial in range(trials):
        seed = derive_seed(base_seed, "curve", trial)
        instances.append(generate(replace(spec, seed=seed)))

    errors: Dict[Tuple[float, str], List[float]] = {}
    for method in methods:
        weight_free = default_lambda_policy(method) is None
        for data, basis_true, variances_true, assignment in instances:
            if weight_free:
                err, _, _ = _run_single(
                    grid, method, None, data, basis_true, variances_true, assignment
                )
                for cand in candidates:
                    errors.setdefault((cand, method), []).append(err)
            else:
                for cand in candidates:
                    try:
                        err, _, _ = _run_single(
                            grid, method, cand, data, basis_true, variances_true, assignment
                        )
                    except Exception:  # noqa: BLE001
                        err = float("nan")
                    errors.setdefault((cand, method), []).append(err)

    rows = []
    for (cand, method), errs in errors.items():
        arr = np.asarray(errs, dtype=float)
        ok = arr[~np.isnan(arr)]
        if ok.size:
            rows.append((cand, method, float(np.mean(ok)), float(np.max(ok))))
        else:
            rows.append((cand, method, float("nan"), float("nan")))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def lambda_curve_to_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_factor", "method", "mean_affinity", "max_affinity"])
        for cand, method, mean_err, max_err in rows:
            writer.writerow([repr(float(cand)), method, repr(float(mean_err)), repr(float(max_err))])
    return path


@dataclass
class CvMatrixResult:
    """Per-cell tuned weights plus robustness diagnostics.

    Attributes:
        picks: (point_ratio, variance_ratio, method) -> chosen factor.
        tuned_errors: per-cell mean affinity at the tuned factor.
        global_factor: median of the per-cell picks (per method).
        global_errors: per-cell mean affinity at the global factor.
        metadata: spread and configuration notes.
    """

    picks: Dict[Tuple[float, float, str], float]
    tuned_errors: Dict[Tuple[float, float, str], float] = field(default_factory=dict)
    global_factor: Dict[str, float] = field(default_factory=dict)
    global_errors: Dict[Tuple[float, float, str], float] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def spread(self, method: str) -> float:
        chosen = [f for (pr, vr, m), f in self.picks.items() if m == method]
        if not chosen or min(chosen) == 0:
            return float("nan")
        return max(chosen) / min(chosen)

    def within_fraction(self, method: str, slack: float = 0.10) -> float:
        """Fraction of cells where the global factor is within `slack` of tuned."""
        cells = [(pr, vr) for (pr, vr, m) in self.tuned_errors if m == method]
        if not cells:
            return float("nan")
        hits = 0
        for pr, vr in cells:
            tuned = self.tuned_errors[(pr, vr, method)]
            glob = self.global_errors.get((pr, vr, method), float("nan"))
            if glob <= (1.0 + slack) * tuned:
                hits += 1
        return hits / len(cells)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["point_ratio", "variance_ratio", "method", "best_lambda_factor", "mean_affinity"]
            )
            for (pr, vr, method), factor in sorted(self.picks.items()):
                err = self.tuned_errors.get((pr, vr, method), float("nan"))
                writer.writerow(
                    [repr(float(pr)), repr(float(vr)), method, repr(float(factor)), repr(float(err))]
                )
        return path


def evaluate_cells(
    grid: SweepGrid,
    method: str,
    factor,
    base_seed: int = 0,
) -> Dict[Tuple[float, float], float]:
    """Mean affinity per cell for one method at fixed weight(s).

    `factor` is a single relative weight or a {(point_ratio, variance_ratio):
    weight} mapping.  Trial instances match run_sweep's derivation, so
    results are directly comparable with sweep rows.
    """
    out: Dict[Tuple[float, float], float] = {}
    for pr in grid.point_ratios:
        for vr in grid.variance_ratios:
            pr_f, vr_f = float(pr), float(vr)
            f = factor[(pr_f, vr_f)] if isinstance(factor, dict) else factor
            errs = []
            for trial in range(grid.trials):
                seed = derive_seed(base_seed, pr_f, vr_f, trial)
                data, basis_true, variances_true, assignment = generate(
                    grid.cell_spec(pr_f, vr_f, seed=seed)
                )
                try:
                    err, _, _ = _run_single(
                        grid, method, f, data, basis_true, variances_true, assignment
                    )
                    errs.append(err)
                except Exception:  # noqa: BLE001
                    pass
            out[(pr_f, vr_f)] = float(np.mean(errs)) if errs else float("nan")
    return out


def run_cv_matrix(
    grid: SweepGrid,
    methods: Sequence[str] = ("hetpca-sample",),
    base_seed: int = 0,
    evaluate: bool = True,
) -> CvMatrixResult:
    """Cross-validate the weight in every grid cell.

    With evaluate=True, also measures per-cell mean affinity at the tuned
    weight and at the single global weight (median of the per-cell picks),
    which quantifies how much per-cell tuning actually buys.
    """
    picks: Dict[Tuple[float, float, str], float] = {}
    for method in methods:
        policy = grid.policy_for(method)
        factors = policy.factors if isinstance(policy, CvLambda) else DEFAULT_LAMBDA_FACTORS
        for pr in grid.point_ratios:
            for vr in grid.variance_ratios:
                pr_f, vr_f = float(pr), float(vr)
                spec = grid.cell_spec(pr_f, vr_f, seed=0)
                picks[(pr_f, vr_f, method)] = cross_validate_lambda(
                    spec,
                    method,
                    factors,
                    grid=grid,
                    validation=grid.cv_validation,
                    base_seed=derive_seed(base_seed, "cv-cell", pr_f, vr_f, method),
                )
    result = CvMatrixResult(picks=picks)
    result.metadata["trials"] = grid.trials
    if grid.trials == 1:
        result.metadata["warning"] = "trials=1: per-cell estimates have high variance"
    for method in methods:
        result.metadata[f"lambda_spread:{method}"] = result.spread(method)
    if evaluate:
        for method in methods:
            per_cell = {
                (pr, vr): f for (pr, vr, m), f in picks.items() if m == method
            }
            tuned = evaluate_cells(grid, method, per_cell, base_seed=base_seed)
            glob_factor = float(np.median(sorted(per_cell.values())))
            result.global_factor[method] = glob_factor
            glob = evaluate_cells(grid, method, glob_factor, base_seed=base_seed)
            for cell, err in tuned.items():
                result.tuned_errors[(cell[0], cell[1], method)] = err
            for cell, err in glob.items():
                result.global_errors[(cell[0], cell[1], method)] = err
    return result


def import_external_results(path, result: Optional[SweepResult] = None) -> List[SweepRow]:
    """Ingest externally produced sweep rows, tagging methods as external.

    The file must match the sweep CSV schema.  Row methods are tagged
    "external:<method>" unless already tagged.  Duplicate (cell, trial,
    method) keys — within the file or against `result` — are an error.

    Returns:
        The tagged rows, sorted; if `result` is given, the merge is applied
        to a copy returned via result.merge semantics (caller keeps both).
    """
    rows = []
    for row in _read_sweep_rows(path):
        if not row.method.startswith("external:"):
            row.method = f"external:{row.method}"
        rows.append(row)
    seen = {}
    dups = []
    for r in rows:
        if r.key() in seen:
            dups.append(r.key())
        seen[r.key()] = r
    if dups:
        raise ValueError(f"{path}: duplicate (cell, trial, method) keys: {dups}")
    rows.sort(key=lambda r: r.key())
    if result is not None:
        result.merge(rows)  # raises on conflicts with existing rows
    return rows
