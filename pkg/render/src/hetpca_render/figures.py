"""Figure builders and file renderers.

The ratio-heatmap color scale is fixed at [0, 1.2] (values clipped, not
rescaled) so images from different runs are directly comparable: below 1.0
the weighted fit beats the reference method, above 1.0 it does not. Pick
heatmaps (cross-validation factors) are colored on a log scale spanning the
observed picks, since the factor grid itself is log-spaced.

Builders return live matplotlib objects so callers (and tests) can read the
plotted series straight back out of the artists; `render_*` wrappers write
an image file and close the figure.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .readers import CurveRow, CvRow, RatioRow, read_curve, read_cv_matrix, read_ratios

HEATMAP_VMIN = 0.0
HEATMAP_VMAX = 1.2
_DPI = 150


def _cell_grid(rows, value_of) -> Tuple[np.ndarray, List[float], List[float]]:
    point_ratios = sorted({r.point_ratio for r in rows})
    variance_ratios = sorted({r.variance_ratio for r in rows})
    grid = np.full((len(variance_ratios), len(point_ratios)), np.nan)
    for r in rows:
        i = variance_ratios.index(r.variance_ratio)
        j = point_ratios.index(r.point_ratio)
        grid[i, j] = value_of(r)
    return grid, point_ratios, variance_ratios


def _annotate(ax, grid):
    for (i, j), value in np.ndenumerate(grid):
        if np.isfinite(value):
            ax.text(j, i, f"{value:g}", ha="center", va="center", fontsize=8)


def _ratio_axes(ax, point_ratios, variance_ratios):
    ax.set_xticks(range(len(point_ratios)))
    ax.set_xticklabels([f"{v:g}" for v in point_ratios])
    ax.set_yticks(range(len(variance_ratios)))
    ax.set_yticklabels([f"{v:g}" for v in variance_ratios])
    ax.set_xlabel("point ratio (noisy / clean samples)")
    ax.set_ylabel("variance ratio (noisy / clean)")


def build_heatmap_figure(rows: Sequence[RatioRow], pair: Optional[str] = None):
    """Ratio heatmap for one method pair; returns (figure, axes)."""
    available = sorted({r.pair for r in rows})
    if pair is None:
        if len(available) != 1:
            raise ValueError(
                "method pair required; available pairs: " + ", ".join(available)
            )
        pair = available[0]
    wanted = [r for r in rows if r.pair == pair]
    if not wanted:
        raise ValueError(
            f"method pair {pair!r} not present; available pairs: "
            + ", ".join(available)
        )
    grid, point_ratios, variance_ratios = _cell_grid(wanted, lambda r: r.ratio)
    fig, ax = plt.subplots(
        figsize=(1.8 + 0.9 * len(point_ratios), 1.4 + 0.7 * len(variance_ratios))
    )
    cmap = plt.get_cmap("magma_r").copy()
    cmap.set_bad("0.85")
    image = ax.imshow(
        np.ma.masked_invalid(grid),
        origin="lower",
        vmin=HEATMAP_VMIN,
        vmax=HEATMAP_VMAX,
        cmap=cmap,
        aspect="auto",
        interpolation="nearest",
    )
    _ratio_axes(ax, point_ratios, variance_ratios)
    _annotate(ax, grid)
    colorbar = fig.colorbar(image, ax=ax)
    colorbar.set_label(f"mean error ratio {pair} (clipped to [0, 1.2])")
    ax.set_title(pair)
    fig.tight_layout()
    return fig, ax


def build_curve_figure(rows: Sequence[CurveRow]):
    """Log-x weight-sensitivity curves, one mean line and mean->max band per
    method; returns (figure, axes)."""
    methods = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.set_xscale("log")
    for method in methods:
        series = sorted(
            (r for r in rows if r.method == method), key=lambda r: r.lambda_factor
        )
        factors = [r.lambda_factor for r in series]
        means = [r.mean_affinity for r in series]
        maxes = [r.max_affinity for r in series]
        line, = ax.plot(factors, means, marker="o", label=f"{method} mean")
        ax.plot(
            factors, maxes, linestyle="--", linewidth=0.9,
            color=line.get_color(), alpha=0.7, label=f"{method} max",
        )
        ax.fill_between(factors, means, maxes, color=line.get_color(), alpha=0.15)
    ax.set_xlabel("weight factor (relative to spectral norm)")
    ax.set_ylabel("affinity error")
    ax.legend()
    fig.tight_layout()
    return fig, ax


def build_cv_matrix_figure(rows: Sequence[CvRow]):
    """Per-method heatmaps of the cross-validated weight picks; returns
    (figure, list of axes)."""
    methods = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    fig, axes = plt.subplots(
        1, len(methods), squeeze=False, figsize=(6.0 * len(methods), 4.5)
    )
    axes = list(axes[0])
    for ax, method in zip(axes, methods):
        series = [r for r in rows if r.method == method]
        grid, point_ratios, variance_ratios = _cell_grid(
            series, lambda r: r.best_lambda_factor
        )
        finite = grid[np.isfinite(grid)]
        low, high = float(finite.min()), float(finite.max())
        if low <= 0 or low == high:
            norm = None
        else:
            norm = LogNorm(vmin=low, vmax=high)
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("0.85")
        image = ax.imshow(
            np.ma.masked_invalid(grid),
            origin="lower",
            cmap=cmap,
            norm=norm,
            aspect="auto",
            interpolation="nearest",
        )
        _ratio_axes(ax, point_ratios, variance_ratios)
        _annotate(ax, grid)
        fig.colorbar(image, ax=ax).set_label("chosen weight factor")
        ax.set_title(method)
    fig.tight_layout()
    return fig, axes


def _save(fig, out_image) -> Path:
    out = Path(out_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=_DPI)
    plt.close(fig)
    return out


def render_heatmap(ratios_csv, method_pair: Optional[str], out_image) -> Path:
    fig, _ = build_heatmap_figure(read_ratios(ratios_csv), method_pair)
    return _save(fig, out_image)


def render_lambda_curve(curve_csv, out_image) -> Path:
    fig, _ = build_curve_figure(read_curve(curve_csv))
    return _save(fig, out_image)


def render_cv_matrix(cv_csv, out_image) -> Path:
    fig, _ = build_cv_matrix_figure(read_cv_matrix(cv_csv))
    return _save(fig, out_image)
