"""Figure rendering for hetpca harness CSVs.

Consumes the delimited outputs of the core package (ratios.csv,
lambda_curve.csv, cv_matrix.csv) and turns them into image files. Rendering
is a pure function of the CSV contents: identical inputs yield identical
figure dimensions and identical plotted data series.
"""

from .figures import (
    HEATMAP_VMAX,
    HEATMAP_VMIN,
    build_cv_matrix_figure,
    build_curve_figure,
    build_heatmap_figure,
    render_cv_matrix,
    render_heatmap,
    render_lambda_curve,
)
from .readers import CurveRow, CvRow, RatioRow, read_curve, read_cv_matrix, read_ratios

__all__ = [
    "HEATMAP_VMIN",
    "HEATMAP_VMAX",
    "CurveRow",
    "CvRow",
    "RatioRow",
    "build_heatmap_figure",
    "build_curve_figure",
    "build_cv_matrix_figure",
    "render_heatmap",
    "render_lambda_curve",
    "render_cv_matrix",
    "read_ratios",
    "read_curve",
    "read_cv_matrix",
]
