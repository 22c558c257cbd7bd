"""Command-line driver: render heatmap|curve|cvmatrix --in <csv> --out <img>.

Exit code 0 on success; nonzero with an `error: ...` diagnostic (including
the offending line number for malformed CSVs) on stderr.
"""

from __future__ import annotations

import argparse
import sys

from .figures import render_cv_matrix, render_heatmap, render_lambda_curve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render", description="Render hetpca harness CSVs to image files"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_heat = sub.add_parser("heatmap", help="ratios.csv -> ratio heatmap")
    p_heat.add_argument("--in", dest="infile", required=True, help="ratios.csv")
    p_heat.add_argument("--out", required=True, help="output image (png/svg/pdf)")
    p_heat.add_argument("--pair", help="method pair A/B (required if several present)")

    p_curve = sub.add_parser("curve", help="lambda_curve.csv -> sensitivity curves")
    p_curve.add_argument("--in", dest="infile", required=True, help="lambda_curve.csv")
    p_curve.add_argument("--out", required=True, help="output image (png/svg/pdf)")

    p_cv = sub.add_parser("cvmatrix", help="cv_matrix.csv -> weight-pick heatmaps")
    p_cv.add_argument("--in", dest="infile", required=True, help="cv_matrix.csv")
    p_cv.add_argument("--out", required=True, help="output image (png/svg/pdf)")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "heatmap":
            out = render_heatmap(args.infile, args.pair, args.out)
        elif args.command == "curve":
            out = render_lambda_curve(args.infile, args.out)
        else:
            out = render_cv_matrix(args.infile, args.out)
    except Exception as e:  # noqa: BLE001 - single diagnostic exit path
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
