"""Command-line entry for figure generation."""
from __future__ import annotations

import argparse
import sys

from .figures import KNOWN_KINDS, FigureRequest, SchemaError, render


def cli_main(argv) -> int:
    parser = argparse.ArgumentParser(prog="sphgas-plots",
                                     description="Render figures from sphgas "
                                     "series/snapshot outputs")
    parser.add_argument("--series", required=True, help="series CSV path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--snapshots", default=None,
                        help="glob for snapshot JSON files (profiles figure)")
    parser.add_argument("--rates", default=None,
                        help="rates CSV (convergence figure)")
    parser.add_argument("--kinds", default="energy,bounds,radius,profiles",
                        help=f"comma-separated subset of {','.join(KNOWN_KINDS)}")
    parser.add_argument("--alpha-cfg", type=float, default=2.0)
    parser.add_argument("--beta-cfg", type=float, default=0.1)
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 1
    try:
        req = FigureRequest(series_path=args.series, output_dir=args.out,
                            snapshot_glob=args.snapshots,
                            which=tuple(k for k in args.kinds.split(",") if k),
                            rates_path=args.rates, alpha_cfg=args.alpha_cfg,
                            beta_cfg=args.beta_cfg)
        written = render(req)
    except (SchemaError, ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
