"""Command line: finsviz plot --kind K --in PATH... --out FILE."""

from __future__ import annotations

import argparse
import sys

from .formats import FormatError
from .plots import KINDS, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="finsviz",
        description="render figures from fins2d diagnostics and snapshots")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one figure")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="PATH")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--spectrum-s", type=float, default=0.0,
                   help="shell weight exponent for besov-spectrum")
    p.add_argument("--spectrum-p", type=float, default=2.0,
                   help="integrability index for besov-spectrum")
    args = parser.parse_args(argv)

    spec = PlotSpec(kind=args.kind, inputs=list(args.inputs), output=args.out,
                    spectrum_s=args.spectrum_s, spectrum_p=args.spectrum_p)
    try:
        render(spec)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
