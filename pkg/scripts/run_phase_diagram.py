#!/usr/bin/env python3
"""Map the (K, a) plane for a pure-harmonic forcing: cells, critical curve, windows.

Writes the long-format cell classification and the critical curve for the
requested harmonic, prints the curve maximum (first harmonic only) and the
rotating coupling windows at a few representative amplitudes.
"""

import argparse
from pathlib import Path

import numpy as np

from rotatorlab.scan import coupling_window, max_critical_amplitude, scan_harmonic


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n", 1)[0])
    ap.add_argument("--j", type=int, default=1)
    ap.add_argument("--K-min", type=float, default=1.05)
    ap.add_argument("--K-max", type=float, default=16.0)
    ap.add_argument("--n-K", type=int, default=81)
    ap.add_argument("--a-min", type=float, default=0.0)
    ap.add_argument("--a-max", type=float, default=2.0)
    ap.add_argument("--n-a", type=int, default=81)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--amplitudes", type=str, default="0.5,1.05,1.1",
                    help="levels for the coupling-window report (first harmonic)")
    ap.add_argument("--out-dir", type=Path, default=Path("phase_diagram"))
    args = ap.parse_args()

    Ks = np.geomspace(args.K_min, args.K_max, args.n_K)
    amps = np.linspace(args.a_min, args.a_max, args.n_a)
    diagram = scan_harmonic(args.j, Ks, amps, workers=args.workers)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    cells = args.out_dir / f"cells_j{args.j}.csv"
    curve = args.out_dir / f"curve_j{args.j}.csv"
    cells.write_text(diagram.cells_csv())
    curve.write_text(diagram.curve_csv())
    rotating = int(np.sum(diagram.kinds == 1))
    print(f"j = {args.j}: {diagram.kinds.size} cells, {rotating} rotating")
    print(f"wrote {cells} and {curve}")

    if args.j != 1:
        return
    K_star, a_hat = max_critical_amplitude()
    print(f"curve maximum: a_c({K_star:.6f}) = {a_hat:.6f}")
    for level in (float(v) for v in args.amplitudes.split(",") if v.strip()):
        win = coupling_window(level)
        roots = ", ".join(f"{K:.4f}" for K in win.roots) or "none"
        spans = ", ".join(f"({lo:.4f}, {hi:.4f})" for lo, hi in win.rotating_intervals) or "none"
        print(f"a = {level}: {win.kind}; crossings: {roots}; rotating K: {spans}")


if __name__ == "__main__":
    main()
