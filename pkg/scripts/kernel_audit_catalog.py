"""Fit the small-time order of ||D K_t||_1 for every catalog symbol.

    python3 scripts/kernel_audit_catalog.py [--n 4096] [--out kernel_catalog.csv]
"""

import argparse
import time

import numpy as np

from levyhj.cli import write_csv
from levyhj.heatkernel import audit_grid, audit_order
from levyhj.symbols import (
    symbol_anisotropic,
    symbol_cgmy,
    symbol_fractional,
    symbol_laplacian,
    symbol_riesz_feller,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--n2d", type=int, default=1024)
    ap.add_argument("--out", default="kernel_catalog.csv")
    args = ap.parse_args()
    times = np.geomspace(1e-3, 1e-1, 17)
    catalog = [
        (symbol_laplacian(1), [(1,), (2,)]),
        (symbol_fractional(1, 1.5), [(1,), (2,)]),
        (symbol_riesz_feller(1.5), [(1,)]),
        (symbol_cgmy(1, 5, 5, 1.5), [(1,)]),
        (symbol_anisotropic((1.2, 2.0)), [(1, 0), (0, 1)]),
    ]
    rows = []
    for sym, betas in catalog:
        start = time.perf_counter()
        n = args.n if sym.d == 1 else args.n2d
        grid = audit_grid(sym, times[0], n, sym.d)
        audit = audit_order(sym, times, betas, grid)
        for beta in audit.betas:
            tag = "".join(map(str, beta))
            rows.append((audit.symbol, tag, audit.slopes[beta], audit.alpha_hat[beta], audit.claimed[beta], audit.status))
            print(
                f"{audit.symbol:24s} beta={tag} slope={audit.slopes[beta]:+.4f} "
                f"alpha_hat={audit.alpha_hat[beta]:.4f} claimed={audit.claimed[beta]:.2f} {audit.status}"
            )
        for note in audit.notes:
            print("   ", note)
        print(f"    L={grid.L:.4g}, {time.perf_counter() - start:.1f}s")
    write_csv(args.out, ["symbol", "beta", "slope", "alpha_hat", "claimed", "status"], rows)


if __name__ == "__main__":
    main()
