"""Viscous Burgers in potential form against the Cole-Hopf solution.

Prints the sup error at a few times and its decay under dt refinement.

    python3 scripts/burgers_cole_hopf.py
"""

import time

import numpy as np

from levyhj.grid import PeriodicGrid
from levyhj.hamiltonians import ham_quadratic
from levyhj.oracles import cole_hopf, gaussian_bump
from levyhj.solver import Problem, SolverConfig, march
from levyhj.symbols import symbol_laplacian


def main():
    grid = PeriodicGrid(1, 512, 16 * np.pi)
    u0 = gaussian_bump(grid, 1.0, 1.0)
    p = Problem(symbol_laplacian(1), ham_quadratic(1.0), u0, 0.5)
    for dt in (4e-3, 2e-3, 1e-3):
        start = time.perf_counter()
        traj = march(p, SolverConfig(dt=dt, picard_tol=1e-12), stride=int(round(0.1 / dt)))
        wall = time.perf_counter() - start
        errs = [np.max(np.abs(f.values - cole_hopf(u0, t).values)) for t, f in zip(traj.times[1:], traj.fields[1:])]
        print(f"dt={dt:.0e}: max error {max(errs):.3e} ({wall:.2f}s); per 0.1: " + " ".join(f"{e:.1e}" for e in errs))


if __name__ == "__main__":
    main()
