"""Pseudo-spectral solver for viscous Hamilton-Jacobi equations driven by Levy operators.

Modules: ``symbols`` (Levy symbols), ``grid`` (periodic grids and spectral
calculus), ``heatkernel`` (kernels and order audits), ``hamiltonians``,
``solver`` (Duhamel/Picard time stepping), ``estimates`` (a priori bound
checks), ``scenario`` and ``cli``.
"""

from .grid import Field, PeriodicGrid
from .hamiltonians import Hamiltonian, ham_quadratic, ham_smooth_lipschitz, ham_zero
from .solver import Problem, SolverConfig, march, picard_solve
from .symbols import Symbol, symbol_fractional, symbol_laplacian

__version__ = "0.1.0"

__all__ = [
    "Field",
    "PeriodicGrid",
    "Hamiltonian",
    "ham_quadratic",
    "ham_smooth_lipschitz",
    "ham_zero",
    "Problem",
    "SolverConfig",
    "march",
    "picard_solve",
    "Symbol",
    "symbol_fractional",
    "symbol_laplacian",
]
