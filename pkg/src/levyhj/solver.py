"""Mild solutions of ``d_t u - L u + H(t, x, u, Du) = f`` on the torus.

The Duhamel map is evaluated in Fourier space on a grid of quadrature nodes
``s_0 < s_1 < ...`` inside a window ``[t_a, t_b]``.  With
``E_j = exp(-(s_j - s_{j-1}) psi)`` and integrand ``g = f - H``,

    trapezoid:       I_j = E_j (I_{j-1} + d_j/2 g_{j-1}) + d_j/2 g_j
    left_rectangle:  I_j = E_j (I_{j-1} + d_j g_{j-1})
    exponential_trapezoid:
                     I_j = E_j I_{j-1} + w0_j g_{j-1} + w1_j g_j

and ``S(u)_j = E_j ... E_1 u(t_a) + I_j``.  The trapezoid rule puts
``K_0 = identity`` on the node ``s = s_j``.  Its fixed point coincides with
the one-step exponential trapezoid scheme, so the solution does not depend
on how the horizon is cut into Picard windows.

The exponential rule interpolates ``g`` linearly in ``s`` and integrates the
kernel exactly, so the weight on the ``s = s_j`` node decays like ``1/psi``.
The plain trapezoid weight ``d_j/2`` does not, and Picard iteration with it
diverges once ``d_j |xi| |H_p| / 2`` exceeds one at the top resolved
frequency; use the exponential rule for rough data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .grid import Field, PeriodicGrid, gradient_multipliers, holder_seminorm, irfft, multiplier_array, rfft
from .hamiltonians import Hamiltonian
from .symbols import Symbol

__all__ = [
    "SolverConfig",
    "Problem",
    "Trajectory",
    "ContractionReport",
    "NoContractionError",
    "BlowUpSuspected",
    "FieldUnderResolvedError",
    "duhamel_map",
    "picard_solve",
    "march",
    "pde_residual",
    "residual_norms",
    "weierstrass_datum",
    "semigroup_trajectory",
    "contraction_probe",
    "ProbeResult",
]

QUAD_RULES = ("left_rectangle", "trapezoid", "exponential_trapezoid")


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    picard_tol: float = 1e-10
    picard_max: int = 60
    quad_rule: str = "trapezoid"
    substeps: int = 1
    resolve_guard: Optional[float] = 1e-3
    max_window_steps: int = 8
    easy_iterations: int = 12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max < 1:
            raise ValueError("picard_max must be at least 1")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if self.quad_rule not in QUAD_RULES:
            raise ValueError(f"quad_rule must be one of {QUAD_RULES}")
        if self.max_window_steps < 1:
            raise ValueError("max_window_steps must be at least 1")


@dataclass(frozen=True, eq=False)
class Problem:
    symbol: Symbol
    hamiltonian: Hamiltonian
    u0: Field
    T: float
    forcing: Optional[Callable[[float], Field]] = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.symbol.d != self.u0.grid.d:
            raise ValueError("symbol and grid dimensions differ")

    @property
    def grid(self) -> PeriodicGrid:
        return self.u0.grid

    def forcing_at(self, t: float) -> Optional[Field]:
        if self.forcing is None:
            return None
        f = self.forcing(t)
        if f.grid != self.grid:
            raise ValueError("forcing lives on a different grid")
        return f


@dataclass
class Trajectory:
    """Fields at increasing times plus per-time solver diagnostics."""

    times: np.ndarray
    fields: List[Field]
    picard_iters: np.ndarray
    rho_last: np.ndarray
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.picard_iters = np.asarray(self.picard_iters, dtype=int)
        self.rho_last = np.asarray(self.rho_last, dtype=float)
        if len(self.fields) != self.times.size:
            raise ValueError("one field per time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.size

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def at(self, t: float, tol: float = 1e-12) -> Field:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no stored field at t={t}")
        return self.fields[i]

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Append ``other``; its first entry must repeat this one's last time."""
        start = 1 if other.times[0] <= self.times[-1] else 0
        keys = set(self.diagnostics) & set(other.diagnostics)
        return Trajectory(
            np.concatenate([self.times, other.times[start:]]),
            self.fields + other.fields[start:],
            np.concatenate([self.picard_iters, other.picard_iters[start:]]),
            np.concatenate([self.rho_last, other.rho_last[start:]]),
            {k: np.concatenate([self.diagnostics[k], other.diagnostics[k][start:]]) for k in keys},
        )


@dataclass
class ContractionReport:
    iterations: int
    ratios: List[float]
    differences: List[float]
    converged: bool

    @property
    def rho_last(self) -> float:
        return self.ratios[-1] if self.ratios else 0.0

    @property
    def rho_max(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


class NoContractionError(RuntimeError):
    def __init__(self, message: str, report: ContractionReport):
        super().__init__(message + "; retry on a shorter interval")
        self.report = report


class BlowUpSuspected(RuntimeError):
    def __init__(self, t: float, tau: float, report: Optional[ContractionReport] = None):
        super().__init__(
            f"Picard window shrank to {tau:.3e} at t={t:.6g} without contraction; "
            "the solution may be blowing up"
        )
        self.t = t
        self.tau = tau
        self.report = report


class FieldUnderResolvedError(ValueError):
    def __init__(self, t: float, tail: float, guard: float):
        super().__init__(
            f"solution spectrum at t={t:.6g} has relative tail {tail:.2e} above guard {guard:.1e}; refine the grid"
        )
        self.t = t
        self.tail = tail
        self.guard = guard


# --------------------------------------------------------------------------
# spectral helpers


class _Spectral:
    """Cached multipliers for one (symbol, grid) pair."""

    def __init__(self, symbol: Symbol, grid: PeriodicGrid):
        self.symbol = symbol
        self.grid = grid
        self.psi = multiplier_array(grid, lambda *xi: symbol(*xi))
        self.grads = gradient_multipliers(grid)
        self._steps: dict = {}
        k = grid.half_wavenumbers
        kmax = abs(grid.freqs[grid.n // 2])
        outer = np.zeros(self.psi.shape, dtype=bool)
        for kk in k:
            outer = outer | (np.abs(kk) > (2.0 / 3.0) * kmax)
        self.outer = outer

    def step(self, delta: float) -> np.ndarray:
        return self._weights(delta)[0]

    def _weights(self, delta: float):
        key = float(delta)
        w = self._steps.get(key)
        if w is None:
            z = key * self.psi
            E = np.exp(-z)
            small = np.abs(z) < 1e-3
            zs = np.where(small, 1.0, z)
            # phi1 = (1 - e^-z)/z, phi2 = (1 - phi1)/z, Taylor near 0
            phi1 = np.where(small, 1 - z / 2 + z * z / 6 - z**3 / 24, (1 - E) / zs)
            phi2 = np.where(small, 0.5 - z / 6 + z * z / 24 - z**3 / 120, (1 - phi1) / zs)
            w = (E, key * (phi1 - phi2), key * phi2)
            self._steps[key] = w
        return w

    def exponential_weights(self, delta: float):
        """Weights of ``g(s_{j-1})`` and ``g(s_j)`` in the exponential rule."""
        return self._weights(delta)[1:]

    def physical(self, spec: np.ndarray):
        u = irfft(spec, self.grid)
        Du = np.array([irfft(spec * m, self.grid) for m in self.grads])
        return u, Du

    def tail(self, spec: np.ndarray) -> float:
        a = np.abs(spec)
        top = a.max()
        if top == 0:
            return 0.0
        return float(a[self.outer].max() / top) if self.outer.any() else 0.0


_spectral_cache: dict = {}


def _spectral(symbol: Symbol, grid: PeriodicGrid) -> _Spectral:
    key = (symbol.key, grid)
    sp = _spectral_cache.get(key)
    if sp is None:
        if len(_spectral_cache) > 32:
            _spectral_cache.clear()
        sp = _spectral_cache[key] = _Spectral(symbol, grid)
    return sp


def _window_nodes(t_a: float, t_b: float, dt: float, substeps: int):
    """Macro times and quadrature nodes: full ``dt`` steps plus a remainder."""
    span = t_b - t_a
    full = int(math.floor(span / dt * (1 + 1e-12)))
    steps = [dt] * full
    rest = span - full * dt
    if rest > 1e-9 * dt or not steps:
        steps.append(rest if steps else span)
    macro = [t_a]
    for s in steps:
        macro.append(macro[-1] + s)
    macro[-1] = t_b
    nodes, deltas, macro_index = [t_a], [], [0]
    for s, end in zip(steps, macro[1:]):
        start = nodes[-1]
        for j in range(1, substeps + 1):
            nodes.append(start + s * j / substeps if j < substeps else end)
            deltas.append(s / substeps)
        macro_index.append(len(nodes) - 1)
    return np.array(nodes), np.array(deltas), macro_index


def _integrand(p: Problem, sp: _Spectral, t: float, spec: np.ndarray):
    """Fourier coefficients of ``f - H(t, x, u, Du)`` and the physical ``u``."""
    u, Du = sp.physical(spec)
    g = -np.asarray(p.hamiltonian.eval(t, p.grid.coords, u, Du), dtype=float)
    g = np.broadcast_to(g, p.grid.shape)
    f = p.forcing_at(t)
    if f is not None:
        g = g + f.values
    return rfft(g), u


def _duhamel(p: Problem, sp: _Spectral, nodes, deltas, start_spec, cand_specs, rule):
    """One application of the Duhamel map on Fourier coefficients."""
    out = [start_spec]
    base = start_spec
    integral = np.zeros_like(start_spec)
    g_prev, u_prev = _integrand(p, sp, nodes[0], cand_specs[0])
    phys = [u_prev]
    for j in range(1, len(nodes)):
        d = deltas[j - 1]
        E = sp.step(d)
        g_j, u_j = _integrand(p, sp, nodes[j], cand_specs[j])
        phys.append(u_j)
        if rule == "trapezoid":
            integral = E * (integral + 0.5 * d * g_prev) + 0.5 * d * g_j
        elif rule == "exponential_trapezoid":
            w0, w1 = sp.exponential_weights(d)
            integral = E * integral + w0 * g_prev + w1 * g_j
        else:
            integral = E * (integral + d * g_prev)
        base = E * base
        out.append(base + integral)
        g_prev = g_j
    return out, phys


def _semigroup_specs(sp: _Spectral, deltas, start_spec):
    out = [start_spec]
    for d in deltas:
        out.append(sp.step(d) * out[-1])
    return out


def duhamel_map(p: Problem, candidate: Trajectory, cfg: SolverConfig) -> Trajectory:
    """Apply the Duhamel map to a candidate sampled on its own time nodes.

    Every stored time of ``candidate`` is used as a quadrature node; the
    first stored field is the datum at the window start.
    """
    sp = _spectral(p.symbol, p.grid)
    nodes = candidate.times
    deltas = np.diff(nodes)
    specs = [rfft(f.values) for f in candidate.fields]
    out, _ = _duhamel(p, sp, nodes, deltas, specs[0], specs, cfg.quad_rule)
    fields = [Field(p.grid, irfft(s, p.grid)) for s in out]
    n = len(nodes)
    return Trajectory(nodes.copy(), fields, np.zeros(n, int), np.zeros(n))


def _picard(p: Problem, sp: _Spectral, nodes, deltas, start_spec, cfg: SolverConfig, guess=None):
    specs = guess if guess is not None else _semigroup_specs(sp, deltas, start_spec)
    prev_phys = None
    ratios: List[float] = []
    diffs: List[float] = []
    streak = 0
    for it in range(1, cfg.picard_max + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new_specs, _ = _duhamel(p, sp, nodes, deltas, start_spec, specs, cfg.quad_rule)
            phys = np.array([irfft(s, p.grid) for s in new_specs])
        if not np.all(np.isfinite(phys)):
            rep = ContractionReport(it, ratios, diffs, False)
            raise NoContractionError("Picard iterate is not finite", rep)
        if prev_phys is None:
            cur_phys = np.array([irfft(s, p.grid) for s in specs])
        else:
            cur_phys = prev_phys
        d = float(np.max(np.abs(phys - cur_phys)))
        if diffs:
            rho = d / diffs[-1] if diffs[-1] > 0 else 0.0
            ratios.append(rho)
            streak = streak + 1 if rho >= 1 else 0
        diffs.append(d)
        specs, prev_phys = new_specs, phys
        if d <= cfg.picard_tol:
            return specs, phys, ContractionReport(it, ratios, diffs, True)
        if streak >= 3:
            raise NoContractionError(
                f"contraction ratio stayed at or above 1 for 3 iterations (last {ratios[-1]:.3g})",
                ContractionReport(it, ratios, diffs, False),
            )
    raise NoContractionError(
        f"no convergence to {cfg.picard_tol:.1e} within {cfg.picard_max} iterations (last difference {diffs[-1]:.2e})",
        ContractionReport(cfg.picard_max, ratios, diffs, False),
    )


def picard_solve(
    p: Problem,
    t_a: float,
    t_b: float,
    cfg: SolverConfig,
    u_start: Optional[Field] = None,
    initial_guess: Optional[Trajectory] = None,
):
    """Fixed point of the Duhamel map on ``[t_a, t_b]``.

    The iteration starts from the semigroup flow of ``u_start`` (default
    ``p.u0``) unless ``initial_guess`` is given on the same nodes.  Returns
    the trajectory at macro times and a :class:`ContractionReport`.
    """
    if not t_b > t_a:
        raise ValueError("interval must have positive length")
    u_start = p.u0 if u_start is None else u_start
    sp = _spectral(p.symbol, p.grid)
    nodes, deltas, macro = _window_nodes(t_a, t_b, cfg.dt, cfg.substeps)
    start_spec = rfft(u_start.values)
    guess = None
    if initial_guess is not None:
        if initial_guess.times.size != nodes.size or np.max(np.abs(initial_guess.times - nodes)) > 1e-12:
            raise ValueError("initial guess must be sampled on the quadrature nodes")
        guess = [rfft(f.values) for f in initial_guess.fields]
    specs, phys, rep = _picard(p, sp, nodes, deltas, start_spec, cfg, guess)
    fields = [Field(p.grid, phys[i]) for i in macro]
    m = len(macro)
    traj = Trajectory(nodes[macro], fields, np.full(m, rep.iterations), np.full(m, rep.rho_last))
    return traj, rep


@dataclass
class ProbeResult:
    ratio: float
    wavenumber: float
    axis: int
    ratios: Dict[float, float]
    picard: ContractionReport


def contraction_probe(
    p: Problem,
    t_a: float,
    t_b: float,
    cfg: SolverConfig,
    u_start: Optional[Field] = None,
    grad_amplitude: float = 100.0,
    octave_step: float = 0.25,
) -> ProbeResult:
    """Lipschitz ratio of the Duhamel map on ``[t_a, t_b]`` in the gradient norm.

    Around the fixed point ``u`` the candidate is perturbed by
    ``eta = A cos(k x_i)`` (constant in time) with ``A k = grad_amplitude``;
    the ratio ``sup ||D(S(u + eta) - S(u))|| / sup ||D eta||`` is maximized
    over wavenumbers spaced ``octave_step`` octaves apart and over axes.  A
    large amplitude saturates ``H_p`` so the probe sees the global Lipschitz
    constant of ``H`` rather than its value along one solution.
    """
    u_start = p.u0 if u_start is None else u_start
    sp = _spectral(p.symbol, p.grid)
    nodes, deltas, _ = _window_nodes(t_a, t_b, cfg.dt, cfg.substeps)
    start = rfft(u_start.values)
    specs, _, rep = _picard(p, sp, nodes, deltas, start, cfg)
    grid = p.grid
    ratios: Dict[float, float] = {}
    best = (0.0, 0.0, 0)
    modes = sorted({int(round(m)) for m in 2.0 ** np.arange(0.0, math.log2(grid.n / 2) - 0.5, octave_step)})
    for axis in range(grid.d):
        for m in modes:
            k = 2 * np.pi * m / grid.L
            eta = rfft(np.broadcast_to((grad_amplitude / k) * np.cos(k * grid.coords[axis]), grid.shape))
            new, _ = _duhamel(p, sp, nodes, deltas, start, [s + eta for s in specs], cfg.quad_rule)
            top = 0.0
            for a, b in zip(new, specs):
                grads = np.array([irfft((a - b) * g, grid) for g in sp.grads])
                top = max(top, float(np.max(np.sqrt(np.sum(grads**2, axis=0)))))
            r = top / grad_amplitude
            ratios[k] = max(ratios.get(k, 0.0), r)
            if r > best[0]:
                best = (r, k, axis)
    return ProbeResult(best[0], best[1], best[2], ratios, rep)


def march(
    p: Problem,
    cfg: SolverConfig,
    t_start: float = 0.0,
    u_start: Optional[Field] = None,
    stride: int = 1,
    on_window: Optional[Callable] = None,
) -> Trajectory:
    """Solve on ``[t_start, p.T]`` by gluing Picard windows.

    Windows hold ``k`` macro steps of length ``dt``.  A window that fails to
    contract is halved (below one step, the window itself shrinks); ``k``
    grows by 1.5x after 3 consecutive windows that converge within
    ``easy_iterations``.  Every ``stride``-th macro field is stored, plus the
    first and last.
    """
    if not p.T > t_start:
        raise ValueError("horizon must exceed the start time")
    u = p.u0 if u_start is None else u_start
    sp = _spectral(p.symbol, p.grid)
    guard = cfg.resolve_guard
    spec0 = rfft(u.values)
    if guard is not None and sp.tail(spec0) > guard:
        raise FieldUnderResolvedError(t_start, sp.tail(spec0), guard)
    times, fields, iters, rhos = [t_start], [u], [0], [0.0]
    t = t_start
    k, frac, easy = 1, 1.0, 0
    count = 0
    floor = cfg.dt * 2.0**-20
    while t < p.T * (1 - 1e-14):
        tau = min(k * cfg.dt * frac, p.T - t)
        t_b = p.T if p.T - (t + tau) <= 1e-9 * cfg.dt else t + tau
        try:
            win, rep = picard_solve(p, t, t_b, replace(cfg, dt=min(cfg.dt, t_b - t)), u_start=u)
        except NoContractionError as err:
            easy = 0
            if k > 1:
                k = max(1, k // 2)
            else:
                frac *= 0.5
            if k * cfg.dt * frac < floor:
                raise BlowUpSuspected(t, k * cfg.dt * frac, err.report) from err
            continue
        last_spec = rfft(win.final.values)
        if guard is not None:
            tail = sp.tail(last_spec)
            if tail > guard:
                raise FieldUnderResolvedError(t_b, tail, guard)
        for i in range(1, len(win)):
            count += 1
            if count % stride == 0 or (i == len(win) - 1 and t_b >= p.T * (1 - 1e-14)):
                times.append(win.times[i])
                fields.append(win.fields[i])
                iters.append(rep.iterations)
                rhos.append(rep.rho_last)
        if on_window is not None:
            on_window(win, rep)
        t, u = t_b, win.final
        if frac < 1.0:
            frac = min(1.0, frac * 2)
            continue
        if rep.iterations <= cfg.easy_iterations:
            easy += 1
            if easy >= 3:
                k = min(cfg.max_window_steps, int(math.ceil(1.5 * k)))
                easy = 0
        else:
            easy = 0
    return Trajectory(np.array(times), fields, np.array(iters), np.array(rhos))


def semigroup_trajectory(p: Problem, times: Sequence[float]) -> Trajectory:
    """``K_t * u_0`` at the given times (``H = 0``, ``f = 0`` reference)."""
    sp = _spectral(p.symbol, p.grid)
    spec = rfft(p.u0.values)
    times = np.asarray(times, float)
    fields = [Field(p.grid, irfft(np.exp(-t * sp.psi) * spec, p.grid)) for t in times]
    return Trajectory(times, fields, np.zeros(times.size, int), np.zeros(times.size))


# --------------------------------------------------------------------------
# residuals and data


def _time_derivative(traj: Trajectory, n: int) -> np.ndarray:
    t, u = traj.times, traj.fields
    if len(traj) < 3:
        raise ValueError("residual needs at least three stored times")
    if 0 < n < len(traj) - 1:
        h1, h2 = t[n] - t[n - 1], t[n + 1] - t[n]
        w = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)))
        idx = (n - 1, n, n + 1)
    else:
        # one-sided, second order
        idx = (0, 1, 2) if n == 0 else (n, n - 1, n - 2)
        h1, h2 = t[idx[1]] - t[idx[0]], t[idx[2]] - t[idx[1]]
        w = (-(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2)))
    return sum(wi * u[i].values for wi, i in zip(w, idx))


def pde_residual(p: Problem, traj: Trajectory, n: int) -> Field:
    """``d_t u - L u + H(t, x, u, Du) - f`` at stored index ``n``."""
    sp = _spectral(p.symbol, p.grid)
    t = float(traj.times[n])
    spec = rfft(traj.fields[n].values)
    u, Du = sp.physical(spec)
    Lu = irfft(-sp.psi * spec, p.grid)
    r = _time_derivative(traj, n) - Lu + p.hamiltonian.eval(t, p.grid.coords, u, Du)
    f = p.forcing_at(t)
    if f is not None:
        r = r - f.values
    return Field(p.grid, np.broadcast_to(r, p.grid.shape))


def residual_norms(p: Problem, traj: Trajectory, interior: bool = True) -> np.ndarray:
    """Sup norms of the residual at every stored time (NaN at the ends if ``interior``)."""
    out = np.full(len(traj), np.nan)
    lo, hi = (1, len(traj) - 1) if interior else (0, len(traj))
    for n in range(lo, hi):
        out[n] = float(np.max(np.abs(pde_residual(p, traj, n).values)))
    return out


def add_diagnostics(p: Problem, traj: Trajectory, beta: float = 0.5, sigma: float = 0.5, residual: bool = True) -> Trajectory:
    """Fill ``traj.diagnostics`` with norms, seminorms and residuals."""
    sp = _spectral(p.symbol, p.grid)
    sup_u, sup_Du, hb, hg = [], [], [], []
    for f in traj.fields:
        u, Du = sp.physical(rfft(f.values))
        grads = [Field(p.grid, g) for g in Du]
        sup_u.append(float(np.max(np.abs(u))))
        sup_Du.append(float(np.max(np.sqrt(np.sum(Du**2, axis=0)))))
        hb.append(holder_seminorm(f, beta))
        hg.append(holder_seminorm(grads, sigma))
    traj.diagnostics.update(
        sup_u=np.array(sup_u),
        sup_Du=np.array(sup_Du),
        holder_beta=np.array(hb),
        holder_grad=np.array(hg),
    )
    if residual and len(traj) >= 3:
        traj.diagnostics["residual_sup"] = residual_norms(p, traj, interior=False)
    else:
        traj.diagnostics["residual_sup"] = np.full(len(traj), np.nan)
    return traj


def weierstrass_levels(grid: PeriodicGrid) -> int:
    """Largest ``J`` with ``2^J`` strictly below the Nyquist index ``n/2``."""
    return int(math.log2(grid.n)) - 2


def weierstrass_datum(grid: PeriodicGrid, beta: float, seed: int = 0, levels: Optional[int] = None) -> Field:
    """Lacunary series ``sum_j 2^(-j beta) cos(2^j 2 pi x / L + theta_j)``.

    Phases are ``2 pi`` times uniform draws from a Philox-4x64 generator
    keyed by ``seed``, drawn level by level and, in 2-D, axis by axis; the
    2-D datum is the sum of one series per axis.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    J = weierstrass_levels(grid) if levels is None else int(levels)
    if J < 0:
        raise ValueError("grid too coarse for a Weierstrass datum")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    theta = 2 * np.pi * rng.random((J + 1, grid.d))
    k0 = 2 * np.pi / grid.L
    vals = np.zeros(grid.shape)
    for j in range(J + 1):
        for a in range(grid.d):
            vals += 2.0 ** (-j * beta) * np.cos(2.0**j * k0 * grid.coords[a] + theta[j, a])
    return Field(grid, vals)
