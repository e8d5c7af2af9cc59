"""Scenario files: a single versioned YAML schema, validated before compute.

Top-level keys (unknown keys are rejected everywhere)::

    schema_version: 1
    study: solve | kernel-audit | blowup | estimate-audit | oracle-compare
    seed: 0
    T: 1.0
    symbol:      {kind: laplacian | fractional | anisotropic | riesz_feller | cgmy, ..., drift: [b]}
    hamiltonian: {kind: zero | quadratic | smooth_lipschitz, ..., zero_order: lam,
                  x_factor: {amplitude, mode}, flags: {...}}
    forcing:     {kind: none | constant | cosine, ...}
    datum:       {kind: gaussian_bump | cosine | weierstrass | snapshot, ...}
    grid:        {d, n, L}            # L may be written as "16pi"
    solver:      {dt, picard_tol, picard_max, quad_rule, substeps, resolve_guard}
    output:      {snapshot_times, holder_beta, holder_grad, stride}
    kernel_audit | blowup | estimate_audit | oracle_compare: study options
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np
import yaml

from .grid import Field, PeriodicGrid, read_snapshot
from .hamiltonians import (
    Hamiltonian,
    ham_quadratic,
    ham_smooth_lipschitz,
    ham_with_zero_order,
    ham_x_dependent,
    ham_zero,
)
from .oracles import gaussian_bump
from .solver import QUAD_RULES, Problem, SolverConfig, weierstrass_datum
from .symbols import (
    Symbol,
    symbol_anisotropic,
    symbol_cgmy,
    symbol_drift,
    symbol_fractional,
    symbol_laplacian,
    symbol_riesz_feller,
    symbol_sum,
)

__all__ = ["SCHEMA_VERSION", "STUDIES", "Scenario", "ScenarioError", "load_scenario", "parse_scenario"]

SCHEMA_VERSION = 1
STUDIES = ("solve", "kernel-audit", "blowup", "estimate-audit", "oracle-compare")
ESTIMATE_CHECKS = ("supbound", "comparison", "bernstein_gamma", "lipschitz", "schauder")
ORACLES = ("cole_hopf", "heat", "drift")
REQUIRED = "<required>"


class ScenarioError(ValueError):
    def __init__(self, key: str, constraint: str):
        super().__init__(f"{key}: {constraint}")
        self.key = key
        self.constraint = constraint


# --------------------------------------------------------------------------
# small validators


def _section(raw: dict, key: str, allowed: Dict[str, Any], required=()) -> dict:
    """Check keys of ``raw[key]`` against ``allowed`` (name -> default)."""
    sec = raw.get(key, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ScenarioError(key, "must be a mapping")
    for k in sec:
        if k not in allowed:
            raise ScenarioError(f"{key}.{k}", f"unknown key (allowed: {', '.join(sorted(allowed))})")
    for k in required:
        if k not in sec:
            raise ScenarioError(f"{key}.{k}", "is required")
    return {**allowed, **sec}


def _num(key, v, lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(key, f"must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ScenarioError(key, f"must be an integer, got {v!r}")
    bad_lo = v <= lo if lo_open else v < lo
    bad_hi = v >= hi if hi_open else v > hi
    if bad_lo or bad_hi:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ScenarioError(key, f"must lie in {lb}{lo:g}, {hi:g}{rb}, got {v!r}")
    return int(v) if integer else float(v)


def _length(key, v) -> float:
    if isinstance(v, str):
        m = re.fullmatch(r"\s*([0-9.eE+-]*)\s*\*?\s*pi\s*", v)
        if not m:
            raise ScenarioError(key, f"must be a number or a multiple of pi like '16pi', got {v!r}")
        coef = float(m.group(1)) if m.group(1) else 1.0
        v = coef * math.pi
    return _num(key, v, 0.0, lo_open=True)


def _order(key, v, lo_open=True, hi=2.0, hi_open=False) -> float:
    v = _num(key, v)
    if not (1.0 < v <= 2.0 if not hi_open else 1.0 < v < 2.0):
        raise ScenarioError(key, "order must lie in (1, 2]" if not hi_open else "order must lie in (1, 2)")
    return v


# --------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    schema_version: int
    study: str
    seed: int
    T: float
    symbol: dict
    hamiltonian: dict
    forcing: dict
    datum: dict
    grid: dict
    solver: dict
    output: dict
    options: dict
    base_dir: str = "."

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # builders ---------------------------------------------------------------

    def build_grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.grid["d"], self.grid["n"], self.grid["L"])

    def build_symbol(self) -> Symbol:
        s = self.symbol
        d = self.grid["d"]
        kind = s["kind"]
        if kind == "laplacian":
            sym = symbol_laplacian(d)
        elif kind == "fractional":
            sym = symbol_laplacian(d) if s["order"] == 2.0 else symbol_fractional(d, s["order"])
        elif kind == "anisotropic":
            sym = symbol_anisotropic(s["orders"])
        elif kind == "riesz_feller":
            sym = symbol_riesz_feller(s["order"], s["one_sided"])
        else:
            sym = symbol_cgmy(s["C"], s["G"], s["M"], s["Y"])
        if s.get("drift") is not None:
            sym = symbol_sum(sym, symbol_drift(s["drift"]))
        return sym

    def build_hamiltonian(self) -> Hamiltonian:
        h = self.hamiltonian
        kind = h["kind"]
        if kind == "zero":
            H = ham_zero()
        elif kind == "quadratic":
            H = ham_quadratic(h["c"])
        else:
            H = ham_smooth_lipschitz(h["a"])
        xf = h.get("x_factor")
        if xf:
            amp, mode, L = xf["amplitude"], xf["mode"], self.grid["L"]
            k = 2 * math.pi * mode / L
            H = ham_x_dependent(
                H,
                lambda x: 1.0 + amp * np.sin(k * x[0]),
                lambda x: np.concatenate(
                    [[amp * k * np.cos(k * x[0])], np.zeros((len(x) - 1,) + np.shape(x[0]))]
                ),
                abs(amp) * k,
                name=f"(1+{amp:g}sin)",
            )
        if h["zero_order"]:
            H = ham_with_zero_order(H, h["zero_order"])
        return H

    def build_forcing(self, grid: PeriodicGrid) -> Optional[Callable[[float], Field]]:
        f = self.forcing
        kind = f["kind"]
        if kind == "none":
            return None
        if kind == "constant":
            value = f["value"]
            const = Field(grid, np.full(grid.shape, value))
            return lambda t: const
        amp, mode, omega = f["amplitude"], f["mode"], f["omega"]
        shape = np.cos(2 * math.pi * mode * grid.coords[0] / grid.L)
        return lambda t: Field(grid, amp * math.cos(omega * t) * shape)

    def build_datum(self, grid: PeriodicGrid) -> Field:
        u = self.datum
        kind = u["kind"]
        if kind == "gaussian_bump":
            return gaussian_bump(grid, u["amplitude"], u["width"], u["center"])
        if kind == "cosine":
            return Field(grid, u["amplitude"] * np.cos(2 * math.pi * u["mode"] * grid.coords[0] / grid.L))
        if kind == "weierstrass":
            seed = self.seed if u["seed"] is None else u["seed"]
            return weierstrass_datum(grid, u["beta"], seed)
        path = Path(self.base_dir) / u["path"]
        field_, _ = read_snapshot(path)
        if field_.grid != grid:
            raise ScenarioError("datum.path", f"snapshot grid {field_.grid} differs from scenario grid {grid}")
        return field_

    def build_solver(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    def build_problem(self) -> Problem:
        grid = self.build_grid()
        return Problem(
            self.build_symbol(), self.build_hamiltonian(), self.build_datum(grid), self.T, self.build_forcing(grid)
        )


_TOP = {
    "schema_version",
    "study",
    "seed",
    "T",
    "symbol",
    "hamiltonian",
    "forcing",
    "datum",
    "grid",
    "solver",
    "output",
    "kernel_audit",
    "blowup",
    "estimate_audit",
    "oracle_compare",
}

_SYMBOL_KEYS = {
    "laplacian": {},
    "fractional": {"order": REQUIRED},
    "anisotropic": {"orders": REQUIRED},
    "riesz_feller": {"order": REQUIRED, "one_sided": True},
    "cgmy": {"C": REQUIRED, "G": REQUIRED, "M": REQUIRED, "Y": REQUIRED},
}
_HAM_KEYS = {"zero": {}, "quadratic": {"c": 1.0}, "smooth_lipschitz": {"a": 1.0}}
_HAM_FLAGS = ("smooth", "x_lipschitz", "globally_lipschitz")
_FORCING_KEYS = {"none": {}, "constant": {"value": 0.0}, "cosine": {"amplitude": 1.0, "mode": 1, "omega": 0.0}}
_DATUM_KEYS = {
    "gaussian_bump": {"amplitude": 1.0, "width": 1.0, "center": 0.0},
    "cosine": {"amplitude": 1.0, "mode": 1},
    "weierstrass": {"beta": REQUIRED, "seed": None},
    "snapshot": {"path": REQUIRED},
}


def _kind_section(raw, key, table, extra=None):
    sec = raw.get(key)
    if not isinstance(sec, dict) or "kind" not in sec:
        raise ScenarioError(f"{key}.kind", f"is required (one of {', '.join(table)})")
    kind = sec["kind"]
    if kind not in table:
        raise ScenarioError(f"{key}.kind", f"unknown kind {kind!r} (one of {', '.join(table)})")
    allowed = {"kind": kind, **table[kind], **(extra or {})}
    out = _section(raw, key, allowed)
    for k, v in out.items():
        if v is REQUIRED:
            raise ScenarioError(f"{key}.{k}", f"is required for kind {kind!r}")
    return out


def parse_scenario(raw: dict, base_dir: str = ".") -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("<root>", "scenario must be a mapping")
    for k in raw:
        if k not in _TOP:
            raise ScenarioError(k, f"unknown key (allowed: {', '.join(sorted(_TOP))})")
    if "schema_version" not in raw:
        raise ScenarioError("schema_version", "is required")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"version {raw['schema_version']!r} is not supported (expected {SCHEMA_VERSION})")
    study = raw.get("study")
    if study not in STUDIES:
        raise ScenarioError("study", f"must be one of {', '.join(STUDIES)}, got {study!r}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ScenarioError("seed", "must be an unsigned 64-bit integer")
    T = _num("T", raw.get("T", 1.0), 0.0, lo_open=True)

    grid = _section(raw, "grid", {"d": 1, "n": 512, "L": 16 * math.pi})
    grid["d"] = _num("grid.d", grid["d"], 1, 2, integer=True)
    grid["n"] = _num("grid.n", grid["n"], 4, 2**14, integer=True)
    if grid["n"] & (grid["n"] - 1):
        raise ScenarioError("grid.n", "must be a power of two")
    grid["L"] = _length("grid.L", grid["L"])
    d = grid["d"]

    sym = _kind_section(raw, "symbol", _SYMBOL_KEYS, {"drift": None})
    kind = sym["kind"]
    if kind == "fractional":
        sym["order"] = _order("symbol.order", sym["order"])
    elif kind == "riesz_feller":
        if d != 1:
            raise ScenarioError("symbol.kind", "riesz_feller is one-dimensional")
        sym["order"] = _order("symbol.order", sym["order"], hi_open=True)
        if not isinstance(sym["one_sided"], bool):
            raise ScenarioError("symbol.one_sided", "must be true or false")
    elif kind == "anisotropic":
        orders = sym["orders"]
        if not isinstance(orders, list) or len(orders) != d:
            raise ScenarioError("symbol.orders", f"must list {d} orders")
        sym["orders"] = [_order(f"symbol.orders[{i}]", o) for i, o in enumerate(orders)]
    elif kind == "cgmy":
        if d != 1:
            raise ScenarioError("symbol.kind", "cgmy is one-dimensional")
        sym["C"] = _num("symbol.C", sym["C"], 0.0, lo_open=True)
        sym["G"] = _num("symbol.G", sym["G"], 0.0, lo_open=True)
        sym["M"] = _num("symbol.M", sym["M"], 0.0, lo_open=True)
        sym["Y"] = _order("symbol.Y", sym["Y"], hi_open=True)
    if sym["drift"] is not None:
        if not isinstance(sym["drift"], list) or len(sym["drift"]) != d:
            raise ScenarioError("symbol.drift", f"must list {d} components")
        sym["drift"] = [_num(f"symbol.drift[{i}]", b) for i, b in enumerate(sym["drift"])]

    ham = _kind_section(
        raw, "hamiltonian", _HAM_KEYS, {"zero_order": 0.0, "x_factor": None, "flags": None}
    )
    if ham["kind"] == "quadratic":
        ham["c"] = _num("hamiltonian.c", ham["c"], 0.0, lo_open=True)
    if ham["kind"] == "smooth_lipschitz":
        ham["a"] = _num("hamiltonian.a", ham["a"], 0.0, lo_open=True)
    ham["zero_order"] = _num("hamiltonian.zero_order", ham["zero_order"])
    if ham["x_factor"] is not None:
        xf = _section({"x": ham["x_factor"]}, "x", {"amplitude": 0.5, "mode": 1})
        xf["amplitude"] = _num("hamiltonian.x_factor.amplitude", xf["amplitude"], -0.99, 0.99)
        xf["mode"] = _num("hamiltonian.x_factor.mode", xf["mode"], 1, integer=True)
        ham["x_factor"] = xf
    if ham["flags"] is not None:
        flags = ham["flags"]
        if not isinstance(flags, dict):
            raise ScenarioError("hamiltonian.flags", "must be a mapping")
        for k, v in flags.items():
            if k not in _HAM_FLAGS:
                raise ScenarioError(f"hamiltonian.flags.{k}", f"unknown flag (allowed: {', '.join(_HAM_FLAGS)})")
            if not isinstance(v, bool):
                raise ScenarioError(f"hamiltonian.flags.{k}", "must be true or false")

    forcing = _kind_section(raw, "forcing", _FORCING_KEYS) if "forcing" in raw else {"kind": "none"}
    for k in ("value", "amplitude", "omega"):
        if k in forcing:
            forcing[k] = _num(f"forcing.{k}", forcing[k])
    if "mode" in forcing:
        forcing["mode"] = _num("forcing.mode", forcing["mode"], 0, integer=True)

    datum = _kind_section(raw, "datum", _DATUM_KEYS)
    if datum["kind"] == "weierstrass":
        datum["beta"] = _num("datum.beta", datum["beta"], 0.0, 1.0, lo_open=True, hi_open=True)
        if datum["seed"] is not None:
            datum["seed"] = _num("datum.seed", datum["seed"], 0, 2**64 - 1, integer=True)
    elif datum["kind"] == "snapshot":
        if not isinstance(datum["path"], str):
            raise ScenarioError("datum.path", "must be a string")
        if not (Path(base_dir) / datum["path"]).exists():
            raise ScenarioError("datum.path", f"file {datum['path']!r} does not exist")
    else:
        for k in ("amplitude", "width", "center"):
            if k in datum:
                datum[k] = _num(f"datum.{k}", datum[k], 0.0 if k == "width" else -math.inf, lo_open=k == "width")
        if "mode" in datum:
            datum["mode"] = _num("datum.mode", datum["mode"], 0, integer=True)

    solver = _section(
        raw,
        "solver",
        {
            "dt": 1e-3,
            "picard_tol": 1e-10,
            "picard_max": 60,
            "quad_rule": "trapezoid",
            "substeps": 1,
            "resolve_guard": 1e-3,
        },
    )
    solver["dt"] = _num("solver.dt", solver["dt"], 0.0, lo_open=True)
    solver["picard_tol"] = _num("solver.picard_tol", solver["picard_tol"], 0.0, lo_open=True)
    solver["picard_max"] = _num("solver.picard_max", solver["picard_max"], 1, integer=True)
    solver["substeps"] = _num("solver.substeps", solver["substeps"], 1, integer=True)
    if solver["quad_rule"] not in QUAD_RULES:
        raise ScenarioError("solver.quad_rule", f"must be one of {', '.join(QUAD_RULES)}")
    if solver["resolve_guard"] is not None:
        solver["resolve_guard"] = _num("solver.resolve_guard", solver["resolve_guard"], 0.0, lo_open=True)

    output = _section(raw, "output", {"snapshot_times": [], "holder_beta": 0.5, "holder_grad": 0.5, "stride": 1})
    if not isinstance(output["snapshot_times"], list):
        raise ScenarioError("output.snapshot_times", "must be a list")
    output["snapshot_times"] = [_num("output.snapshot_times", t, 0.0, T) for t in output["snapshot_times"]]
    output["holder_beta"] = _num("output.holder_beta", output["holder_beta"], 0.0, 1.0, lo_open=True)
    output["holder_grad"] = _num("output.holder_grad", output["holder_grad"], 0.0, 1.0, lo_open=True)
    output["stride"] = _num("output.stride", output["stride"], 1, integer=True)

    options = _study_options(raw, study, sym, ham, datum, d)
    return Scenario(SCHEMA_VERSION, study, int(seed), T, sym, ham, forcing, datum, grid, solver, output, options, str(base_dir))


def _study_options(raw, study, sym, ham, datum, d) -> dict:
    for other, key in (
        ("kernel-audit", "kernel_audit"),
        ("blowup", "blowup"),
        ("estimate-audit", "estimate_audit"),
        ("oracle-compare", "oracle_compare"),
    ):
        if key in raw and other != study:
            raise ScenarioError(key, f"options given for study {other!r} but study is {study!r}")
    if study == "kernel-audit":
        opt = _section(
            raw,
            "kernel_audit",
            {"t_min": 1e-3, "t_max": 1e-1, "per_decade": 8, "betas": None, "upsample": 1, "rel_tol": 0.05, "auto_period": True},
        )
        opt["t_min"] = _num("kernel_audit.t_min", opt["t_min"], 0.0, lo_open=True)
        opt["t_max"] = _num("kernel_audit.t_max", opt["t_max"], opt["t_min"], lo_open=True)
        opt["per_decade"] = _num("kernel_audit.per_decade", opt["per_decade"], 4, integer=True)
        opt["upsample"] = _num("kernel_audit.upsample", opt["upsample"], 1, 64, integer=True)
        opt["rel_tol"] = _num("kernel_audit.rel_tol", opt["rel_tol"], 0.0, lo_open=True)
        if opt["betas"] is None:
            opt["betas"] = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        for b in opt["betas"]:
            if not isinstance(b, list) or len(b) != d or sum(b) not in (1, 2) or min(b) < 0:
                raise ScenarioError("kernel_audit.betas", f"each entry must be a multi-index of length {d} with order 1 or 2")
        return opt
    if study == "blowup":
        flags = ham["flags"] or {}
        if ham["kind"] != "smooth_lipschitz" and ham["kind"] != "zero" or ham["x_factor"] or ham["zero_order"]:
            raise ScenarioError(
                "hamiltonian.kind",
                "the blow-up study needs H = H(p) with H and D_p H globally Lipschitz; "
                f"{ham['kind']!r} with these options is not",
            )
        if flags.get("globally_lipschitz") is False:
            raise ScenarioError("hamiltonian.flags.globally_lipschitz", "the blow-up study needs this flag set")
        if datum["kind"] != "weierstrass":
            raise ScenarioError("datum.kind", "the blow-up study needs a weierstrass datum")
        opt = _section(raw, "blowup", {"eps": 0.1, "grad_tol": 0.1, "preserved_tol": 0.05, "steps_per_doubling": 4})
        opt["eps"] = _num("blowup.eps", opt["eps"], 0.0, 1.0, lo_open=True, hi_open=True)
        opt["grad_tol"] = _num("blowup.grad_tol", opt["grad_tol"], 0.0, lo_open=True)
        opt["preserved_tol"] = _num("blowup.preserved_tol", opt["preserved_tol"], 0.0, lo_open=True)
        opt["steps_per_doubling"] = _num("blowup.steps_per_doubling", opt["steps_per_doubling"], 2, integer=True)
        return opt
    if study == "estimate-audit":
        opt = _section(
            raw,
            "estimate_audit",
            {"checks": list(ESTIMATE_CHECKS), "comparison_bump": 0.5, "gamma_fields": 20, "schauder_eps": 0.1, "tol": None},
        )
        for c in opt["checks"]:
            if c not in ESTIMATE_CHECKS:
                raise ScenarioError("estimate_audit.checks", f"unknown check {c!r} (one of {', '.join(ESTIMATE_CHECKS)})")
        opt["comparison_bump"] = _num("estimate_audit.comparison_bump", opt["comparison_bump"], 0.0)
        opt["gamma_fields"] = _num("estimate_audit.gamma_fields", opt["gamma_fields"], 1, integer=True)
        if "comparison" in opt["checks"] and (ham["flags"] or {}).get("x_lipschitz") is False:
            raise ScenarioError("hamiltonian.flags.x_lipschitz", "the comparison check needs this flag set")
        return opt
    if study == "oracle-compare":
        opt = _section(raw, "oracle_compare", {"oracle": "cole_hopf", "tol": 1e-5})
        if opt["oracle"] not in ORACLES:
            raise ScenarioError("oracle_compare.oracle", f"must be one of {', '.join(ORACLES)}")
        opt["tol"] = _num("oracle_compare.tol", opt["tol"], 0.0, lo_open=True)
        if opt["oracle"] == "cole_hopf":
            if sym["kind"] != "laplacian" or ham["kind"] != "quadratic" or ham["x_factor"] or ham["zero_order"] or sym["drift"]:
                raise ScenarioError("oracle_compare.oracle", "cole_hopf needs a laplacian symbol and a quadratic hamiltonian")
        else:
            if ham["kind"] != "zero" or ham["zero_order"]:
                raise ScenarioError("oracle_compare.oracle", f"{opt['oracle']} needs hamiltonian kind 'zero'")
            if sym["kind"] != "laplacian":
                raise ScenarioError("oracle_compare.oracle", f"{opt['oracle']} needs a laplacian symbol")
            if opt["oracle"] == "drift" and sym["drift"] is None:
                raise ScenarioError("symbol.drift", "the drift oracle needs a drift vector")
        return opt
    return {}


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError("--config", f"file {str(path)!r} does not exist")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise ScenarioError("--config", f"not valid YAML: {err}") from err
    return parse_scenario(raw, str(path.parent))
