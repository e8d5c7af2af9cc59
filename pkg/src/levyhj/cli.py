"""Command-line front end: ``levyhj <study> --config s.yaml --out dir``.

Exit codes:

    0  every check passed
    1  a check failed
    2  configuration error
    3  under-resolved grid (kernel or solution spectrum)
    4  no contraction / suspected blow-up
    5  inconclusive result
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .estimates import (
    bernstein_gamma,
    blowup_study,
    comparison_check,
    lipschitz_bound_check,
    schauder_uniform_check,
    supbound_check,
)
from .grid import Field, PeriodicGrid, spectral_gradient, write_snapshot
from .hamiltonians import HamiltonianMetadataError, verify_metadata
from .heatkernel import UnderResolvedError, audit_grid, audit_order
from .oracles import cole_hopf, gaussian_bump, translated_heat_flow
from .scenario import STUDIES, Scenario, ScenarioError, load_scenario
from .solver import (
    BlowUpSuspected,
    FieldUnderResolvedError,
    NoContractionError,
    Problem,
    add_diagnostics,
    march,
    semigroup_trajectory,
)

__all__ = ["main", "run", "EXIT_OK", "EXIT_CHECK", "EXIT_CONFIG", "EXIT_RESOLUTION", "EXIT_CONTRACTION", "EXIT_INCONCLUSIVE"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RESOLUTION, EXIT_CONTRACTION, EXIT_INCONCLUSIVE = range(6)


# --------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.16e}"
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


class _Outcome:
    """Collects named check verdicts and the most severe exit code."""

    def __init__(self):
        self.checks: Dict[str, str] = {}
        self.code = EXIT_OK
        self.messages: List[str] = []

    def check(self, name: str, status) -> None:
        if isinstance(status, (bool, np.bool_)):
            status = "PASS" if status else "FAIL"
        self.checks[name] = status
        if status == "FAIL":
            self.raise_to(EXIT_CHECK)
        elif status == "INCONCLUSIVE":
            self.raise_to(EXIT_INCONCLUSIVE)

    def raise_to(self, code: int) -> None:
        order = [EXIT_OK, EXIT_CHECK, EXIT_INCONCLUSIVE, EXIT_RESOLUTION, EXIT_CONTRACTION, EXIT_CONFIG]
        if order.index(code) > order.index(self.code):
            self.code = code


# --------------------------------------------------------------------------
# studies


def _verify_flags(s: Scenario, problem: Problem) -> None:
    H = problem.hamiltonian
    declared = s.hamiltonian.get("flags") or {}
    for flag, value in declared.items():
        if getattr(H, flag) != value:
            raise ScenarioError(f"hamiltonian.flags.{flag}", f"declared {value} but {H.name} has {getattr(H, flag)}")
    try:
        verify_metadata(H, d=problem.grid.d)
    except HamiltonianMetadataError as err:
        raise ScenarioError("hamiltonian", f"metadata check failed: {err}") from err


def _study_solve(s: Scenario, out: Path, res: _Outcome) -> None:
    p = s.build_problem()
    _verify_flags(s, p)
    cfg = s.build_solver()
    traj = march(p, cfg, stride=s.output["stride"])
    add_diagnostics(p, traj, s.output["holder_beta"], s.output["holder_grad"])
    dg = traj.diagnostics
    rows = [
        (t, dg["sup_u"][i], dg["sup_Du"][i], dg["holder_beta"][i], dg["holder_grad"][i], traj.picard_iters[i], traj.rho_last[i], dg["residual_sup"][i])
        for i, t in enumerate(traj.times)
    ]
    write_csv(
        out / "diagnostics.csv",
        ["t", "sup_u", "sup_Du", "holder_beta", "holder_grad", "picard_iters", "rho_last", "residual_sup"],
        rows,
    )
    for t in s.output["snapshot_times"]:
        i = int(np.argmin(np.abs(traj.times - t)))
        write_snapshot(out / f"u_t{traj.times[i]:.6e}.lhj", traj.fields[i], traj.times[i])
    res.check("finite_diagnostics", all(np.all(np.isfinite(dg[k])) for k in ("sup_u", "sup_Du", "holder_beta", "holder_grad")))


def _study_kernel_audit(s: Scenario, out: Path, res: _Outcome) -> None:
    opt = s.options
    sym = s.build_symbol()
    decades = math.log10(opt["t_max"] / opt["t_min"])
    count = int(round(decades * opt["per_decade"])) + 1
    times = np.geomspace(opt["t_min"], opt["t_max"], count)
    if opt["auto_period"]:
        grid = audit_grid(sym, opt["t_min"], s.grid["n"], s.grid["d"], L_max=s.grid["L"])
    else:
        grid = s.build_grid()
    audit = audit_order(sym, times, opt["betas"], grid, rel_tol=opt["rel_tol"], upsample=opt["upsample"])
    rows = []
    for beta in audit.betas:
        tag = "".join(str(b) for b in beta)
        for t, v in zip(audit.times, audit.norms[beta]):
            rows.append((audit.symbol, t, tag, v, None, None, None))
        rows.append((audit.symbol, None, tag, None, audit.slopes[beta], audit.alpha_hat[beta], audit.passed[beta]))
    write_csv(out / "kernel_audit.csv", ["symbol", "t", "beta", "l1_norm", "slope", "alpha_hat", "pass"], rows)
    res.messages.extend(audit.notes)
    res.check("kernel_order", audit.status)


def _study_blowup(s: Scenario, out: Path, res: _Outcome) -> None:
    opt = s.options
    p = s.build_problem()
    _verify_flags(s, p)
    cfg = replace(s.build_solver(), quad_rule="exponential_trapezoid") if s.solver["quad_rule"] == "trapezoid" else s.build_solver()
    rep = blowup_study(
        p.symbol,
        p.hamiltonian,
        p.grid,
        s.datum["beta"],
        T=s.T,
        eps=opt["eps"],
        seed=s.seed if s.datum["seed"] is None else s.datum["seed"],
        cfg=cfg,
        forcing=p.forcing,
        grad_tol=opt["grad_tol"],
        preserved_tol=opt["preserved_tol"],
        steps_per_doubling=opt["steps_per_doubling"],
    )
    write_csv(
        out / "ratefit.csv",
        ["quantity", "claimed_exponent", "fitted_exponent", "residual", "window_lo", "window_hi", "pass"],
        [(f.quantity, f.claimed, f.fitted, f.residual, f.window[0], f.window[1], f.status) for f in rep.fits],
    )
    if rep.times.size:
        keys = ["sup_u", "holder_beta_u", "sup_Du", "sup_D2u", "holder_top"]
        write_csv(
            out / "blowup_series.csv",
            ["t"] + keys,
            [(t,) + tuple(rep.series[k][i] for k in keys) for i, t in enumerate(rep.times)],
        )
    if rep.note:
        res.messages.append(rep.note)
    res.check("blowup_rates", rep.status)


def _band_limited_fields(grid: PeriodicGrid, count: int, seed: int):
    rng = np.random.Generator(np.random.Philox(key=seed))
    kmax = grid.n // 4
    for _ in range(count):
        vals = np.zeros(grid.shape)
        coords = grid.coords
        for _m in range(8):
            k = rng.integers(1, kmax, size=grid.d)
            phase = rng.uniform(0, 2 * np.pi)
            arg = sum(kk * 2 * np.pi * c / grid.L for kk, c in zip(k, coords))
            vals += rng.normal() * np.cos(arg + phase)
        yield Field(grid, vals)


def _study_estimate_audit(s: Scenario, out: Path, res: _Outcome) -> None:
    opt = s.options
    p = s.build_problem()
    _verify_flags(s, p)
    cfg = s.build_solver()
    rows = []
    tol = opt["tol"]
    if "supbound" in opt["checks"]:
        traj = march(p, cfg)
        rep = supbound_check(p, traj, 1e-6 + 5 * cfg.picard_tol if tol is None else tol)
        rows.append(("supbound", float(rep.slack.min()), rep.tol, rep.passed))
        res.check("supbound", rep.passed)
    if "comparison" in opt["checks"]:
        grid = p.grid
        bump = gaussian_bump(grid, opt["comparison_bump"], 0.5 * grid.L / 16)
        rep = comparison_check(p, p.u0, p.u0 + bump, cfg, tol)
        rows.append(("comparison", rep.min_difference, rep.tol, rep.passed))
        res.check("comparison", rep.passed)
    if "bernstein_gamma" in opt["checks"]:
        worst = 0.0
        for u in _band_limited_fields(p.grid, opt["gamma_fields"], s.seed):
            G = bernstein_gamma(p.symbol, u).values
            worst = min(worst, float(G.min()) / max(float(np.abs(G).max()), 1e-300))
        ok = worst >= -1e-6
        rows.append(("bernstein_gamma", worst, -1e-6, ok))
        res.check("bernstein_gamma", ok)
    if "lipschitz" in opt["checks"]:
        levels = []
        for factor in (1, 2):
            g = PeriodicGrid(p.grid.d, p.grid.n * factor, p.grid.L)
            q = Problem(p.symbol, p.hamiltonian, s.build_datum(g), p.T, s.build_forcing(g))
            levels.append((q, march(q, replace(cfg, dt=cfg.dt / factor))))
        rep = lipschitz_bound_check(levels)
        rows.append(("lipschitz_spread", rep.spread, rep.tol, rep.spread <= rep.tol))
        rows.append(("bernstein_excess", float(rep.bernstein.max_excess.max()), rep.bernstein.tol, rep.bernstein.passed))
        res.check("lipschitz", rep.passed)
    if "schauder" in opt["checks"]:
        rep = schauder_uniform_check(p, cfg, eps=opt["schauder_eps"])
        rows.append(("schauder_spread", rep.spread, rep.tol, rep.passed))
        res.check("schauder", rep.passed)
    write_csv(out / "checks.csv", ["check", "value", "tolerance", "pass"], rows)


def _study_oracle_compare(s: Scenario, out: Path, res: _Outcome) -> None:
    opt = s.options
    p = s.build_problem()
    _verify_flags(s, p)
    cfg = s.build_solver()
    traj = march(p, cfg, stride=s.output["stride"])
    rows = []
    c = s.hamiltonian.get("c", 1.0)
    for t, f in zip(traj.times, traj.fields):
        if t == traj.times[0]:
            ref = p.u0
        elif opt["oracle"] == "cole_hopf":
            ref = cole_hopf(p.u0, t, c)
        elif opt["oracle"] == "heat":
            ref = semigroup_trajectory(p, [t]).final
        else:
            ref = translated_heat_flow(p.u0, t, s.symbol["drift"])
        rows.append((t, float(np.max(np.abs(f.values - ref.values)))))
    worst = max(r[1] for r in rows)
    write_csv(out / "oracle.csv", ["t", "max_deviation"], rows)
    res.check(f"oracle_{opt['oracle']}", worst <= opt["tol"])


_STUDIES = {
    "solve": _study_solve,
    "kernel-audit": _study_kernel_audit,
    "blowup": _study_blowup,
    "estimate-audit": _study_estimate_audit,
    "oracle-compare": _study_oracle_compare,
}


def run(s: Scenario, out: Path) -> int:
    """Run one scenario into ``out``; returns the exit code."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    res = _Outcome()
    start = time.perf_counter()
    try:
        _STUDIES[s.study](s, out, res)
    except ScenarioError as err:
        res.messages.append(str(err))
        res.raise_to(EXIT_CONFIG)
    except (UnderResolvedError, FieldUnderResolvedError) as err:
        res.messages.append(str(err))
        res.raise_to(EXIT_RESOLUTION)
    except (NoContractionError, BlowUpSuspected) as err:
        res.messages.append(str(err))
        res.raise_to(EXIT_CONTRACTION)
    manifest = {
        "schema_version": s.schema_version,
        "study": s.study,
        "seed": s.seed,
        "scenario_hash": s.hash,
        "wall_time_s": round(time.perf_counter() - start, 3),
        "checks": res.checks,
        "messages": res.messages,
        "exit_code": res.code,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return res.code


def _run_one(args):
    path, out, seed, study = args
    try:
        s = load_scenario(path)
    except ScenarioError as err:
        return path, EXIT_CONFIG, str(err)
    if s.study != study:
        return path, EXIT_CONFIG, f"study: scenario declares {s.study!r} but subcommand is {study!r}"
    if seed is not None:
        s.seed = seed
    code = run(s, out)
    return path, code, ""


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="levyhj", description="Viscous HJ solver with Levy diffusions and estimate audits.")
    ap.add_argument("study", choices=STUDIES)
    ap.add_argument("--config", required=True, action="append", help="scenario YAML (repeat for a batch)")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed (u64)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers for a batch")
    args = ap.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("--seed: must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("--jobs: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    if len(args.config) == 1:
        tasks = [(args.config[0], out, args.seed, args.study)]
    else:
        stems = [Path(c).stem for c in args.config]
        if len(set(stems)) != len(stems):
            print("--config: batch scenarios need distinct file names", file=sys.stderr)
            return EXIT_CONFIG
        tasks = [(c, out / stem, args.seed, args.study) for c, stem in zip(args.config, stems)]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    worst = EXIT_OK
    order = [EXIT_OK, EXIT_CHECK, EXIT_INCONCLUSIVE, EXIT_RESOLUTION, EXIT_CONTRACTION, EXIT_CONFIG]
    for path, code, msg in results:
        print(f"{path}: exit {code}" + (f" ({msg})" if msg else ""))
        if msg:
            print(msg, file=sys.stderr)
        if order.index(code) > order.index(worst):
            worst = code
    return worst


if __name__ == "__main__":
    sys.exit(main())
