import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from levyhj.cli import EXIT_CONFIG, EXIT_OK, main
from levyhj.scenario import ScenarioError, load_scenario, parse_scenario

SCEN = Path(__file__).resolve().parent.parent / "scenarios"

MINIMAL = {
    "schema_version": 1,
    "study": "solve",
    "T": 1.0,
    "symbol": {"kind": "fractional", "order": 1.5},
    "hamiltonian": {"kind": "zero"},
    "datum": {"kind": "gaussian_bump"},
    "grid": {"d": 1, "n": 512, "L": "16pi"},
}


def _with(**changes):
    raw = json.loads(json.dumps(MINIMAL))
    for key, value in changes.items():
        raw[key] = value
    return raw


def test_minimal_scenario():
    s = parse_scenario(MINIMAL)
    assert s.grid["L"] == pytest.approx(16 * math.pi)
    assert s.build_symbol().order == 1.5
    assert s.build_problem().grid.n == 512


@pytest.mark.parametrize(
    "changes,key,text",
    [
        ({"symbol": {"kind": "fractional", "order": 0.9}}, "symbol.order", "order must lie in (1, 2]"),
        ({"symbol": {"kind": "cauchy"}}, "symbol.kind", "unknown kind"),
        ({"grid": {"d": 1, "n": 500, "L": 1.0}}, "grid.n", "power of two"),
        ({"schema_version": 2}, "schema_version", "not supported"),
        ({"T": -1}, "T", "must lie in"),
        ({"colour": "red"}, "colour", "unknown key"),
        ({"solver": {"dt": 1e-3, "step": 2}}, "solver.step", "unknown key"),
        ({"datum": {"kind": "weierstrass"}}, "datum.beta", "is required"),
        ({"seed": -3}, "seed", "unsigned 64-bit"),
    ],
)
def test_validation_errors(changes, key, text):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(_with(**changes))
    assert info.value.key == key
    assert text in str(info.value)


def test_blowup_needs_globally_lipschitz():
    raw = _with(
        study="blowup",
        hamiltonian={"kind": "quadratic"},
        datum={"kind": "weierstrass", "beta": 0.5},
    )
    with pytest.raises(ScenarioError, match="globally Lipschitz"):
        parse_scenario(raw)


def test_options_for_other_study_rejected():
    with pytest.raises(ScenarioError, match="options given"):
        parse_scenario(_with(blowup={"eps": 0.1}))


def test_hash_is_stable_and_sensitive():
    a, b = parse_scenario(MINIMAL), parse_scenario(_with())
    assert a.hash == b.hash
    assert parse_scenario(_with(seed=1)).hash != a.hash


def test_shipped_scenarios_load():
    files = sorted(SCEN.glob("*.yaml"))
    assert files
    for f in files:
        load_scenario(f)


def test_declared_flag_mismatch(tmp_path):
    raw = _with(hamiltonian={"kind": "quadratic", "flags": {"globally_lipschitz": True}}, T=0.01)
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert "globally_lipschitz" in manifest["messages"][0]


def test_missing_config_and_study_mismatch(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["solve", "--config", str(SCEN / "drift_heat.yaml"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_oracle_compare_burgers(tmp_path):
    assert main(["oracle-compare", "--config", str(SCEN / "burgers_cole_hopf.yaml"), "--out", str(tmp_path)]) == EXIT_OK
    data = np.genfromtxt(tmp_path / "oracle.csv", delimiter=",", names=True)
    assert data["max_deviation"].max() <= 1e-5
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest) >= {"schema_version", "scenario_hash", "wall_time_s", "checks", "exit_code"}


def test_kernel_audit_summary(tmp_path):
    assert main(["kernel-audit", "--config", str(SCEN / "kernel_audit_fractional.yaml"), "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "kernel_audit.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "symbol,t,beta,l1_norm,slope,alpha_hat,pass"
    summary = [ln.split(",") for ln in lines[1:] if ln.split(",")[4]]
    assert summary and abs(float(summary[0][5]) - 1.5) <= 0.05 * 1.5


def test_csv_number_format(tmp_path):
    main(["solve", "--config", str(SCEN / "fractional_solve.yaml"), "--out", str(tmp_path)])
    row = (tmp_path / "diagnostics.csv").read_text().splitlines()[1].split(",")
    mantissa = row[1].split("e")[0]
    assert len(mantissa.replace("-", "").replace(".", "")) == 17


def test_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["solve", "--config", str(SCEN / "fractional_solve.yaml"), "--out", str(out), "--seed", "42"]) == EXIT_OK
        outs.append(out)
    for name in ("diagnostics.csv",):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    snaps = sorted(p.name for p in outs[0].glob("*.lhj"))
    assert snaps
    for s in snaps:
        assert (outs[0] / s).read_bytes() == (outs[1] / s).read_bytes()


def test_batch_parallel(tmp_path):
    code = main(
        [
            "oracle-compare",
            "--config",
            str(SCEN / "burgers_cole_hopf.yaml"),
            "--config",
            str(SCEN / "drift_heat.yaml"),
            "--out",
            str(tmp_path),
            "--jobs",
            "2",
        ]
    )
    assert code == EXIT_OK
    assert (tmp_path / "burgers_cole_hopf" / "oracle.csv").exists()
    assert (tmp_path / "drift_heat" / "oracle.csv").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "levyhj", "oracle-compare", "--config", str(SCEN / "drift_heat.yaml"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
