import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squeezelab.cli import main
from squeezelab.errors import ConfigError, EnvelopeExceededError
from squeezelab.scenario import (
    CSV_HEADER,
    parse_config,
    run_scenario,
    validate_scenario,
)


def homodyne_config(**sweep):
    return {
        "topology": "single_arm",
        "preparation": {"alpha": 1.0, "sq1": {"r": 0.5}},
        "detection": "homodyne",
        "detection_params": {"alpha_r": 1e4},
        "sweep": {"parameter": "preparation.alpha", "from": 1, "to": 10, "steps": 10, **sweep},
    }


def caves_config(oracle=False, alpha=2.0, to=1.0):
    return {
        "topology": "two_arm",
        "preparation": {"alpha": alpha, "sq2": {"r": 0.5}},
        "detection": "bound_only",
        "sweep": {"parameter": "preparation.sq2.r", "from": 0.0, "to": to, "steps": 6},
        "oracle": {"enabled": oracle},
    }


def test_homodyne_sweep_matches_formula():
    report = run_scenario(parse_config(homodyne_config()))
    assert len(report.rows) == 10
    for row in report.rows:
        assert row.realized_var == pytest.approx(math.exp(-1) / (4 * row.sweep_value ** 2), rel=1e-3)
        assert row.realized_var >= row.qcrb_var_minus - 1e-9
        assert row.well_posed


def test_caves_sweep_decreasing():
    report = run_scenario(parse_config(caves_config()))
    vals = [r.qcrb_var_minus for r in report.rows]
    assert np.all(np.diff(vals) < 0)
    assert report.rows[-1].sweep_value == 1.0


def test_single_step():
    cfg = homodyne_config(steps=1)
    assert len(run_scenario(parse_config(cfg)).rows) == 1


def test_log_sweep():
    cfg = parse_config(homodyne_config(scale="log", **{"from": 1, "to": 100, "steps": 3}))
    np.testing.assert_allclose(cfg.sweep_values(), [1, 10, 100])


def test_r_db_is_converted():
    cfg = caves_config()
    cfg["preparation"]["sq2"] = {"r_db": 20 * math.log10(math.e)}
    assert parse_config(cfg).preparation["sq2"]["r"] == pytest.approx(1.0)
    cfg["sweep"] = {"parameter": "preparation.sq2.r_db", "from": 0, "to": 6, "steps": 2}
    report = run_scenario(parse_config(cfg))
    assert report.rows[0].qcrb_var_minus == pytest.approx(1 / 16)


def test_all_violations_are_listed():
    bad = {"topology": "ring", "preparation": {"alpha": -1}, "detection": "homodyne", "sweep": {"parameter": "x", "from": 0, "to": 1, "steps": 0}}
    with pytest.raises(ConfigError) as info:
        parse_config(bad)
    paths = {p for p, _ in info.value.violations}
    assert {"/topology", "/preparation/alpha", "/sweep/steps"} <= paths


def test_semantic_violations_are_listed():
    cfg = homodyne_config(**{"from": 5, "to": 1, "parameter": "preparation.nothing"})
    cfg["topology"] = "two_arm"
    del cfg["detection_params"]
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    paths = [p for p, _ in info.value.violations]
    assert "/detection" in paths
    assert "/detection_params/alpha_r" in paths
    assert "/sweep" in paths
    assert "/sweep/parameter" in paths


def test_log_sweep_needs_positive_start():
    with pytest.raises(ConfigError):
        parse_config(homodyne_config(scale="log", **{"from": 0}))


def test_parametric_prep_needs_two_arms():
    cfg = homodyne_config()
    cfg["preparation"] = {"alpha": 2, "su11_prep": {"r": 0.5}}
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_zero_gain_rows_are_flagged():
    cfg = {
        "topology": "two_arm",
        "preparation": {"alpha": 2, "su11_prep": {"r": 0.3}},
        "detection": "su11_two_arm_readout",
        "detection_params": {"R": 1},
        "sweep": {"parameter": "preparation.alpha", "from": 1, "to": 2, "steps": 2},
    }
    report = run_scenario(parse_config(cfg))
    assert all(math.isinf(r.realized_var) and not r.well_posed for r in report.rows)
    assert "# row 0: zero gain" in report.to_csv()


def test_singular_direct_offset_is_flagged():
    cfg = {
        "topology": "two_arm",
        "preparation": {"alpha": 2, "su11_prep": {"r": 0.3}},
        "detection": "double_direct",
        "sweep": {"parameter": "detection_params.phi_offset", "from": 0, "to": 0.7, "steps": 2},
    }
    report = run_scenario(parse_config(cfg))
    assert math.isnan(report.rows[0].realized_var)
    assert report.rows[1].realized_var >= report.rows[1].qcrb_var_minus


@pytest.mark.parametrize("detection,params,prep", [
    ("double_homodyne", {}, {"alpha": 2, "zeta": 0.2, "sq1": {"r": 0.3, "theta": 0.4}, "sq2": {"r": 0.5}}),
    ("double_direct", {"phi_offset": 0.6}, {"alpha": 2, "sq1": {"r": 0.3}, "sq2": {"r": 0.5, "theta": 0.1}}),
    ("su11_readout", {"R": 2}, {"alpha": 10, "sq1": {"r": 1, "theta": None}}),
    ("homodyne", {"alpha_r": 10}, {"alpha": 2, "sq1": {"r": 0.5, "theta": 0.3}}),
])
def test_cramer_rao_ordering_all_detections(detection, params, prep):
    topology = "single_arm" if detection in ("homodyne", "su11_readout") else "two_arm"
    cfg = {
        "topology": topology, "preparation": prep, "detection": detection, "detection_params": params,
        "sweep": {"parameter": "preparation.alpha", "from": 1, "to": prep["alpha"], "steps": 3},
    }
    for row in run_scenario(parse_config(cfg)).rows:
        assert row.realized_var >= row.qcrb_var_minus - 1e-9


def test_csv_format_and_determinism(monkeypatch):
    cfg = parse_config(caves_config())
    a = run_scenario(cfg).to_csv()
    monkeypatch.setenv("SQUEEZELAB_THREADS", "1")
    b = run_scenario(cfg).to_csv()
    assert a == b
    lines = a.splitlines()
    assert lines[0].startswith("# squeezelab ")
    assert lines[1] == f"# config sha256 {cfg.sha256()}"
    assert lines[2] == CSV_HEADER
    assert len(lines[3].split(",")) == 9
    assert lines[3].split(",")[-1] in ("true", "false")
    assert repr(float(lines[4].split(",")[1])) == repr(run_scenario(cfg).rows[1].qcrb_var_minus)


def test_thread_env_validation(monkeypatch):
    monkeypatch.setenv("SQUEEZELAB_THREADS", "zero")
    with pytest.raises(ConfigError):
        run_scenario(parse_config(caves_config()))


def test_oracle_validation():
    table = validate_scenario(parse_config(caves_config(oracle=True, to=0.5)))
    assert len(table) == 6
    assert max(r.worst for r in table) < 1e-6
    vac = caves_config(oracle=True, alpha=0.0)
    vac["preparation"]["sq2"] = {"r": 0.0}
    vac["sweep"] = {"parameter": "preparation.zeta", "from": 0, "to": 1, "steps": 2}
    assert max(r.worst for r in validate_scenario(parse_config(vac))) < 1e-14
    with pytest.raises(EnvelopeExceededError) as info:
        validate_scenario(parse_config(caves_config(oracle=True, alpha=5.0)))
    assert info.value.parameter == "preparation.alpha"


# -- config round trip -------------------------------------------------------

squeezer = st.fixed_dictionaries({"r": st.floats(-1, 1)}, optional={"theta": st.floats(0, 3)})


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0, 5),
    st.floats(-1, 1),
    squeezer,
    squeezer,
    st.sampled_from(["double_homodyne", "double_direct", "bound_only"]),
    st.integers(1, 20),
)
def test_config_round_trip(alpha, zeta, sq1, sq2, detection, steps):
    raw = {
        "topology": "two_arm",
        "preparation": {"alpha": alpha, "zeta": zeta, "sq1": sq1, "sq2": sq2},
        "detection": detection,
        "sweep": {"parameter": "preparation.alpha", "from": 0, "to": 1, "steps": steps},
    }
    cfg = parse_config(raw)
    again = parse_config(cfg.serialize())
    assert again == cfg
    assert again.serialize() == cfg.serialize()


# -- command line ------------------------------------------------------------


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data), encoding="utf-8")
    return str(p)


def test_cli_run(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", caves_config())
    out = tmp_path / "out.csv"
    assert main(["run", cfg, "-o", str(out)]) == 0
    first = out.read_bytes()
    assert main(["run", cfg, "-o", str(out)]) == 0
    assert out.read_bytes() == first
    assert main(["run", cfg]) == 0
    assert capsys.readouterr().out.encode() == first


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, "g.json", caves_config(oracle=True, to=0.5))
    assert main(["validate", good]) == 0
    big = write(tmp_path, "b.json", caves_config(oracle=True, alpha=5.0))
    assert main(["validate", big]) == 2
    assert "envelope" in capsys.readouterr().err
    bad = tmp_path / "x.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_validate_failure(tmp_path, monkeypatch):
    import squeezelab.cli as cli

    monkeypatch.setattr(cli, "ORACLE_GAP_THRESHOLD", 0.0)
    cfg = write(tmp_path, "g.json", caves_config(oracle=True, to=0.5))
    assert cli.main(["validate", cfg]) == 1


def test_cli_limits(capsys):
    assert main(["limits", "--n", "9"]) == 0
    out = capsys.readouterr().out.split()
    assert float(out[1]) == pytest.approx(1 / 6)
    assert float(out[5]) == pytest.approx(1 / 9)


def test_console_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "squeezelab", "limits", "--n", "4", "--r", "0.6931471805599453"],
                         capture_output=True, text=True, check=True)
    assert "sqz 0.125" in res.stdout
