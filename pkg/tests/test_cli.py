import json
import os
import re
from pathlib import Path

import numpy as np
import pytest

from latticetherm.cli import main
from latticetherm.csvio import fmt, read_csv, to_csv
from latticetherm.errors import ConfigInvalid, ManifestMissing
from latticetherm.lab import config_hash, parse_config, report, run_experiment

ROOT = Path(__file__).resolve().parents[1]
RECIPES = ROOT / "recipes"
GOLDEN = Path(__file__).parent / "golden"

ISING = {"builtin": "ising_transverse", "params": {"J": 1.0, "h": 1.0}}
QUENCH = {"experiment": "quench", "psi": ISING, "phi": ISING, "L_amb": 6, "L_obs": 3, "horizons": [1, 2]}


def _dump(obj):
    return json.dumps(obj, indent=2)


def _with(base, **changes):
    out = dict(base)
    for k, v in changes.items():
        if v is None:
            out.pop(k, None)
        else:
            out[k] = v
    return _dump(out)


PRESSURE = {"experiment": "pressure", "phi": ISING, "volumes": [2, 3]}

MALFORMED = {
    "trailing_comma": '{\n  "experiment": "pressure",\n  "volumes": [2,],\n}\n',
    "empty_document": "",
    "top_level_array": "[1, 2]",
    "missing_experiment": _with(PRESSURE, experiment=None),
    "unknown_experiment": _with(PRESSURE, experiment="melt"),
    "missing_volumes": _with(PRESSURE, volumes=None),
    "zero_volume": _with(PRESSURE, volumes=[0, 2]),
    "volume_as_string": _with(PRESSURE, volumes="2,3"),
    "nan_beta": '{"experiment": "pressure", "phi": {"builtin": "xy"}, "volumes": [2], "beta": NaN}',
    "overflowing_beta": '{"experiment": "pressure", "phi": {"builtin": "xy"}, "volumes": [2], "beta": 1e999}',
    "unknown_field": _with(PRESSURE, temperature=2.0),
    "unknown_builtin": _with(PRESSURE, phi={"builtin": "potts"}),
    "builtin_and_terms": _with(PRESSURE, phi={"builtin": "xy", "site_dim": 2, "terms": []}),
    "bad_builtin_param": _with(PRESSURE, phi={"builtin": "ising_transverse", "params": {"K": 1.0}}),
    "term_wrong_shape": _with(
        PRESSURE, phi={"site_dim": 2, "terms": [{"shape": [[0]], "matrix": [[[1, 0]]]}]}
    ),
    "term_not_hermitian": _with(
        PRESSURE,
        phi={"site_dim": 2, "terms": [{"shape": [[0]], "matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}]},
    ),
    "quench_missing_horizons": _with(QUENCH, horizons=None),
    "negative_horizon": _with(QUENCH, horizons=[1, -2]),
    "unsorted_times": _with(QUENCH, times=[0, 2, 1]),
    "window_too_large": _with(QUENCH, L_obs=5),
    "weakgibbs_window_exceeds_ambient": _dump(
        {"experiment": "weakgibbs", "phi": ISING, "ambient": 6, "windows": [2, 6]}
    ),
    "negative_seed": _with(PRESSURE, seed=-1),
    "fermion_extra_key": _with(QUENCH, phi={"type": "fermion", "t": 1.0, "hubbard_U": 2.0}),
}


@pytest.fixture
def write(tmp_path):
    def _write(text, name="config.json"):
        p = tmp_path / name
        p.write_text(text if isinstance(text, str) else _dump(text), encoding="utf-8")
        return p

    return _write


# ---------------------------------------------------------------- schema


def test_at_least_twenty_malformed_configs():
    assert len(MALFORMED) >= 20


@pytest.mark.parametrize("name", sorted(MALFORMED))
def test_malformed_config_rejected_with_diagnostic(name, write, capsys):
    path = write(MALFORMED[name])
    assert main(["validate", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "ConfigInvalid" in err
    # a line:column location, a field path, or the offending literal
    assert re.search(re.escape(str(path)) + r"(:\d+:\d+: |: field '[^']+': |: (non-finite )?number )", err)


def test_syntax_error_reports_line_and_column():
    with pytest.raises(ConfigInvalid, match=r"cfg:3:\d+:"):
        parse_config(MALFORMED["trailing_comma"], "cfg")


def test_schema_error_reports_field_path():
    with pytest.raises(ConfigInvalid, match=r"field 'volumes/0'"):
        parse_config(MALFORMED["zero_volume"], "cfg")


@pytest.mark.parametrize("recipe", sorted(p.name for p in RECIPES.glob("*.json")))
def test_shipped_recipes_validate(recipe):
    assert main(["validate", "--config", str(RECIPES / recipe)]) == 0


def test_config_hash_ignores_key_order():
    a = {"experiment": "pressure", "volumes": [2, 3], "phi": ISING}
    b = json.loads(json.dumps(dict(reversed(list(a.items())))))
    assert list(a) != list(b)
    assert config_hash(a) == config_hash(b)


# ---------------------------------------------------------------- exit codes


def test_resource_cap_exit_code(write, tmp_path):
    path = write({"experiment": "pressure", "phi": ISING, "volumes": [5]})
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"), "--cap-override", "16"]) == 3
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 0


def test_default_cap_rejects_thirteen_sites(write, tmp_path):
    path = write({"experiment": "pressure", "phi": ISING, "volumes": [13]})
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 3


def test_numerical_failure_exit_code(write, tmp_path):
    cfg = {"experiment": "weakgibbs", "phi": {"builtin": "ising_transverse", "params": {"J": 1, "h": 0.1}}}
    path = write(dict(cfg, ambient=6, windows=[2, 3, 4], beta=2000))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 4


def test_unreadable_config_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_report_missing_manifest(tmp_path):
    assert main(["report", str(tmp_path)]) == 2
    with pytest.raises(ManifestMissing):
        report(tmp_path / "manifest.json")


# ---------------------------------------------------------------- runs


def test_free_pressure_is_log_two(tmp_path):
    cfg = parse_config((RECIPES / "pressure_free.json").read_text())
    run_experiment(cfg, tmp_path)
    header, rows = read_csv(tmp_path / "pressure.csv")
    assert header == ["L", "sites", "value", "bound"]
    assert [r[0] for r in rows] == ["2", "3", "4"]
    for r in rows:
        assert float(r[2]) == pytest.approx(np.log(2), abs=1e-15)


def test_equiv_run_verdicts(tmp_path):
    for name, verdict in [("equiv_shift.json", "equivalent"), ("equiv_field.json", "inequivalent")]:
        out = tmp_path / name
        cfg = parse_config((RECIPES / name).read_text())
        manifest = json.loads(run_experiment(cfg, out).read_text())
        assert manifest["results"]["verdict"] == verdict


def test_manifest_contents(tmp_path):
    cfg = parse_config((RECIPES / "pressure_free.json").read_text())
    manifest = json.loads(run_experiment(cfg, tmp_path).read_text())
    assert manifest["config_hash"] == config_hash(cfg)
    assert set(manifest["outputs"]) == {"pressure.csv", "entropy.csv", "energy.csv"}
    assert manifest["version"]
    assert manifest["started"] <= manifest["finished"]
    assert "thermo" in manifest["timings"]


def test_runs_are_bit_identical(tmp_path):
    cfg = parse_config((RECIPES / "gibbs_ising.json").read_text())
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b", threads=2)
    for name in ("pressure.csv", "variational.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_threads_from_environment(write, tmp_path, monkeypatch):
    monkeypatch.setenv("LATTICETHERM_THREADS", "3")
    path = write({"experiment": "pressure", "phi": ISING, "volumes": [2, 3, 4]})
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 0


def test_acceptance_quench_recipe_matches_golden(tmp_path):
    cfg = parse_config((RECIPES / "quench_acceptance.json").read_text())
    assert main(["run", "--config", str(RECIPES / "quench_acceptance.json"), "--out", str(tmp_path)]) == 0
    produced = (tmp_path / "quench.csv").read_bytes()
    golden = (GOLDEN / "quench_acceptance.csv").read_bytes()
    if os.environ.get("LATTICETHERM_DISABLE_NUMBA"):
        # the numpy kernels round differently in the last bits
        _, a = read_csv(tmp_path / "quench.csv")
        _, b = read_csv(GOLDEN / "quench_acceptance.csv")
        assert [r[:2] for r in a] == [r[:2] for r in b]
        assert np.allclose([float(r[2]) for r in a], [float(r[2]) for r in b], atol=1e-12)
    else:
        assert produced == golden
    assert cfg["L_amb"] == 10


# ---------------------------------------------------------------- report


def test_report_pressure_has_fit(tmp_path, capsys):
    cfg = parse_config((RECIPES / "pressure_free.json").read_text())
    run_experiment(cfg, tmp_path)
    assert main(["report", str(tmp_path / "manifest.json")]) == 0
    out = capsys.readouterr().out
    assert "fitted pressure P = 0.69314718" in out
    assert "[pressure.csv]" in out


def test_report_weakgibbs_trend(tmp_path):
    cfg = parse_config((RECIPES / "weakgibbs_ising.json").read_text())
    cfg["ambient"], cfg["windows"] = 7, [2, 3, 4]
    run_experiment(cfg, tmp_path)
    text = report(tmp_path)
    assert "c_L/|L| trend: decreasing" in text
    assert "extrapolated c per site" in text


def test_report_quench_sign_verdict(tmp_path):
    cfg = dict(QUENCH, phi={"builtin": "ising_transverse", "params": {"J": 1.0, "h": 0.5}}, L_amb=7)
    run_experiment(parse_config(json.dumps(cfg)), tmp_path)
    text = report(tmp_path)
    assert "sign verdict: increase" in text and "dE_psi" in text


def test_report_detects_missing_csv(tmp_path):
    cfg = parse_config((RECIPES / "pressure_free.json").read_text())
    run_experiment(cfg, tmp_path)
    (tmp_path / "energy.csv").unlink()
    with pytest.raises(ManifestMissing):
        report(tmp_path)


# ---------------------------------------------------------------- CSV dialect


def test_csv_dialect():
    text = to_csv(["a", "b"], [(1, 0.1), (2, float("inf"))])
    assert text == "a,b\n1,0.10000000000000001\n2,inf\n"
    assert "\r" not in text
    assert float(fmt(np.pi)) == np.pi
