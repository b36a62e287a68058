import json

import pytest

from levyfield import cli
from levyfield.config import ExperimentConfig, dumps
from levyfield.exceptions import ConfigError


def _report(out, stem):
    return json.loads((out / f"{stem}_report.json").read_text())


def test_indices_white_brownian(tmp_path):
    assert cli.main(["indices", "--process", "brownian", "--noise", "white",
                     "--out", str(tmp_path)]) == 0
    r = _report(tmp_path, "indices")["result"]
    assert (r["iota_u"], r["iota_m"], r["iota_l"]) == (0.5, 0.5, 0.5)
    assert r["dalang"]["finite"] and r["lemma31"]["positivity_agree"]
    assert (tmp_path / "indices_metadata.json").exists()


def test_dalang_divergent_is_reported(tmp_path):
    assert cli.main(["dalang", "--process", "brownian:n=2", "--noise", "white",
                     "--out", str(tmp_path)]) == 0
    assert _report(tmp_path, "dalang")["result"]["dalang"]["value"] == "inf"


def test_unknown_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "simulate", "process": "brownian",
                               "model": {"sigm": 1.0}}))
    assert cli.main(["run", str(cfg)]) == 2
    assert "sigm" in capsys.readouterr().err


def test_bad_process_exit_2(tmp_path):
    assert cli.main(["density", "--process", "stable:alpha=1.5,alhpa=2",
                     "--out", str(tmp_path)]) == 2


def test_verify_lemma_25_brownian(tmp_path):
    assert cli.main(["verify-lemma", "2.5", "--process", "brownian", "--out", str(tmp_path)]) == 0
    r = _report(tmp_path, "verify_lemma")["result"]["results"][0]
    assert r["space"]["fitted_C"] >= 1 and r["time"]["holds"]


def test_verify_lemma_31_default_catalog(tmp_path):
    assert cli.main(["verify-lemma", "3.1", "--out", str(tmp_path)]) == 0
    res = _report(tmp_path, "verify_lemma")["result"]["results"]
    assert [r["process"]["kind"] for r in res] == ["cauchy", "stable", "tempered_stable"]


def test_density_csv(tmp_path):
    assert cli.main(["density", "--process", "brownian", "--t", "1", "--emit", "json,csv",
                     "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "density.csv").read_text().splitlines()
    assert lines[0] == "x,p"
    r = _report(tmp_path, "density")["result"]
    assert abs(r["value_at_0"] - 0.28209479177387814) < 1e-9


def test_simulate_then_holder(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"process": "brownian", "noise": "white_delta",
                                 "b": {"kind": "zero"}, "sigma": {"kind": "constant", "value": 1},
                                 "u0": {"kind": "constant", "amplitude": 0.0}}))
    out = tmp_path / "sim"
    assert cli.main(["simulate", "--model-config", str(model), "--T", "0.5", "--dt", "0.01",
                     "--N", "1024", "--replicas", "500", "--seed", "3", "--out", str(out)]) == 0
    assert (out / "paths" / "space" / "manifest.json").exists()
    assert cli.main(["holder", "--paths-dir", str(out / "paths"), "--direction", "space",
                     "--orders", "2,4", "--out", str(out)]) == 0
    reps = _report(out, "holder")["result"]["reports"]
    assert [r["order"] for r in reps] == [2, 4]
    assert abs(reps[0]["exponent"] - 0.5) < 0.05


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"command": "moments", "process": "cauchy", "seed": 3,
                                      "moments": {"kappa0": 0.5, "t_grid": [0.1, 1.0]},
                                      "emit": ["json", "csv"]})
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg and again.to_json() == cfg.to_json()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"moments": {"kapa0": 0.5}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"seed": -1})


def test_dumps_uses_17_digits():
    assert dumps({"x": 0.1}) == '{"x": 0.10000000000000001}\n'
