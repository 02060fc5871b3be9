"""End-to-end tests of the command-line driver: envelopes, CSV, SVG,
exit codes, and determinism of the serialized outputs."""

import json
import os

import pytest

from homatlas.cli import family_from_config, main
from homatlas.config import load_config
from homatlas.exceptions import ConfigError


def _envelope(out_dir):
    with open(os.path.join(out_dir, "result.json"), encoding="utf-8") as fh:
        return json.load(fh)


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_henon_run(tmp_path):
    out = str(tmp_path / "run")
    assert main(["henon", "--out", out]) == 0
    env = _envelope(out)
    assert env["schema_version"] == 1
    assert env["tool"] == "homatlas"
    assert env["subcommand"] == "henon"
    assert env["config"]["experiment"]["M"] == 0.625
    assert abs(env["payload"]["b1_at_M"]) < 1e-9
    assert env["payload"]["horseshoe"]["certified"] is True
    values = env["payload"]["bifurcation_values"]
    assert abs(values["fixed-point-birth"]) < 1e-9
    assert abs(values["period-doubling"] - 1.0) < 1e-9
    assert abs(values["twistless"] - 0.625) < 1e-6
    # the resonant scan points are reported, not silently dropped
    assert any("skipped" in w for w in env["warnings"])
    assert env["wall_clock_s"] >= 0.0

    csv_bytes = (tmp_path / "run" / "henon.csv").read_bytes()
    assert b"\r" not in csv_bytes
    assert csv_bytes.decode("utf-8").splitlines()[0] == "quantity,label,value"
    svg = (tmp_path / "run" / "henon.svg").read_text(encoding="utf-8")
    assert svg.startswith("<svg")


def test_family_check_audit_passes(tmp_path):
    out = str(tmp_path / "run")
    assert main(["family-check", "--out", out]) == 0
    payload = _envelope(out)["payload"]
    assert payload["audit"]["unit_product"] is True
    assert payload["audit"]["determinant_identity"] is True
    assert abs(payload["bc_minus_one"]) < 1e-8
    assert abs(payload["taylor"]["d"] - 1.0) < 1e-8
    assert payload["alpha"] == pytest.approx(0.0, abs=1e-8)


def test_resonance_certified(tmp_path):
    out = str(tmp_path / "run")
    code = main(
        [
            "resonance",
            "--set", "s0=-0.4",
            "--set", "k_min=8",
            "--set", "k_max=10",
            "--set", "h0=0.02",
            "--out", out,
        ]
    )
    assert code == 0
    payload = _envelope(out)["payload"]
    assert payload["verdict"] == "certified"
    assert payload["nesting"] == "nested"
    assert payload["flags"] == []
    for rec in payload["records"]:
        assert abs(rec["cos_phi"] - 0.2) < 0.01


def test_cascade_outputs_and_determinism(tmp_path):
    args = [
        "cascade",
        "--set", "alpha=-0.1",
        "--set", "k_min=10",
        "--set", "k_max=11",
    ]
    out1 = str(tmp_path / "a")
    out2 = str(tmp_path / "b")
    assert main(args + ["--out", out1]) == 0
    assert main(args + ["--out", out2, "--threads", "2"]) == 0
    env1, env2 = _envelope(out1), _envelope(out2)
    del env1["wall_clock_s"], env2["wall_clock_s"]
    # the config echo differs only in the output dir
    env1["config"]["output"]["dir"] = env2["config"]["output"]["dir"]
    assert env1 == env2
    csv1 = (tmp_path / "a" / "cascade.csv").read_bytes()
    csv2 = (tmp_path / "b" / "cascade.csv").read_bytes()
    assert csv1 == csv2
    svg1 = (tmp_path / "a" / "cascade.svg").read_bytes()
    svg2 = (tmp_path / "b" / "cascade.svg").read_bytes()
    assert svg1 == svg2
    assert (tmp_path / "a" / "cascade_phases.svg").exists()

    rows = env1["payload"]["rows"]
    assert [r["k"] for r in rows] == [10, 11]
    for r in rows:
        assert r["error"] is None
        assert r["monotone"] is True
        assert len(r["flags"]) == 3


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[family]\nlam = 0.4\n[experiment]\nM = 0.3\nscan_n = 3\n",
        encoding="utf-8",
    )
    out = str(tmp_path / "run")
    code = main(["henon", "--config", str(path), "--out", out])
    assert code == 0
    env = _envelope(out)
    assert env["config"]["family"]["lam"] == 0.4
    assert env["config"]["experiment"]["M"] == 0.3
    assert len(env["payload"]["b1_scan"]["M"]) == 3


def test_validation_error_exit_1(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["henon", "--set", "nonsense=1", "--out", out]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["schema_version"] == 1
    assert err["error"]["type"] == "ConfigError"
    assert not os.path.exists(os.path.join(out, "result.json"))


def test_unknown_format_exit_1(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["henon", "--set", "formats=pdf", "--out", out]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConfigError"


def test_numerical_error_exit_2(tmp_path, capsys):
    # the default fold family has s0 = 0, outside the resonance window
    out = str(tmp_path / "run")
    assert main(["resonance", "--out", out]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ResonanceWindowError"
    with open(os.path.join(out, "error.json"), encoding="utf-8") as fh:
        disk = json.load(fh)
    assert disk == err
    assert not os.path.exists(os.path.join(out, "result.json"))


def test_formats_filter(tmp_path):
    out = str(tmp_path / "run")
    code = main(
        ["family-check", "--set", "formats=csv", "--out", out]
    )
    assert code == 0
    assert os.path.exists(os.path.join(out, "family-check.csv"))
    assert not os.path.exists(os.path.join(out, "result.json"))
    assert not os.path.exists(os.path.join(out, "family-check.svg"))


def test_family_from_config_recipes():
    fam = family_from_config(load_config("family-check").family)
    assert fam.lam == 0.5
    assert abs(fam.taylor.b - 1.0) < 1e-9

    cfg = load_config(
        "family-check", overrides=("recipe=sandwich", "p1=0.2")
    )
    fam = family_from_config(cfg.family)
    assert abs(fam.taylor.a) > 1e-6

    with pytest.raises(ConfigError):
        family_from_config(
            load_config("family-check", overrides=("recipe=bogus",)).family
        )
    with pytest.raises(ConfigError):
        # |lam| >= 1 is rejected before any computation
        family_from_config(
            load_config("family-check", overrides=("lam=1.5",)).family
        )


def test_tuned_family_from_config():
    cfg = load_config(
        "family-check", overrides=("alpha=-0.1", "s0=-0.2")
    )
    fam = family_from_config(cfg.family)
    assert fam.alpha == pytest.approx(-0.1, abs=1e-7)
    assert fam.s0 == pytest.approx(-0.2, abs=1e-7)


def test_cross_form_and_classify_runs(tmp_path):
    out1 = str(tmp_path / "cf")
    code = main(
        [
            "cross-form",
            "--set", "beta=1",
            "--set", "k_min=6",
            "--set", "k_max=9",
            "--out", out1,
        ]
    )
    assert code == 0
    payload = _envelope(out1)["payload"]
    assert payload["beta1"] == 1.0
    assert abs(payload["beta1_fitted"] - 1.0) < 0.1

    out2 = str(tmp_path / "cl")
    code = main(
        [
            "classify",
            "--set", "p=0,-1",
            "--set", "q=0,0,-1",
            "--set", "k_min=8",
            "--set", "k_max=10",
            "--out", out2,
        ]
    )
    assert code == 0
    payload = _envelope(out2)["payload"]
    assert payload["tag"] == "empty"
    assert payload["agrees"] is True


def test_atlas2d_run(tmp_path):
    out = str(tmp_path / "run")
    code = main(
        [
            "atlas2d",
            "--set", "k_min=8",
            "--set", "k_max=9",
            "--set", "n_alpha=5",
            "--set", "eps=0.03",
            "--out", out,
        ]
    )
    assert code == 0
    payload = _envelope(out)["payload"]
    assert payload["axis_crossings"] == [[8, True], [9, True]]
    assert payload["intersections"] == [[8, 9, True]]
    assert payload["failures"] == []
    csv_text = (tmp_path / "run" / "atlas2d.csv").read_text(
        encoding="utf-8"
    )
    header, *rows = csv_text.splitlines()
    assert header == "k,alpha,mu_plus,mu_minus"
    assert len(rows) == 2 * 5


def test_rescale_verify_run(tmp_path):
    out = str(tmp_path / "run")
    code = main(
        [
            "rescale-verify",
            "--set", "q=0,0,1,1",
            "--set", "k_min=8",
            "--set", "k_max=12",
            "--out", out,
        ]
    )
    assert code == 0
    payload = _envelope(out)["payload"]
    assert payload["bounded"] is True
    assert len(payload["sup_residual"]) == 5
