import json
import os

import pytest

from urllc_lab import cli
from urllc_lab.fading import ChannelTrace


def run(args):
    return cli.main([str(a) for a in args])


def read(path):
    with open(path, "rb") as f:
        return f.read()


def test_missing_required_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["fading", "cdf", "--samples", "100", "--output", "x.csv"])
    assert exc.value.code == 2
    assert "--n" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["fading", "nonsense"])
    assert exc.value.code == 2


def test_numeric_failure_exits_3(tmp_path, capsys):
    # sample rate below the resolvability floor is a domain error, not usage
    code = run(
        [
            "fading", "psd", "--speed", 10, "--sample-rate", 100,
            "--duration", 2.0, "--output", tmp_path / "psd.csv",
        ]
    )
    assert code == 3
    assert "sample_rate" in capsys.readouterr().err


def test_cdf_command_determinism_and_header(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["fading", "cdf", "--n", 2, "--samples", 5000, "--seed", 3]
    assert run(base + ["--output", out1]) == 0
    assert run(base + ["--output", out2]) == 0
    assert read(out1) == read(out2)
    text = out1.read_text()
    assert text.splitlines()[1].startswith("# warning: two-scatterer")
    assert "energy_linear,cdf_empirical,cdf_rayleigh" in text

    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["outputs"] == [str(out1)]
    assert manifest["master_seed"] == 3
    assert "urllc-lab" in manifest["versions"]


def test_env_seed_overrides_flag(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["fading", "cdf", "--n", 3, "--samples", 4000, "--seed", 1]
    os.environ["URLLC_LAB_SEED"] = "99"
    try:
        assert run(base + ["--output", out1]) == 0
    finally:
        del os.environ["URLLC_LAB_SEED"]
    assert run(["fading", "cdf", "--n", 3, "--samples", 4000, "--seed", 99, "--output", out2]) == 0
    assert read(out1) == read(out2)


def test_config_hash_tracks_meaningful_flags(tmp_path):
    def hash_for(seed, out):
        assert run(["fading", "cdf", "--n", 3, "--samples", 2000, "--seed", seed, "--output", out]) == 0
        with open(str(out) + ".manifest.json") as f:
            return json.load(f)["config_hash"]

    h1 = hash_for(1, tmp_path / "h1.csv")
    h1_again = hash_for(1, tmp_path / "h2.csv")
    h2 = hash_for(2, tmp_path / "h3.csv")
    assert h1 == h1_again
    assert h1 != h2


def test_covariance_command(tmp_path):
    out = tmp_path / "cov.csv"
    assert run(
        ["fading", "covariance", "--n", 30, "--trials", 1500, "--points", 8, "--seed", 5, "--output", out]
    ) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "distance_wavelengths,crosscov_abs_empirical,crosscov_abs_theory"
    assert len(rows) == 9


def test_packet_variation_command(tmp_path):
    out = tmp_path / "pkt.csv"
    assert run(
        [
            "fading", "packet-variation", "--packet-us", 50, "--threshold-db", -7,
            "--trials", 1000, "--seed", 2, "--output", out,
        ]
    ) == 0
    header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0]
    assert header == "ratio_db,ccdf_all,ccdf_good_start"


def test_predict_distribution_roundtrip(tmp_path):
    trace_path = tmp_path / "trace.csv"
    ChannelTrace(
        times=[-3e-3, -2e-3, -1e-3, 0.0],
        coefficients=[0.3 + 0.4j, 0.35 + 0.38j, 0.42 + 0.31j, 0.5 + 0.2j],
    ).to_csv(trace_path)
    out = tmp_path / "pred.json"
    assert run(
        [
            "predict", "distribution", "--trace", trace_path, "--at", 5e-4,
            "--threshold", 0.2, "--seed", 0, "--output", out,
        ]
    ) == 0
    record = json.loads(out.read_text())
    assert set(record) >= {"mu_i", "mu_q", "sigma_sq", "nu", "exceedance_probability"}
    assert 0.0 <= record["exceedance_probability"] <= 1.0


def test_predict_misprediction_command(tmp_path):
    out = tmp_path / "mis.csv"
    assert run(
        [
            "predict", "misprediction", "--snr-db", 10, "--trials", 3000,
            "--horizons", "0.01,0.25", "--seed", 4, "--output", out,
        ]
    ) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "horizon_wavelengths,misprediction,ci_low,ci_high"
    assert len(rows) == 3


def test_protocol_outage_and_min_snr(tmp_path):
    out = tmp_path / "outage.json"
    assert run(
        [
            "protocol", "outage", "--scheme", "occupy", "--nodes", 10, "--snr-db", 12,
            "--poff", 0.01, "--k1", 2, "--k2", 2, "--seed", 0, "--output", out,
        ]
    ) == 0
    record = json.loads(out.read_text())
    assert 0.0 <= record["p_fail"] <= 1.0
    assert record["cycle_time_is_default"] is True
    assert record["spectral_efficiency"] == pytest.approx(0.32)

    ms = tmp_path / "ms.json"
    assert run(
        [
            "protocol", "min-snr", "--scheme", "occupy", "--nodes", 13, "--poff", 0.1,
            "--target", 1e-9, "--k-max", 2, "--seed", 0, "--output", ms,
        ]
    ) == 0
    record = json.loads(ms.read_text())
    assert record["feasible"] is False


def test_protocol_tolerable_plink(tmp_path):
    out = tmp_path / "tol.csv"
    assert run(
        [
            "protocol", "tolerable-plink", "--target", 1e-9, "--n-min", 12, "--n-max", 15,
            "--poff", 0.1, "--seed", 0, "--output", out,
        ]
    ) == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == ["n", "p_link_max", "p_w_allowed", "snr_db_needed"]
    by_n = {int(r[0]): r for r in rows[1:]}
    assert float(by_n[13][1]) < 0.1 < float(by_n[14][1])
    assert by_n[13][3] == ""  # no SNR can absorb the offset below 14 nodes


def test_protocol_sweep_with_validation_and_threads(tmp_path):
    scenario = {
        "base": {"scheme": "occupy", "snr_db": 6.0, "p_off": 0.01},
        "axes": {"n": [3, 4], "dynamics": ["quasi-static", "phase-refresh"]},
        "trials": 3000,
        "seed": 11,
    }
    spath = tmp_path / "scenario.json"
    spath.write_text(json.dumps(scenario))
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert run(["protocol", "sweep", spath, "--validate-mc", "--seed", 0, "--output", out1]) == 0
    assert run(
        ["protocol", "sweep", spath, "--validate-mc", "--threads", 3, "--seed", 0, "--output", out2]
    ) == 0
    assert read(out1) == read(out2)
    rows = [l.split(",") for l in out1.read_text().splitlines() if not l.startswith("#")]
    header = rows[0]
    assert header[-2:] == ["p_analytic", "within_ci"]
    analytic_idx = header.index("p_analytic")
    dyn_idx = header.index("dynamics")
    for row in rows[1:]:
        if row[dyn_idx] == "phase-refresh":
            assert row[analytic_idx] == ""
        else:
            assert row[analytic_idx] != ""


def test_malformed_scenario_exits_3(tmp_path, capsys):
    spath = tmp_path / "bad.json"
    spath.write_text(json.dumps({"axes": {"bogus": [1]}}))
    code = run(["protocol", "sweep", spath, "--seed", 0, "--output", tmp_path / "x.csv"])
    assert code == 3
    assert "bogus" in capsys.readouterr().err
