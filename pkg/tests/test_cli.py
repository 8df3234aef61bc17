import json
import math

import pytest

from bellwire import bellcore
from bellwire.bellcore import BellFunctional, CorrelatorFunctional, Scenario, chsh
from bellwire.cli import main, paper_values
from bellwire.monogamy import tripartite_wired_chsh


@pytest.fixture
def chsh_file(tmp_path):
    path = tmp_path / "chsh.json"
    bellcore.save_functional(chsh(), path)
    return str(path)


@pytest.fixture
def tripartite_file(tmp_path):
    path = tmp_path / "tripartite.json"
    bellcore.save_functional(tripartite_wired_chsh(), path)
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestBounds:
    def test_chsh_bounds(self, capsys, chsh_file):
        code, report = run(capsys, ["bounds", chsh_file, "--restarts", "6"])
        assert code == 0
        assert report["classical_bound"] == 2.0
        assert report["no_signaling_bound"] == pytest.approx(4.0, abs=1e-9)
        assert report["seesaw_lower_bound"] >= 2.828427
        assert report["declared_bound"] == 2.0

    def test_tripartite_classical_six(self, capsys, tripartite_file):
        code, report = run(capsys, ["bounds", tripartite_file, "--restarts", "3"])
        assert code == 0
        assert report["classical_bound"] == 6.0

    def test_empty_functional_all_zero(self, capsys, tmp_path):
        path = tmp_path / "empty.json"
        bellcore.save_functional(BellFunctional(Scenario.uniform(2, 2), {}), path)
        code, report = run(capsys, ["bounds", str(path), "--restarts", "2", "--iters", "5"])
        assert code == 0
        assert report["classical_bound"] == 0.0
        assert report["no_signaling_bound"] == pytest.approx(0.0, abs=1e-9)
        assert abs(report["seesaw_lower_bound"]) < 1e-9

    def test_malformed_file_exits_two(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["bounds", str(path)]) == 2

    def test_guard_exceeded_exits_three(self, capsys, tmp_path):
        sc = Scenario.uniform(6, 4)
        f = BellFunctional(sc, {((0,) * 6, (0,) * 6): 1.0})
        path = tmp_path / "huge.json"
        bellcore.save_functional(f, path)
        assert main(["bounds", str(path)]) == 3


class TestWire:
    def test_pairwise_three(self, capsys, chsh_file, tmp_path):
        out = tmp_path / "wired.json"
        code, report = run(
            capsys, ["wire", chsh_file, "--n", "3", "--m", "2", "--out", str(out)]
        )
        assert code == 0
        assert report["bound"] == 6.0
        doc = json.loads(out.read_text())
        assert doc["bound"] == 6.0
        assert "provenance" in doc

    def test_identity_wiring(self, capsys, tripartite_file, tmp_path):
        out = tmp_path / "same.json"
        code, report = run(
            capsys, ["wire", tripartite_file, "--n", "3", "--m", "3", "--out", str(out)]
        )
        assert code == 0
        assert report["bound"] == 6.0
        wired = bellcore.load_functional(out)
        base = bellcore.correlator_to_probability_form(tripartite_wired_chsh())
        assert wired.terms == base.terms

    def test_four_party_bound(self, capsys, chsh_file):
        code, report = run(capsys, ["wire", chsh_file, "--n", "4", "--m", "2"])
        assert code == 0
        assert report["bound"] == 12.0

    def test_m_mismatch_exits_two(self, chsh_file):
        assert main(["wire", chsh_file, "--n", "3", "--m", "3"]) == 2

    def test_wire_guard_exits_three(self, chsh_file):
        assert main(["wire", chsh_file, "--n", "40", "--m", "2"]) == 3


class TestSimulate:
    def test_sampled_run_converges(self, capsys):
        code, report = run(
            capsys, ["simulate", "--preset", "paper-default", "--trials", "200000", "--seed", "1"]
        )
        assert code == 0
        target = 4 * math.sqrt(2)
        assert abs(report["estimated_bell_value"] - target) <= 4 * report["estimated_stderr"]
        assert report["p_value"] == 1.0  # 4 sqrt 2 sits below the bound of 6

    def test_experiment_exact_mode_comparison(self, capsys):
        code, report = run(capsys, ["simulate", "--preset", "experiment", "--exact"])
        assert code == 0
        row = report["correlators"]["0,2,0"]
        assert row["exact"] == pytest.approx(0.97)
        comparison = report["published_comparison"]
        assert comparison["rows"]["0,2,0"]["published"] == 0.9710
        assert comparison["published_claimed_total"] == 7.5348
        assert comparison["published_table_sum"] == pytest.approx(5.5049, abs=1e-9)
        assert comparison["claim_matches_table_sum"] is False
        assert comparison["discrepancy_note"] != ""

    def test_zero_trials_rejected(self):
        assert main(["simulate", "--trials", "0"]) == 2

    def test_unknown_preset_rejected(self):
        assert main(["simulate", "--preset", "nonsense"]) == 2

    def test_output_files_and_determinism(self, capsys, tmp_path):
        args = [
            "simulate", "--preset", "paper-default", "--trials", "5000",
            "--seed", "3", "--out", str(tmp_path / "run"),
        ]
        assert main(args) == 0
        capsys.readouterr()
        first = {
            name: (tmp_path / name).read_bytes()
            for name in ("run.counts.csv", "run.correlators.csv", "run.report.json")
        }
        assert main(args) == 0
        capsys.readouterr()
        for name, blob in first.items():
            assert (tmp_path / name).read_bytes() == blob

    def test_report_metadata(self, capsys):
        code, report = run(capsys, ["simulate", "--exact", "--seed", "5"])
        assert code == 0
        assert report["artifact_version"]
        assert len(report["config_hash"]) == 16
        assert report["seed"] == 5

    def test_custom_sign_convention_audited(self, capsys, tmp_path):
        # all-plus convention: the audit against the published table follows it
        terms = {t: 1.0 for t in tripartite_wired_chsh().terms}
        f = CorrelatorFunctional(Scenario.uniform(3, 3), terms, declared_bound=6.0)
        path = tmp_path / "allplus.json"
        bellcore.save_functional(f, path)
        code, report = run(
            capsys,
            ["simulate", "--preset", "experiment", "--exact", "--functional", str(path)],
        )
        assert code == 0
        expected = sum(
            entry["value"]
            for entry in paper_values()["published_correlators"].values()
        )
        comparison = report["published_comparison"]
        assert comparison["published_table_sum"] == pytest.approx(expected, abs=1e-9)

    def test_functional_without_setting_two_rejected(self, tmp_path):
        f = CorrelatorFunctional(Scenario.uniform(3, 3), {(0, 0, 0): 1.0})
        path = tmp_path / "bad.json"
        bellcore.save_functional(f, path)
        assert main(["simulate", "--exact", "--functional", str(path)]) == 2


class TestScan:
    def test_fixed_measurements_no_violation(self, capsys):
        code, report = run(capsys, ["scan", "--grid", "0.1:1.0:10"])
        assert code == 0
        assert report["message"] == "no violation in range"
        assert report["threshold_sin2theta"] is None
        assert report["published_threshold_quoted"] == 0.0866
        assert report["published_threshold_formula"] == pytest.approx(0.0883036880)

    def test_single_point_grid(self, capsys):
        code, report = run(capsys, ["scan", "--grid", "1.0:1.0:1"])
        assert code == 0
        assert len(report["curve"]) == 1
        assert report["curve"][0]["value"] == pytest.approx(4 * math.sqrt(2))

    def test_bad_grid_rejected(self):
        assert main(["scan", "--grid", "0.5:0.1"]) == 2
        assert main(["scan", "--grid", "0.0:1.0:5"]) == 2

    def test_curve_formats(self, capsys, tmp_path):
        code, _ = run(
            capsys, ["scan", "--grid", "0.5:1.0:3", "--out", str(tmp_path / "c")]
        )
        assert code == 0
        lines = (tmp_path / "c.curve.csv").read_text().splitlines()
        assert lines[0] == "sin2theta,value"
        assert len(lines) == 4
        code, _ = run(
            capsys,
            ["scan", "--grid", "0.5:1.0:3", "--format", "json", "--out", str(tmp_path / "j")],
        )
        assert code == 0
        curve = json.loads((tmp_path / "j.curve.json").read_text())
        assert len(curve) == 3 and curve[0]["sin2theta"] == 0.5


class TestTomo:
    def test_werner_report(self, capsys):
        code, report = run(
            capsys, ["tomo", "--state", "werner:0.987", "--shots", "200000", "--seed", "2"]
        )
        assert code == 0
        assert report["fidelity"] == pytest.approx((1 + 3 * 0.987) / 4, abs=0.005)
        assert report["visibility_hv"] == pytest.approx(0.987, abs=0.01)
        assert report["published_fidelity"]["value"] == 0.9905

    def test_phi_plus_exact(self, capsys):
        code, report = run(capsys, ["tomo", "--state", "phi+", "--exact"])
        assert code == 0
        assert report["fidelity"] == pytest.approx(1.0, abs=1e-9)
        assert report["visibility_hv"] == pytest.approx(1.0, abs=1e-9)
        assert report["visibility_da"] == pytest.approx(1.0, abs=1e-9)

    def test_curves_written(self, capsys, tmp_path):
        code, _ = run(
            capsys,
            ["tomo", "--state", "phi+", "--exact", "--out", str(tmp_path / "t")],
        )
        assert code == 0
        hv = (tmp_path / "t.visibility_hv.csv").read_text().splitlines()
        assert hv[0] == "theta2,rate"
        assert len(hv) == 38

    def test_bad_state_rejected(self):
        assert main(["tomo", "--state", "ghz"]) == 2
        assert main(["tomo", "--state", "werner:1.5"]) == 2


class TestEnvironment:
    def test_out_dir_env_var(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("BELLWIRE_OUT_DIR", str(tmp_path))
        code, _ = run(capsys, ["tomo", "--state", "phi+", "--exact", "--out", "nested/t"])
        assert code == 0
        assert (tmp_path / "nested" / "t.report.json").exists()

    def test_paper_values_ship_with_package(self):
        anchors = paper_values()
        assert anchors["claimed_bell_value"] == 7.5348
        assert len(anchors["published_correlators"]) == 12
