import hashlib
import json
import math

import numpy as np
import pytest

from qpot.cli import main as cli_main
from qpot.errors import ConfigError, QpotError
from qpot.fields import Grid, RealField, read_field_csv
from qpot.scenarios import (
    StripeExtremum,
    TimeStripes,
    apply_overrides,
    detect_stripes,
    export_plots_data,
    load_config,
    parse_config,
    preset_path,
    run_scenario,
)

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib


def preset_data(name, **overrides):
    data = tomllib.loads(preset_path(name).read_text())
    return apply_overrides(data, [f"{k}={v}" for k, v in overrides.items()])


class TestConfig:
    def test_presets_parse(self):
        for name in ("barrier", "crossing", "double_slit", "phase_pair", "box"):
            cfg = parse_config(preset_data(name))
            assert cfg.name == name

    def test_unknown_key_rejected(self):
        data = preset_data("box")
        data["grib"] = {"min": 0}
        with pytest.raises(ConfigError, match="grib"):
            parse_config(data)

    def test_unknown_nested_key_rejected(self):
        data = preset_data("crossing")
        data["evolution"]["stpes"] = 3
        with pytest.raises(ConfigError, match="stpes"):
            parse_config(data)

    def test_unknown_scenario_name_rejected(self):
        data = preset_data("box")
        data["name"] = "vortex"
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_phase_pair_requires_phase_difference(self):
        data = preset_data("phase_pair")
        del data["scenario"]["phase_difference"]
        with pytest.raises(ConfigError, match="phase_difference"):
            parse_config(data)

    def test_phase_difference_applied_to_second_packet(self):
        cfg = parse_config(preset_data("phase_pair"))
        assert cfg.packets[1].phase == pytest.approx(math.pi / 2)

    def test_packet_outside_grid_rejected(self):
        data = preset_data("crossing")
        data["packets"][0]["center"] = -99.0
        with pytest.raises(ConfigError, match="outside grid"):
            parse_config(data)

    def test_negative_dt_rejected(self):
        data = preset_data("crossing")
        data["evolution"]["dt"] = -1.0
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_overrides_parse_toml_values(self):
        data = preset_data("box")
        apply_overrides(data, ["evolution.steps=7", "analysis.detect_stripes=false"])
        assert data["evolution"]["steps"] == 7
        assert data["analysis"]["detect_stripes"] is False

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_path("nonexistent")

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(preset_path("box").read_text())
        cfg = load_config(path)
        assert cfg.name == "box"


class TestDetectStripes:
    def test_five_humps(self):
        grid = Grid.line(0, 1, 4096)
        x = grid.coords(0)
        p = RealField(grid, np.sin(5 * math.pi * x) ** 2)
        report = detect_stripes(p, prominence=0.1)
        acc = [e for e in report.extrema if e.kind == "accumulation"]
        assert len(acc) == 5
        assert np.allclose([e.position for e in acc], [(2 * j + 1) / 10 for j in range(5)], atol=1e-3)
        dep = [e for e in report.extrema if e.kind == "depletion"]
        assert len(dep) == 4
        assert report.mean_spacing == pytest.approx(0.2, rel=1e-3)

    def test_monotone_profile_empty(self):
        grid = Grid.line(0, 1, 256)
        p = RealField(grid, np.linspace(0, 1, 256))
        report = detect_stripes(p, prominence=0.05)
        assert report.extrema == []
        assert report.stripe_count == 0

    def test_flat_profile_empty(self):
        grid = Grid.line(0, 1, 256)
        report = detect_stripes(RealField(grid, np.zeros(256)), prominence=0.05)
        assert report.stripe_count == 0

    def test_prominence_bounds(self):
        grid = Grid.line(0, 1, 256)
        p = RealField(grid, np.ones(256))
        with pytest.raises(QpotError):
            detect_stripes(p, prominence=0.0)
        with pytest.raises(QpotError):
            detect_stripes(p, prominence=1.5)

    def test_alternation_enforced(self):
        with pytest.raises(QpotError):
            TimeStripes(
                0.0,
                [StripeExtremum(0.1, 1.0, "accumulation"), StripeExtremum(0.2, 1.0, "accumulation")],
                2,
                None,
            )

    def test_positions_must_increase(self):
        with pytest.raises(QpotError):
            TimeStripes(
                0.0,
                [StripeExtremum(0.2, 1.0, "accumulation"), StripeExtremum(0.1, 0.0, "depletion")],
                1,
                None,
            )

    def test_window_restricts_search(self):
        grid = Grid.line(0, 1, 2048)
        x = grid.coords(0)
        p = RealField(grid, np.sin(5 * math.pi * x) ** 2)
        report = detect_stripes(p, prominence=0.1, window=(0.0, 0.5))
        acc = [e for e in report.extrema if e.kind == "accumulation"]
        assert all(e.position <= 0.5 for e in acc)
        assert len(acc) == 2


@pytest.fixture(scope="module")
def box_result(tmp_path_factory):
    cfg = parse_config(preset_data("box"))
    out = tmp_path_factory.mktemp("box_result")
    return run_scenario(cfg, out / "run")


class TestRunScenario:
    def test_box_audit_values(self, box_result):
        audit = box_result.audit["box"]
        assert audit["U_closed_form"] == pytest.approx(4.934802200544679, rel=1e-12)
        assert audit["U_numeric_max_rel_err"] <= 1e-3
        assert audit["eigen_residual_analytic"] <= 1e-12
        assert audit["eigen_residual_fd"] <= 1e-3

    def test_manifest_complete_and_hashes_match(self, box_result):
        out = box_result.out_dir
        manifest = json.loads((out / "manifest.json").read_text())
        listed = {row["path"] for row in manifest["files"]}
        on_disk = {
            str(p.relative_to(out))
            for p in out.rglob("*")
            if p.is_file() and p.name != "manifest.json"
        }
        assert listed == on_disk
        for row in manifest["files"]:
            digest = hashlib.sha256((out / row["path"]).read_bytes()).hexdigest()
            assert digest == row["sha256"]

    def test_exported_fields_read_back(self, box_result):
        out = box_result.out_dir
        index = json.loads((out / "fields" / "index.json").read_text())
        path = out / index["stacks"]["P"][0]
        fld, t = read_field_csv(path)
        assert t == 0.0
        assert fld.label == "P"
        assert fld.values.max() == pytest.approx(2.0, rel=1e-3)  # N^2 sin^2 peak

    def test_static_trajectories(self, box_result):
        ens = box_result.ensemble
        assert np.max(np.abs(ens.positions - ens.positions[0][None, :])) <= 1e-9

    def test_determinism(self, tmp_path):
        cfg = parse_config(preset_data("box"))
        r1 = run_scenario(cfg, tmp_path / "a")
        r2 = run_scenario(cfg, tmp_path / "b")
        for row in r1.manifest["files"]:
            a = (tmp_path / "a" / row["path"]).read_bytes()
            b = (tmp_path / "b" / row["path"]).read_bytes()
            assert a == b, row["path"]
        assert r1.manifest == r2.manifest

    def test_partial_outputs_removed_on_failure(self, tmp_path, monkeypatch):
        cfg = parse_config(preset_data("box"))
        import qpot.scenarios as sc

        def boom(*a, **k):
            raise RuntimeError("forced failure")

        monkeypatch.setattr(sc, "_audit_stage", boom)
        out = tmp_path / "broken"
        from qpot.errors import ScenarioError

        with pytest.raises(ScenarioError, match="audits"):
            run_scenario(cfg, out)
        assert not out.exists()

    def test_keep_partial(self, tmp_path, monkeypatch):
        cfg = parse_config(preset_data("box"))
        import qpot.scenarios as sc

        monkeypatch.setattr(sc, "_audit_stage", lambda *a, **k: (_ for _ in ()).throw(RuntimeError("x")))
        out = tmp_path / "kept"
        from qpot.errors import ScenarioError

        with pytest.raises(ScenarioError):
            run_scenario(cfg, out, keep_partial=True)
        assert (out / "fields").exists()


class TestCrossingScenario:
    @pytest.fixture(scope="class")
    def result(self, tmp_path_factory):
        cfg = parse_config(preset_data("crossing", **{"trajectories.count": 60, "evolution.output_stride": 150}))
        return run_scenario(cfg, tmp_path_factory.mktemp("crossing") / "run")

    def test_stripe_spacing_near_fringe_oracle(self, result):
        stripes = result.audit["stripes"]
        expected = math.pi / 1.5
        assert stripes["stripe_count"] >= 5
        assert abs(stripes["mean_spacing"] - expected) <= 0.1 * expected

    def test_no_axis_crossings(self, result):
        assert result.audit["trajectories"]["left_axis_crossings"] == 0
        assert result.audit["trajectories"]["ordering_violations"] == 0


class TestPhasePairScenario:
    def test_node_shift(self, tmp_path):
        cfg = parse_config(preset_data("phase_pair", **{"trajectories.count": 10}))
        result = run_scenario(cfg, tmp_path / "pp")
        audit = result.audit["phase_pair"]
        expected = audit["node_shift_expected"]
        assert expected == pytest.approx(math.pi / (4 * 1.5))
        assert audit["node_shift_measured"] == pytest.approx(expected, rel=0.1)


class TestExportPlotsData:
    def test_flattened_tables(self, box_result):
        out = export_plots_data(box_result.out_dir)
        text = (out / "P_long.csv").read_text().splitlines()
        assert text[0] == "time,x,value"
        assert len(text) > 2048

    def test_missing_manifest_rejected(self, tmp_path):
        with pytest.raises(QpotError):
            export_plots_data(tmp_path)


class TestCli:
    def test_verify_all_passes(self, capsys):
        assert cli_main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_verify_single_and_json(self, tmp_path, capsys):
        path = tmp_path / "report.json"
        assert cli_main(["verify", "box-eigen", "--json", str(path)]) == 0
        report = json.loads(path.read_text())
        assert report["passed"] is True
        assert report["checks"][0]["name"] == "box-eigen"

    def test_verify_unknown_name_usage_error(self):
        assert cli_main(["verify", "no-such-check"]) == 2

    def test_sign_audit_report_cites_caveat(self, tmp_path):
        path = tmp_path / "sign.json"
        assert cli_main(["verify", "sign-2.18", "--json", str(path)]) == 0
        report = json.loads(path.read_text())
        assert "sign error in Equ. (3.2.29)" in json.dumps(report)
        ratio = report["checks"][0]["details"]["gaussian"]["median_ratio"]
        assert ratio == pytest.approx(-1.0, abs=1e-10)

    def test_scenario_and_export_commands(self, tmp_path, capsys):
        out = tmp_path / "boxrun"
        code = cli_main(["scenario", "box", "--out", str(out), "--set", "trajectories.count=4"])
        assert code == 0
        assert (out / "manifest.json").exists()
        assert cli_main(["export-plots-data", str(out)]) == 0
        assert (out / "plots_data" / "P_long.csv").exists()

    def test_scenario_unknown_preset_usage_error(self):
        assert cli_main(["scenario", "warpdrive"]) == 2

    def test_simulate_config_file(self, tmp_path):
        cfg_path = tmp_path / "box.toml"
        cfg_path.write_text(preset_path("box").read_text())
        out = tmp_path / "sim_out"
        assert cli_main(["simulate", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "audit.json").exists()

    def test_simulate_bad_config_usage_error(self, tmp_path):
        cfg_path = tmp_path / "bad.toml"
        cfg_path.write_text("name = 'box'\n[scenario]\nbox_length = 1.0\n")  # missing mode_index
        assert cli_main(["simulate", str(cfg_path)]) == 2
