import json

import pytest

from sepenv.cli import RunConfig, main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "out")])


@pytest.fixture
def config_path(tmp_path):
    cfg = RunConfig(
        function="abs(t1)*abs(x1)",
        backend={"kind": "interval", "tol": 1e-6, "max_subdiv": 4000},
        shells=5,
        samples=5000,
        mult_samples=1000,
        grid=21,
    )
    path = tmp_path / "config.json"
    cfg.save(path)
    return path


class TestConfig:
    def test_file_round_trip_lossless(self, tmp_path):
        cfg = RunConfig(seed=11, margin=0.125, backend={"kind": "interval", "tol": 3e-7, "max_subdiv": 77})
        path = tmp_path / "c.json"
        cfg.save(path)
        assert RunConfig.load(path) == cfg

    def test_unknown_fields_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"bogus": 1}')
        with pytest.raises(ValueError, match="unknown config fields"):
            RunConfig.load(path)


class TestBuild:
    def test_writes_descriptor_and_summary(self, tmp_path, config_path, capsys):
        code = run(tmp_path, "build", "--config", str(config_path))
        assert code == 0
        desc = json.loads((tmp_path / "out" / "envelope.json").read_text())
        values = [row["A"] for row in desc["table"]]
        assert len(values) == 5
        for i, v in enumerate(values, start=1):
            assert abs(v - i * i) <= 1e-3
        assert "A_1" in capsys.readouterr().out

    def test_zero_function_all_zero_table(self, tmp_path, config_path):
        code = main([
            "build", "--config", str(config_path),
            "--function", "0", "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        desc = json.loads((tmp_path / "out" / "envelope.json").read_text())
        assert all(row["A"] == 0.0 for row in desc["table"])

    def test_malformed_source_exits_2(self, tmp_path, config_path, capsys):
        code = main([
            "build", "--config", str(config_path),
            "--function", "t1 +* x1", "--out", str(tmp_path / "out"),
        ])
        assert code == 2
        assert "offset" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path, config_path):
        code = main([
            "build", "--config", str(config_path),
            "--shells", "3", "--profile", "poly:1", "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        desc = json.loads((tmp_path / "out" / "envelope.json").read_text())
        assert len(desc["table"]) == 3
        assert desc["profile"] == {"kind": "poly", "order": 1}

    def test_rerun_byte_identical(self, tmp_path, config_path):
        run(tmp_path, "build", "--config", str(config_path))
        first = (tmp_path / "out" / "envelope.json").read_bytes()
        run(tmp_path, "build", "--config", str(config_path))
        assert (tmp_path / "out" / "envelope.json").read_bytes() == first


class TestSample:
    def test_missing_descriptor_exits_2(self, tmp_path, config_path):
        assert run(tmp_path, "sample", "--config", str(config_path)) == 2

    def test_f_axis_csv(self, tmp_path, config_path):
        run(tmp_path, "build", "--config", str(config_path))
        assert run(tmp_path, "sample", "--config", str(config_path)) == 0
        lines = (tmp_path / "out" / "F.csv").read_text().splitlines()
        assert lines[0] == "u,F"
        assert len(lines) == 22

    def test_constant_function_flat_column(self, tmp_path, config_path):
        out = str(tmp_path / "out")
        main(["build", "--config", str(config_path), "--function", "2.5", "--out", out])
        main(["sample", "--config", str(config_path), "--axis", "F", "--out", out])
        lines = (tmp_path / "out" / "F.csv").read_text().splitlines()[1:]
        assert all(line.split(",")[1] == "2.5" for line in lines)

    def test_slice_csv_shape_and_nonnegative_slack(self, tmp_path, config_path):
        run(tmp_path, "build", "--config", str(config_path))
        assert main([
            "sample", "--config", str(config_path), "--axis", "slice",
            "--out", str(tmp_path / "out"),
        ]) == 0
        lines = (tmp_path / "out" / "slice.csv").read_text().splitlines()
        assert lines[0] == "t,x,f,F_plus_G,slack"
        assert len(lines) == 1 + 21 * 21
        slacks = [float(line.split(",")[4]) for line in lines[1:]]
        assert min(slacks) >= 0.0

    def test_csv_round_trip_full_precision(self, tmp_path, config_path):
        run(tmp_path, "build", "--config", str(config_path))
        run(tmp_path, "sample", "--config", str(config_path))
        lines = (tmp_path / "out" / "F.csv").read_text().splitlines()[1:]
        for line in lines:
            u, F = line.split(",")
            assert repr(float(u)) == u and repr(float(F)) == F


class TestVerify:
    def test_all_green_exit_0(self, tmp_path, config_path, capsys):
        code = run(tmp_path, "verify", "--config", str(config_path))
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 2
        report = json.loads((tmp_path / "out" / "report_domination.json").read_text())
        assert report["report"]["violations"] == 0
        assert "elapsed_s" in report["meta"]

    def test_multiplicative_included_when_configured(self, tmp_path):
        cfg = RunConfig(
            function="1/(1+t1^2+x1^2)",
            backend={"kind": "interval", "tol": 1e-6, "max_subdiv": 4000},
            multiplicative=True,
            samples=2000,
            mult_samples=500,
            max_shell=4,
        )
        path = tmp_path / "c.json"
        cfg.save(path)
        code = run(tmp_path, "verify", "--config", str(path))
        assert code == 0
        assert (tmp_path / "out" / "report_multiplicative.json").exists()

    def test_report_payload_reproducible(self, tmp_path, config_path):
        run(tmp_path, "verify", "--config", str(config_path))
        first = json.loads((tmp_path / "out" / "report_domination.json").read_text())
        run(tmp_path, "verify", "--config", str(config_path))
        second = json.loads((tmp_path / "out" / "report_domination.json").read_text())
        assert first["report"] == second["report"]


class TestDemo:
    def test_l1_default(self, tmp_path, config_path, capsys):
        code = run(tmp_path, "demo", "l1", "--config", str(config_path))
        assert code == 0
        report = json.loads((tmp_path / "out" / "l1_report.json").read_text())
        assert abs(report["integral"] - 1.0) <= 1e-3
        w = report["witness"]
        assert w is not None
        assert abs(w["excess"] - 0.3989422804014327) <= 1e-12
        assert set(w) == {"x", "y", "f", "g+h", "excess"}

    def test_evalmap_packaged_candidate(self, tmp_path, config_path):
        code = run(tmp_path, "demo", "evalmap", "--config", str(config_path))
        assert code == 0
        report = json.loads((tmp_path / "out" / "evalmap_report.json").read_text())
        assert report["witness"]["stage"] in (1, 2)

    def test_demo_reports_reproducible(self, tmp_path, config_path):
        run(tmp_path, "demo", "l1", "--config", str(config_path))
        first = (tmp_path / "out" / "l1_report.json").read_bytes()
        run(tmp_path, "demo", "l1", "--config", str(config_path))
        assert (tmp_path / "out" / "l1_report.json").read_bytes() == first


class TestStrictMode:
    def test_budget_exhausted_strict_exit_3(self, tmp_path):
        cfg = RunConfig(
            function="sin(t1*7)+cos(x1*13)+2",
            backend={"kind": "interval", "tol": 1e-12, "max_subdiv": 5},
            strict=True,
            shells=3,
        )
        path = tmp_path / "c.json"
        cfg.save(path)
        code = run(tmp_path, "build", "--config", str(path))
        assert code == 3

    def test_shell_ceiling_hit_during_verify_exit_3(self, tmp_path):
        cfg = RunConfig(
            function="t1*x1",
            backend={"kind": "interval", "tol": 1e-4, "max_subdiv": 2000},
            strict=True,
            shells=3,      # verification samples out to shell 10
            samples=500,
        )
        path = tmp_path / "c.json"
        cfg.save(path)
        assert run(tmp_path, "verify", "--config", str(path)) == 3
