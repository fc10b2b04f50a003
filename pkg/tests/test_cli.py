import json
import shutil
import subprocess

import jsonschema
import numpy as np
import pytest

from nodecount.cli import main
from nodecount.dataset import load_csv
from nodecount.experiment import ExperimentConfig, load_report_schema


def small_config(tmp_path, **extra):
    cfg = {
        "data": {"generator": {"repetitions": 1}},
        "subsets": ["ETA_ONLY", "ETA_POWER_DISTANCE"],
        "classifiers": "standard",
        "folds": 5,
        "seed": 7,
    }
    cfg.update(extra)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


class TestGenerate:
    def test_defaults(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["generate", "--out", str(out)]) == 0
        assert len(load_csv(out)) == 5400

    def test_repetitions(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["generate", "--out", str(out), "--repetitions", "1"]) == 0
        assert len(load_csv(out)) == 540

    def test_negative_sigma(self, tmp_path):
        assert main(["generate", "--out", str(tmp_path / "d.csv"), "--sigma", "-0.5"]) == 2

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "g.toml"
        cfg.write_text("repetitions = 2\nseed = 4\n")
        out = tmp_path / "d.csv"
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(load_csv(out)) == 1080


class TestDelta:
    def test_bundled_reference(self, capsys):
        assert main(["delta"]) == 0
        first = capsys.readouterr().out.splitlines()[0]
        assert first.startswith("delta = {")
        values = [float(v) for v in first.split("{")[1].rstrip("}").split(",")]
        np.testing.assert_allclose(values, [10.3, 10.5, 13.4, 9.2], atol=0.2)

    def test_json(self, capsys):
        assert main(["delta", "--json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["delta"]) == 4 and len(out["delta_sd_derived"]) == 4

    def test_explicit_files(self, tmp_path, capsys):
        (tmp_path / "e.csv").write_text("a,b,c,d\n" + "2,2,2,2\n" * 4)
        (tmp_path / "p.csv").write_text("a,b,c,d\n" + "0.25,0.25,0.25,0.25\n" * 4)
        assert main(["delta", "--errors", str(tmp_path / "e.csv"), "--dist", str(tmp_path / "p.csv")]) == 0
        assert capsys.readouterr().out.splitlines()[0] == "delta = {2.0, 2.0, 2.0, 2.0}"

    def test_strict_rejects_rounded_table(self):
        assert main(["delta", "--strict"]) == 3

    def test_missing_file(self, tmp_path):
        assert main(["delta", "--errors", str(tmp_path / "none.csv")]) == 3


class TestEvaluate:
    def test_report_schema_and_files(self, tmp_path):
        out = tmp_path / "run"
        assert main(["evaluate", "--config", str(small_config(tmp_path)), "--out", str(out), "--svg"]) == 0
        report = json.loads((out / "report.json").read_text())
        jsonschema.validate(report, load_report_schema())
        assert len(report["cells"]) == 8
        for cell in report["cells"]:
            assert (out / cell["roc"]).is_file()
            assert len(cell["folds"]) == 5
            assert sum(map(sum, cell["confusion"])) == 540
            np.testing.assert_allclose(np.sum(cell["pred_distribution"], axis=1), 1.0)
        assert list(out.glob("roc_*.svg"))

    def test_subsampled_cells(self, tmp_path):
        out = tmp_path / "run"
        cfg = small_config(tmp_path, subsets=["ETA_ONLY"], classifiers="unbalanced",
                           data={"generator": {}}, subsamples=["10-20-50-100", "full"])
        assert main(["evaluate", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        jsonschema.validate(report, load_report_schema())
        counts = {c["subsample"]: c["class_counts"] for c in report["cells"]}
        assert counts["10-20-50-100"] == {"1": 135, "2": 270, "3": 675, "4": 1350}
        assert counts["full"] == {"1": 1350, "2": 1350, "3": 1350, "4": 1350}

    def test_deterministic_and_job_independent(self, tmp_path):
        cfg = small_config(tmp_path)
        for name, jobs in (("a", "1"), ("b", "1"), ("c", "3")):
            assert main(["evaluate", "--config", str(cfg), "--out", str(tmp_path / name), "--jobs", jobs]) == 0
        a = (tmp_path / "a" / "report.json").read_bytes()
        assert a == (tmp_path / "b" / "report.json").read_bytes()
        assert a == (tmp_path / "c" / "report.json").read_bytes()

    def test_csv_input(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["generate", "--out", str(data), "--repetitions", "1", "--seed", "3"])
        out = tmp_path / "run"
        assert main(["evaluate", "--data", str(data), "--out", str(out), "--subsets", "ETA_ONLY"]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config_echo"]["data"] == {"csv": str(data.resolve())}

    def test_bad_data_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("eta_s,tx_power_dbm,distance_m,channel,time_of_day,n_nodes\n-1,10,5,6,night,2\n")
        assert main(["evaluate", "--data", str(bad), "--out", str(tmp_path / "o")]) == 3

    @pytest.mark.parametrize("raw", [{"classifiers": "bogus"}, {"folds": 1}, {"subsets": []},
                                     {"colour": 1}, {"classifiers": [{"kind": "svm", "cost": -1}]}])
    def test_bad_config_exit_2(self, tmp_path, raw):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(raw))
        assert main(["evaluate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_argparse_error_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["evaluate", "--jobs", "0"])
        assert exc.value.code == 2

    def test_config_relative_csv(self, tmp_path):
        main(["generate", "--out", str(tmp_path / "d.csv"), "--repetitions", "1"])
        cfg = ExperimentConfig.from_file(small_config(tmp_path, data={"csv": "d.csv"}))
        assert cfg.csv == tmp_path / "d.csv"


def test_calibrate(tmp_path, capsys):
    assert main(["calibrate", "--out", str(tmp_path / "cal.json")]) == 0
    report = json.loads((tmp_path / "cal.json").read_text())
    assert report["overlap"]["3-4"] > report["overlap"]["1-2"]


@pytest.mark.skipif(shutil.which("nodecount") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["nodecount", "delta"], capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("delta = {")
    proc = subprocess.run(["nodecount", "generate", "--sigma", "-1", "--out", str(tmp_path / "x.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
