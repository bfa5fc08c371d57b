import csv
import json

import pytest

from desk import CONFIGS
from tandem.cli import main
from tandem.dataset import load_vectors


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    spec = json.loads((CONFIGS / "synthetic_spec.json").read_text())
    spec["samples_per_subclass"] = 40
    (d / "spec.json").write_text(json.dumps(spec))
    cfg = json.loads((CONFIGS / "desk_scale.json").read_text())
    cfg["synthetic"]["samples_per_subclass"] = 40
    (d / "run.json").write_text(json.dumps(cfg))
    assert main(["generate", "--spec", str(d / "spec.json"), "--out", str(d / "corpus.csv")]) == 0
    return d


def test_generate(workdir):
    ds = load_vectors(workdir / "corpus.csv", 20, normalize_columns=False)
    assert len(ds) == 240 and ds.labels is not None


def test_generate_seed_flag(workdir, tmp_path):
    main(["generate", "--spec", str(workdir / "spec.json"), "--out", str(tmp_path / "a.csv"), "--seed", "1"])
    assert (tmp_path / "a.csv").read_bytes() != (workdir / "corpus.csv").read_bytes()


def test_train_deterministic_and_classify(workdir, capsys):
    for name in ("m1", "m2"):
        assert main(["train", "--config", str(workdir / "run.json"), "--data",
                     str(workdir / "corpus.csv"), "--out", str(workdir / name)]) == 0
    model = (workdir / "m1" / "model.json").read_bytes()
    assert model == (workdir / "m2" / "model.json").read_bytes()
    for f in ("config.json", "mirror_reports.json", "mirror_history.png"):
        assert (workdir / "m1" / f).exists()
    echo = json.loads((workdir / "m1" / "config.json").read_text())
    assert echo["hierarchy"]["levels"][0]["max_epochs"] == 5000

    capsys.readouterr()
    assert main(["classify", "--model", str(workdir / "m1"), "--data", str(workdir / "corpus.csv")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 240
    paths = [tuple(map(int, l.split(","))) for l in lines]
    assert all(len(p) in (1, 2) for p in paths)
    assert {p[0] for p in paths} == {0, 1, 2}


def test_train_seed_override_changes_model(workdir):
    main(["train", "--config", str(workdir / "run.json"), "--data", str(workdir / "corpus.csv"),
          "--out", str(workdir / "m3"), "--seed", "5"])
    assert json.loads((workdir / "m3" / "config.json").read_text())["seed"] == 5
    assert (workdir / "m3" / "model.json").read_bytes() != (workdir / "m1" / "model.json").read_bytes()


def test_classify_width_mismatch(workdir, tmp_path, capsys):
    if not (workdir / "m1").exists():
        main(["train", "--config", str(workdir / "run.json"), "--data",
              str(workdir / "corpus.csv"), "--out", str(workdir / "m1")])
    bad = tmp_path / "bad.csv"
    bad.write_text("0.1,0.2,0.3\n")
    capsys.readouterr()
    assert main(["classify", "--model", str(workdir / "m1"), "--data", str(bad)]) != 0
    assert "expected 20 values" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"hierarchy": {"levels": []}}))
    assert main(["train", "--config", str(p), "--data", "x", "--out", str(tmp_path)]) == 2
    assert "hierarchy.levels" in capsys.readouterr().err


def test_eval_trials_outputs(workdir, capsys):
    out = workdir / "report"
    assert main(["eval-trials", "--config", str(workdir / "run.json"), "--trials", "2",
                 "--seed", "1", "--out", str(out)]) == 0
    summary = capsys.readouterr().out
    assert "level" in summary and "success (train+test)" in summary
    for f in ("aggregate.json", "trials.csv", "summary.txt", "timings.json", "config.json",
              "accuracy.png", "mirror_epochs.png"):
        assert (out / f).exists(), f
    rows = list(csv.DictReader((out / "trials.csv").open()))
    assert [r["trial_index"] for r in rows] == ["0", "1"]
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["n_trials"] == 2
    assert 0 <= agg["means"]["level1_accuracy_all"] <= 1

    # rerun from the echoed configuration: identical aggregate and rows
    again = workdir / "report2"
    assert main(["eval-trials", "--config", str(out / "config.json"), "--out", str(again)]) == 0
    for f in ("aggregate.json", "trials.csv", "summary.txt", "config.json"):
        assert (out / f).read_bytes() == (again / f).read_bytes(), f


def test_eval_trials_from_csv(workdir, tmp_path):
    cfg = json.loads((workdir / "run.json").read_text())
    cfg.pop("synthetic")
    cfg["data"] = str(workdir / "corpus.csv")
    cfg["train_fraction"] = 0.75
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["eval-trials", "--config", str(tmp_path / "c.json"), "--trials", "1",
                 "--out", str(tmp_path / "r")]) == 0
    rows = list(csv.DictReader((tmp_path / "r" / "trials.csv").open()))
    assert len(rows) == 1 and rows[0]["failed"] == "0"


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "tandem", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "eval-trials" in r.stdout
