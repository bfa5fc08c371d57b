"""Exit criteria for the package, each at its pinned tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py``; the verdicts are listed
under "acceptance criteria" at the end of the pytest output.
"""
import json
import time

import numpy as np
import pytest

from acceptance_log import record
from desk import CONFIGS, desk_hierarchy, desk_run_config
from gradcheck import max_relative_error
from lloyd_oracle import lloyd
from tandem.cli import main
from tandem.clustering import ForgyParams, assign, forgy_converge, within_cluster_ss
from tandem.evaluation import permutation_accuracy, prepare_corpus
from tandem.errors import TrainingFailure
from tandem.mnn import MnnConfig, init_mnn, train_mirror
from tandem.numerics import make_rng, sigmoid

pytestmark = pytest.mark.acceptance


def test_gradient_oracle():
    start = time.perf_counter()
    rng = make_rng(20240601)
    worst = 0.0
    shapes = set()
    for i in range(20):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n))
        if i % 2 and m + 1 <= n:
            dims = (n, int(rng.integers(m + 1, n + 1)), m, n)
        else:
            dims = (n, m, n)
        if i == 19:
            dims = (6, 4, 3, 6)
        shapes.add(dims)
        cfg = MnnConfig(dims, 0.5, 0.1, weight_init_lo=-1.0, weight_init_hi=1.0,
                        output_activation="linear" if i % 5 == 4 else "sigmoid")
        net = init_mnn(cfg, rng)
        worst = max(worst, max_relative_error(net, rng.uniform(0, 1, n), epsilon=1e-5))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 10
    record("gradient oracle", ok, f"20 nets, max rel err {worst:.2e} (<= 1e-4), {elapsed:.2f}s (< 10s)")
    assert ok


def test_lloyd_oracle_equivalence():
    start = time.perf_counter()
    g = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        n, d = int(g.integers(2, 9)), int(g.integers(1, 4))
        pts = g.uniform(-5, 5, size=(n, d))
        i, j = g.choice(n, 2, replace=False)
        seeds = pts[[i, j]]
        got = forgy_converge(pts, seeds, ForgyParams(2)).assignments.tolist()
        mismatches += got != lloyd(pts.tolist(), seeds.tolist())
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5
    record("Lloyd oracle equivalence", ok, f"200 datasets, {mismatches} mismatches, {elapsed:.2f}s (< 5s)")
    assert ok


@pytest.fixture(scope="module")
def desk_split():
    cfg = desk_run_config()
    return prepare_corpus(cfg.synthetic, cfg.seed, cfg.train_fraction)


def test_mirror_criterion(desk_split):
    train, test = desk_split
    assert (len(train), len(test)) == (360, 150)
    cfg = desk_hierarchy().levels[0].mnn_config
    assert cfg.layer_dims == (20, 12, 8, 20)
    start = time.perf_counter()
    fractions = []
    for seed in range(10):
        rng = make_rng(seed)
        try:
            _, report = train_mirror(init_mnn(cfg, rng), train.samples, cfg, rng)
        except TrainingFailure as exc:
            report = exc.report
        fractions.append(report.mirrored_fraction)
    elapsed = time.perf_counter() - start
    reached = sum(f >= 0.95 for f in fractions)
    ok = reached >= 9 and elapsed < 300
    record("mirror criterion", ok,
           f"{reached}/10 trials mirrored >= 95% (min {min(fractions):.3f}), {elapsed:.1f}s (< 300s)")
    assert ok


@pytest.fixture(scope="module")
def eval_runs(tmp_path_factory):
    """Two complete 10-trial eval-trials runs of the desk-scale configuration."""
    root = tmp_path_factory.mktemp("accept")
    times = []
    for name in ("run1", "run2"):
        start = time.perf_counter()
        code = main(["eval-trials", "--config", str(CONFIGS / "desk_scale.json"),
                     "--trials", "10", "--seed", "0", "--out", str(root / name)])
        times.append(time.perf_counter() - start)
        assert code == 0
    return root, times


def test_table_one_analogue(eval_runs):
    root, times = eval_runs
    agg = json.loads((root / "run1" / "aggregate.json").read_text())
    l1, l2 = agg["means"]["level1_accuracy_all"], agg["means"]["level2_accuracy_all"]
    ok = (agg["n_trials"] == 10 and l1 >= 0.90 and l2 >= 0.80 and times[0] < 900)
    record("desk-scale two-level accuracy", ok,
           f"{agg['n_successful']}/10 trials ok, level-1 {l1:.3f} (>= 0.90), "
           f"level-2 {l2:.3f} (>= 0.80), train-only {agg['means']['level1_accuracy_train']:.3f}/"
           f"{agg['means']['level2_accuracy_train']:.3f}, {times[0]:.0f}s (< 900s)")
    assert ok


def test_determinism(eval_runs, desk_split, tmp_path):
    from tandem.dataset import write_csv

    root, _ = eval_runs
    same_eval = all(
        (root / "run1" / f).read_bytes() == (root / "run2" / f).read_bytes()
        for f in ("aggregate.json", "trials.csv", "summary.txt")
    )
    train, _ = desk_split
    write_csv(train, tmp_path / "train.csv")
    for name in ("a", "b"):
        assert main(["train", "--config", str(CONFIGS / "desk_scale.json"), "--data",
                     str(tmp_path / "train.csv"), "--out", str(tmp_path / name)]) == 0
    same_model = (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()
    ok = same_eval and same_model
    record("determinism", ok, f"train byte-identical: {same_model}; eval-trials aggregates identical: {same_eval}")
    assert ok


def test_invariant_suites():
    g = np.random.default_rng(99)
    cases = 1000
    failures = {}

    bad = 0
    for _ in range(cases):
        k = int(g.integers(2, 5))
        n = int(g.integers(1, 40))
        pred, truth = g.integers(0, k, n), g.integers(0, k, n)
        perm = g.permutation(k)
        acc = permutation_accuracy(pred, truth, k)
        bad += acc != permutation_accuracy(perm[pred], truth, k) or acc < np.mean(pred == truth)
    failures["accuracy permutation invariance"] = bad

    bad = 0
    for _ in range(cases):
        X = g.normal(size=(int(g.integers(1, 30)), 3))
        C = g.normal(size=(int(g.integers(1, 5)), 3))
        labels = assign(X, C)
        bad += not np.array_equal(assign(X, C), labels)
        snapped = C[labels]
        bad += not np.array_equal(C[assign(snapped, C)], snapped)
    failures["assign idempotence"] = bad

    bad = 0
    for _ in range(cases):
        n = int(g.integers(3, 30))
        X = g.normal(size=(n, int(g.integers(1, 4))))
        k = int(g.integers(2, min(n, 4) + 1))
        seeds = X[g.choice(n, k, replace=False)]
        c = forgy_converge(X, seeds, ForgyParams(k))
        start = within_cluster_ss(X, seeds, assign(X, seeds))
        bad += c.converged and within_cluster_ss(X, c.centroids, c.assignments) > start + 1e-9 * (1 + start)
    failures["Lloyd descent of within-cluster SS"] = bad

    x = g.uniform(-700, 700, cases)
    failures["sigmoid symmetry"] = int(np.sum(np.abs(sigmoid(-x) - (1 - sigmoid(x))) > 1e-12))

    bad = 0
    for seed in g.integers(0, 2**63, cases, dtype=np.uint64):
        a = make_rng(int(seed)).uniform(size=10_000)
        bad += not np.array_equal(a, make_rng(int(seed)).uniform(size=10_000))
    failures["Rng reproducibility"] = bad

    ok = not any(failures.values())
    record("invariant suites", ok,
           ", ".join(f"{name} {cases - v}/{cases}" for name, v in failures.items()))
    assert ok


def test_image_scale_smoke(tmp_path, capsys):
    start = time.perf_counter()
    cfg = json.loads((CONFIGS / "image_scale.json").read_text())
    spec = dict(cfg["synthetic"], seed=0)
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main(["generate", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "c.csv")]) == 0
    n_rows = len((tmp_path / "c.csv").read_text().splitlines())
    code_train = main(["train", "--config", str(CONFIGS / "image_scale.json"), "--data",
                       str(tmp_path / "c.csv"), "--out", str(tmp_path / "model")])
    reports = json.loads((tmp_path / "model" / "mirror_reports.json").read_text())
    capsys.readouterr()
    code_classify = main(["classify", "--model", str(tmp_path / "model"), "--data", str(tmp_path / "c.csv")])
    lines = capsys.readouterr().out.splitlines()
    elapsed = time.perf_counter() - start
    ok = (n_rows == 60 and code_train == 0 and code_classify == 0 and len(lines) == 60
          and elapsed < 600)
    record("image-scale smoke test", ok,
           f"676-60-47-676 / 47-37-30-47 on {n_rows} samples: train exit {code_train}, "
           f"classify exit {code_classify} ({len(lines)} paths), nodes trained {len(reports['nodes'])}, "
           f"{elapsed:.1f}s (< 600s)")
    assert ok
