"""Scoring unsupervised trees against held-out labels and the repeated-trial protocol."""
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import dataset as dsm
from .errors import ContractError, EvaluationError, TandemError, UnsupportedSizeError
from .hierarchy import classify_batch, tandem_train
from .numerics import stream_rng

log = logging.getLogger(__name__)

MAX_EXACT_K = 8
METRICS = (
    "level1_accuracy_train",
    "level1_accuracy_test",
    "level1_accuracy_all",
    "level2_accuracy_train",
    "level2_accuracy_test",
    "level2_accuracy_all",
)


def _contingency(predicted, truth, k):
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ContractError("predicted and truth must be equal-length label vectors")
    if k > MAX_EXACT_K:
        raise UnsupportedSizeError(f"exact matching supports k <= {MAX_EXACT_K}, got {k}")
    if predicted.size and (min(predicted.min(), truth.min()) < 0
                           or max(predicted.max(), truth.max()) >= k):
        raise ContractError(f"labels must lie in [0, {k})")
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (predicted, truth), 1)
    return C


def best_matching(predicted, truth, k):
    """``(mapping, matches)``: the label map ``predicted -> truth`` with most agreements."""
    C = _contingency(predicted, truth, k)
    rows = np.arange(k)
    best, best_hits = tuple(range(k)), -1
    for perm in itertools.permutations(range(k)):
        hits = int(C[rows, perm].sum())
        if hits > best_hits:
            best, best_hits = perm, hits
    return np.array(best, dtype=np.int64), best_hits


def permutation_accuracy(predicted, truth, k):
    """Accuracy maximized over relabelings of ``predicted``."""
    n = len(predicted)
    if n == 0:
        raise ContractError("cannot score an empty labeling")
    return best_matching(predicted, truth, k)[1] / n


@dataclass
class LevelScores:
    level1: float
    level2: float
    # fraction of samples right at both levels
    leaf: float
    level1_mapping: list
    # root label -> (samples routed, samples correct at leaf, accuracy)
    nodes: dict = field(default_factory=dict)


def evaluate_hierarchy(root, dataset):
    """Level-1 and level-2 accuracy of ``root`` on a labeled dataset.

    A level-2 node is scored on every sample routed to it: samples whose true
    class is not the node's matched class count as errors, so level-1
    mistakes propagate. A node with no trained child scores zero on the
    samples routed to it.
    """
    if dataset.labels is None:
        raise EvaluationError("dataset carries no labels")
    n = len(dataset)
    if n == 0:
        raise EvaluationError("dataset is empty")
    paths = classify_batch(root, dataset.samples)
    top = np.array([p[0] for p in paths])
    cls, sub = dataset.labels[:, 0], dataset.labels[:, 1]
    k1 = max(root.clustering.k, int(cls.max()) + 1)
    mapping, hits = best_matching(top, cls, k1)
    level1 = hits / n

    nodes = {}
    leaf_hits = 0
    for label in range(root.clustering.k):
        routed = np.flatnonzero(top == label)
        if routed.size == 0:
            continue
        correct = routed[cls[routed] == mapping[label]]
        child = root.children.get(label)
        matched = 0
        if child is not None and correct.size:
            k2 = max(child.clustering.k, int(sub.max()) + 1)
            sub_pred = np.array([paths[i][1] for i in correct])
            matched = best_matching(sub_pred, sub[correct], k2)[1]
        nodes[label] = (int(routed.size), int(matched), matched / routed.size)
        leaf_hits += matched
    level2 = float(np.mean([v[2] for v in nodes.values()])) if nodes else 0.0
    return LevelScores(level1, level2, leaf_hits / n, mapping.tolist(), nodes)


@dataclass
class TrialReport:
    trial_index: int
    level1_accuracy_train: float = float("nan")
    level1_accuracy_test: float = float("nan")
    level1_accuracy_all: float = float("nan")
    level2_accuracy_train: float = float("nan")
    level2_accuracy_test: float = float("nan")
    level2_accuracy_all: float = float("nan")
    # node path ("root", "0", "1", ...) -> MirrorReport
    mirror_reports: dict = field(default_factory=dict)
    failed_nodes: dict = field(default_factory=dict)
    wall_time: float = 0.0
    error: str = None

    @property
    def failed(self):
        return self.error is not None

    def row(self):
        return {m: getattr(self, m) for m in METRICS}

    def to_dict(self, with_timing=False):
        d = {
            "trial_index": self.trial_index,
            "failed": self.failed,
            "error": self.error,
            **self.row(),
            "mirror_reports": {p: r.to_dict(with_history=False)
                               for p, r in self.mirror_reports.items()},
            "failed_nodes": dict(self.failed_nodes),
        }
        if with_timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class AggregateReport:
    trials: list
    means: dict
    stds: dict
    failed_trials: list

    @property
    def successful(self):
        return [t for t in self.trials if not t.failed]

    def to_dict(self):
        return {
            "n_trials": len(self.trials),
            "n_successful": len(self.successful),
            "failed_trials": list(self.failed_trials),
            "means": self.means,
            "stds": self.stds,
            "trials": [t.to_dict() for t in self.trials],
        }


def aggregate(trials):
    ok = [t for t in trials if not t.failed]
    means, stds = {}, {}
    for m in METRICS:
        vals = np.array([getattr(t, m) for t in ok], dtype=np.float64)
        means[m] = float(vals.mean()) if vals.size else float("nan")
        stds[m] = float(vals.std()) if vals.size else float("nan")
    return AggregateReport(list(trials), means, stds, [t.trial_index for t in trials if t.failed])


def _path_name(path):
    return "root" if not path else "/".join(str(p) for p in path)


def run_trial(index, train, test, hierarchy_config, base_seed):
    """Train one tree from scratch on ``train`` and score it on train, test and both."""
    report = TrialReport(index)
    start = time.perf_counter()
    try:
        root = tandem_train(train.samples, hierarchy_config, stream_rng(base_seed, index))
        union = dsm.Dataset(np.vstack([train.samples, test.samples]),
                            np.vstack([train.labels, test.labels]))
        for part, data in (("train", train), ("test", test), ("all", union)):
            scores = evaluate_hierarchy(root, data)
            setattr(report, f"level1_accuracy_{part}", scores.level1)
            setattr(report, f"level2_accuracy_{part}", scores.level2)
        report.mirror_reports = {_path_name(p): n.mirror_report for p, n in root.walk()}
        report.failed_nodes = {_path_name(p): r for p, r in root.failed_paths().items()}
    except TandemError as exc:
        log.warning("trial %d failed: %s", index, exc)
        report.error = f"{type(exc).__name__}: {exc}"
    report.wall_time = time.perf_counter() - start
    return report


def prepare_corpus(corpus, base_seed, train_fraction):
    """Return ``(train, test)`` from a SyntheticSpec or an already loaded Dataset.

    Data and split draw from a stream of ``base_seed`` reserved for the
    corpus, so every trial sees the same samples.
    """
    rng = stream_rng(base_seed, 2**32)
    if isinstance(corpus, dsm.SyntheticSpec):
        corpus = dsm.generate_synthetic(corpus, rng)
    if not isinstance(corpus, dsm.Dataset):
        raise ContractError("corpus must be a SyntheticSpec or a Dataset")
    if corpus.labels is None:
        raise EvaluationError("trials need a labeled corpus")
    return dsm.split(corpus, train_fraction, rng)


def run_trials(n, corpus, hierarchy_config, base_seed, train_fraction=360 / 510, progress=None):
    """Run ``n`` independent ab-initio trials and aggregate their scores.

    Trial ``t`` draws all weights and seeds from stream ``(base_seed, t)``.
    Failed trials stay in the report but are left out of means.
    """
    if n < 1:
        raise ContractError("need at least one trial")
    train, test = prepare_corpus(corpus, base_seed, train_fraction)
    trials = []
    for t in range(n):
        trials.append(run_trial(t, train, test, hierarchy_config, base_seed))
        if progress:
            progress(trials[-1])
    return aggregate(trials)
