"""The tree of nodes and the tandem training driver.

Each node mirror-trains its network on the samples it receives, encodes them,
clusters the codes, and hands every sufficiently large cluster down to a
child node of the next level. Child failures are recorded on the parent and
leave that subtree empty; siblings carry on.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import clustering as cl
from . import mnn as mn
from .errors import ConfigError, ContractError, TandemError, TrainingFailure

log = logging.getLogger(__name__)

CHILD_INPUTS = ("reduced_code", "raw_passthrough")
FORMAT = "tandem-hierarchy/1"


@dataclass(frozen=True)
class NodeConfig:
    mnn_config: mn.MnnConfig
    forgy_params: cl.ForgyParams
    child_input: str = "reduced_code"
    min_samples_to_split: int = 20

    def __post_init__(self):
        if self.child_input not in CHILD_INPUTS:
            raise ConfigError("child_input", f"must be one of {CHILD_INPUTS}")
        if self.min_samples_to_split < self.forgy_params.k:
            raise ConfigError("min_samples_to_split", "must be >= k")


@dataclass(frozen=True)
class HierarchyConfig:
    levels: tuple
    max_depth: int = None
    # keep a network that missed the success fraction instead of failing the node
    accept_unconverged: bool = False

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ConfigError("levels", "need at least one level")
        depth = len(levels) if self.max_depth is None else int(self.max_depth)
        if not 1 <= depth <= len(levels):
            raise ConfigError("max_depth", f"must lie in [1, {len(levels)}]")
        object.__setattr__(self, "max_depth", depth)
        for i in range(depth - 1):
            here, below = levels[i], levels[i + 1]
            width = (here.mnn_config.code_width if here.child_input == "reduced_code"
                     else here.mnn_config.input_width)
            if below.mnn_config.input_width != width:
                raise ConfigError(
                    f"levels[{i + 1}].layer_dims",
                    f"input width {below.mnn_config.input_width} must equal {width} "
                    f"fed down by level {i}",
                )


@dataclass
class TrainedNode:
    mnn: mn.Mnn
    clustering: cl.Clustering
    level: int
    child_input: str = "reduced_code"
    children: dict = field(default_factory=dict)
    mirror_report: mn.MirrorReport = None
    # cluster label -> reason the child was not built
    failures: dict = field(default_factory=dict)

    @property
    def input_width(self):
        return self.mnn.config.input_width

    def walk(self, path=()):
        """Yield ``(path, node)`` depth-first with children in label order."""
        yield path, self
        for label in sorted(self.children):
            yield from self.children[label].walk(path + (label,))

    def failed_paths(self, path=()):
        out = {}
        for p, node in self.walk(path):
            for label, reason in sorted(node.failures.items()):
                out[p + (label,)] = reason
        return out

    def to_dict(self):
        return {
            "level": self.level,
            "child_input": self.child_input,
            "mnn": self.mnn.to_dict(),
            "clustering": self.clustering.to_dict(),
            "mirror_report": None if self.mirror_report is None
            else self.mirror_report.to_dict(with_history=False),
            "failures": {str(k): v for k, v in sorted(self.failures.items())},
            "children": {str(k): c.to_dict() for k, c in sorted(self.children.items())},
        }

    @classmethod
    def from_dict(cls, d):
        report = d.get("mirror_report")
        return cls(
            mnn=mn.Mnn.from_dict(d["mnn"]),
            clustering=cl.Clustering.from_dict(d["clustering"]),
            level=int(d["level"]),
            child_input=d.get("child_input", "reduced_code"),
            children={int(k): cls.from_dict(v) for k, v in d.get("children", {}).items()},
            mirror_report=None if report is None else mn.MirrorReport.from_dict(report),
            failures={int(k): v for k, v in d.get("failures", {}).items()},
        )


class NodeError(TandemError):
    """A failure inside a node, annotated with the node's path from the root."""

    def __init__(self, path, cause):
        self.path = tuple(path)
        self.cause = cause
        where = "root" if not path else "/".join(str(p) for p in path)
        super().__init__(f"node {where}: {type(cause).__name__}: {cause}")


def train_node(data, config, rng, level=0, accept_unconverged=False, path=()):
    """Mirror-train, encode and cluster one node. The returned node has no children."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < config.min_samples_to_split:
        raise ContractError(
            f"node needs at least {config.min_samples_to_split} samples, got "
            f"{X.shape[0] if X.ndim == 2 else 'non-matrix data'}"
        )
    try:
        net = mn.init_mnn(config.mnn_config, rng)
        try:
            net, report = mn.train_mirror(net, X, config.mnn_config, rng)
        except TrainingFailure as exc:
            if not accept_unconverged:
                raise
            log.warning("node %s: keeping unconverged network (%s)", path, exc)
            net, report = exc.mnn, exc.report
        codes = mn.encode_batch(net, X)
        clustering = cl.averaged_forgy(codes, config.forgy_params, rng)
    except (TandemError, ArithmeticError) as exc:
        raise NodeError(path, exc) from exc
    return TrainedNode(net, clustering, level, config.child_input, mirror_report=report)


def _child_inputs(node, X):
    if node.child_input == "raw_passthrough":
        return X
    return mn.encode_batch(node.mnn, X)


def tandem_train(data, hierarchy_config, rng):
    """Train the whole tree top-down.

    A failing root raises ``NodeError``. A failing child is left out and its
    reason stored in the parent's ``failures`` map.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError("tandem_train needs a non-empty 2-D sample matrix")
    cfg = hierarchy_config
    root = train_node(X, cfg.levels[0], rng, 0, cfg.accept_unconverged)
    _grow(root, X, cfg, rng, ())
    return root


def _grow(node, X, cfg, rng, path):
    depth = node.level + 1
    if depth >= cfg.max_depth:
        return
    child_cfg = cfg.levels[depth]
    inputs = _child_inputs(node, X)
    # one independent stream per cluster label, drawn before any child trains
    streams = rng.spawn(node.clustering.k)
    for label in range(node.clustering.k):
        members = node.clustering.members(label)
        if members.size < child_cfg.min_samples_to_split:
            node.failures[label] = (
                f"only {members.size} samples (< {child_cfg.min_samples_to_split}); not split"
            )
            continue
        child_path = path + (label,)
        try:
            child = train_node(inputs[members], child_cfg, streams[label], depth,
                               cfg.accept_unconverged, child_path)
        except NodeError as exc:
            log.warning("%s", exc)
            node.failures[label] = str(exc)
            continue
        node.children[label] = child
        _grow(child, inputs[members], cfg, streams[label], child_path)


def classify(root, x):
    """Return the list of cluster labels met on the way from the root to a leaf.

    Descent stops early where a child is missing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != root.input_width:
        raise ContractError(
            f"input width {x.shape[-1] if x.ndim else 0} does not match root input {root.input_width}"
        )
    return [tuple(p) for p in classify_batch(root, x[None, :])][0]


def classify_batch(root, data):
    """Class paths for every row of ``data``; each path is a list of labels."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != root.input_width:
        raise ContractError(f"data shape {X.shape} does not match root input {root.input_width}")
    paths = [[] for _ in range(X.shape[0])]
    _route(root, X, np.arange(X.shape[0]), paths)
    return paths


def _route(node, X, rows, paths):
    codes = mn.encode_batch(node.mnn, X)
    labels = cl.assign(codes, node.clustering.centroids)
    for r, lab in zip(rows, labels):
        paths[r].append(int(lab))
    passed = X if node.child_input == "raw_passthrough" else codes
    for label, child in node.children.items():
        m = labels == label
        if m.any():
            _route(child, passed[m], rows[m], paths)


def hierarchy_to_json(root, extra=None):
    """Canonical JSON text for a trained tree (stable key order, shortest floats)."""
    doc = {"format": FORMAT, "root": root.to_dict()}
    if extra:
        doc.update(extra)
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def hierarchy_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ContractError(f"not a {FORMAT} document")
    return TrainedNode.from_dict(doc["root"]), doc
