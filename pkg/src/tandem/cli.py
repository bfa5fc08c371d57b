"""Command-line entry point.

    tandem generate --spec spec.json --out corpus.csv
    tandem train --config run.json --data corpus.csv --out model_dir
    tandem classify --model model_dir --data samples.csv
    tandem eval-trials --config run.json --trials 10 --seed 0 --out report_dir
"""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import dataset as dsm
from .config import parse_config, synthetic_from_dict
from .errors import ConfigError, TandemError
from .evaluation import METRICS, run_trials
from .figures import plot_mirror_epochs, plot_mirror_history, plot_trial_accuracies
from .hierarchy import classify_batch, hierarchy_from_json, hierarchy_to_json, tandem_train
from .numerics import make_rng

log = logging.getLogger("tandem")

MODEL_FILE = "model.json"
CONFIG_ECHO = "config.json"


def _json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_generate(args):
    with open(args.spec) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(args.spec, "top level must be a JSON object")
    seed = doc.pop("seed", 0)
    if args.seed is not None:
        seed = args.seed
    spec, _ = synthetic_from_dict(doc, "spec")
    data = dsm.generate_synthetic(spec, make_rng(seed))
    dsm.write_csv(data, args.out)
    log.info("wrote %d samples of width %d to %s", len(data), data.width, args.out)
    return 0


def cmd_train(args):
    cfg = parse_config(args.config, {"seed": args.seed})
    width = cfg.hierarchy.levels[0].mnn_config.input_width
    data = dsm.load_vectors(args.data, width, normalize_columns=cfg.normalize)
    out = _out_dir(args.out)
    dsm.atomic_write_text(os.path.join(out, CONFIG_ECHO), cfg.echo_json())
    root = tandem_train(data.samples, cfg.hierarchy, make_rng(cfg.seed))
    bounds = None
    if data.bounds is not None:
        bounds = {"lo": data.bounds[0].tolist(), "hi": data.bounds[1].tolist()}
    dsm.atomic_write_text(os.path.join(out, MODEL_FILE),
                          hierarchy_to_json(root, {"normalization": bounds}))
    reports = {("root" if not p else "/".join(map(str, p))): n.mirror_report
               for p, n in root.walk()}
    dsm.atomic_write_text(os.path.join(out, "mirror_reports.json"), _json({
        "nodes": {k: r.to_dict() for k, r in reports.items()},
        "failed_nodes": {"/".join(map(str, p)): why for p, why in root.failed_paths().items()},
    }))
    plot_mirror_history(reports, os.path.join(out, "mirror_history.png"))
    for p, why in root.failed_paths().items():
        log.warning("subtree %s not built: %s", "/".join(map(str, p)), why)
    log.info("trained %d nodes; model in %s", sum(1 for _ in root.walk()), out)
    return 0


def cmd_classify(args):
    with open(os.path.join(args.model, MODEL_FILE)) as fh:
        root, doc = hierarchy_from_json(fh.read())
    data = dsm.load_vectors(args.data, root.input_width, normalize_columns=False)
    X = data.samples
    bounds = doc.get("normalization")
    if bounds is not None:
        X = dsm.apply_bounds(X, (np.array(bounds["lo"]), np.array(bounds["hi"])))
    for path in classify_batch(root, X):
        print(",".join(str(p) for p in path))
    return 0


def _fmt(v):
    return "   n/a" if v is None or math.isnan(v) else f"{100 * v:5.1f}%"


def table_summary(cfg, report, n_train, n_test):
    """Plain-text table laid out like the usual hierarchical-classifier results table."""
    levels = cfg.hierarchy.levels
    k1 = levels[0].forgy_params.k
    rows = [(
        "I", levels[0].mnn_config.input_width, levels[0].mnn_config.code_width,
        str(n_train), str(n_test), str(k1),
        report.means["level1_accuracy_train"], report.means["level1_accuracy_all"],
    )]
    if cfg.hierarchy.max_depth > 1:
        rows.append((
            "II", levels[1].mnn_config.input_width, levels[1].mnn_config.code_width,
            f"~{n_train // k1}/node", f"~{n_test // k1}/node", str(levels[1].forgy_params.k),
            report.means["level2_accuracy_train"], report.means["level2_accuracy_all"],
        ))
    head = ("level", "input dim", "reduced dim", "train", "test", "categories",
            "success (train)", "success (train+test)")
    lines = [
        f"Success rates averaged over {len(report.successful)} of {len(report.trials)} trials",
        "  ".join(f"{h:>{max(len(h), 10)}}" for h in head),
    ]
    for r in rows:
        cells = list(r[:6]) + [_fmt(r[6]), _fmt(r[7])]
        lines.append("  ".join(f"{str(c):>{max(len(h), 10)}}" for c, h in zip(cells, head)))
    for m in METRICS:
        lines.append(f"  {m:<24} mean {_fmt(report.means[m])}  sd {_fmt(report.stds[m])}")
    if report.failed_trials:
        lines.append(f"failed trials (excluded): {report.failed_trials}")
        for t in report.trials:
            if t.failed:
                lines.append(f"  trial {t.trial_index}: {t.error}")
    return "\n".join(lines) + "\n"


def trials_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial_index", "failed", *METRICS, "nodes_failed"])
    for t in report.trials:
        w.writerow([t.trial_index, int(t.failed), *(repr(float(getattr(t, m))) for m in METRICS),
                    len(t.failed_nodes)])
    return buf.getvalue()


def cmd_eval_trials(args):
    cfg = parse_config(args.config, {"seed": args.seed, "trials": args.trials})
    if cfg.data is not None:
        width = cfg.hierarchy.levels[0].mnn_config.input_width
        corpus = dsm.load_vectors(cfg.data, width, normalize_columns=cfg.normalize)
    elif cfg.synthetic is not None:
        corpus = cfg.synthetic
    else:
        raise ConfigError("data", "eval-trials needs 'data' or 'synthetic' in the config")
    out = _out_dir(args.out)
    dsm.atomic_write_text(os.path.join(out, CONFIG_ECHO), cfg.echo_json())

    def progress(t):
        status = "FAILED " + t.error if t.failed else (
            f"L1 {t.level1_accuracy_all:.3f}  L2 {t.level2_accuracy_all:.3f}")
        log.info("trial %d: %s (%.1fs)", t.trial_index, status, t.wall_time)

    report = run_trials(cfg.trials, corpus, cfg.hierarchy, cfg.seed, cfg.train_fraction, progress)
    n_total = len(corpus) if isinstance(corpus, dsm.Dataset) else corpus.n_samples
    n_train = sum(int(round(cfg.train_fraction * s)) for s in _strata_sizes(corpus))
    summary = table_summary(cfg, report, n_train, n_total - n_train)
    dsm.atomic_write_text(os.path.join(out, "aggregate.json"), _json(report.to_dict()))
    dsm.atomic_write_text(os.path.join(out, "trials.csv"), trials_csv(report))
    dsm.atomic_write_text(os.path.join(out, "summary.txt"), summary)
    dsm.atomic_write_text(os.path.join(out, "timings.json"), _json(
        {str(t.trial_index): t.wall_time for t in report.trials}))
    plot_trial_accuracies(report, os.path.join(out, "accuracy.png"))
    plot_mirror_epochs(report, os.path.join(out, "mirror_epochs.png"))
    sys.stdout.write(summary)
    return 0 if report.successful else 1


def _strata_sizes(corpus):
    if isinstance(corpus, dsm.SyntheticSpec):
        return [corpus.samples_per_subclass] * (corpus.classes * corpus.subclasses_per_class)
    _, counts = np.unique(corpus.labels, axis=0, return_counts=True)
    return counts.tolist()


def build_parser():
    p = argparse.ArgumentParser(prog="tandem", description=__doc__.strip().splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic labeled corpus as CSV")
    g.add_argument("--spec", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a hierarchy on a CSV corpus")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="print the class path of every CSV row")
    c.add_argument("--model", required=True)
    c.add_argument("--data", required=True)
    c.set_defaults(func=cmd_classify)

    e = sub.add_parser("eval-trials", help="repeated ab-initio trials with accuracy reports")
    e.add_argument("--config", required=True)
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval_trials)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TandemError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
