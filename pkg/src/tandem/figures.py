"""Report figures written next to the CSV/JSON outputs.

Uses the object-oriented ``Figure`` API so nothing touches pyplot's global
state or needs a display.
"""
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

# fixed metadata keeps PNG bytes stable between identical runs
_PNG_META = {"Software": None}


def _new(width=6.4, height=4.0):
    fig = Figure(figsize=(width, height), dpi=100)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)


def plot_trial_accuracies(report, path):
    """Grouped bars: level-1 and level-2 accuracy (train+test) per successful trial."""
    ok = report.successful
    fig, ax = _new()
    if ok:
        idx = np.array([t.trial_index for t in ok])
        l1 = [t.level1_accuracy_all for t in ok]
        l2 = [t.level2_accuracy_all for t in ok]
        ax.bar(idx - 0.2, l1, width=0.4, label="level I")
        ax.bar(idx + 0.2, l2, width=0.4, label="level II")
        ax.axhline(report.means["level1_accuracy_all"], color="C0", ls="--", lw=1)
        ax.axhline(report.means["level2_accuracy_all"], color="C1", ls="--", lw=1)
        ax.set_xticks(idx)
        ax.legend(loc="lower right")
    for t in report.failed_trials:
        ax.axvline(t, color="0.6", ls=":", lw=1)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("trial")
    ax.set_ylabel("permutation accuracy (train + test)")
    _save(fig, path)


def plot_mirror_epochs(report, path):
    """Epochs needed by each node to reach its mirror criterion, per trial."""
    fig, ax = _new()
    names = sorted({p for t in report.successful for p in t.mirror_reports},
                   key=lambda p: (p != "root", p))
    for j, name in enumerate(names):
        xs, ys = [], []
        for t in report.successful:
            r = t.mirror_reports.get(name)
            if r is not None:
                xs.append(t.trial_index)
                ys.append(r.epochs_run)
        ax.plot(xs, ys, marker="o", ls="", label=name, color=f"C{j % 10}")
    ax.set_yscale("log")
    ax.set_xlabel("trial")
    ax.set_ylabel("epochs to mirror")
    if names:
        ax.legend(title="node", fontsize="small")
    _save(fig, path)


def plot_mirror_history(reports, path):
    """Mirrored fraction after each epoch, one curve per node of a trained tree."""
    fig, ax = _new()
    for j, (name, r) in enumerate(reports.items()):
        if r is None or not r.history:
            continue
        ax.plot(np.arange(1, len(r.history) + 1), r.history, label=name, color=f"C{j % 10}")
    ax.axhline(0.95, color="0.5", ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("epoch")
    ax.set_ylabel("fraction mirrored")
    if reports:
        ax.legend(title="node", fontsize="small")
    _save(fig, path)
