"""Figures for benchmark output.  Rendering only; all numbers come from bench."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _hist_axes(ax, hist, label, **kw):
    sizes = sorted(hist.counts)
    ax.semilogy(sizes, [hist.counts[k] for k in sizes], marker=".", lw=1, label=label, **kw)


def size_histograms(result, path):
    hists = result.histograms()
    ap_names = [k for k in hists if k.startswith("ap(")]
    model_names = [k for k in ("icm1", "icmn", "dpap") if k in hists]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(9, 2.8), sharey=True)
        _hist_axes(axes[0], hists["truth"], "truth", color="k")
        axes[0].set_title("true labels")
        for name in ap_names:
            _hist_axes(axes[1], hists[name], name)
        axes[1].set_title("AP(d)")
        for name in model_names:
            _hist_axes(axes[2], hists[name], name)
        axes[2].set_title("ICM / DPAP")
        for ax in axes:
            ax.set_xlabel("cluster size")
            if ax.get_legend_handles_labels()[0]:
                ax.legend(frameon=False)
        axes[0].set_ylabel("frequency")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def loglik_by_true_clusters(result, path):
    truth_k = {o.index: o.true_clusters for o in result.outcomes}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        for name in ("dpap", "icm1", "icmn"):
            recs = result.by_algorithm(name)
            if not recs:
                continue
            ks = np.array([truth_k[r.dataset] for r in recs])
            deltas = np.array([r.delta_loglik for r in recs])
            grid = np.unique(ks)
            ax.plot(grid, [deltas[ks == k].mean() for k in grid], marker="o", ms=3, label=name)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("clusters in true labels")
        ax.set_ylabel("mean delta log likelihood")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def rand_scatter(result, path):
    pts = np.array([(a, b) for _, a, b in result.scatter()]).reshape(-1, 2)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.2, 3.2))
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8)
        ax.scatter(pts[:, 1], pts[:, 0], s=8)
        lo = min(0.5, float(pts.min())) if len(pts) else 0.5
        ax.set_xlim(lo, 1.01)
        ax.set_ylim(lo, 1.01)
        ax.set_xlabel("Rand index, ICM-1")
        ax.set_ylabel("Rand index, DPAP")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def render_all(result, out_dir):
    from pathlib import Path

    out = Path(out_dir)
    paths = [size_histograms(result, out / "size_histograms.png")]
    if any(r.algorithm in ("dpap", "icm1", "icmn") for r in result.records):
        paths.append(loglik_by_true_clusters(result, out / "delta_loglik.png"))
    if result.scatter():
        paths.append(rand_scatter(result, out / "rand_scatter.png"))
    return paths
