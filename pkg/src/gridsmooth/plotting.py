"""Figures for experiment reports, rendered off-screen to PNG."""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 100
_RAW_COLOR = "0.6"


def _save(fig, path):
    # no Software/date metadata, so reruns give identical bytes
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def convergence_figure(report):
    """Left: MSE, Bias^2 and variance with raw counterparts. Right: MSE x Bias^2."""
    cells = report.cells
    n = np.array([c["n"] for c in cells], dtype=float)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    for key, style in (("mse", "o-"), ("bias2", "s-"), ("var", "^-")):
        left.loglog(n, [c[key] for c in cells], style, label=key)
        left.loglog(n, [c["raw_" + key] for c in cells], style, color=_RAW_COLOR,
                    alpha=0.7, label=f"raw {key}")
    left.set_xlabel("n")
    left.set_title("smoothed vs raw")
    left.legend(fontsize=7)

    _, log_v, fit = zip(*report.plotdata["msebias"][1])
    right.loglog(n, np.exp(log_v), "o", label="MSE x Bias$^2$")
    slope = report.diagnostics["slope_msebias"]
    right.loglog(n, np.exp(fit), "-", label=f"fit, slope {slope:.3f}")
    ref = report.diagnostics["reference_slope"]
    anchor = np.exp(fit[0])
    right.loglog(n, anchor * (n / n[0]) ** ref, "--", color="k", label=f"reference {ref:.3f}")
    right.set_xlabel("n")
    right.legend(fontsize=7)
    fig.tight_layout()
    return fig


def table_figure(report):
    """Grouped bars of MSE by method and noise family, one panel per grid size."""
    ds = sorted({c["d"] for c in report.cells})
    methods = list(dict.fromkeys(c["method"] for c in report.cells))
    noises = list(dict.fromkeys(c["noise"] for c in report.cells))
    fig, axes = plt.subplots(1, len(ds), figsize=(4.5 * len(ds), 3.8), squeeze=False)
    width = 0.8 / len(noises)
    x = np.arange(len(methods))
    for ax, d in zip(axes[0], ds):
        for j, noise in enumerate(noises):
            vals = [report.cell(method=m, noise=noise, d=d)["mse"] for m in methods]
            ax.bar(x + (j - (len(noises) - 1) / 2) * width, vals, width, label=noise)
        ax.set_xticks(x)
        ax.set_xticklabels(methods, rotation=30, fontsize=8)
        ax.set_title(f"d = {d}")
        ax.set_ylabel("MSE")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    return fig


def energy_figure(report):
    r = [c["r"] for c in report.cells]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(np.array(r) - 0.2, [c["exact"] for c in report.cells], 0.4, label="d - 2L")
    ax.bar(np.array(r) + 0.2, [c["mc"] for c in report.cells], 0.4, label="Monte Carlo")
    ax.set_xlabel("order r")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_FIGURES = {
    "convergence": convergence_figure,
    "table1": table_figure,
    "table2": table_figure,
    "energy": energy_figure,
}


def render_report(report, out_dir):
    """Write ``figure_<name>.png`` for reports that have a figure; return paths."""
    build = _FIGURES.get(report.name)
    if build is None:
        return []
    return [_save(build(report), Path(out_dir) / f"figure_{report.name}.png")]
