"""Static figures rendered from experiment tables.

Each figure is drawn from the rows that also go to ``results.csv``; the
CSV is the contract and the plot is a view of it.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402

from .analytic import retention_probability  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "d2dcov",
    "svg.fonttype": "path",
}
K_SWEEP = (0.6, 0.7, 0.8, 0.9, 1.0)


def _by_lambda(rows):
    groups = defaultdict(list)
    for row in rows:
        groups[row["lambda_per_m2"]].append(row)
    return dict(sorted(groups.items()))


def _coverage_vs_gamma(ax, rows):
    groups = _by_lambda(rows)
    for i, group in enumerate(groups.values()):
        group.sort(key=lambda r: r["gamma_db"])
        g = [r["gamma_db"] for r in group]
        c = f"C{i}"
        ax.plot(g, [r["coverage_analytic"] for r in group], "-", color=c)
        ax.plot(g, [r["coverage_mc"] for r in group], "o", color=c, mfc="none")
        ax.plot(g, [r["coverage_lb_analytic"] for r in group], "--", color=c)
        ax.plot(g, [r["coverage_lb_mc"] for r in group], "x", color=c)
    # colour encodes lambda, style encodes the series
    handles = [Line2D([], [], color=f"C{i}", label=f"λ={lam:g}") for i, lam in enumerate(groups)]
    handles += [
        Line2D([], [], color="k", ls="-", label="thinned, analytic"),
        Line2D([], [], color="k", ls="none", marker="o", mfc="none", label="thinned, simulation"),
        Line2D([], [], color="k", ls="--", label="lower bound, analytic"),
        Line2D([], [], color="k", ls="none", marker="x", label="lower bound, simulation"),
    ]
    ax.set_xlabel("SIR threshold γ (dB)")
    ax.set_ylabel("coverage probability")
    return handles


def _coverage_vs_lambda(ax, rows):
    rows = sorted(rows, key=lambda r: r["lambda_per_m2"])
    lam = [r["lambda_per_m2"] for r in rows]
    ax.plot(lam, [r["coverage_analytic"] for r in rows], "-", color="C0", label="thinned, analytic")
    ax.plot(lam, [r["coverage_mc"] for r in rows], "o", color="C0", mfc="none", label="thinned, simulation")
    ax.plot(lam, [r["coverage_lb_analytic"] for r in rows], "--", color="C1", label="lower bound, analytic")
    ax.plot(lam, [r["coverage_lb_mc"] for r in rows], "x", color="C1", label="lower bound, simulation")
    ax.set_xlabel("D2D density λ (1/m²)")
    ax.set_ylabel("coverage probability")


def _retention(ax, rows, k, k_sweep):
    groups = _by_lambda(rows)
    mu_fine = np.linspace(0.0, max(r["mu_m"] for r in rows), 200)
    for i, (lam, group) in enumerate(groups.items()):
        group.sort(key=lambda r: r["mu_m"])
        c = f"C{i}"
        ax.errorbar(
            [r["mu_m"] for r in group], [r["retention_empirical"] for r in group],
            yerr=[r["ci95"] for r in group], fmt="o", color=c, mfc="none", capsize=2,
            label=f"simulation, λ={lam:g}",
        )
        ks = k_sweep if len(groups) == 1 else (k,)
        for j, kk in enumerate(ks):
            style = "-" if kk == k else ":"
            label = f"analytic, k={kk:g}" if len(groups) == 1 or i == 0 else None
            ax.plot(mu_fine, [retention_probability(kk, lam, m) for m in mu_fine], style,
                    color=c if len(ks) == 1 else f"C{j + 1}", label=label)
    ax.set_xlabel("target distance μ (m)")
    ax.set_ylabel("retention probability")


def render(result, path: Path) -> Path:
    """Draw ``result`` (an :class:`ExperimentResult`) to ``path``."""
    spec = result.spec
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.4))
        handles = None
        if spec.kind == "coverage_vs_gamma":
            handles = _coverage_vs_gamma(ax, result.rows)
        elif spec.kind == "coverage_vs_lambda":
            _coverage_vs_lambda(ax, result.rows)
        elif spec.kind == "calibration":
            _retention(ax, result.rows, spec.config.model.k, ())
        else:
            _retention(ax, result.rows, spec.config.model.k, K_SWEEP if spec.figure == "2" else ())
        ax.set_ylim(0, 1.02 if spec.kind.startswith("coverage") else None)
        if handles is not None:
            ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.02, 1.0), borderaxespad=0)
            fig.set_size_inches(6.4, 3.4)
        else:
            ax.legend(loc="best", ncol=1 if len(ax.get_lines()) <= 6 else 2)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
    return Path(path)
