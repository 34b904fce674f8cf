"""Four-panel figures for run reports (SVG, byte-reproducible)."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["four_panel", "four_panel_svg"]

_MAX_TRACES = 12


def _pick(records, limit=_MAX_TRACES):
    if len(records) <= limit:
        return records
    idx = np.linspace(0, len(records) - 1, limit).round().astype(int)
    return [records[i] for i in sorted(set(idx))]


def four_panel(report):
    """s with s_bar, D with its mean, x, and nodal |residual| on a log axis."""
    eq = report.summary.get("equilibrium", {})
    records = _pick([r for r in report.solves if r.converged] or report.solves)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharex=True)
    (ax_s, ax_d), (ax_x, ax_r) = axes
    colors = plt.cm.viridis(np.linspace(0.0, 0.9, max(len(records), 1)))
    labelled = len(records) > 1 and report.scenario.get("study", {}).get("kind") == "sweep"
    for rec, c in zip(records, colors):
        t = np.asarray(rec.series["t"])
        label = rec.label if labelled else None
        ax_s.plot(t, rec.series["s"], color=c, lw=1.2, label=label)
        ax_x.plot(t, rec.series["x"], color=c, lw=1.2)
        n = len(rec.s_nodes)
        tn = np.arange(n) * (t[1] - t[0]) * len(t) / n
        res = np.maximum(np.asarray(rec.residual_abs), 1e-18)
        ax_r.semilogy(tn, res, ".", color=c, ms=3)
    first = report.solves[0]
    t = np.asarray(first.series["t"])
    ax_d.plot(t, first.series["D"], color="k", lw=1.2, drawstyle="steps-post")
    if eq.get("exists"):
        ax_s.axhline(eq["s_bar"], color="tab:red", ls="--", lw=0.9, label=r"$\bar s$")
    if "mean_dilution" in eq:
        ax_d.axhline(eq["mean_dilution"], color="tab:red", ls="--", lw=0.9, label=r"$\bar D$")
        ax_d.legend(loc="best", fontsize=8)
    ax_s.legend(loc="best", fontsize=7, ncol=2)
    ax_s.set_ylabel("substrate s(t)")
    ax_d.set_ylabel("dilution D(t)")
    ax_x.set_ylabel("biomass x(t)")
    ax_r.set_ylabel("|residual| at nodes")
    for ax in (ax_x, ax_r):
        ax.set_xlabel("t")
    for ax in axes.flat:
        ax.grid(alpha=0.3)
    fig.suptitle(report.name)
    fig.tight_layout()
    return fig


def four_panel_svg(report) -> bytes:
    fig = four_panel(report)
    buf = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "slidemem", "svg.fonttype": "path"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
