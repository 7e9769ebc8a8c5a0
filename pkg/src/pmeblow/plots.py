"""Figure rendering for experiment reports.

All figures are written straight to files with the Agg backend; nothing is
ever shown interactively.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_trace_figures(trace, outdir):
    """Write the sup-norm and functional history figures; returns paths."""
    paths = {}
    t = trace.column("t")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(t, np.maximum(trace.column("sup_u"), 1e-300), "-", lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("sup u")
    ax.set_title("sup-norm history")
    ax.grid(True, alpha=0.3)
    path = outdir / "sup_norm.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths["sup_norm"] = path

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("phi", "psi", "w_measure", "grad_energy"):
        y = trace.column(name)
        if np.all(~np.isfinite(y)):
            continue
        ax.plot(t, y, lw=1.2, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_yscale("symlog")
    ax.set_title("diagnostic functionals")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    path = outdir / "functionals.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths["functionals"] = path
    return paths


def render_convergence(resolutions, errors, outdir):
    """Log-log error-vs-resolution figure with the fitted order."""
    res = np.asarray(resolutions, dtype=float)
    err = np.asarray(errors, dtype=float)
    slope = -np.polyfit(np.log(res), np.log(err), 1)[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(res, err, "o-", label=f"observed (order {slope:.2f})")
    ax.loglog(res, err[0] * (res[0] / res), "--", color="gray", label="first order")
    ax.set_xlabel("nodes per axis")
    ax.set_ylabel("relative sup error")
    ax.set_title("self-similar reference convergence")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    path = outdir / "convergence.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
