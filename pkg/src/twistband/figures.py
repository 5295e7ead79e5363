"""Figure rendering for the CLI report path.

Every report task can drop a PNG next to its delimited output.  Rendering
uses the Agg backend and fixed styling, so figures are as reproducible as
the CSVs on a given matplotlib install.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_modes(lambdas, flags, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    idx = np.arange(1, len(lambdas) + 1)
    colors = ["tab:red" if f else "tab:blue" for f in flags]
    ax.bar(idx, lambdas, color=colors)
    ax.set_xlabel("mode index n")
    ax.set_ylabel(r"$\lambda_n$")
    ax.set_title("cross-section Neumann eigenvalues (red = degenerate)")
    return _save(fig, path)


def render_potential(potential, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(potential.grid, potential.values, lw=1.2)
    ax.set_xlabel("s")
    ax.set_ylabel(f"${potential.kind}(s)$")
    ax.set_title(f"effective potential ({potential.kind}), C1={potential.c1:.4g}, C2={potential.c2:.4g}")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_spectrum(values, path):
    fig, ax = plt.subplots(figsize=(4.0, 3.2))
    ax.hlines(values, 0.0, 1.0, lw=1.5)
    ax.set_xticks([])
    ax.set_ylabel(r"$\mu_j$")
    ax.set_title("interval operator spectrum")
    return _save(fig, path)


def render_bands(bs, gap_report, path):
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for j in range(bs.jmax):
        ax.plot(bs.thetas, bs.k[j], lw=1.2)
    if gap_report is not None:
        for g in gap_report.open_gaps():
            ax.axhspan(g.lower, g.upper, color="0.85", zorder=0)
    ax.set_xlim(bs.thetas[0], bs.thetas[-1])
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$k_j(\theta)$")
    ax.set_title("band structure (shaded = open gaps)")
    pi_l = math.pi / bs.L
    ax.set_xticks([-pi_l, 0.0, pi_l], [r"$-\pi/L$", "0", r"$\pi/L$"])
    return _save(fig, path)


def render_gap_asymptotics(ga, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.loglog(ga.betas, np.maximum(ga.deltas, 1e-300), "o", label=rf"$\delta_{{{ga.j}}}(\beta)$")
    line = np.array([ga.betas.min(), ga.betas.max()])
    ax.loglog(line, ga.fitted_slope * line, "-", label=f"fit slope {ga.fitted_slope:.4g}")
    ax.loglog(line, ga.predicted_slope * line, "--", label=f"predicted {ga.predicted_slope:.4g}")
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel("gap width")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def render_convergence(report, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    for j in range(report.values.shape[1]):
        ax.loglog(report.eps, np.maximum(report.errors[:, j], 1e-300), "o-", label=f"j={j + 1}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("|shifted eigenvalue - oracle|")
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    ax.set_title("thin-limit convergence")
    return _save(fig, path)


def render_persistence(rows, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    eps = [r.eps for r in rows]
    ax.plot(eps, [r.margin for r in rows], "o-", label="margin")
    ax.plot(eps, [r.half_gap for r in rows], "--", label="half gap")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.invert_xaxis()
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("band separation margin")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)
