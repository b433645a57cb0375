"""Figure rendering for CLI reports.

Each renderer takes plain data plus an output path and writes one PNG.
Matplotlib is imported lazily inside the functions so that library users
and CLI runs without --figures never pay for it; rendering goes through
Figure + the Agg canvas directly, keeping pyplot's global state (and any
display backend) out of the picture.
"""

from __future__ import annotations

import numpy as np


def _new_figure(width: float, height: float):
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig


def render_sweep_figure(cutoffs, values, path: str) -> str:
    """Optimal value of the capped problem as the cap rises."""
    fig = _new_figure(5.0, 3.4)
    ax = fig.add_subplot(111)
    vals = [v if np.isfinite(v) else np.nan for v in values]
    ax.plot(list(cutoffs), vals, marker="o", drawstyle="steps-post")
    ax.set_xlabel("cutoff")
    ax.set_ylabel("optimal value of capped cost")
    ax.set_title("truncation sweep")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_plan_figure(mass: np.ndarray, path: str) -> str:
    """Heatmap of a transport plan's mass matrix."""
    fig = _new_figure(4.6, 4.0)
    ax = fig.add_subplot(111)
    im = ax.imshow(np.asarray(mass, dtype=float), cmap="viridis",
                   interpolation="nearest", aspect="auto")
    ax.set_xlabel("target index")
    ax.set_ylabel("source index")
    ax.set_title("transport plan mass")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_potentials_figure(phi, psi, path: str) -> str:
    """Both potentials against their point index, -inf drawn as gaps."""
    fig = _new_figure(5.4, 3.4)
    ax = fig.add_subplot(111)
    for name, vec in (("phi", phi), ("psi", psi)):
        v = np.asarray(vec, dtype=float)
        v = np.where(np.isfinite(v), v, np.nan)
        ax.plot(np.arange(v.size), v, marker=".", label=name)
    ax.set_xlabel("point index")
    ax.set_ylabel("potential value")
    ax.set_title("dual potentials")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_facts_figure(name: str, facts, path: str) -> str:
    """One horizontal bar per fact: observed value, colored by pass/fail.

    ``facts`` is a sequence of mappings with keys description, expected,
    observed, passed (the CLI's serialized form).
    """
    n = max(1, len(facts))
    fig = _new_figure(6.4, 0.6 + 0.42 * n)
    ax = fig.add_subplot(111)
    labels, observed, expected, colors = [], [], [], []
    for f in facts:
        labels.append(f["description"])
        o = f["observed"]
        e = f["expected"]
        observed.append(o if np.isfinite(o) else 0.0)
        expected.append(e if np.isfinite(e) else np.nan)
        colors.append("#2a9d4e" if f["passed"] else "#c23b22")
    ypos = np.arange(len(labels))
    ax.barh(ypos, observed, color=colors, alpha=0.8)
    ax.plot(expected, ypos, linestyle="none", marker="|", markersize=14,
            color="black", label="expected")
    ax.set_yticks(ypos)
    ax.set_yticklabels(labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("value")
    ax.set_title(f"gallery facts: {name}")
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    return path
