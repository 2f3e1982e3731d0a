"""Figure rendering for the report paths.

Figures are written straight to files with the Agg backend; PNG output gets
fixed metadata and SVG output drops its date stamp so repeated runs produce
identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _save(fig, path) -> None:
    path = str(path)
    if path.endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path, metadata={"Software": "forumsurv"})
    plt.close(fig)


def save_step_curve(curve, path, *, title="", label=None) -> None:
    """Render one survival step curve (a SurvCurve) to ``path``."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ts = [pt[0] for pt in curve.points]
    ss = [pt[1] for pt in curve.points]
    ax.step(ts, ss, where="post", label=label)
    ax.set_xlabel("days since first post")
    ax.set_ylabel("survival probability")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    if label:
        ax.legend(loc="lower left")
    fig.tight_layout()
    _save(fig, path)


def save_bars(names, values, path, *, title="", xlabel="") -> None:
    """Horizontal bar chart, longest bar on top."""
    fig, ax = plt.subplots(figsize=(6.5, max(2.0, 0.32 * len(names) + 1.2)), dpi=120)
    ypos = range(len(names))
    ax.barh(list(ypos), list(values))
    ax.set_yticks(list(ypos))
    ax.set_yticklabels(list(names), fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel(xlabel)
    ax.grid(axis="x", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
