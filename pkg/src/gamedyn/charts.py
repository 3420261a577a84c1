"""Static SVG line charts."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAX_POINTS = 2000

plt.rcParams["svg.hashsalt"] = "gamedyn"


def thin(times, values, max_points=MAX_POINTS):
    step = max(1, int(np.ceil(len(times) / max_points)))
    return np.asarray(times)[::step], np.asarray(values)[::step]


def line_chart(path, series, title, xlabel="t", ylabel="", hlines=None):
    """Write an SVG with one polyline per ``label -> (times, values)`` entry."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, (t, v) in series.items():
        t, v = thin(t, v)
        ax.plot(t, v, label=label, linewidth=1.2)
    for label, y in (hlines or {}).items():
        ax.axhline(y, linestyle="--", linewidth=0.9, color="gray")
        ax.annotate(label, (0.99, y), xycoords=("axes fraction", "data"), ha="right",
                    va="bottom", fontsize=8, color="gray")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
