"""PNG figures written next to the CSV artifacts (Agg backend, no display)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Stable PNG bytes: drop the version-stamped Software chunk.
_PNG_META = {"Software": None}


def plot_curve(curves, path):
    """``log H`` and ``N = tH'/H`` against ``t`` for each labelled curve."""
    fig, (ax_h, ax_n) = plt.subplots(1, 2, figsize=(9, 3.6))
    for label, c in curves.items():
        ax_h.plot(c.t, np.log(c.H), marker=".", label=label)
        ax_n.plot(c.t, c.N, marker=".", label=label)
    ax_h.set_xlabel("t")
    ax_h.set_ylabel("log H")
    ax_n.set_xlabel("t")
    ax_n.set_ylabel("N = t H'/H")
    if len(curves) <= 8:
        ax_n.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def plot_margins(rows, path):
    """Slack ``margin + tol`` per row on a symlog axis; failures drawn in red."""
    fig, ax = plt.subplots(figsize=(7, 3.6))
    slack = np.array([r.tol - abs(r.margin) if r.two_sided else r.margin + r.tol
                      for r in rows], dtype=float)
    idx = np.arange(len(rows))
    ok = np.array([r.passed for r in rows], dtype=bool)
    ax.scatter(idx[ok], slack[ok], s=10, color="tab:blue", label="pass")
    if (~ok).any():
        ax.scatter(idx[~ok], slack[~ok], s=14, color="tab:red", label="fail")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_yscale("symlog", linthresh=1e-8)
    ax.set_xlabel("report row")
    ax.set_ylabel("slack (>= 0 passes)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
