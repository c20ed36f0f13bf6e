"""Static figures for command line reports."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import PhaseIOError  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.75),
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.0,
    "xtick.major.width": 0.6,
    "ytick.major.width": 0.6,
    "svg.hashsalt": "mixphase",
    "svg.fonttype": "path",
}


def plot_interferogram(g, fit, path, title=None):
    """Samples, fitted fringe and the fitted phase marker, saved as SVG/PNG by extension."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(g.chi, g.intensity, ".", ms=3, color="0.35", label="samples")
        grid = np.linspace(0.0, 2 * math.pi, 721)
        if fit.gamma is not None:
            ax.plot(grid, 1.0 + fit.visibility * np.cos(grid - fit.gamma), color="C0",
                    label=rf"fit: $\gamma$={fit.gamma:.4f}, $\mathcal{{V}}$={fit.visibility:.4f}")
            ax.axvline(fit.gamma % (2 * math.pi), color="C3", lw=0.6, ls="--")
        else:
            ax.axhline(1.0, color="C0", label=rf"node: $\mathcal{{V}}$={fit.visibility:.2e}")
        ax.set_xlim(0.0, 2 * math.pi)
        ax.set_xticks([0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi],
                      ["0", r"$\pi/2$", r"$\pi$", r"$3\pi/2$", r"$2\pi$"])
        ax.set_xlabel(r"phase shift $\chi$")
        ax.set_ylabel("normalized intensity")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        try:
            fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
        except OSError as exc:
            raise PhaseIOError(f"cannot write figure to {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)
