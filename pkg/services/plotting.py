"""SVG line plots of sweep results; presentation only."""

from collections import OrderedDict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils.logging_config import get_logger  # noqa: E402

logger = get_logger(__name__)

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "figure.figsize": (4.5, 3.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linestyle": "--",
    "lines.linewidth": 1.0,
    "lines.markersize": 4,
    "svg.hashsalt": "qd-rician",
}

Y_LABELS = {
    "qd_probability": "QD probability",
    "power_mean": r"$E[\|g\|^2]$",
    "power_var": r"$V[\|g\|^2]$",
    "trace_outer": r"tr $E[gg^H]$",
    "trace_projector": r"tr $E[\Pi_g]$",
    "quadform_mean": r"$E[Q_{\Pi_{g_j}}(g_i)]$",
    "quadform_var": r"$V[Q_{\Pi_{g_j}}(g_i)]$",
}


def _series_key(row: Dict, x_name: str) -> Tuple:
    """Curve identity: every sweep variable except the x axis, plus the quantity."""
    return tuple((name, row[name]) for name in ("quantity", "theta_delta_deg", "beta_delta", "k_db")
                 if name != x_name)


def _label(key: Tuple) -> str:
    names = {"theta_delta_deg": r"$\theta_\Delta$", "beta_delta": r"$\beta_\Delta$", "k_db": "K [dB]"}
    return ", ".join(f"{names.get(n, n)}={v:g}" if isinstance(v, float) else str(v) for n, v in key)


def choose_x_axis(rows: Sequence[Dict]) -> str:
    """K in dB when it varies, otherwise the path-loss ratio."""
    if len({row["k_db"] for row in rows}) > 1:
        return "k_db"
    if len({row["beta_delta"] for row in rows}) > 1:
        return "beta_delta"
    return "theta_delta_deg"


def plot_sweep(rows: Sequence[Dict], path: Path, title: Optional[str] = None) -> Optional[Path]:
    """
    Draw analytic curves (lines) and Monte-Carlo points (markers) of a sweep.

    Args:
        rows: Result rows as dicts with the CSV column names; None for blank cells
        path: Destination .svg file
        title: Optional figure title

    Returns:
        The written path, or None when there is nothing to plot
    """
    if not rows:
        return None
    x_name = choose_x_axis(rows)
    curves: "OrderedDict[Tuple, List[Dict]]" = OrderedDict()
    for row in rows:
        curves.setdefault(_series_key(row, x_name), []).append(row)

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            for index, (key, points) in enumerate(curves.items()):
                color = f"C{index % 10}"
                label = _label(key)
                for column, style, suffix in (("analytic_quadrature", "-", "quad."),
                                              ("analytic_series", ":", "series"),
                                              ("analytic_renormalized", "--", "renorm."),
                                              ("mc_value", "o", "MC")):
                    xy = [(p[x_name], p[column]) for p in points if p.get(column) is not None]
                    if not xy:
                        continue
                    xs, ys = zip(*xy)
                    if style == "o":
                        ax.plot(xs, ys, "o", color=color, fillstyle="none", label=f"{label} ({suffix})")
                    else:
                        ax.plot(xs, ys, style, color=color, label=f"{label} ({suffix})")

            quantities = {row["quantity"] for row in rows}
            ax.set_xlabel({"k_db": "Rician factor K [dB]", "beta_delta": r"Path-loss ratio $\beta_\Delta$",
                           "theta_delta_deg": r"Angle difference $\theta_\Delta$ [deg]"}[x_name])
            ax.set_ylabel(Y_LABELS.get(next(iter(quantities)), "value") if len(quantities) == 1 else "value")
            if title:
                ax.set_title(title)
            ax.legend(loc="best")
            fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
        finally:
            plt.close(fig)

    logger.debug(f"Plot written to {path}")
    return path
