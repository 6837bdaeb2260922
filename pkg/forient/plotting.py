# native imports
import typing

# third party imports
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def lighten_color(color, amount=0.5):
    """
    Lightens the given color by multiplying (1-luminosity) by the given amount.

    Parameters
    ----------
    color : str, tuple
        matplotlib color string, hex string or RGB tuple

    amount : float, default 0.5
        amount to lighten the color

    Returns
    -------
    tuple
        lightened color
    """
    import colorsys

    import matplotlib.colors as mc

    c = mc.cnames.get(color, color) if isinstance(color, str) else color
    c = colorsys.rgb_to_hls(*mc.to_rgb(c))
    return colorsys.hls_to_rgb(c[0], 1 - amount * (1 - c[1]), c[2])


def plot_gap(report: pd.DataFrame, axis: plt.Axes = None, color: str = "tab:blue") -> plt.Figure:
    """
    Relaxation value and integral optimum per ladder size, with the ratio on a twin axis.

    Parameters
    ----------

    report : pd.DataFrame
        Output of `forient.gaplab.gap_report`.

    axis : plt.Axes, optional
        axis to plot on, a new figure is created if None

    Returns
    -------
    plt.Figure
    """
    if axis is None:
        fig, axis = plt.subplots(figsize=(5, 3.5))
    else:
        fig = axis.figure

    n = report["n"].astype(int).to_numpy()
    lp_value = np.array([float(v) for v in report["lp_value"]])
    integral = np.array([float(v) for v in report["integral_value"]])

    axis.plot(n, integral, marker="o", color=color, label="integral optimum")
    axis.plot(n, lp_value, marker="s", color=lighten_color(color, 0.5), label="relaxation")
    axis.set_xlabel("n")
    axis.set_ylabel("cost")
    axis.set_xticks(n)

    twin = axis.twinx()
    ratio = np.array([float(v) if v is not None else np.nan for v in report["ratio"]])
    twin.plot(n, ratio, linestyle="--", color="tab:red", label="ratio")
    twin.set_ylabel("ratio")

    handles = axis.get_legend_handles_labels()[0] + twin.get_legend_handles_labels()[0]
    axis.legend(handles=handles, loc="upper left", frameon=False)
    fig.tight_layout()
    return fig


def plot_ratio_histogram(
    bench: pd.DataFrame, bound: float = 6.0, axis: plt.Axes = None, bins: typing.Union[int, list] = 20
) -> plt.Figure:
    """
    Histogram of solver cost over the exact optimum, with the guaranteed bound marked.

    Parameters
    ----------

    bench : pd.DataFrame
        Output of `forient.oracle.benchmark`.

    bound : float, default 6.0
        approximation bound to mark

    axis : plt.Axes, optional
        axis to plot on, a new figure is created if None

    bins : int or list, default 20
        passed to `plt.hist`

    Returns
    -------
    plt.Figure
    """
    if axis is None:
        fig, axis = plt.subplots(figsize=(5, 3.5))
    else:
        fig = axis.figure

    ratio = np.array([float(v) for v in bench["ratio"] if v is not None])
    axis.hist(ratio, bins=bins, range=(1.0, max(bound, ratio.max(initial=1.0))), color="tab:blue")
    axis.axvline(bound, color="tab:red", linestyle="--", label=f"bound {bound:g}")
    axis.set_xlabel("cost / optimum")
    axis.set_ylabel("instances")
    axis.legend(frameon=False)
    fig.tight_layout()
    return fig
