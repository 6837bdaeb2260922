from fractions import Fraction

import pandas as pd
from matplotlib import pyplot as plt

from forient.plotting import lighten_color, plot_gap, plot_ratio_histogram


def test_lighten_color():
    color = "#000000"
    lightened_color = lighten_color(color, 0.5)
    assert lightened_color == (0.5, 0.5, 0.5)

    color = (0, 0, 0)
    lightened_color = lighten_color(color, 0.5)
    assert lightened_color == (0.5, 0.5, 0.5)


def test_plot_gap():
    report = pd.DataFrame(
        {
            "n": [2, 3, 4],
            "lp_value": [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)],
            "integral_value": [Fraction(1)] * 3,
            "ratio": [Fraction(2), Fraction(3), None],
        }
    )
    fig = plot_gap(report)
    assert len(fig.axes) == 2
    plt.close(fig)

    fig, axis = plt.subplots()
    assert plot_gap(report, axis=axis) is fig
    plt.close(fig)


def test_plot_ratio_histogram():
    bench = pd.DataFrame({"ratio": [Fraction(1), Fraction(3, 2), None, Fraction(2)]})
    fig = plot_ratio_histogram(bench, bins=5)
    assert fig.axes[0].get_xlabel() == "cost / optimum"
    plt.close(fig)
