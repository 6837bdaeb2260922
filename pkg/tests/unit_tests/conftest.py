import os
import tempfile
import json
from fractions import Fraction

import numpy as np
import matplotlib

matplotlib.use("Agg")
from matplotlib import pyplot as plt

plt.ioff()

import forient
from forient.demand import KLDemand
from forient.graph import UGraph
from forient.instance import Instance, prism_instance

C4_PATH = os.path.join(os.path.dirname(forient.__file__), "data", "c4.json")


def cycle_graph(n: int) -> UGraph:
    return UGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> UGraph:
    return UGraph(n, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> UGraph:
    return UGraph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def c4_instance() -> Instance:
    """Path 0-1-2-3 with the closing edge {3, 0} purchasable at cost 5, strong connectivity."""
    return Instance(
        4,
        ((0, 1), (1, 2), (2, 3)),
        ((3, 0),),
        (5,),
        KLDemand(4, 1, 1, 0),
        0,
        "c4",
    )


def fractional_instances() -> list:
    """Odd prisms whose relaxation optimum sets the rungs to 1 and the cycle edges to 1/2."""
    return [
        prism_instance(3, [1, 1, 1], 2, name="prism_3"),
        prism_instance(
            3,
            [Fraction(1, 2), 1, Fraction(3, 2)],
            Fraction(5, 2),
            root=4,
            labels=[3, 0, 5, 1, 4, 2],
            name="prism_3_relabelled",
        ),
    ]


def write_instance(folder: str, name: str, data: dict) -> str:
    path = os.path.join(folder, f"{name}.json")
    with open(path, "w") as f:
        json.dump(data, f)
    return path


def random_tempfolder():
    """Create a randomly named temp folder in the system temp folder

    Returns
    -------
    path : str
        Path to the created temp folder

    """
    tempdir = tempfile.gettempdir()
    # 6 alphanumeric characters
    random_foldername = "forient_" + "".join(
        np.random.choice(list("abcdefghijklmnopqrstuvwxyz0123456789"), 6)
    )
    path = os.path.join(tempdir, random_foldername)
    os.makedirs(path, exist_ok=True)
    print(f"Created temp folder: {path}")
    return path
