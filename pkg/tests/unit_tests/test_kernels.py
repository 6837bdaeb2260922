import numpy as np
import pytest

from forient import kernels


@pytest.mark.parametrize(
    "n, expected", [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (6, 203)]
)
def test_bell_number(n, expected):
    assert kernels.bell_number(n) == expected


def test_restricted_growth_strings_order():
    labels = kernels.restricted_growth_strings(3)
    assert labels.tolist() == [
        [0, 0, 0],
        [0, 0, 1],
        [0, 1, 0],
        [0, 1, 1],
        [0, 1, 2],
    ]


@pytest.mark.parametrize("n", [4, 5, 6])
def test_restricted_growth_strings_are_valid(n):
    labels = kernels.restricted_growth_strings(n)
    assert labels.shape == (kernels.bell_number(n), n)
    assert len({tuple(row) for row in labels.tolist()}) == len(labels)
    for row in labels.tolist():
        assert row[0] == 0
        for j in range(1, n):
            assert row[j] <= max(row[:j]) + 1


def test_part_masks():
    labels = np.array([[0, 1, 0], [0, 1, 2]], dtype=np.int8)
    masks = kernels.part_masks(labels)
    assert masks.tolist() == [[5, 2, 0], [1, 2, 4]]


def test_crossing_counts():
    labels = np.array([[0, 0, 0], [0, 1, 0], [0, 1, 2]], dtype=np.int8)
    tails = np.array([0, 1], dtype=np.int64)
    heads = np.array([1, 2], dtype=np.int64)
    assert kernels.crossing_counts(labels, tails, heads).tolist() == [0, 2, 2]
