# native imports

# forient imports

# third party imports
import numba as nb
import numpy as np


@nb.njit
def bell_number(n):
    """Number of set partitions of an n-element set, via the Bell triangle."""
    if n == 0:
        return 1
    row = np.zeros(n + 1, dtype=np.int64)
    row[0] = 1
    for i in range(1, n + 1):
        new_row = np.zeros(n + 1, dtype=np.int64)
        new_row[0] = row[i - 1]
        for j in range(1, i + 1):
            new_row[j] = new_row[j - 1] + row[j - 1]
        row = new_row
    return row[0]


@nb.njit
def restricted_growth_strings(n):
    """All restricted growth strings of length n in lexicographic order.

    Row ``p`` labels node ``j`` with the index of its block; ``a[0] = 0`` and
    ``a[j] <= max(a[:j]) + 1``. The first row is the single-block partition.

    Returns
    -------

    np.ndarray
        int8 array of shape (Bell(n), n).
    """
    count = bell_number(n)
    out = np.zeros((count, n), dtype=np.int8)
    if n == 0:
        return out

    a = np.zeros(n, dtype=np.int64)
    # bound[j] = max(a[:j]) + 1
    bound = np.ones(n, dtype=np.int64)
    bound[0] = 0

    for row in range(count):
        for j in range(n):
            out[row, j] = a[j]
        if row == count - 1:
            break

        j = n - 1
        while j > 0 and a[j] == bound[j]:
            j -= 1
        a[j] += 1
        for i in range(j + 1, n):
            a[i] = 0
            bound[i] = max(bound[i - 1], a[i - 1] + 1)

    return out


@nb.njit
def part_masks(labels):
    """Bitmask of every block per labelling, zero for unused block labels."""
    n_rows, n = labels.shape
    masks = np.zeros((n_rows, n), dtype=np.int64)
    for row in range(n_rows):
        for j in range(n):
            masks[row, labels[row, j]] |= np.int64(1) << j
    return masks


@nb.njit
def crossing_counts(labels, tails, heads):
    """Number of edges joining two different blocks, per labelling."""
    n_rows = labels.shape[0]
    counts = np.zeros(n_rows, dtype=np.int64)
    for row in range(n_rows):
        c = 0
        for e in range(tails.shape[0]):
            if labels[row, tails[e]] != labels[row, heads[e]]:
                c += 1
        counts[row] = c
    return counts
