"""Numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module. Used when
the extension was not built, or when ``FIBRAND_PURE_PYTHON`` is set.
"""
import numpy as np

BACKEND = "python"


def perm_chain(stack, mask):
    """Left-to-right product of the rows of ``stack`` selected by ``mask``.

    Returns ``(images, count)`` where ``count`` is the number of selected
    rows. An empty selection gives the identity.
    """
    idx = np.flatnonzero(mask)
    n = stack.shape[1]
    if idx.size == 0:
        return np.arange(n, dtype=np.int32), 0
    acc = stack[idx[0]]
    for i in idx[1:]:
        # (a*b)(x) = b(a(x))
        acc = stack[i][acc]
    return np.array(acc, dtype=np.int32), int(idx.size)


def mat_chain(stack, mask, p):
    """Ordered product mod ``p`` of the selected ``d x d`` matrices."""
    idx = np.flatnonzero(mask)
    d = stack.shape[1]
    if idx.size == 0:
        return np.eye(d, dtype=np.int64), 0
    acc = stack[idx[0]].astype(np.int64)
    for i in idx[1:]:
        acc = (acc @ stack[i]) % p
    return acc, int(idx.size)


def cycle_type(perm):
    """Cycle lengths of an image array, sorted descending (fixed points as 1s)."""
    n = len(perm)
    seen = bytearray(n)
    lengths = []
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = 1
            x = int(perm[x])
            length += 1
        lengths.append(length)
    lengths.sort(reverse=True)
    return lengths


def group_convolve(x, y, table):
    """Law of XY: ``out[table[i, j]] += x[i] * y[j]``."""
    out = np.zeros_like(y, dtype=np.float64)
    for i in np.flatnonzero(x):
        # row i of a group table is a bijection
        out[table[i]] += x[i] * y
    return out


def right_shift_norms(x, w, table, p0, p1):
    """Sum over g of w[g] * ||p0*X + p1*X.g||^2, where X.g is the right translate."""
    total = 0.0
    for g in np.flatnonzero(w):
        shifted = np.empty_like(x)
        shifted[table[:, g]] = x
        v = p0 * x + p1 * shifted
        total += w[g] * float(v @ v)
    return total
