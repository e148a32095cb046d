"""Timing of the compiled kernels against the pure-Python fallback.

Both implementations are imported side by side, fed identical inputs, and
checked for identical outputs before being timed.
"""
from __future__ import annotations

import timeit

import numpy as np

from . import _pykernels


def _compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


def _cases(rng: np.random.Generator):
    n, m = 15, 60
    perms = np.stack([rng.permutation(n) for _ in range(m)]).astype(np.int32)
    pmask = rng.integers(0, 2, m).astype(np.uint8)
    d, p = 7, 2
    mats = rng.integers(0, p, size=(40, d, d)).astype(np.int64)
    mmask = rng.integers(0, 2, 40).astype(np.uint8)
    order = 120
    # multiplication table of a cyclic group as a stand-in for a real table
    table = ((np.arange(order)[:, None] + np.arange(order)[None, :]) % order).astype(np.int32)
    x = rng.dirichlet(np.ones(order))
    y = rng.dirichlet(np.ones(order))
    big = rng.permutation(2000).astype(np.int32)
    return {
        "perm_chain (60 x S15)": lambda k: k.perm_chain(perms, pmask),
        "mat_chain (40 x GL(7,2))": lambda k: k.mat_chain(mats, mmask, p),
        "cycle_type (degree 2000)": lambda k: k.cycle_type(big),
        "group_convolve (|G|=120)": lambda k: k.group_convolve(x, y, table),
        "right_shift_norms (|G|=120)": lambda k: k.right_shift_norms(x, y, table, 0.5, 0.5),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(u, v) for u, v in zip(a, b))
    if isinstance(a, (float, np.floating)):
        return abs(float(a) - float(b)) <= 1e-12 * max(1.0, abs(float(a)))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-15)


def kernel_bench(repeat: int = 5, seed: int = 0) -> list[dict]:
    compiled = _compiled()
    rows = []
    for name, fn in _cases(np.random.default_rng(seed)).items():
        row = {"kernel": name}
        py_t = _time(lambda: fn(_pykernels), repeat)
        row["python_us"] = py_t * 1e6
        if compiled is not None:
            row["agree"] = _same(fn(_pykernels), fn(compiled))
            c_t = _time(lambda: fn(compiled), repeat)
            row["compiled_us"] = c_t * 1e6
            row["speedup"] = py_t / c_t if c_t > 0 else float("inf")
        rows.append(row)
    return rows


def _time(call, repeat: int) -> float:
    timer = timeit.Timer(call)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def format_kernel_bench(rows) -> str:
    head = f"{'kernel':<30} {'python us':>12} {'compiled us':>12} {'speedup':>9}  agree"
    lines = [head]
    for r in rows:
        if "compiled_us" in r:
            lines.append(f"{r['kernel']:<30} {r['python_us']:>12.2f} {r['compiled_us']:>12.2f} "
                         f"{r['speedup']:>8.1f}x  {'yes' if r['agree'] else 'NO'}")
        else:
            lines.append(f"{r['kernel']:<30} {r['python_us']:>12.2f} {'n/a':>12} {'':>9}  -")
    return "\n".join(lines) + "\n"
