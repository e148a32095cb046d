"""Cycle-type classification and the chi-square goodness-of-fit protocol.

Sampled permutations are binned by cycle type. For S_n and A_n the expected
share of each cycle type is its class size over the group order; other groups
need a supplied expected-count table. Small categories are pooled before the
test so every expected count reaches ``min_expected``.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, special

from . import kernels
from .groups import BlackBoxGroup, GroupError


class DegeneratePartitionError(ValueError):
    """Fewer than two categories survive merging, or nothing was observed."""


# cycle types

def cycle_type(p, G: BlackBoxGroup | None = None) -> tuple[int, ...]:
    """Cycle lengths of a permutation, descending, fixed points included."""
    if G is not None and G.kind != "permutation":
        raise GroupError("cycle types need a permutation group")
    if not isinstance(p, (tuple, list, np.ndarray)) or sorted(p) != list(range(len(p))):
        raise GroupError("not a permutation image array")
    return tuple(kernels.cycle_type(np.asarray(p, dtype=np.int32)))


def cycle_label(ct) -> str:
    """``(3, 2, 1, 1)`` -> ``"3 2 1 1"``."""
    return " ".join(map(str, ct))


def parse_cycle_label(label: str) -> tuple[int, ...]:
    return tuple(sorted((int(x) for x in label.split()), reverse=True))


def partitions(n: int, largest: int | None = None):
    """All partitions of n as descending tuples."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def is_even(ct) -> bool:
    """Even permutation iff the number of even-length cycles is even."""
    return sum(1 for l in ct if l % 2 == 0) % 2 == 0


def splits_in_alternating(ct) -> bool:
    """The S_n class splits into two A_n classes iff all parts are odd and distinct."""
    return all(l % 2 for l in ct) and len(set(ct)) == len(ct)


def sn_class_size(ct, n: int | None = None) -> int:
    """n! / prod(l^m_l * m_l!) for cycle type ct."""
    ct = tuple(ct)
    if n is None:
        n = sum(ct)
    if sum(ct) != n or any(l < 1 for l in ct):
        raise ValueError(f"{ct} is not a partition of {n}")
    denom = 1
    for l, m in Counter(ct).items():
        denom *= l ** m * math.factorial(m)
    return math.factorial(n) // denom


@dataclass
class CycleClass:
    cycle_type: tuple
    size: int
    even: bool
    splits: bool


def class_info(ct) -> CycleClass:
    ct = tuple(sorted(ct, reverse=True))
    return CycleClass(ct, sn_class_size(ct), is_even(ct), splits_in_alternating(ct))


def cycle_type_distribution(n: int, family: str = "S") -> dict[str, float]:
    """Exact probability of each cycle type under the uniform law on S_n or A_n."""
    if family not in ("S", "A"):
        raise ValueError("family must be 'S' or 'A'")
    order = math.factorial(n) if family == "S" else math.factorial(n) // 2
    out = {}
    for ct in partitions(n):
        if family == "A" and not is_even(ct):
            continue
        out[cycle_label(ct)] = sn_class_size(ct, n) / order
    return out


def cycle_type_counts(samples, n: int | None = None) -> Counter:
    return Counter(cycle_label(cycle_type(s)) for s in samples)


# chi-square

def chi2_critical(significance: float, df: int) -> float:
    """Upper quantile of the chi-square law via the inverse regularized incomplete gamma."""
    if df < 1:
        raise ValueError("df must be positive")
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    # P(X > x) = Q(df/2, x/2)
    return 2.0 * float(special.gammainccinv(df / 2, significance))


def chi2_critical_numeric(significance: float, df: int) -> float:
    """Independent check: integrate the density numerically and root-find."""
    k = df / 2
    log_norm = -k * math.log(2) - math.lgamma(k)

    def density(x):
        if x <= 0:
            return 0.0
        return math.exp(log_norm + (k - 1) * math.log(x) - x / 2)

    def tail(x):
        mid = x + df + 40
        near, _ = integrate.quad(density, x, mid, epsabs=1e-14, epsrel=1e-13, limit=400)
        far, _ = integrate.quad(density, mid, np.inf, epsabs=1e-14, limit=200)
        return near + far - significance

    lo = 1e-2 * df
    hi = df + 10 * math.sqrt(2 * df) + 20
    if tail(lo) < 0:
        raise ValueError("significance too large for the numeric bracket")
    return float(optimize.brentq(tail, lo, hi, xtol=1e-12))


def chi2_sf(stat: float, df: int) -> float:
    return float(special.gammaincc(df / 2, stat / 2))


@dataclass
class ChiSquareReport:
    labels: list
    observed: list
    expected: list
    merged: dict                 # merged label -> original labels
    degrees_of_freedom: int
    statistic: float
    critical_value: float
    significance: float
    accepted: bool
    p_value: float
    critical_value_01: float = field(default=float("nan"))
    accepted_01: bool = False

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "observed": [int(x) for x in self.observed],
            "expected": [float(x) for x in self.expected],
            "merged": {k: list(v) for k, v in self.merged.items()},
            "df": self.degrees_of_freedom,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "significance": self.significance,
            "accepted": self.accepted,
            "p_value": self.p_value,
            "critical_value_01": self.critical_value_01,
            "accepted_01": self.accepted_01,
        }


def merge_small(labels, observed, expected, min_expected: float = 5.0):
    """Pool the smallest-expected categories until every expected count is large enough.

    Every category below ``min_expected`` joins one pooled bin; if the pool is
    still short the next smallest categories (by expected, then label) are
    added. Returns labels, observed, expected and the merge map.
    """
    order = sorted(range(len(labels)), key=lambda i: (expected[i], str(labels[i])))
    pool = [i for i in order if expected[i] < min_expected]
    if pool:
        rest = [i for i in order if expected[i] >= min_expected]
        while sum(expected[i] for i in pool) < min_expected and rest:
            pool.append(rest.pop(0))
    pooled = set(pool)
    out_labels, out_obs, out_exp, merged = [], [], [], {}
    for i in range(len(labels)):
        if i not in pooled:
            out_labels.append(labels[i])
            out_obs.append(observed[i])
            out_exp.append(expected[i])
    if pool:
        members = sorted(pool, key=lambda i: (expected[i], str(labels[i])))
        name = "merged(" + "|".join(str(labels[i]) for i in members) + ")"
        out_labels.append(name)
        out_obs.append(sum(observed[i] for i in pool))
        out_exp.append(sum(expected[i] for i in pool))
        merged[name] = [labels[i] for i in members]
    return out_labels, out_obs, out_exp, merged


def chi_square_test(observed, expected, labels=None, min_expected: float = 5.0,
                    significance: float = 0.05) -> ChiSquareReport:
    observed = [int(x) for x in observed]
    expected = [float(x) for x in expected]
    if len(observed) != len(expected):
        raise ValueError("observed and expected differ in length")
    if labels is None:
        labels = [str(i) for i in range(len(observed))]
    total = sum(observed)
    if total <= 0:
        raise DegeneratePartitionError("no observations")
    if any(e < 0 for e in expected) or sum(expected) <= 0:
        raise ValueError("expected counts must be non-negative with positive total")
    scale = total / sum(expected)
    expected = [e * scale for e in expected]
    labs, obs, exp, merged = merge_small(list(labels), observed, expected, min_expected)
    if len(labs) < 2 or min(exp) < min_expected:
        raise DegeneratePartitionError(f"degenerate partition: {len(labs)} categories after merging")
    o = np.array(obs, dtype=float)
    e = np.array(exp, dtype=float)
    stat = float(np.sum((o - e) ** 2 / e))
    df = len(labs) - 1
    crit = chi2_critical(significance, df)
    crit01 = chi2_critical(0.01, df)
    return ChiSquareReport(labs, obs, exp, merged, df, stat, crit, significance,
                           stat < crit, chi2_sf(stat, df), crit01, stat < crit01)


# expected-count tables

def read_expected_table(source) -> tuple[list[str], list[float]]:
    """Rows of ``label, expected``; ``#`` comments and an optional header allowed."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        raise FileNotFoundError(f"expected-count table not found: {source}")
    labels, values = [], []
    rows = csv.reader(io.StringIO("\n".join(l for l in text.splitlines()
                                            if l.strip() and not l.lstrip().startswith("#"))))
    for lineno, row in enumerate(rows, start=1):
        if len(row) < 2:
            raise ValueError(f"line {lineno}: expected 'label, count'")
        label, value = ",".join(row[:-1]).strip(), row[-1].strip()
        try:
            values.append(float(value))
        except ValueError:
            if lineno == 1:
                continue      # header
            raise ValueError(f"line {lineno}: count {value!r} is not a number") from None
        labels.append(label)
    if not labels:
        raise ValueError("expected-count table is empty")
    return labels, values


def merge_by_label(labels, values) -> tuple[list[str], list[float]]:
    """Sum rows sharing a label, keeping first-seen order."""
    acc: dict[str, float] = {}
    for l, v in zip(labels, values):
        acc[l] = acc.get(l, 0.0) + v
    return list(acc), list(acc.values())


def load_mcl_expected() -> tuple[list[str], list[float]]:
    """The bundled 24-class McL expected row (positional labels C1..C24)."""
    text = resources.files("fibrand").joinpath("data/mcl_expected.csv").read_text()
    return read_expected_table(text)


def classify(samples, labels: list[str]) -> list[int]:
    """Observed counts per label for cycle-type labels; unknown types raise."""
    counts = cycle_type_counts(samples)
    extra = set(counts) - set(labels)
    if extra:
        raise ValueError(f"sampled cycle types missing from the partition: {sorted(extra)}")
    return [counts.get(l, 0) for l in labels]
