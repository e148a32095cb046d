"""Exact distributions on enumerated small groups.

A :class:`GroupTable` fixes an indexing of every element of a small group and
a multiplication table; a :class:`Dist` is a probability vector over that
indexing. Everything here is exact up to double rounding, which is what the
invariant checks rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .groups import BlackBoxGroup, GeneratingSet, enumerate_elements

SUM_TOL = 1e-12
NEG_TOL = 1e-15
IDENTITY_TOL = 1e-12
INEQ_TOL = 1e-9


class OracleError(ValueError):
    """Structural misuse of the oracle (wrong group, bad pmf, broken precondition)."""


class GroupTable:
    """Enumerated group with element indexing and a multiplication table.

    ``table[i, j]`` is the index of ``elements[i] * elements[j]``; index 0 is
    the identity.
    """

    def __init__(self, group: BlackBoxGroup, generators: GeneratingSet | Sequence,
                 cap: int = 10_000, name: str | None = None):
        self.group = group
        self.generators = list(generators)
        self.name = name or repr(group)
        self.elements = enumerate_elements(group, self.generators, cap=cap)
        self.order = len(self.elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        self._packed = np.array(self.elements, dtype=np.int64)
        self._weights = self._digit_weights()
        keys = self._keys(self._packed)
        self._key_order = np.argsort(keys)
        self._sorted_keys = keys[self._key_order]
        self._table = None
        self.inverse_index = self._lookup(self._inverse_payloads())

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"GroupTable({self.name}, order={self.order})"

    def _digit_weights(self):
        G = self.group
        if G.kind == "permutation":
            base, width = G.degree, G.degree
        else:
            base, width = G.prime, G.dim * G.dim
        if width * math.log2(max(base, 2)) >= 62:
            raise OracleError("element encoding too wide for the oracle")
        return np.array([base ** k for k in range(width)], dtype=np.int64)

    def _keys(self, payloads: np.ndarray) -> np.ndarray:
        return payloads @ self._weights

    def _lookup(self, payloads: np.ndarray) -> np.ndarray:
        keys = self._keys(payloads)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, self.order - 1)
        if not np.array_equal(self._sorted_keys[pos], keys):
            raise OracleError("element outside the enumerated group")
        return self._key_order[pos].astype(np.int32)

    def _products_with(self, j: int) -> np.ndarray:
        """Payloads of elements[i] * elements[j] for every i."""
        G = self.group
        E = self._packed
        if G.kind == "permutation":
            # (a*b)(x) = b(a(x))
            return E[j][E]
        d, p = G.dim, G.prime
        M = E.reshape(-1, d, d)
        return ((M @ M[j]) % p).reshape(-1, d * d)

    def _inverse_payloads(self) -> np.ndarray:
        G = self.group
        if G.kind == "permutation":
            inv = np.empty_like(self._packed)
            rows = np.arange(self.order)[:, None]
            inv[rows, self._packed] = np.arange(G.degree)[None, :]
            return inv
        return np.array([G._inv(e) for e in self.elements], dtype=np.int64)

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            t = np.empty((self.order, self.order), dtype=np.int32)
            for j in range(self.order):
                t[:, j] = self._lookup(self._products_with(j))
            self._table = np.ascontiguousarray(t)
        return self._table

    def idx(self, element) -> int:
        try:
            return self.index[element]
        except KeyError:
            raise OracleError(f"element {element!r} is outside the enumerated group") from None

    def mul(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def right_map(self, j: int) -> np.ndarray:
        """i -> index(e_i * e_j)."""
        return self.table[:, j]

    def left_map(self, j: int) -> np.ndarray:
        """i -> index(e_j * e_i)."""
        return self.table[j, :]

    def subset(self, elements: Iterable) -> np.ndarray:
        mask = np.zeros(self.order, dtype=bool)
        for e in elements:
            mask[self.idx(e)] = True
        return mask

    def generated_mask(self, gens_idx: Sequence[int]) -> np.ndarray:
        """Subgroup generated by the given element indices."""
        mask = np.zeros(self.order, dtype=bool)
        mask[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for g in gens_idx:
                    k = int(self.table[i, g])
                    if not mask[k]:
                        mask[k] = True
                        nxt.append(k)
            frontier = nxt
        return mask


@dataclass
class Dist:
    """Probability vector indexed like ``table.elements``."""

    table: GroupTable
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (self.table.order,):
            raise OracleError("probability vector has the wrong length")
        if p.min(initial=0.0) < -NEG_TOL:
            raise OracleError("negative probability")
        p = np.where(p < 0, 0.0, p)
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise OracleError(f"probabilities sum to {p.sum()!r}")
        self.p = p

    @classmethod
    def point(cls, table: GroupTable, index: int = 0) -> "Dist":
        p = np.zeros(table.order)
        p[index] = 1.0
        return cls(table, p)

    @classmethod
    def uniform(cls, table: GroupTable, mask: np.ndarray | None = None) -> "Dist":
        if mask is None:
            return cls(table, np.full(table.order, 1.0 / table.order))
        mask = np.asarray(mask, dtype=bool)
        return cls(table, mask / mask.sum())

    @property
    def order(self) -> int:
        return self.table.order

    def prob(self, element) -> float:
        return float(self.p[self.table.idx(element)])

    @property
    def l2(self) -> float:
        return float(np.sqrt(self.p @ self.p))

    @property
    def support(self) -> int:
        return int(np.count_nonzero(self.p))

    @property
    def eps_uniform(self) -> float:
        n = self.order
        return float(n * np.max(np.abs(self.p - 1.0 / n)))

    @property
    def eps_semi(self) -> float:
        n = self.order
        return float(n * max(0.0, np.max(1.0 / n - self.p)))

    def stats(self) -> dict:
        return {
            "l2": self.l2,
            "max_prob": float(self.p.max()),
            "support": self.support,
            "eps_uniform": self.eps_uniform,
            "eps_semi": self.eps_semi,
        }

    def _same(self, other: "Dist"):
        if other.table is not self.table:
            raise OracleError("distributions live on different enumerated groups")

    def inverse(self) -> "Dist":
        out = np.empty_like(self.p)
        out[self.table.inverse_index] = self.p
        return Dist(self.table, out)

    def __mul__(self, other: "Dist") -> "Dist":
        """Law of XY for independent X ~ self, Y ~ other."""
        self._same(other)
        return Dist(self.table, kernels.group_convolve(self.p, other.p, self.table.table))

    def shift_mix(self, j: int, side: str = "right", p1: float = 0.5) -> "Dist":
        """Law of X h^E (side="right") or h^E X, Pr(E=1) = p1, h = elements[j]."""
        m = self.table.right_map(j) if side == "right" else self.table.left_map(j)
        out = (1.0 - p1) * self.p
        out[m] += p1 * self.p
        return Dist(self.table, out)

    def translate(self, j: int, side: str = "right") -> "Dist":
        m = self.table.right_map(j) if side == "right" else self.table.left_map(j)
        out = np.empty_like(self.p)
        out[m] = self.p
        return Dist(self.table, out)

    def mix(self, other: "Dist", weight: float) -> "Dist":
        """Law of self^I other^(1-I) with Pr(I=1) = weight."""
        self._same(other)
        return Dist(self.table, weight * self.p + (1 - weight) * other.p)


def dist_stats(d: Dist) -> dict:
    return d.stats()


def invert_dist(d: Dist) -> Dist:
    return d.inverse()


def convolve(dx: Dist, dy: Dist) -> Dist:
    return dx * dy


def power_law(d: Dist, k: int) -> Dist:
    """Law of a product of k independent draws."""
    if k < 1:
        raise OracleError("k must be at least 1")
    out = d
    for _ in range(k - 1):
        out = out * d
    return out


class PmfSampler:
    """Draws from an explicit distribution; a stand-in source with a known law."""

    def __init__(self, dist: "Dist"):
        self.dist = dist
        self.group = dist.table.group
        self._cdf = np.cumsum(dist.p)

    def sample(self, src) -> tuple:
        i = int(np.searchsorted(self._cdf, src.random() * self._cdf[-1], side="right"))
        return self.dist.table.elements[min(i, self.dist.order - 1)]

    def law(self, table: "GroupTable") -> "Dist":
        if table is not self.dist.table:
            raise OracleError("sampler lives on a different enumerated group")
        return self.dist


# pipeline laws

def dist_of_trace(table: GroupTable, steps: Iterable[tuple], start: Dist | None = None) -> Dist:
    """Apply ``(element, side)`` steps to the identity point mass.

    Each step is pmf <- 1/2 pmf + 1/2 (pmf translated by the element on its side).
    """
    d = start if start is not None else Dist.point(table)
    for element, side in steps:
        d = d.shift_mix(table.idx(element), side)
    return d


def dist_of_pipeline(table: GroupTable, pipeline) -> Dist:
    """Exact law of a sampler object or of a raw ``(element, side)`` trace."""
    from .cube import FibonacciCube
    from .uniformizer import (AmplifiedSampler, BoostedSampler, CubePairSampler,
                              CubeSampler, EpsilonUniformSampler, PointSampler)

    if isinstance(pipeline, FibonacciCube):
        return law_of_cube(table, pipeline)
    if isinstance(pipeline, CubeSampler):
        return law_of_cube(table, pipeline.cube)
    if isinstance(pipeline, CubePairSampler):
        return law_of_pair(table, pipeline.cube)
    if isinstance(pipeline, PointSampler):
        return Dist.point(table, table.idx(pipeline.element))
    if isinstance(pipeline, BoostedSampler):
        return dist_of_pipeline(table, pipeline.base) * law_of_booster_factors(table, pipeline)
    if isinstance(pipeline, AmplifiedSampler):
        return power_law(dist_of_pipeline(table, pipeline.base), pipeline.k)
    if isinstance(pipeline, EpsilonUniformSampler):
        return dist_of_pipeline(table, pipeline.final)
    if hasattr(pipeline, "law"):
        return pipeline.law(table)
    return dist_of_trace(table, pipeline)


def law_of_cube(table: GroupTable, cube) -> Dist:
    """Law of R = h_1^E_1 ... h_t^E_t from the stored factor order."""
    return dist_of_trace(table, ((f.element, "right") for f in cube.factors))


def law_of_cube_chronological(table: GroupTable, cube) -> Dist:
    """Law of R rebuilt step by step from the build trace, using each step's side."""
    seeded = [(f.element, "right") for f in cube.factors if f.case == 0]
    d = dist_of_trace(table, seeded)
    return dist_of_trace(table, ((st.element, st.side) for st in cube.trace), start=d)


def norm_trajectory(table: GroupTable, cube) -> list[float]:
    """||R_i|| after each chronological step, starting from the identity point mass."""
    d = Dist.point(table)
    norms = [d.l2]
    steps = [(f.element, "right") for f in cube.factors if f.case == 0]
    steps += [(st.element, st.side) for st in cube.trace]
    for element, side in steps:
        d = d.shift_mix(table.idx(element), side)
        norms.append(d.l2)
    return norms


def law_of_pair(table: GroupTable, cube) -> Dist:
    r = law_of_cube(table, cube)
    return r.inverse() * r


def law_of_booster_factors(table: GroupTable, booster) -> Dist:
    return dist_of_trace(table, ((q, "right") for q in booster.factors))


def t_statistic(d: Dist, level: float = 7 / 4) -> float:
    """Sum over g of max(0, Pr(g) - level/|G|)^2."""
    x = d.p - level / d.order
    x = np.maximum(x, 0.0)
    return float(x @ x)


def booster_t_trajectory(table: GroupTable, factors: Sequence, start: Dist | None = None) -> list[float]:
    d = start if start is not None else Dist.point(table)
    out = [t_statistic(d)]
    for q in factors:
        d = d.shift_mix(table.idx(q), "right")
        out.append(t_statistic(d))
    return out


# peak sets

@dataclass
class PeakSet:
    m: float
    members: np.ndarray           # boolean mask of A_m
    delta: float
    outside_mass: float           # Pr(R not in A_m)
    case0: bool                   # m >= delta or max prob > 1 - delta
    level_claim_holds: bool       # Pr >= m on A_m and Pr <= m off A_m

    @property
    def size(self) -> int:
        return int(self.members.sum())


def peak_set(d: Dist, delta: float) -> PeakSet:
    """Level m and one valid peak set A_m.

    m is the least probability level x with Pr(Pr(R) <= x) > delta. The
    complement of A_m is filled from the largest probabilities at or below m
    (ties broken towards higher index) until its mass reaches delta, which makes
    A_m maximal: dropping any further element would push the outside mass
    below delta.
    """
    if not 0 < delta < 1:
        raise OracleError("delta must lie in (0, 1)")
    p = d.p
    levels = np.unique(p)
    m = None
    for x in levels:
        if p[p <= x].sum() > delta:
            m = float(x)
            break
    if m is None:  # rounding only; the top level always has mass 1 below it
        m = float(levels[-1])
    candidates = np.flatnonzero(p <= m)
    order = sorted(candidates, key=lambda i: (-p[i], -i))
    members = np.ones(d.order, dtype=bool)
    mass = 0.0
    for i in order:
        if mass >= delta:
            break
        members[i] = False
        mass += p[i]
    case0 = m >= delta or float(p.max()) > 1 - delta
    level_ok = bool(np.all(p[members] >= m - INEQ_TOL) and np.all(p[~members] <= m + INEQ_TOL))
    return PeakSet(m, members, delta, float(p[~members].sum()), case0, level_ok)


def check_peak_set(d: Dist, ps: PeakSet) -> bool:
    """The defining conditions of A_m: it contains every element above level m,
    leaves at least delta outside, and every strict superset leaves less."""
    p = d.p
    if not np.all(ps.members[p > ps.m]):
        return False
    rest = p[~ps.members]
    outside = rest.sum()
    if outside < ps.delta - IDENTITY_TOL:
        return False
    return bool(np.all(outside - rest < ps.delta + IDENTITY_TOL))


# decomposition and mixing lemmas

def decompose(z: Dist, x: Dist, p_i: float) -> Dist:
    """Y with (1 - p_i) Pr(Y=g) = Pr(Z=g) - p_i Pr(X=g)."""
    z._same(x)
    if not 0 <= p_i < 1:
        raise OracleError("p_i must lie in [0, 1)")
    slack = z.p - p_i * x.p
    bad = np.flatnonzero(slack < -INEQ_TOL)
    if bad.size:
        g = z.table.elements[bad[0]]
        raise OracleError(f"domination fails at {g!r}: "
                          f"{p_i} * {x.p[bad[0]]!r} > {z.p[bad[0]]!r}")
    return Dist(z.table, np.maximum(slack, 0.0) / (1 - p_i))


def expected_norm_identity_check(dx: Dist, dw: Dist, p_e0: float) -> dict:
    """Both sides of E_{g~W} ||X g^E||^2 = (q0^2 + q1^2)||X||^2 + 2 q0 q1 sum_h X(h) XW(h)."""
    dx._same(dw)
    q0, q1 = p_e0, 1 - p_e0
    table = dx.table.table
    lhs = kernels.right_shift_norms(dx.p, dw.p, table, q0, q1)
    xw = dx * dw
    rhs = (q0 ** 2 + q1 ** 2) * float(dx.p @ dx.p) + 2 * q0 * q1 * float(dx.p @ xw.p)
    return {"lhs": float(lhs), "rhs": float(rhs)}


def cube_uniform_bounds(v: Dist, a_mask: np.ndarray) -> dict:
    """Law of U_A^-1 V U_A' against the two-sided bound with alpha = |A|/|G|."""
    table = v.table
    u = Dist.uniform(table, a_mask)
    law = u.inverse() * v * u
    n = table.order
    alpha = a_mask.sum() / n
    r = (1 - alpha) / alpha
    dev = law.p - 1.0 / n
    return {
        "alpha": float(alpha),
        "max_dev": float(dev.max() * n),
        "min_dev": float(dev.min() * n),
        "upper": float(r),
        "lower": float(-r * r),
        "holds": bool(dev.max() * n <= r + INEQ_TOL and dev.min() * n >= -r * r - INEQ_TOL),
    }


# fuzzy subgroups and escape

def _check_symmetric(table: GroupTable, mask: np.ndarray):
    if not mask.any():
        raise OracleError("the set must be nonempty")
    if not np.array_equal(mask, mask[table.inverse_index]):
        raise OracleError("the set is not closed under inverses")


def translate_escapes(table: GroupTable, mask: np.ndarray) -> np.ndarray:
    """For each g: |A g \\ A| (right translates)."""
    A = np.flatnonzero(mask)
    prods = table.table[A]                      # rows a, columns g: a*g
    return (~mask[prods]).sum(axis=0)


def left_translate_escapes(table: GroupTable, mask: np.ndarray) -> np.ndarray:
    """For each g: |g A \\ A|."""
    A = np.flatnonzero(mask)
    prods = table.table[:, A]                   # rows g, columns a: g*a
    return (~mask[prods]).sum(axis=1)


def product_set(table: GroupTable, a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    b = a if b is None else b
    out = np.zeros(table.order, dtype=bool)
    out[np.unique(table.table[np.ix_(np.flatnonzero(a), np.flatnonzero(b))])] = True
    return out


def is_subgroup(table: GroupTable, mask: np.ndarray) -> bool:
    if not mask[0] or not mask.any():
        return False
    if not np.array_equal(mask, mask[table.inverse_index]):
        return False
    return bool(np.all(mask[table.table[np.ix_(np.flatnonzero(mask), np.flatnonzero(mask))]]))


@dataclass
class FuzzyReport:
    delta_star: float
    closure_is_subgroup: bool | None    # None when delta_star >= 1/4 (not checked)
    growth: float                       # |AA \ A| / |A|
    growth_bound: float | None
    bound_holds: bool | None

    @property
    def lemma_holds(self) -> bool:
        return self.delta_star >= 0.25 or bool(self.closure_is_subgroup and self.bound_holds)


def fuzzy_subgroup_check(table: GroupTable, mask: np.ndarray) -> FuzzyReport:
    mask = np.asarray(mask, dtype=bool)
    _check_symmetric(table, mask)
    size = int(mask.sum())
    esc = translate_escapes(table, mask)
    delta_star = float(esc[mask].max() / size)
    aa = product_set(table, mask)
    growth = float((aa & ~mask).sum() / size)
    if delta_star < 0.25:
        bound = delta_star / (1 - 2 * delta_star)
        return FuzzyReport(delta_star, is_subgroup(table, aa), growth, bound,
                           growth <= bound + INEQ_TOL)
    return FuzzyReport(delta_star, None, growth, None, None)


@dataclass
class EscapeReport:
    escape_prob: float
    eps: float
    k: float
    delta: float
    branch: int                          # 1: escapes with prob >= eps; 2: fuzzy subgroup
    a_prime: np.ndarray | None = None
    removed_fraction: float | None = None
    a_prime_subgroup: bool | None = None
    growth: float | None = None
    growth_bound: float | None = None
    branch2_verified: bool | None = None

    @property
    def dichotomy_holds(self) -> bool:
        return self.branch == 1 or bool(self.branch2_verified)


def escape_delta(k: float, eps: float) -> float:
    return (2 + k * k * eps) / (k - 2)


def escape_analyze(table: GroupTable, mask: np.ndarray, k: float = 20, eps: float = 1 / 160) -> EscapeReport:
    mask = np.asarray(mask, dtype=bool)
    _check_symmetric(table, mask)
    if not (k > 2 and 0 < eps < 1):
        raise OracleError("need k > 2 and 0 < eps < 1")
    delta = escape_delta(k, eps)
    if delta > 0.25 + 1e-15:
        raise OracleError(f"delta = {delta:.6g} exceeds 1/4 for k={k}, eps={eps}")
    A = np.flatnonzero(mask)
    size = A.size
    inside = mask[table.table[np.ix_(A, A)]]
    escape_prob = float((~inside).sum() / size ** 2)
    if escape_prob >= eps:
        return EscapeReport(escape_prob, eps, k, delta, branch=1)
    right = translate_escapes(table, mask)
    left = left_translate_escapes(table, mask)
    limit = k * eps * size
    a_prime = mask & (right <= limit + 1e-9) & (left <= limit + 1e-9)
    removed = float((mask & ~a_prime).sum() / size)
    sub = a_prime.any() and is_subgroup(table, product_set(table, a_prime))
    if a_prime.any():
        aa = product_set(table, a_prime)
        growth = float((aa & ~a_prime).sum() / a_prime.sum())
    else:
        growth = math.inf
    bound = delta / (1 - 2 * delta)
    symmetric = bool(np.array_equal(a_prime, a_prime[table.inverse_index]))
    verified = bool(removed < 2 / k and sub and symmetric and growth <= bound + INEQ_TOL)
    return EscapeReport(escape_prob, eps, k, delta, 2, a_prime, removed, bool(sub),
                        growth, bound, verified)


def escape_mixing_weight(k: float, eps: float) -> float:
    """Pr(I=1) = p/(p+eps) with p = 1/2 - 1/k."""
    p = 0.5 - 1.0 / k
    return p / (p + eps)


def escape_candidate(table: GroupTable, mask: np.ndarray, generators, eps: float, k: float, src) -> tuple:
    """u v^I r^(1-I): u, v uniform on A, r a random subproduct on the generators."""
    from .cube import random_subproduct
    from .groups import GeneratingSet

    G = table.group
    A = np.flatnonzero(mask)
    u = table.elements[A[src.randrange(A.size)]]
    if src.random() < escape_mixing_weight(k, eps):
        v = table.elements[A[src.randrange(A.size)]]
        return G.multiply(u, v)
    gens = generators if isinstance(generators, GeneratingSet) else GeneratingSet(list(generators))
    return G.multiply(u, random_subproduct(G, gens, src))


def measure_escape(table: GroupTable, mask: np.ndarray, generators, eps: float, k: float,
                   src, draws: int = 100_000) -> float:
    outside = 0
    for _ in range(draws):
        g = escape_candidate(table, mask, generators, eps, k, src)
        if not mask[table.idx(g)]:
            outside += 1
    return outside / draws


def cube_doubling_equivalence(table: GroupTable, mask: np.ndarray) -> bool:
    """g not in A^-1 A  <=>  A g and A are disjoint, for every g."""
    a = np.flatnonzero(mask)
    inv_a = np.zeros_like(mask)
    inv_a[table.inverse_index[a]] = True
    quotient = product_set(table, inv_a, mask)
    hits = mask[table.table[a]].any(axis=0)     # column g: some a*g in A
    return bool(np.array_equal(~quotient, ~hits))
