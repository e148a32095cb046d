"""Invariant battery over the builtin small groups.

Each invariant is a function ``(ctx, src) -> InvariantResult`` that runs a
handful of exact checks on one enumerated group and records a serializable
witness for every failure. The battery is what ``fibrand verify`` runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .builtins import SUITE, NamedGroup, builtin_group
from .cube import CubeParams, FibonacciCube, inject_fault, replay_trace
from .oracle import (IDENTITY_TOL, Dist, GroupTable, booster_t_trajectory,
                     decompose, escape_analyze, expected_norm_identity_check,
                     fuzzy_subgroup_check, law_of_cube, law_of_cube_chronological,
                     norm_trajectory)
from .rng import RandomSource
from .uniformizer import CubePairSampler


@lru_cache(maxsize=16)
def group_table(name: str) -> tuple[NamedGroup, GroupTable]:
    """Enumerated builtin group, cached per process (S_7's table is 100 MB)."""
    ng = builtin_group(name)
    return ng, GroupTable(ng.group, ng.generators, cap=10_000, name=ng.name)


# random instances

def random_pmf(n: int, gen: np.random.Generator) -> np.ndarray:
    """A probability vector with random concentration and occasional zeros."""
    alpha = 10 ** gen.uniform(-1.5, 1.0)
    p = gen.dirichlet(np.full(n, alpha))
    if gen.random() < 0.3:
        p[gen.random(n) < 0.3] = 0.0
        if p.sum() == 0:
            p[gen.integers(n)] = 1.0
    return p / p.sum()


def random_dist(table: GroupTable, gen: np.random.Generator) -> Dist:
    return Dist(table, random_pmf(table.order, gen))


def _inverse_pairs(table: GroupTable) -> list[np.ndarray]:
    seen = np.zeros(table.order, dtype=bool)
    pairs = []
    for i in range(table.order):
        if not seen[i]:
            j = table.inverse_index[i]
            seen[i] = seen[j] = True
            pairs.append(np.unique([i, j]))
    return pairs


def random_symmetric_subset(table: GroupTable, gen: np.random.Generator) -> np.ndarray:
    """Symmetric set: either uniform random or a subgroup with a few pairs toggled."""
    pairs = _inverse_pairs(table)
    mask = np.zeros(table.order, dtype=bool)
    if gen.random() < 0.5:
        density = gen.uniform(0.05, 1.0)
        for pr in pairs:
            if gen.random() < density:
                mask[pr] = True
    else:
        gens = gen.integers(table.order, size=gen.integers(1, 3))
        mask = table.generated_mask([int(g) for g in gens])
        for _ in range(gen.integers(0, 3)):
            pr = pairs[gen.integers(len(pairs))]
            mask[pr] = ~mask[pr]
    if not mask.any():
        mask[0] = True
    return mask


def escape_instance(table: GroupTable, gen: np.random.Generator) -> np.ndarray:
    """Subgroups, subgroups plus an inverse pair, subgroups minus one, and random sets."""
    kind = gen.integers(4)
    if kind == 3:
        return random_symmetric_subset(table, gen)
    gens = gen.integers(table.order, size=gen.integers(1, 3))
    mask = table.generated_mask([int(g) for g in gens])
    pairs = _inverse_pairs(table)
    if kind == 1:
        outside = [pr for pr in pairs if not mask[pr].any()]
        if outside:
            mask[outside[gen.integers(len(outside))]] = True
    elif kind == 2:
        inside = [pr for pr in pairs if mask[pr].all() and pr[0] != 0]
        if inside:
            mask[inside[gen.integers(len(inside))]] = False
    return mask


# results

@dataclass
class InvariantResult:
    name: str
    group: str
    checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> int:
        return self.checks - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, **witness):
        self.failures.append(witness)


@dataclass
class Context:
    ng: NamedGroup
    table: GroupTable
    seeds: int


def _cube(ctx: Context, seed: int, t: int) -> FibonacciCube:
    params = CubeParams(t=max(t, len(ctx.ng.generators)))
    return FibonacciCube(ctx.ng.group, ctx.ng.generators, params).build(RandomSource(seed, "cube"))


def inv_norm_monotone(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("norm-monotone", ctx.ng.name)
    floor = 1 / math.sqrt(ctx.table.order)
    for seed in range(ctx.seeds):
        norms = norm_trajectory(ctx.table, _cube(ctx, seed, 40))
        for i in range(1, len(norms)):
            res.checks += 1
            if norms[i] > norms[i - 1] + IDENTITY_TOL or norms[i] < floor - IDENTITY_TOL:
                res.fail(seed=seed, step=i, before=norms[i - 1], after=norms[i])
    return res


def inv_t_monotone(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("t-monotone", ctx.ng.name)
    for seed in range(ctx.seeds):
        cube = _cube(ctx, seed, 20)
        w = CubePairSampler(cube)
        qsrc = RandomSource(seed, "booster")
        factors = [w.sample(qsrc) for _ in range(30)]
        traj = booster_t_trajectory(ctx.table, factors)
        for i in range(1, len(traj)):
            res.checks += 1
            if traj[i] > traj[i - 1] + IDENTITY_TOL:
                res.fail(seed=seed, step=i, before=traj[i - 1], after=traj[i])
    return res


def inv_decomposition(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("decomposition", ctx.ng.name)
    gen = src.numpy
    for trial in range(20):
        x = random_dist(ctx.table, gen)
        y = random_dist(ctx.table, gen)
        p_i = float(gen.uniform(0, 0.95))
        z = x.mix(y, p_i)
        got = decompose(z, x, p_i)
        res.checks += 1
        err = float(np.abs(got.p - y.p).max())
        back = float(np.abs(x.mix(got, p_i).p - z.p).max())
        if err > 1e-9 or back > IDENTITY_TOL:
            res.fail(trial=trial, p_i=p_i, max_error=err, reconstruction_error=back)
    return res


def inv_fuzzy_subgroup(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("fuzzy-subgroup", ctx.ng.name)
    gen = src.numpy
    for trial in range(40 if ctx.table.order <= 200 else 4):
        mask = random_symmetric_subset(ctx.table, gen)
        rep = fuzzy_subgroup_check(ctx.table, mask)
        res.checks += 1
        if not rep.lemma_holds:
            res.fail(trial=trial, members=np.flatnonzero(mask).tolist(), delta_star=rep.delta_star,
                     growth=rep.growth, closure_is_subgroup=rep.closure_is_subgroup)
    return res


def inv_escape(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("escape", ctx.ng.name)
    gen = src.numpy
    for trial in range(40 if ctx.table.order <= 200 else 4):
        mask = escape_instance(ctx.table, gen)
        rep = escape_analyze(ctx.table, mask)
        res.checks += 1
        if not rep.dichotomy_holds:
            res.fail(trial=trial, members=np.flatnonzero(mask).tolist(),
                     escape_prob=rep.escape_prob, removed_fraction=rep.removed_fraction,
                     a_prime_subgroup=rep.a_prime_subgroup)
    return res


def inv_expected_norm(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("expected-norm", ctx.ng.name)
    gen = src.numpy
    for trial in range(10 if ctx.table.order <= 200 else 2):
        x, w = random_dist(ctx.table, gen), random_dist(ctx.table, gen)
        p0 = float(gen.random())
        r = expected_norm_identity_check(x, w, p0)
        res.checks += 1
        if abs(r["lhs"] - r["rhs"]) >= 1e-10:
            res.fail(trial=trial, p_e0=p0, **r)
    return res


def inv_amplifier(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("amplifier", ctx.ng.name)
    gen = src.numpy
    for trial in range(10 if ctx.table.order <= 200 else 2):
        x, y = random_dist(ctx.table, gen), random_dist(ctx.table, gen)
        res.checks += 1
        prod = (x * y).eps_uniform
        bound = x.eps_uniform * y.eps_uniform
        if prod > bound + 1e-12 * max(1.0, bound):
            res.fail(trial=trial, eps_xy=prod, bound=bound)
    return res


def inv_trace_replay(ctx: Context, src: RandomSource) -> InvariantResult:
    res = InvariantResult("trace-replay", ctx.ng.name)
    for seed in range(ctx.seeds):
        cube = _cube(ctx, seed, 30)
        problems = replay_trace(cube)
        res.checks += 1
        if problems:
            res.fail(seed=seed, problems=problems[:5], problem_count=len(problems))
        a = law_of_cube(ctx.table, cube)
        b = law_of_cube_chronological(ctx.table, cube)
        res.checks += 1
        diff = float(np.abs(a.p - b.p).max())
        if diff > IDENTITY_TOL:
            res.fail(seed=seed, law_difference=diff)
    return res


INVARIANTS = {
    "norm-monotone": inv_norm_monotone,
    "t-monotone": inv_t_monotone,
    "decomposition": inv_decomposition,
    "fuzzy-subgroup": inv_fuzzy_subgroup,
    "escape": inv_escape,
    "expected-norm": inv_expected_norm,
    "amplifier": inv_amplifier,
    "trace-replay": inv_trace_replay,
}


@dataclass
class BatteryReport:
    results: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def summary(self) -> dict:
        out: dict = {}
        for r in self.results:
            entry = out.setdefault(r.name, {"passed": 0, "checks": 0})
            entry["passed"] += r.passed
            entry["checks"] += r.checks
        return out

    def failures(self) -> list[dict]:
        return [{"invariant": r.name, "group": r.group, "witness": w}
                for r in self.results for w in r.failures]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "summary": self.summary(), "failures": self.failures(),
                "per_group": [{"invariant": r.name, "group": r.group, "passed": r.passed,
                               "checks": r.checks} for r in self.results]}


def run_battery(groups=None, only=None, seeds: int = 3, seed: int = 0,
                fault: str | None = None) -> BatteryReport:
    groups = list(groups) if groups else list(SUITE)
    names = list(only) if only else list(INVARIANTS)
    unknown = [n for n in names if n not in INVARIANTS]
    if unknown:
        raise KeyError(f"unknown invariant(s): {', '.join(unknown)}")
    results = []
    for gname in groups:
        ng, table = group_table(gname)
        ctx = Context(ng, table, seeds)
        for name in names:
            src = RandomSource(seed, f"verify/{ng.name}/{name}")
            if fault:
                with inject_fault(fault):
                    results.append(INVARIANTS[name](ctx, src))
            else:
                results.append(INVARIANTS[name](ctx, src))
    return BatteryReport(results)


