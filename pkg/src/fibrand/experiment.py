"""Sampling experiments: build a sampler, draw, bin by cycle type, test.

A run is fully described by an :class:`ExperimentSpec`; the same spec always
produces the same report. Operation counts are taken from the group's
counter, split into the build (precompute) and the draws.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .builtins import builtin_group
from .cube import CubeParams, FibonacciCube, default_t
from .groups import BlackBoxGroup, GeneratingSet
from .io import parse_group_spec
from .prodrepl import ClassicPRSampler, VariantPRSampler
from .rng import RandomSource
from .stats import (ChiSquareReport, chi_square_test, classify, cycle_type_distribution,
                    merge_by_label, parse_cycle_label, read_expected_table)
from .uniformizer import CubePairSampler, UniformizerConfig, make_epsilon_uniform_generator

ALGORITHMS = ("fibcube", "fibcube+boost", "pr-classic", "pr-variant")
REPORT_SCHEMA = "fibrand-report/1"


class SpecError(ValueError):
    """Bad experiment parameters or inputs (maps to exit code 2)."""


@dataclass
class ExperimentSpec:
    group: str = "A5"
    algo: str = "fibcube"
    t: int | None = None
    abc: tuple = (1.0, 1.0, 1.0)
    k: int | None = None
    epsilon: float = 0.1
    samples: int = 10_000
    seed: int = 0
    partition: str | None = None
    burn_in: int | None = None
    steps: int | None = None
    order: int | None = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise SpecError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")
        if self.samples < 0:
            raise SpecError("samples must be non-negative")
        if self.t is not None and self.t < 1:
            raise SpecError("t must be positive")
        if len(self.abc) != 3 or min(self.abc) <= 0:
            raise SpecError("a, b, c must be three positive numbers")
        if self.k is not None and self.k < 1:
            raise SpecError("k must be positive")
        if not 0 < self.epsilon < 1:
            raise SpecError("epsilon must lie in (0, 1)")
        if self.partition is not None and not Path(self.partition).exists():
            raise SpecError(f"partition file not found: {self.partition}")


@dataclass
class ResolvedGroup:
    name: str
    group: BlackBoxGroup
    generators: GeneratingSet
    order: int | None
    family: tuple | None


def resolve_group(name: str, order: int | None = None) -> ResolvedGroup:
    """A builtin name or a path to a generator file."""
    path = Path(name)
    if path.suffix or path.exists() or "/" in name:
        if not path.exists():
            raise SpecError(f"group file not found: {name}")
        G, S = parse_group_spec(path.read_text())
        return ResolvedGroup(path.stem, G, S, order, None)
    try:
        ng = builtin_group(name)
    except (KeyError, ValueError) as exc:
        raise SpecError(str(exc.args[0] if exc.args else exc)) from None
    return ResolvedGroup(ng.name, ng.group, ng.generators, ng.order, ng.family)


def _log2_size(rg: ResolvedGroup) -> int:
    if rg.order is not None:
        return math.ceil(math.log2(max(rg.order, 2)))
    return rg.group.encoding_length


def cube_params(spec: ExperimentSpec, rg: ResolvedGroup) -> CubeParams:
    t = spec.t if spec.t is not None else default_t(rg.order, rg.group.encoding_length)
    a, b, c = spec.abc
    return CubeParams(a=a, b=b, c=c, t=t)


def build_sampler(spec: ExperimentSpec, rg: ResolvedGroup, src: RandomSource):
    """Return (sampler, details) for the requested algorithm."""
    G, S = rg.group, rg.generators
    details: dict = {}
    if spec.algo == "fibcube":
        params = cube_params(spec, rg)
        cube = FibonacciCube(G, S, params)
        if params.t < len(cube):
            raise SpecError(f"t={params.t} is below the number of generators {len(cube)}")
        cube.build(src.derive("cube"))
        details.update(t=params.t, cube_length=len(cube))
        return CubePairSampler(cube), details
    if spec.algo == "fibcube+boost":
        params = cube_params(spec, rg)
        cfg = UniformizerConfig(epsilon=spec.epsilon)
        if rg.order is None:
            cfg.booster_t = 2 * _log2_size(rg)
        sampler = make_epsilon_uniform_generator(G, S, spec.epsilon, cfg, src, order=rg.order,
                                                 cube_params=params)
        details.update(t=params.t, booster_t=sampler.booster.t, amplifier_k=sampler.k)
        return sampler.final, details
    L = _log2_size(rg)
    k = spec.k if spec.k is not None else 2 * L + 2
    if spec.algo == "pr-classic":
        burn = spec.burn_in if spec.burn_in is not None else 10 * k
        details.update(k=k, burn_in=burn, moves_per_draw=k)
        return ClassicPRSampler(G, S, k, burn, src.derive("pr"), gap=k), details
    steps = spec.steps if spec.steps is not None else min(L, k - 1)
    details.update(k=k, steps=steps)
    try:
        return VariantPRSampler(G, S, k, steps), details
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def expected_table(spec: ExperimentSpec, rg: ResolvedGroup) -> tuple[list[str], list[float], str]:
    if spec.partition is not None:
        labels, values = merge_by_label(*read_expected_table(spec.partition))
        degree = getattr(rg.group, "degree", None)
        for l in labels:
            try:
                ct = parse_cycle_label(l)
            except ValueError:
                raise SpecError(f"partition label {l!r} is not a cycle type") from None
            if degree is not None and sum(ct) != degree:
                raise SpecError(f"cycle type {l!r} does not partition the degree {degree}")
        return labels, values, "file"
    if rg.family is not None:
        fam, n = rg.family
        dist = cycle_type_distribution(n, fam)
        return list(dist), list(dist.values()), "analytic"
    raise SpecError("no analytic class sizes for this group: supply --partition with expected counts")


@dataclass
class ExperimentReport:
    spec: dict
    group: str
    order: int | None
    details: dict
    precompute_ops: int
    sample_ops: int
    samples: int
    categories: int
    partition_source: str
    chi: ChiSquareReport | None = None
    schema: str = field(default=REPORT_SCHEMA)

    @property
    def mean_ops_per_sample(self) -> float:
        return self.sample_ops / self.samples if self.samples else 0.0

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "spec": self.spec,
            "group": self.group,
            "order": self.order,
            "details": self.details,
            "precompute_ops": self.precompute_ops,
            "sample_ops": self.sample_ops,
            "samples": self.samples,
            "mean_ops_per_sample": self.mean_ops_per_sample,
            "categories": self.categories,
            "partition_source": self.partition_source,
            "chi_square": self.chi.to_dict() if self.chi else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def run_experiment(spec: ExperimentSpec, samples_out: list | None = None) -> ExperimentReport:
    if spec.samples == 0:
        raise SpecError("sample count 0 leaves nothing to test")
    rg = resolve_group(spec.group, spec.order)
    if rg.group.kind != "permutation":
        raise SpecError("cycle-type experiments need a permutation group")
    labels, expected, source = expected_table(spec, rg)
    root = RandomSource(spec.seed, "run")
    counter = rg.group.counter
    before = counter.total
    sampler, details = build_sampler(spec, rg, root)
    precompute = counter.total - before
    draw_src = root.derive("sample")
    before = counter.total
    drawn = [sampler.sample(draw_src) for _ in range(spec.samples)]
    sample_ops = counter.total - before
    if samples_out is not None:
        samples_out.extend(drawn)
    try:
        observed = classify(drawn, labels)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    chi = chi_square_test(observed, expected, labels)
    return ExperimentReport(spec=_spec_dict(spec), group=rg.name, order=rg.order, details=details,
                            precompute_ops=precompute, sample_ops=sample_ops, samples=spec.samples,
                            categories=len(labels), partition_source=source, chi=chi)


def _spec_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["abc"] = list(d["abc"])
    return d


TABLE_HEADER = ("group", "|G|", "t/precomp", "classes/df", "chi2", "chi2_.05", "ops/sample", "accepted")


def table_row(rep: ExperimentReport) -> tuple:
    t = rep.details.get("t", rep.details.get("k", "-"))
    order = f"{rep.order:.1e}" if rep.order and rep.order >= 10 ** 6 else str(rep.order or "?")
    chi = rep.chi
    return (rep.group, order, f"{t}/{rep.precompute_ops}",
            f"{rep.categories}/{chi.degrees_of_freedom}", f"{chi.statistic:.1f}",
            f"{chi.critical_value:.1f}", f"{rep.mean_ops_per_sample:.2f}",
            "yes" if chi.accepted else "no")


def format_table(reports) -> str:
    rows = [TABLE_HEADER] + [table_row(r) for r in reports]
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(TABLE_HEADER))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"
