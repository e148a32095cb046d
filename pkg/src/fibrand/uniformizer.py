"""From semi-uniform to epsilon-uniform samplers.

Two tools. The booster multiplies a draw w from a semi-uniform source W by a
fixed random cube q_1^E_1 ... q_t^E_t whose factors were themselves drawn from
W once, at build time. The amplifier multiplies k independent draws of a
gamma-uniform source, which is gamma^k-uniform.

The full pipeline chains a Fibonacci cube (pair element R^-1 R'), a booster
and an amplifier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .cube import CubeParams, FibonacciCube, default_t
from .groups import BlackBoxGroup, GeneratingSet
from .rng import RandomSource


class Sampler:
    """Anything with ``group`` and ``sample(src)``; draws are counted in the
    group's ``sample`` bucket when called through :meth:`draw`."""

    group: BlackBoxGroup

    def sample(self, src: RandomSource) -> tuple:
        raise NotImplementedError

    def draw(self, src: RandomSource) -> tuple:
        with self.group.counter.phase("sample"):
            return self.sample(src)


class CubeSampler(Sampler):
    """Draws of R itself."""

    def __init__(self, cube: FibonacciCube):
        self.cube = cube
        self.group = cube.group

    def sample(self, src):
        return self.cube.sample_r(src)


class CubePairSampler(Sampler):
    """Draws of R^-1 R'."""

    def __init__(self, cube: FibonacciCube):
        self.cube = cube
        self.group = cube.group

    def sample(self, src):
        return self.cube.sample_pair(src)


class PointSampler(Sampler):
    """Always the same element; a degenerate source for tests and diagnostics."""

    def __init__(self, group: BlackBoxGroup, element: tuple | None = None):
        self.group = group
        self.element = group.identity if element is None else element

    def sample(self, src):
        return self.element


@dataclass
class UniformizerConfig:
    alpha: float = 0.75
    lam: float = 8.0
    epsilon: float = 0.1
    booster_t: int | None = None
    gamma_assumed: float = 7 / 8

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.lam <= 1:
            raise ValueError("lambda must exceed 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.gamma_assumed < 1:
            raise ValueError("gamma_assumed must lie in (0, 1)")

    @property
    def gamma(self) -> float:
        return 14 / (11 + 3 * self.alpha)


def booster_length(order: int, alpha: float, lam: float) -> int:
    """Smallest t with t >= 2 log_gamma |G| + log_gamma(64 lambda), gamma = 14/(11 + 3 alpha)."""
    gamma = 14 / (11 + 3 * alpha)
    return math.ceil(2 * math.log(order, gamma) + math.log(64 * lam, gamma))


def amplifier_count(epsilon: float, gamma: float) -> int:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return max(1, math.ceil(math.log(epsilon) / math.log(gamma)))


class BoostedSampler(Sampler):
    """w * q_1^E_1 ... q_t^E_t with w a fresh draw of the base sampler."""

    def __init__(self, base: Sampler, factors: list, build_ops: int = 0):
        self.base = base
        self.group = base.group
        self.factors = list(factors)
        self.build_ops = build_ops
        self._stack = self.group.pack(self.factors)

    @property
    def t(self) -> int:
        return len(self.factors)

    def sample(self, src):
        w = self.base.sample(src)
        bits = src.bits(self.t)
        if not bits.any():
            return w
        p = self.group.chain(self._stack, bits)
        return self.group.multiply(w, p)


def build_booster(W: Sampler, G: BlackBoxGroup, cfg: UniformizerConfig, src: RandomSource,
                  order: int | None = None) -> BoostedSampler:
    if cfg.booster_t is not None:
        t = cfg.booster_t
    elif order is not None:
        t = booster_length(order, cfg.alpha, cfg.lam)
    else:
        raise ValueError("group order unknown: pass booster_t explicitly")
    if t < 0:
        raise ValueError("booster_t must be non-negative")
    before = G.counter.total
    with G.counter.phase("precompute"):
        factors = [W.sample(src) for _ in range(t)]
    return BoostedSampler(W, factors, G.counter.total - before)


def sample_boosted(bs: BoostedSampler, src: RandomSource) -> tuple:
    return bs.sample(src)


class AmplifiedSampler(Sampler):
    """Product of k independent draws of the base sampler."""

    def __init__(self, base: Sampler, k: int):
        if k < 1:
            raise ValueError("k must be at least 1")
        self.base = base
        self.group = base.group
        self.k = k

    def sample(self, src):
        acc = self.base.sample(src)
        for _ in range(self.k - 1):
            acc = self.group.multiply(acc, self.base.sample(src))
        return acc


def amplify(base: Sampler, k: int, src: RandomSource) -> tuple:
    return AmplifiedSampler(base, k).sample(src)


class EpsilonUniformSampler(Sampler):
    """Cube, booster and amplifier chained; keeps its construction and draw costs."""

    def __init__(self, cube: FibonacciCube, booster: BoostedSampler, k: int,
                 construction_ops: int, epsilon: float):
        self.cube = cube
        self.booster = booster
        self.k = k
        self.final = AmplifiedSampler(booster, k)
        self.group = cube.group
        self.construction_ops = construction_ops
        self.epsilon = epsilon
        self.draws = 0
        self.draw_ops = 0
        self.last_draw_ops = 0

    def sample(self, src):
        return self.final.sample(src)

    def draw(self, src):
        counter = self.group.counter
        with counter.phase("sample", reset=True):
            out = self.final.sample(src)
        self.last_draw_ops = counter.bucket_total("sample")
        self.draws += 1
        self.draw_ops += self.last_draw_ops
        return out

    @property
    def mean_draw_ops(self) -> float:
        return self.draw_ops / self.draws if self.draws else 0.0

    def descriptor(self) -> dict:
        """Stages and parameters, for storing next to a saved cube."""
        return {
            "stages": ["fibcube-pair", "booster", "amplifier"],
            "cube": {"t": self.cube.params.t, "a": self.cube.params.a,
                     "b": self.cube.params.b, "c": self.cube.params.c},
            "booster_t": self.booster.t,
            "amplifier_k": self.k,
            "epsilon": self.epsilon,
            "construction_ops": self.construction_ops,
        }


def make_epsilon_uniform_generator(G: BlackBoxGroup, S: GeneratingSet, epsilon: float,
                                   cfg: UniformizerConfig | None, src: RandomSource,
                                   order: int | None = None,
                                   cube_params: CubeParams | None = None) -> EpsilonUniformSampler:
    """Build the full pipeline; ``src`` is split into ``cube`` and ``booster`` streams."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    cfg = cfg or UniformizerConfig(epsilon=epsilon)
    if cube_params is None:
        cube_params = CubeParams(t=default_t(order, G.encoding_length))
    before = G.counter.total
    cube = FibonacciCube(G, S, cube_params).build(src.derive("cube"))
    booster = build_booster(CubePairSampler(cube), G, cfg, src.derive("booster"), order=order)
    k = amplifier_count(epsilon, cfg.gamma_assumed)
    return EpsilonUniformSampler(cube, booster, k, G.counter.total - before, epsilon)
