"""Product replacement: the classic heuristic and the no-reuse variant.

Classic move: pick an ordered pair of distinct slots (i, j) and a side, then
replace x_i by x_i x_j or x_j x_i.

Variant move: pick a slot c that has not been picked before and right-multiply
every other slot y by x_c; x_c itself stays put. After ``steps`` moves one of
the never-picked slots is returned.

The variant has two modes. In ``"cube"`` mode (the default) each other slot is
multiplied by x_c^E with its own fair bit E, so an unchosen slot is its start
value times a Fibonacci-style cube over the chosen values. In ``"literal"``
mode every other slot is multiplied unconditionally. The literal chain has no
randomness beyond the slot choices and collapses onto a few elements: on S_3
with k=8 and 6 steps the returned slot is supported on two elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groups import BlackBoxGroup, GeneratingSet
from .rng import RandomSource


def default_k(order: int) -> int:
    return 2 * math.ceil(math.log2(max(order, 2))) + 2


def default_steps(order: int) -> int:
    return math.ceil(math.log2(max(order, 2)))


@dataclass
class ReplacementState:
    group: BlackBoxGroup
    slots: list
    chosen: list = field(default_factory=list)   # chosen flags, variant only
    step: int = 0
    history: list = field(default_factory=list)  # slot index picked at each variant step

    def __post_init__(self):
        if len(self.slots) < 2:
            raise ValueError("product replacement needs k >= 2 slots")
        if not self.chosen:
            self.chosen = [False] * len(self.slots)

    @classmethod
    def from_generators(cls, G: BlackBoxGroup, S: GeneratingSet, k: int) -> "ReplacementState":
        """Slots start as S repeated cyclically up to length k."""
        if k < 2:
            raise ValueError("product replacement needs k >= 2 slots")
        gens = list(S)
        return cls(G, [gens[i % len(gens)] for i in range(k)])

    @property
    def k(self) -> int:
        return len(self.slots)

    def unchosen(self) -> list[int]:
        return [i for i, c in enumerate(self.chosen) if not c]


def pr_classic_move(state: ReplacementState, src: RandomSource) -> None:
    k = state.k
    i = src.randrange(k)
    j = src.randrange(k - 1)
    if j >= i:
        j += 1
    G = state.group
    if src.bit():
        state.slots[i] = G.multiply(state.slots[i], state.slots[j])
    else:
        state.slots[i] = G.multiply(state.slots[j], state.slots[i])
    state.step += 1


def pr_classic_sample(state: ReplacementState, burn_in: int, src: RandomSource) -> tuple:
    """``burn_in`` moves, then a uniformly chosen slot."""
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    for _ in range(burn_in):
        pr_classic_move(state, src)
    return state.slots[src.randrange(state.k)]


VARIANT_MODES = ("cube", "literal")


def pr_variant_move(state: ReplacementState, c: int, src: RandomSource | None = None) -> None:
    """Pick slot c. With ``src`` each other slot gets its own exponent bit."""
    if state.chosen[c]:
        raise ValueError(f"slot {c} was already chosen")
    G = state.group
    g = state.slots[c]
    bits = src.bits(state.k) if src is not None else None
    for y in range(state.k):
        if y != c and (bits is None or bits[y]):
            state.slots[y] = G.multiply(state.slots[y], g)
    state.chosen[c] = True
    state.history.append(c)
    state.step += 1


def pr_fc_variant_run(G: BlackBoxGroup, S: GeneratingSet, k: int, steps: int,
                      src: RandomSource, state: ReplacementState | None = None,
                      mode: str = "cube") -> tuple:
    """One run of the variant; returns a uniformly random never-chosen slot."""
    if mode not in VARIANT_MODES:
        raise ValueError(f"mode must be one of {VARIANT_MODES}")
    if k < 2:
        raise ValueError("product replacement needs k >= 2 slots")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps >= k:
        raise ValueError(f"steps={steps} must be below k={k} so an unchosen slot remains")
    st = state if state is not None else ReplacementState.from_generators(G, S, k)
    for _ in range(steps):
        free = st.unchosen()
        c = free[src.randrange(len(free))]
        pr_variant_move(st, c, src if mode == "cube" else None)
    free = st.unchosen()
    return st.slots[free[src.randrange(len(free))]]


class ClassicPRSampler:
    """Continuing classic chain: ``burn_in`` moves once, then ``gap`` moves per draw."""

    def __init__(self, G: BlackBoxGroup, S: GeneratingSet, k: int, burn_in: int,
                 src: RandomSource, gap: int = 1):
        self.group = G
        self.state = ReplacementState.from_generators(G, S, k)
        self.gap = gap
        with G.counter.phase("precompute"):
            for _ in range(burn_in):
                pr_classic_move(self.state, src)

    def sample(self, src: RandomSource) -> tuple:
        return pr_classic_sample(self.state, self.gap, src)


class VariantPRSampler:
    """Independent variant runs per draw."""

    def __init__(self, G: BlackBoxGroup, S: GeneratingSet, k: int, steps: int, mode: str = "cube"):
        if steps >= k:
            raise ValueError(f"steps={steps} must be below k={k} so an unchosen slot remains")
        self.group, self.generators, self.k, self.steps, self.mode = G, S, k, steps, mode

    def sample(self, src: RandomSource) -> tuple:
        return pr_fc_variant_run(self.group, self.generators, self.k, self.steps, src, mode=self.mode)


def pr_variant_exact_law(table, S: GeneratingSet, k: int, steps: int, mode: str = "cube",
                         max_states: int = 2_000_000):
    """Exact law of the returned slot.

    Every unchosen slot carries the same right multiplier history, so a run is
    summarized by how many unchosen slots still hold each start value and by
    the values m_1..m_s of the slots chosen so far. In cube mode a slot that
    starts at x and is picked at step i holds x m_1^E_1 ... m_(i-1)^E_(i-1);
    in literal mode it holds x m_1 ... m_(i-1). The returned slot has the
    same form with all s chosen values.
    """
    from .oracle import Dist, dist_of_trace

    if mode not in VARIANT_MODES:
        raise ValueError(f"mode must be one of {VARIANT_MODES}")
    if not 0 <= steps < k:
        raise ValueError(f"steps={steps} must lie in [0, k)")
    gens = [table.idx(g) for g in S]
    start_vals = sorted({gens[i % len(gens)] for i in range(k)})
    counts0 = tuple(sum(1 for i in range(k) if gens[i % len(gens)] == v) for v in start_vals)
    T = table.table

    def tail_law(ms):
        if mode == "literal":
            acc = 0
            for m in ms:
                acc = int(T[acc, m])
            return Dist.point(table, acc)
        return dist_of_trace(table, ((table.elements[m], "right") for m in ms))

    states = {(counts0, ()): 1.0}
    for _ in range(steps):
        nxt: dict = {}
        for (counts, ms), pr in states.items():
            free = sum(counts)
            tail = tail_law(ms).p
            support = np.flatnonzero(tail)
            for vi, cnt in enumerate(counts):
                if not cnt:
                    continue
                rest = counts[:vi] + (cnt - 1,) + counts[vi + 1:]
                x = start_vals[vi]
                w = pr * cnt / free
                for h in support:
                    key = (rest, ms + (int(T[x, h]),))
                    nxt[key] = nxt.get(key, 0.0) + w * tail[h]
        states = nxt
        if len(states) > max_states:
            raise ValueError("state space exceeds the exhaustive limit")
    out = np.zeros(table.order)
    for (counts, ms), pr in states.items():
        free = sum(counts)
        tail = tail_law(ms).p
        for vi, cnt in enumerate(counts):
            if cnt:
                x = start_vals[vi]
                out[table.left_map(x)] += pr * cnt / free * tail
    return Dist(table, out / out.sum())


def slots_generate(table, state: ReplacementState) -> np.ndarray:
    """Mask of the subgroup generated by the current slots."""
    return table.generated_mask([table.idx(s) for s in state.slots])


__all__ = [
    "ReplacementState", "pr_classic_move", "pr_classic_sample", "pr_variant_move",
    "pr_fc_variant_run", "pr_variant_exact_law", "ClassicPRSampler", "VariantPRSampler",
    "default_k", "default_steps", "slots_generate", "VARIANT_MODES",
]
