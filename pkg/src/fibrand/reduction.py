"""Shrinking a generating set to a few random subproducts.

Random subproducts of S are added one at a time and kept only when they
enlarge the subgroup generated so far. Equality with <S> is checked by
enumeration when <S> is small enough; for larger permutation groups only the
orbit partitions and a few cheap invariants are compared, and the result is
marked unverified.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .cube import random_subproduct
from .groups import (BlackBoxGroup, EnumerationLimitError, GeneratingSet,
                     enumerate_elements)
from .rng import RandomSource

log = logging.getLogger(__name__)

ENUMERATION_CAP = 100_000
PAIR_DEGREE_LIMIT = 64


class UnverifiableError(RuntimeError):
    """No equality check is available for this backend at this size."""


@dataclass
class ReducedSet(GeneratingSet):
    verification: str = "enumeration"   # or "orbits-unverified"
    warning: str | None = None
    rounds: int = 0


def reduction_budget(L_bound: int, p_succ: float, c: float = 4.0) -> int:
    if not 0 < p_succ < 1:
        raise ValueError("p_succ must lie in (0, 1)")
    if L_bound < 1:
        raise ValueError("L_bound must be positive")
    return max(1, math.ceil(c * L_bound * math.log(1 / (1 - p_succ))))


def orbits(G: BlackBoxGroup, gens, on_pairs: bool = False) -> list[frozenset]:
    """Orbit partition of the points (or of ordered point pairs) under ``gens``."""
    d = G.degree
    if on_pairs:
        gens = [tuple(g[x] * d + g[y] for x in range(d) for y in range(d)) for g in gens]
    n = d * d if on_pairs else d
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        for x in range(n):
            a, b = find(x), find(g[x])
            if a != b:
                parent[a] = b
    blocks: dict[int, set] = {}
    for x in range(n):
        blocks.setdefault(find(x), set()).add(x)
    return sorted((frozenset(b) for b in blocks.values()), key=min)


def _is_even(g) -> bool:
    seen = [False] * len(g)
    swaps = 0
    for s in range(len(g)):
        length = 0
        x = s
        while not seen[x]:
            seen[x] = True
            x = g[x]
            length += 1
        if length:
            swaps += length - 1
    return swaps % 2 == 0


class _Verifier:
    def __init__(self, G: BlackBoxGroup, S: GeneratingSet):
        self.G = G
        try:
            self.target = len(enumerate_elements(G, S, cap=ENUMERATION_CAP))
            self.mode = "enumeration"
        except EnumerationLimitError:
            if G.kind != "permutation":
                raise UnverifiableError(
                    f"<S> exceeds {ENUMERATION_CAP} elements and no other check exists for "
                    f"{G.kind} groups") from None
            self.mode = "orbits-unverified"
            self.target = self._signature(list(S))

    def _signature(self, gens):
        """Cheap invariants of <gens>: orbits on points and pairs, parity, commutativity."""
        G = self.G
        pairs = orbits(G, gens, on_pairs=True) if G.degree <= PAIR_DEGREE_LIMIT else None
        abelian = all(G._mul(a, b) == G._mul(b, a) for a in gens for b in gens)
        return (orbits(G, gens), pairs, all(_is_even(g) for g in gens), abelian)

    def size(self, gens) -> int | None:
        if self.mode != "enumeration" or not gens:
            return 1 if not gens else None
        return len(enumerate_elements(self.G, gens, cap=ENUMERATION_CAP))

    def equal(self, gens) -> bool:
        if self.mode == "enumeration":
            return self.size(gens) == self.target
        return self._signature(gens) == self.target

    def grows(self, gens, candidate, current_size) -> tuple[bool, int | None]:
        if self.mode == "enumeration":
            new = self.size(gens + [candidate])
            return new > current_size, new
        if not gens:
            return True, None
        return self._signature(gens + [candidate]) != self._signature(gens), None


def reduce_generators(G: BlackBoxGroup, S: GeneratingSet, L_bound: int, p_succ: float,
                      src: RandomSource) -> ReducedSet:
    """Random-subproduct generating set for <S>, or S itself with a warning."""
    if len(S) < 1:
        raise ValueError("S must be nonempty")
    verifier = _Verifier(G, S)
    budget = reduction_budget(L_bound, p_succ)
    kept: list = []
    size = 1
    rounds = 0
    stack = G.pack(list(S))
    while rounds < budget:
        rounds += 1
        r = random_subproduct(G, S, src, stack)
        if G.is_identity(r):
            continue
        grew, new_size = verifier.grows(kept, r, size)
        if grew:
            kept.append(r)
            size = new_size if new_size is not None else size
            if verifier.equal(kept):
                return ReducedSet(kept, [], verification=verifier.mode, rounds=rounds)
    msg = f"no generating subproduct set found in {budget} rounds; returning S unchanged"
    log.warning(msg)
    return ReducedSet(list(S), list(S.names), verification=verifier.mode, warning=msg, rounds=rounds)
