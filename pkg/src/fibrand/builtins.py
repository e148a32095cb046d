"""Small named groups shipped with the package.

Names: ``Z<n>`` cyclic, ``D<2n>`` dihedral of order 2n, ``Q8``, ``S<n>`` and
``A<n>`` for n <= 15, ``SL(2,3)`` and ``SL(3,2)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .groups import BlackBoxGroup, GeneratingSet, MatrixGroup, PermutationGroup
from .io import parse_cycles


@dataclass
class NamedGroup:
    name: str
    group: BlackBoxGroup
    generators: GeneratingSet
    order: int
    # "S" or "A" with the degree when the group is the full symmetric/alternating group
    family: tuple | None = None


def _perm(n: int, *cycles: str) -> tuple:
    return parse_cycles("".join(cycles), n)


def _cycle(points) -> str:
    return "(" + " ".join(map(str, points)) + ")"


def symmetric(n: int) -> NamedGroup:
    G = PermutationGroup(n)
    if n == 1:
        gens = [G.identity]
    elif n == 2:
        gens = [_perm(2, "(1 2)")]
    else:
        gens = [_perm(n, "(1 2)"), _perm(n, _cycle(range(1, n + 1)))]
    return NamedGroup(f"S{n}", G, GeneratingSet(gens), math.factorial(n), ("S", n))


def alternating(n: int) -> NamedGroup:
    if n < 3:
        raise ValueError("A_n needs n >= 3")
    G = PermutationGroup(n)
    three = _perm(n, "(1 2 3)")
    if n == 3:
        gens = [three]
    elif n % 2:
        gens = [three, _perm(n, _cycle(range(1, n + 1)))]
    else:
        gens = [three, _perm(n, _cycle(range(2, n + 1)))]
    return NamedGroup(f"A{n}", G, GeneratingSet(gens), math.factorial(n) // 2, ("A", n))


def cyclic(n: int) -> NamedGroup:
    G = PermutationGroup(n)
    gen = _perm(n, _cycle(range(1, n + 1))) if n > 1 else G.identity
    return NamedGroup(f"Z{n}", G, GeneratingSet([gen]), n)


def dihedral(order: int) -> NamedGroup:
    if order % 2 or order < 4:
        raise ValueError("dihedral groups have even order >= 4")
    n = order // 2
    G = PermutationGroup(n)
    rot = _perm(n, _cycle(range(1, n + 1)))
    # reflection i -> n + 1 - i
    refl = tuple(n - 1 - i for i in range(n))
    return NamedGroup(f"D{order}", G, GeneratingSet([rot, refl]), order)


def quaternion() -> NamedGroup:
    # regular representation on {1, -1, i, -i, j, -j, k, -k} = points 1..8
    G = PermutationGroup(8)
    i_gen = _perm(8, "(1 3 2 4)(5 8 6 7)")
    j_gen = _perm(8, "(1 5 2 6)(3 7 4 8)")
    return NamedGroup("Q8", G, GeneratingSet([i_gen, j_gen]), 8)


def sl23() -> NamedGroup:
    G = MatrixGroup(2, 3)
    gens = [G.validate([1, 1, 0, 1]), G.validate([1, 0, 1, 1])]
    return NamedGroup("SL(2,3)", G, GeneratingSet(gens), 24)


def sl32() -> NamedGroup:
    G = MatrixGroup(3, 2)
    gens = [G.validate([1, 1, 0, 0, 1, 0, 0, 0, 1]), G.validate([0, 0, 1, 1, 0, 0, 0, 1, 0])]
    return NamedGroup("SL(3,2)", G, GeneratingSet(gens), 168)


_PATTERNS = [
    (re.compile(r"^S(\d+)$"), lambda m: symmetric(int(m.group(1)))),
    (re.compile(r"^A(\d+)$"), lambda m: alternating(int(m.group(1)))),
    (re.compile(r"^Z(\d+)$"), lambda m: cyclic(int(m.group(1)))),
    (re.compile(r"^D(\d+)$"), lambda m: dihedral(int(m.group(1)))),
    (re.compile(r"^Q8$"), lambda m: quaternion()),
    (re.compile(r"^SL\(?2,?3\)?$"), lambda m: sl23()),
    (re.compile(r"^SL\(?3,?2\)?$"), lambda m: sl32()),
]


def builtin_group(name: str) -> NamedGroup:
    key = name.strip().upper().replace(" ", "").replace("_", "")
    for pattern, build in _PATTERNS:
        m = pattern.match(key)
        if m:
            ng = build(m)
            if ng.family and ng.family[1] > 15:
                raise ValueError("builtin S_n/A_n stop at n = 15")
            return ng
    raise KeyError(f"unknown builtin group {name!r}")


SUITE = ["Z12", "D8", "Q8", "S3", "S4", "SL(2,3)", "A5", "S5", "S7"]
