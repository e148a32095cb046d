"""The Fibonacci cube: a random-subproduct cube whose factors are drawn from itself.

A cube is an ordered factor list h_1..h_t and stands for the random element
R = h_1^E_1 ... h_t^E_t with independent fair bits E_j. Each build step draws
a new factor g and grows the list:

case 1  g ~ R, appended on the right      R <- R g^E
case 2  g ~ R, prepended on the left      R <- g^E R
case 3  g ~ random subproduct of S, right R <- R g^E

with the case picked with probability proportional to 1/a, 1/b, 1/c.
Prepending realizes the chronological recurrence directly, so the stored
order is always the order of multiplication.

Samples are drawn from R or from the pair element R^-1 R', R' an
independent copy of R.
"""
from __future__ import annotations

import contextlib
import math
import threading
from dataclasses import asdict, dataclass, field

import numpy as np

from .groups import BlackBoxGroup, GeneratingSet
from .rng import RandomSource

RIGHT = "right"
LEFT = "left"

_FAULTS: set[str] = set()


@contextlib.contextmanager
def inject_fault(name: str):
    """Test hook. ``"sample_r_bitflip"`` flips one bit of every sample_r
    product while leaving the recorded trace untouched."""
    _FAULTS.add(name)
    try:
        yield
    finally:
        _FAULTS.discard(name)


@dataclass
class CubeParams:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    t: int = 20
    seed_with_generators: bool = True

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("case weights a, b, c must be positive")
        if self.t < 1:
            raise ValueError("t must be at least 1")

    @property
    def d(self) -> float:
        return 1 / self.a + 1 / self.b + 1 / self.c

    @property
    def case_weights(self) -> list[float]:
        return [1 / self.a, 1 / self.b, 1 / self.c]


def default_t(order: int | None = None, encoding_length: int | None = None) -> int:
    if order is not None:
        return max(20, 3 * math.ceil(math.log2(max(order, 2))))
    if encoding_length is not None:
        return max(20, 3 * encoding_length)
    return 20


@dataclass
class Factor:
    element: tuple
    step: int
    case: int          # 0 for a seeded generator
    side: str = RIGHT


@dataclass
class TraceStep:
    """One build step as it happened, enough to replay it."""

    step: int
    case: int
    side: str
    element: tuple
    bits: tuple        # bits used to draw the new factor
    multiplies: int


def random_subproduct(G: BlackBoxGroup, S: GeneratingSet, src: RandomSource,
                      _stack=None) -> tuple:
    """g_1^e_1 ... g_k^e_k over ``S`` in order, fair independent bits."""
    element, _ = _random_subproduct_bits(G, S, src, _stack)
    return element


def _random_subproduct_bits(G, S, src, stack=None):
    bits = src.bits(len(S))
    if stack is None:
        stack = G.pack(list(S))
    return G.chain(stack, bits), bits


class FibonacciCube:
    """Factor list plus the machinery to grow and sample it."""

    def __init__(self, group: BlackBoxGroup, generators: GeneratingSet,
                 params: CubeParams | None = None):
        self.group = group
        self.generators = generators
        self.params = params or CubeParams()
        self.factors: list[Factor] = []
        self.trace: list[TraceStep] = []
        self.build_ops = {"multiplies": 0, "inverses": 0}
        self._gen_stack = group.pack(list(generators))
        self._stack = group.pack([])
        self._lock = threading.Lock()
        self._reset_inverses()
        if self.params.seed_with_generators:
            for i, g in enumerate(generators):
                self.factors.append(Factor(g, step=i, case=0, side=RIGHT))
            self._restack()

    def __len__(self):
        return len(self.factors)

    def __repr__(self):
        return f"FibonacciCube({self.group!r}, length={len(self)}, t={self.params.t})"

    @property
    def elements(self) -> list[tuple]:
        return [f.element for f in self.factors]

    def _restack(self):
        self._stack = self.group.pack(self.elements)
        self._reset_inverses()

    def _reset_inverses(self):
        n = len(self.factors)
        self._inv_known = np.zeros(n, dtype=bool)
        # rows 0..n-1 hold h_n^-1 .. h_1^-1, rows n..2n-1 hold h_1 .. h_n
        self._pair_stack = np.concatenate([self._stack, self._stack]) if n else self._stack

    # building

    def _sample_from_bits(self, bits: np.ndarray) -> tuple:
        if "sample_r_bitflip" in _FAULTS and len(bits):
            bits = bits.copy()
            bits[0] ^= 1
        return self.group.chain(self._stack, bits)

    def extend(self, src: RandomSource) -> "FibonacciCube":
        """Add one factor following a randomly chosen case."""
        G = self.group
        case = src.choose_weighted(self.params.case_weights) + 1
        before = (G.counter.multiplies, G.counter.inverses)
        with G.counter.phase("precompute"):
            if case in (1, 2):
                bits = src.bits(len(self.factors))
                g = self._sample_from_bits(bits)
            else:
                g, bits = _random_subproduct_bits(G, self.generators, src, self._gen_stack)
        mult = G.counter.multiplies - before[0]
        self.build_ops["multiplies"] += mult
        self.build_ops["inverses"] += G.counter.inverses - before[1]
        step = len(self.trace) + (len(self.generators) if self.params.seed_with_generators else 0)
        side = LEFT if case == 2 else RIGHT
        factor = Factor(g, step=step, case=case, side=side)
        if side == LEFT:
            self.factors.insert(0, factor)
        else:
            self.factors.append(factor)
        self.trace.append(TraceStep(step, case, side, g, tuple(int(x) for x in bits), mult))
        self._restack()
        return self

    def build(self, src: RandomSource) -> "FibonacciCube":
        """Extend until the cube holds ``params.t`` factors."""
        if self.params.t < len(self.factors):
            raise ValueError(f"t={self.params.t} is below the current cube length {len(self.factors)}")
        while len(self.factors) < self.params.t:
            self.extend(src)
        return self

    # sampling

    def sample_r(self, src: RandomSource) -> tuple:
        """One draw of h_1^E_1 ... h_t^E_t."""
        return self._sample_from_bits(src.bits(len(self.factors)))

    def sample_pair(self, src: RandomSource) -> tuple:
        """One draw of R^-1 R' with R' an independent copy of R.

        Inverses of factors are computed the first time a bit selects them and
        cached, so in steady state a draw costs only multiplications.
        """
        n = len(self.factors)
        if n == 0:
            return self.group.identity
        # bits for R' (forward half), then for R (inverse half)
        forward = src.bits(n)
        backward = src.bits(n)
        mask = np.concatenate([backward[::-1], forward])
        need = np.flatnonzero(backward & ~self._inv_known)
        if need.size:
            with self._lock:
                for j in need:
                    if not self._inv_known[j]:
                        inv = self.group.inverse(self.factors[j].element)
                        self._pair_stack[n - 1 - j] = self.group.pack([inv])[0]
                        self._inv_known[j] = True
        return self.group.chain(self._pair_stack, mask)

    # serialization

    def to_dict(self, seed: int | None = None) -> dict:
        from .io import group_to_dict

        G = self.group

        def enc(e):
            return [x + 1 for x in e] if G.kind == "permutation" else G.rows(e)

        return {
            "format": "fibrand-cube/1",
            "group": group_to_dict(G, self.generators),
            "params": asdict(self.params),
            "seed": seed,
            "factors": [{"element": enc(f.element), "step": f.step, "case": f.case, "side": f.side}
                        for f in self.factors],
            "build_ops": dict(self.build_ops),
        }

    @classmethod
    def from_dict(cls, data: dict, group: BlackBoxGroup | None = None) -> "FibonacciCube":
        from .io import parse_group_spec
        import json

        if data.get("format") != "fibrand-cube/1":
            raise ValueError("not a serialized Fibonacci cube")
        G, S = parse_group_spec(json.dumps(data["group"]))
        if group is not None:
            if not group.same_backend(G):
                raise ValueError("cube was built for a different group backend")
            G = group
        params = CubeParams(**data["params"])
        cube = cls(G, S, CubeParams(**{**asdict(params), "seed_with_generators": False}))
        cube.params = params
        for f in data["factors"]:
            raw = f["element"]
            e = G.validate([x - 1 for x in raw] if G.kind == "permutation" else
                           [x for row in raw for x in row])
            cube.factors.append(Factor(e, f["step"], f["case"], f["side"]))
        cube.build_ops = dict(data.get("build_ops", cube.build_ops))
        cube._restack()
        return cube


def new_cube(G: BlackBoxGroup, S: GeneratingSet, params: CubeParams | None = None) -> FibonacciCube:
    return FibonacciCube(G, S, params)


def extend(cube: FibonacciCube, src: RandomSource) -> FibonacciCube:
    return cube.extend(src)


def sample_r(cube: FibonacciCube, src: RandomSource) -> tuple:
    return cube.sample_r(src)


def sample_pair(cube: FibonacciCube, src: RandomSource) -> tuple:
    return cube.sample_pair(src)


def replay_trace(cube: FibonacciCube) -> list[str]:
    """Recompute every build step from its recorded bits.

    Returns a list of mismatch descriptions; empty when the stored factors,
    their order and the recorded operation counts all agree with the trace.
    """
    G = cube.group
    problems = []
    current = [f.element for f in cube.factors if f.case == 0]
    total_mult = 0
    for st in cube.trace:
        bits = np.array(st.bits, dtype=np.uint8)
        pool = current if st.case in (1, 2) else list(cube.generators)
        if len(bits) != len(pool):
            problems.append(f"step {st.step}: {len(bits)} bits for {len(pool)} factors")
            continue
        chosen = [e for e, b in zip(pool, bits) if b]
        # recount by hand: one multiply per selected factor after the first
        expected_mult = max(0, len(chosen) - 1)
        value = G.identity
        for e in chosen:
            value = G._mul(value, e)
        if value != st.element:
            problems.append(f"step {st.step}: recorded factor differs from replayed product")
        if expected_mult != st.multiplies:
            problems.append(f"step {st.step}: recorded {st.multiplies} multiplies, recount {expected_mult}")
        total_mult += expected_mult
        if st.side == LEFT:
            current.insert(0, st.element)
        else:
            current.append(st.element)
    if current != cube.elements:
        problems.append("stored factor order differs from the chronological replay")
    if total_mult != cube.build_ops["multiplies"]:
        problems.append(f"build counted {cube.build_ops['multiplies']} multiplies, recount {total_mult}")
    return problems
