"""Black box groups: permutation and prime-field matrix backends.

Elements are plain tuples. A permutation on n points is the tuple of its
0-based images; a d x d matrix over Z_p is its row-major entries reduced
mod p. Equal tuples are equal elements, so elements can be dict keys.

Permutations act on the right: ``multiply(a, b)`` applies ``a`` first,
``(a*b)(x) = b(a(x))``.

Only multiplications and inversions count as group operations. Identity
tests and comparisons are free.
"""
from __future__ import annotations

import math
import threading
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Sequence

import numpy as np

from . import kernels

Element = tuple


class GroupError(ValueError):
    """An element does not belong to the group's backend."""


class EnumerationLimitError(RuntimeError):
    """Closure grew past the enumeration cap."""

    def __init__(self, cap: int, partial: int):
        super().__init__(f"group too large for enumeration: more than {cap} elements "
                         f"(reached {partial})")
        self.cap = cap
        self.partial = partial


class OpCounter:
    """Thread-safe tally of group multiplications and inversions.

    Totals only ever grow. ``phase(name)`` additionally routes increments made
    by the current thread into a named bucket while the context is open.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._local = threading.local()
        self.multiplies = 0
        self.inverses = 0
        self._buckets: dict[str, list[int]] = defaultdict(lambda: [0, 0])

    @property
    def total(self) -> int:
        return self.multiplies + self.inverses

    def _active(self) -> list[str]:
        stack = getattr(self._local, "stack", None)
        if stack is None:
            stack = self._local.stack = []
        return stack

    def add(self, multiplies: int = 0, inverses: int = 0):
        if not (multiplies or inverses):
            return
        active = self._active()
        with self._lock:
            self.multiplies += multiplies
            self.inverses += inverses
            for name in active:
                b = self._buckets[name]
                b[0] += multiplies
                b[1] += inverses

    @contextmanager
    def phase(self, name: str, reset: bool = False):
        if reset:
            self.reset(name)
        stack = self._active()
        stack.append(name)
        try:
            yield self
        finally:
            stack.pop()

    def reset(self, name: str):
        with self._lock:
            self._buckets[name] = [0, 0]

    def bucket(self, name: str) -> tuple[int, int]:
        with self._lock:
            mul, inv = self._buckets.get(name, (0, 0))
        return mul, inv

    def bucket_total(self, name: str) -> int:
        return sum(self.bucket(name))

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "multiplies": self.multiplies,
                "inverses": self.inverses,
                "buckets": {k: {"multiplies": v[0], "inverses": v[1]}
                            for k, v in sorted(self._buckets.items())},
            }


class BlackBoxGroup:
    """Oracle interface shared by the backends."""

    kind = "abstract"

    def __init__(self, counter: OpCounter | None = None):
        self.counter = counter if counter is not None else OpCounter()

    # backend hooks
    def _mul(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def _inv(self, a: Element) -> Element:
        raise NotImplementedError

    def validate(self, a) -> Element:
        raise NotImplementedError

    def pack(self, elements: Sequence[Element]) -> np.ndarray:
        raise NotImplementedError

    def _chain(self, stack: np.ndarray, mask: np.ndarray) -> tuple[Element, int]:
        raise NotImplementedError

    @property
    def identity(self) -> Element:
        raise NotImplementedError

    @property
    def encoding_length(self) -> int:
        raise NotImplementedError

    def order_bound(self) -> int:
        raise NotImplementedError

    # oracle interface
    def multiply(self, a: Element, b: Element) -> Element:
        self._check_pair(a, b)
        self.counter.add(multiplies=1)
        return self._mul(a, b)

    def inverse(self, a: Element) -> Element:
        self._check(a)
        self.counter.add(inverses=1)
        return self._inv(a)

    def is_identity(self, a: Element) -> bool:
        return a == self.identity

    def equal(self, a: Element, b: Element) -> bool:
        return a == b

    def product(self, elements: Sequence[Element]) -> Element:
        """Ordered product; ``len - 1`` multiplies, identity for an empty list."""
        if not elements:
            return self.identity
        acc = elements[0]
        for b in elements[1:]:
            acc = self.multiply(acc, b)
        return acc

    def chain(self, stack: np.ndarray, mask: np.ndarray) -> Element:
        """Product of the packed rows selected by ``mask``, counted as group operations."""
        element, selected = self._chain(stack, mask)
        if selected > 1:
            self.counter.add(multiplies=selected - 1)
        return element

    def power(self, a: Element, k: int) -> Element:
        if k < 0:
            a, k = self.inverse(a), -k
        result = None
        base = a
        while k:
            if k & 1:
                result = base if result is None else self.multiply(result, base)
            k >>= 1
            if k:
                base = self.multiply(base, base)
        return self.identity if result is None else result

    def _check(self, a):
        if not isinstance(a, tuple) or len(a) != len(self.identity):
            raise GroupError(f"element {a!r} does not belong to {self!r}")

    def _check_pair(self, a, b):
        self._check(a)
        self._check(b)

    def same_backend(self, other: "BlackBoxGroup") -> bool:
        return self.describe() == other.describe()

    def describe(self) -> dict:
        raise NotImplementedError


class PermutationGroup(BlackBoxGroup):
    """Permutations of {1..n}, stored as 0-based image tuples."""

    kind = "permutation"

    def __init__(self, degree: int, counter: OpCounter | None = None):
        if degree < 1:
            raise ValueError("degree must be at least 1")
        super().__init__(counter)
        self.degree = degree
        self._identity = tuple(range(degree))

    def __repr__(self):
        return f"PermutationGroup(degree={self.degree})"

    def describe(self) -> dict:
        return {"type": "permutation", "degree": self.degree}

    @property
    def identity(self) -> Element:
        return self._identity

    @property
    def encoding_length(self) -> int:
        return self.degree * max(1, math.ceil(math.log2(self.degree))) if self.degree > 1 else 1

    def order_bound(self) -> int:
        return math.factorial(self.degree)

    def validate(self, a) -> Element:
        a = tuple(int(x) for x in a)
        if len(a) != self.degree or sorted(a) != list(self._identity):
            raise GroupError(f"{a!r} is not a permutation of {self.degree} points")
        return a

    def _mul(self, a, b):
        if self.degree == 1:
            return a
        return itemgetter(*a)(b)

    def _inv(self, a):
        out = [0] * self.degree
        for i, x in enumerate(a):
            out[x] = i
        return tuple(out)

    def pack(self, elements):
        if not elements:
            return np.empty((0, self.degree), dtype=np.int32)
        return np.ascontiguousarray(elements, dtype=np.int32).reshape(len(elements), self.degree)

    def _chain(self, stack, mask):
        images, selected = kernels.perm_chain(stack, np.ascontiguousarray(mask, dtype=np.uint8))
        return tuple(images.tolist()), selected


class MatrixGroup(BlackBoxGroup):
    """Invertible d x d matrices over Z_p, p prime, stored row-major."""

    kind = "matrix"

    def __init__(self, dim: int, prime: int, counter: OpCounter | None = None):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        if prime < 2 or any(prime % q == 0 for q in range(2, math.isqrt(prime) + 1)):
            raise ValueError(f"{prime} is not prime")
        super().__init__(counter)
        self.dim = dim
        self.prime = prime
        self._identity = tuple(1 if r == c else 0 for r in range(dim) for c in range(dim))

    def __repr__(self):
        return f"MatrixGroup(dim={self.dim}, prime={self.prime})"

    def describe(self) -> dict:
        return {"type": "matrix", "dim": self.dim, "prime": self.prime}

    @property
    def identity(self) -> Element:
        return self._identity

    @property
    def encoding_length(self) -> int:
        return self.dim * self.dim * max(1, math.ceil(math.log2(self.prime)))

    def order_bound(self) -> int:
        # |GL(d, p)|
        q, d = self.prime, self.dim
        out = 1
        for i in range(d):
            out *= q ** d - q ** i
        return out

    def validate(self, a) -> Element:
        flat = np.asarray(a, dtype=np.int64).reshape(-1)
        if flat.size != self.dim * self.dim:
            raise GroupError(f"expected a {self.dim}x{self.dim} matrix")
        flat = flat % self.prime
        if self.determinant(tuple(flat.tolist())) == 0:
            raise GroupError("matrix is singular mod %d" % self.prime)
        return tuple(int(x) for x in flat)

    def rows(self, a: Element) -> list[list[int]]:
        d = self.dim
        return [list(a[r * d:(r + 1) * d]) for r in range(d)]

    def determinant(self, a: Element) -> int:
        p = self.prime
        m = self.rows(a)
        d = self.dim
        det = 1
        for col in range(d):
            pivot = next((r for r in range(col, d) if m[r][col] % p), None)
            if pivot is None:
                return 0
            if pivot != col:
                m[col], m[pivot] = m[pivot], m[col]
                det = -det
            det = det * m[col][col] % p
            inv = pow(m[col][col], -1, p)
            for r in range(col + 1, d):
                f = m[r][col] * inv % p
                if f:
                    m[r] = [(x - f * y) % p for x, y in zip(m[r], m[col])]
        return det % p

    def _mul(self, a, b):
        d, p = self.dim, self.prime
        return tuple(
            sum(a[r * d + k] * b[k * d + c] for k in range(d)) % p
            for r in range(d) for c in range(d)
        )

    def _inv(self, a):
        d, p = self.dim, self.prime
        m = [row + [1 if r == c else 0 for c in range(d)] for r, row in enumerate(self.rows(a))]
        for col in range(d):
            pivot = next((r for r in range(col, d) if m[r][col] % p), None)
            if pivot is None:
                raise GroupError("singular matrix has no inverse")
            m[col], m[pivot] = m[pivot], m[col]
            inv = pow(m[col][col], -1, p)
            m[col] = [x * inv % p for x in m[col]]
            for r in range(d):
                if r != col and m[r][col]:
                    f = m[r][col]
                    m[r] = [(x - f * y) % p for x, y in zip(m[r], m[col])]
        return tuple(m[r][d + c] for r in range(d) for c in range(d))

    def pack(self, elements):
        d = self.dim
        if not elements:
            return np.empty((0, d, d), dtype=np.int64)
        return np.ascontiguousarray(elements, dtype=np.int64).reshape(len(elements), d, d)

    def _chain(self, stack, mask):
        mat, selected = kernels.mat_chain(stack, np.ascontiguousarray(mask, dtype=np.uint8), self.prime)
        return tuple(int(x) for x in mat.reshape(-1)), selected


@dataclass
class GeneratingSet:
    """Ordered generators; order matters for random subproducts."""

    elements: list
    names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.elements:
            raise ValueError("a generating set needs at least one element")
        if not self.names:
            self.names = [f"g{i + 1}" for i in range(len(self.elements))]
        if len(self.names) != len(self.elements):
            raise ValueError("one name per generator")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


def multiply(G: BlackBoxGroup, a: Element, b: Element) -> Element:
    return G.multiply(a, b)


def inverse(G: BlackBoxGroup, a: Element) -> Element:
    return G.inverse(a)


def enumerate_elements(G: BlackBoxGroup, S: GeneratingSet | Sequence[Element],
                       cap: int = 10_000) -> list[Element]:
    """Breadth-first closure of ``S``; identity first, deterministic order.

    Raises :class:`EnumerationLimitError` once more than ``cap`` elements
    have been found.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    gens = list(S)
    seen = {G.identity: 0}
    order = [G.identity]
    head = 0
    with G.counter.phase("enumerate"):
        while head < len(order):
            x = order[head]
            head += 1
            for s in gens:
                y = G.multiply(x, s)
                if y not in seen:
                    seen[y] = len(order)
                    order.append(y)
                    if len(order) > cap:
                        raise EnumerationLimitError(cap, len(order))
    # closed under right multiplication by S in a finite group, hence a group
    return order
