"""Seedable, splittable random streams.

Each stream is a Philox counter-based generator keyed by ``(seed, label)``.
Labels are hashed into the seed sequence's spawn key, so two streams with
different labels never share state and the same pair always replays the same
bits.

Stream labels used by the pipelines:

``cube``      factor construction of a Fibonacci cube
``sample``    per-draw bits of any sampler
``booster``   the fixed q_1..q_t draws of a booster
``pr``        product replacement moves
``run/<i>``   the i-th seeded run of an experiment
"""
from __future__ import annotations

import hashlib

import numpy as np

_BLOCK_BYTES = 512


def _label_key(label: str) -> tuple[int, ...]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


class RandomSource:
    """A single-owner stream of fair bits, weighted choices and integers."""

    def __init__(self, seed: int = 0, label: str = ""):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.label = label
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=_label_key(label))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf = np.empty(0, dtype=np.uint8)
        self._pos = 0

    @classmethod
    def from_entropy(cls, label: str = "") -> "RandomSource":
        """Opt-in OS entropy; the chosen seed is kept on ``.seed`` for replay."""
        seed = int(np.random.SeedSequence().generate_state(2, dtype=np.uint32).view(np.uint64)[0])
        return cls(seed, label)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, label={self.label!r})"

    def derive(self, label: str) -> "RandomSource":
        """Child stream; deterministic in (seed, parent label, label)."""
        child = f"{self.label}/{label}" if self.label else label
        return RandomSource(self.seed, child)

    def _refill(self):
        raw = self._gen.integers(0, 256, size=_BLOCK_BYTES, dtype=np.uint8)
        self._buf = np.concatenate([self._buf[self._pos:], np.unpackbits(raw)])
        self._pos = 0

    def bits(self, n: int) -> np.ndarray:
        """Next ``n`` bits of the stream as a uint8 array."""
        while len(self._buf) - self._pos < n:
            self._refill()
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out.copy()

    def bit(self) -> int:
        return int(self.bits(1)[0])

    def choose_weighted(self, weights) -> int:
        w = np.asarray(weights, dtype=float)
        if w.size == 0 or np.any(w < 0) or not np.isfinite(w).all():
            raise ValueError("weights must be a nonempty list of finite nonnegative reals")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must not all be zero")
        u = self._gen.random() * total
        idx = int(np.searchsorted(np.cumsum(w), u, side="right"))
        # guard against u landing on the final edge through rounding
        idx = min(idx, w.size - 1)
        while w[idx] == 0:
            idx -= 1
        return idx

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return int(self._gen.integers(0, n))

    def random(self) -> float:
        return float(self._gen.random())

    @property
    def numpy(self) -> np.random.Generator:
        """The underlying generator, for vector draws in tests and oracle checks.

        It shares state with this source, so mixing it with ``bits`` keeps the
        stream deterministic but changes which values each call sees.
        """
        return self._gen


def derive_stream(seed: int, label: str) -> RandomSource:
    return RandomSource(seed, label)


def fresh_bit(src: RandomSource) -> int:
    return src.bit()


def choose_weighted(src: RandomSource, weights) -> int:
    return src.choose_weighted(weights)
