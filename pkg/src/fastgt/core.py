"""Ground-truth instances, pooled-test semantics, noise, seeds, transcripts.

Randomness contract
-------------------
All randomness in this package is derived from a 64-bit master seed through
two documented mechanisms (identifier recorded in every report as
``rng_id = "splitmix64-ctr+philox-v1"``):

* a *counter-mode* hash, ``hash_u64(seed, counter)``, built from the
  splitmix64 finalizer.  Pool membership bits and per-test noise flips are
  pure functions of ``(derived seed, counter)``, which makes every outcome
  randomly accessible: a Monte Carlo run can evaluate only the bits it
  needs (e.g. membership rows of defective items) while a transcript dump
  materializes the full pools, and both see identical bits.

* numpy's Philox counter-based generator, keyed by a derived seed, for
  structured draws (partitions, graph wiring, sampling without
  replacement).  Each such draw is a single documented call on a fresh
  child seed, so replays are exact.

Child seeds are derived by folding ``(label, index)`` path components into
the parent digest with splitmix64/FNV-1a ("seedtree-v1").  Distinct paths
give independent streams; the same path always gives the same stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

RNG_ID = "splitmix64-ctr+philox-v1"

_MASK64 = (1 << 64) - 1
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_M1 = 0xBF58476D1CE4E5B9
_SM_M2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_INDEX_SALT = 0xD1B54A32D192ED03

# numpy scalars for the vectorized hash (kept together so the compiled
# kernel and the fallback agree bit for bit)
_U = np.uint64
_NP_GAMMA = _U(_SM_GAMMA)
_NP_M1 = _U(_SM_M1)
_NP_M2 = _U(_SM_M2)
_NP_30 = _U(30)
_NP_27 = _U(27)
_NP_31 = _U(31)


def splitmix64(x: int) -> int:
    """Scalar splitmix64 finalizer (the seedtree-v1 mixing function)."""
    x = (x + _SM_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _SM_M1) & _MASK64
    x = ((x ^ (x >> 27)) * _SM_M2) & _MASK64
    return x ^ (x >> 31)


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def hash_u64_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized counter-mode hash: splitmix64(seed ^ splitmix64(counter))."""
    x = counters.astype(np.uint64, copy=True)
    x += _NP_GAMMA
    x = (x ^ (x >> _NP_30)) * _NP_M1
    x = (x ^ (x >> _NP_27)) * _NP_M2
    x ^= x >> _NP_31
    x ^= _U(seed)
    x += _NP_GAMMA
    x = (x ^ (x >> _NP_30)) * _NP_M1
    x = (x ^ (x >> _NP_27)) * _NP_M2
    x ^= x >> _NP_31
    return x


def hash_bits(seed: int, counters: np.ndarray) -> np.ndarray:
    """Fair coin per counter (top bit of the counter-mode hash)."""
    return (hash_u64_array(seed, counters) >> _U(63)).astype(np.uint8)


def bernoulli_threshold(p: float) -> int:
    """Counter-hash threshold realizing probability p to within 2**-53."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return 1 << 64
    return int(p * 2.0**64)


def bernoulli_bits(seed: int, counters: np.ndarray, p: float) -> np.ndarray:
    thr = bernoulli_threshold(p)
    if thr == 0:
        return np.zeros(len(counters), dtype=np.uint8)
    return (hash_u64_array(seed, counters) < _U(thr)).astype(np.uint8)


@dataclass(frozen=True)
class SeedTree:
    """A node in the deterministic seed-derivation tree ("seedtree-v1").

    ``digest`` is the 64-bit seed of this node; children fold a label and
    an index into it.  Equal paths from equal masters collide; everything
    else is (for practical purposes) independent.
    """

    master_seed: int
    path: tuple = ()
    digest: int = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.digest is None:
            object.__setattr__(self, "digest", splitmix64(self.master_seed & _MASK64))

    def child(self, label: str, index: int = 0) -> "SeedTree":
        d = splitmix64(self.digest ^ _fnv1a64(label.encode()))
        d = splitmix64(d ^ ((index * _INDEX_SALT) & _MASK64))
        return SeedTree(self.master_seed, self.path + ((label, index),), d)

    def child_digests(self, label: str, indices: np.ndarray) -> np.ndarray:
        """Vectorized digests of ``self.child(label, i)`` for many i."""
        d = splitmix64(self.digest ^ _fnv1a64(label.encode()))
        mixed = (indices.astype(np.uint64) * _U(_INDEX_SALT)) ^ _U(d)
        out = mixed + _NP_GAMMA
        out = (out ^ (out >> _NP_30)) * _NP_M1
        out = (out ^ (out >> _NP_27)) * _NP_M2
        out ^= out >> _NP_31
        return out

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.digest))


def seed_at(master_seed: int, *path) -> SeedTree:
    node = SeedTree(master_seed)
    for label, index in path:
        node = node.child(label, index)
    return node


class OutOfRangeError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    """Hidden ground truth: which of the N items are defective.

    ``defectives`` is a sorted int64 array of D distinct ids in [0, N).
    Noise level q must be below 1/2 (the multiplicity thresholds
    degenerate at q = 1/2).
    """

    N: int
    D: int
    defectives: np.ndarray
    q: float
    master_seed: int

    def __post_init__(self):
        if not (0 < self.D < self.N):
            raise ValueError(f"need 0 < D < N, got D={self.D}, N={self.N}")
        if not (0.0 <= self.q < 0.5):
            raise ValueError(f"q must be in [0, 1/2), got {self.q}")
        d = np.asarray(self.defectives, dtype=np.int64)
        d = np.sort(d)
        if len(d) != self.D or len(np.unique(d)) != self.D:
            raise ValueError("defectives must be D distinct ids")
        if d[0] < 0 or d[-1] >= self.N:
            raise OutOfRangeError("defective id out of [0, N)")
        object.__setattr__(self, "defectives", d)

    @classmethod
    def random(cls, N: int, D: int, q: float, master_seed: int) -> "ProblemInstance":
        gen = SeedTree(master_seed).child("defectives").generator()
        ids = gen.choice(N, size=D, replace=False)
        return cls(N=N, D=D, defectives=np.sort(ids), q=q, master_seed=master_seed)

    @property
    def root(self) -> SeedTree:
        return SeedTree(self.master_seed)

    def is_defective(self, items: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.defectives, items)
        pos = np.clip(pos, 0, self.D - 1)
        return self.defectives[pos] == items

    def regime_warning(self) -> Optional[str]:
        """Sanity note when D leaves the sparse regime the sizing assumes."""
        if self.D >= self.N**0.9:
            return f"D={self.D} >= N^0.9={self.N ** 0.9:.1f}; sparse-regime sizing may be off"
        return None


@dataclass(frozen=True)
class TestPool:
    """One pooled test: the sorted ids included in the pool.

    Pools may be empty (a Bernoulli(1/2) design over few items produces
    empty pools routinely); an empty pool is a real test whose noiseless
    outcome is 0.
    """

    items: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.items, dtype=np.int64)
        if len(a) > 1 and not (np.diff(a) > 0).all():
            raise ValueError("pool items must be strictly increasing")
        object.__setattr__(self, "items", a)

    def __len__(self):
        return len(self.items)


def evaluate_pools(pools: Iterable, defectives, N: Optional[int] = None) -> np.ndarray:
    """Noiseless outcomes: bit i is 1 iff pool i intersects the defective set."""
    pools = list(pools)
    if isinstance(defectives, (set, frozenset)):
        defectives = list(defectives)
    dsorted = np.sort(np.asarray(defectives, dtype=np.int64))
    out = np.zeros(len(pools), dtype=np.uint8)
    for i, pool in enumerate(pools):
        ids = pool.items if isinstance(pool, TestPool) else np.asarray(pool, dtype=np.int64)
        if N is not None and len(ids) and (ids.min() < 0 or ids.max() >= N):
            raise OutOfRangeError(f"pool {i} has id outside [0, {N})")
        if len(ids) == 0 or len(dsorted) == 0:
            continue
        pos = np.searchsorted(dsorted, ids)
        pos = np.clip(pos, 0, len(dsorted) - 1)
        out[i] = 1 if (dsorted[pos] == ids).any() else 0
    return out


def apply_bsc(bits: np.ndarray, q: float, seed: SeedTree) -> np.ndarray:
    """Flip each bit independently with probability q, deterministically in seed.

    Bit i is flipped iff hash_u64(seed.digest, i) < floor(q * 2**64); two
    calls with equal (bits, q, seed) return identical vectors.
    """
    if not (0.0 <= q < 0.5):
        raise ValueError(f"q must be in [0, 1/2), got {q}")
    bits = np.asarray(bits, dtype=np.uint8)
    flips = bernoulli_bits(seed.digest, np.arange(len(bits), dtype=np.uint64), q)
    return bits ^ flips


def binary_entropy(q: float) -> float:
    """H(q) in bits, with the 0 log 0 = 0 convention."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def bound_multiplicity_error(m1: int, q: float) -> float:
    """Ceiling on the multiplicity-misclassification probability: exp(-m1(1-2q)^2/32)."""
    if m1 < 1:
        raise ValueError("m1 >= 1 required")
    return math.exp(-m1 * (1.0 - 2.0 * q) ** 2 / 32.0)


def bound_localization_error(m2: int, q: float, alpha: float) -> float:
    """Ceiling on the localization-failure probability: 2^(-alpha m2 (1-H(q))^3 / 128)."""
    if m2 < 1:
        raise ValueError("m2 >= 1 required")
    if alpha <= 0:
        raise ValueError("alpha > 0 required")
    return 2.0 ** (-alpha * m2 * (1.0 - binary_entropy(q)) ** 3 / 128.0)


class StepCounter:
    """Decode-cost meter: one step per pool-outcome read, per bit-flip
    decoder bit visit (initial syndrome pass plus one per flip), and per
    leaf-list mutation."""

    __slots__ = ("reads", "bitflip", "leaflist")

    def __init__(self):
        self.reads = 0
        self.bitflip = 0
        self.leaflist = 0

    def add_reads(self, n: int):
        self.reads += int(n)

    def add_bitflip(self, n: int):
        self.bitflip += int(n)

    def add_leaflist(self, n: int):
        self.leaflist += int(n)

    @property
    def total(self) -> int:
        return self.reads + self.bitflip + self.leaflist


# ---------------------------------------------------------------------------
# Transcripts
# ---------------------------------------------------------------------------

TRANSCRIPT_SCHEMA = "fastgt-transcript-v1"


@dataclass
class TranscriptBlock:
    tags: dict
    pools: list = field(default_factory=list)  # list of int64 arrays
    y: list = field(default_factory=list)
    yhat: list = field(default_factory=list)


@dataclass
class Transcript:
    """Replayable record of a run: every pool with its noiseless and
    observed outcome, grouped into tagged blocks (one block per design)."""

    N: int
    D: int
    q: float
    seed: int
    algorithm: str
    blocks: list = field(default_factory=list)
    recovered: Optional[list] = None

    def new_block(self, **tags) -> TranscriptBlock:
        block = TranscriptBlock(tags=dict(tags))
        self.blocks.append(block)
        return block

    @property
    def n_pools(self) -> int:
        return sum(len(b.pools) for b in self.blocks)

    def check_consistency(self, defectives) -> bool:
        """Recompute noiseless outcomes from pools; must match stored y exactly."""
        for block in self.blocks:
            expect = evaluate_pools(block.pools, defectives)
            if not np.array_equal(expect, np.asarray(block.y, dtype=np.uint8)):
                return False
        return True

    def dump_jsonl(self, path):
        with open(path, "w") as fh:
            header = {
                "schema": TRANSCRIPT_SCHEMA,
                "N": self.N,
                "D": self.D,
                "q": self.q,
                "seed": self.seed,
                "algorithm": self.algorithm,
                "rng_id": RNG_ID,
            }
            fh.write(json.dumps(header) + "\n")
            for block in self.blocks:
                fh.write(json.dumps({"block": block.tags}) + "\n")
                for pool, y, yhat in zip(block.pools, block.y, block.yhat):
                    rec = {"pool": np.asarray(pool).tolist(), "y": int(y), "yhat": int(yhat)}
                    fh.write(json.dumps(rec) + "\n")
            if self.recovered is not None:
                fh.write(json.dumps({"result": {"recovered": list(map(int, self.recovered))}}) + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "Transcript":
        with open(path) as fh:
            header = json.loads(fh.readline())
            if header.get("schema") != TRANSCRIPT_SCHEMA:
                raise ValueError(f"unrecognized transcript schema: {header.get('schema')!r}")
            t = cls(N=header["N"], D=header["D"], q=header["q"],
                    seed=header["seed"], algorithm=header["algorithm"])
            block = None
            for line in fh:
                rec = json.loads(line)
                if "block" in rec:
                    block = t.new_block(**rec["block"])
                elif "result" in rec:
                    t.recovered = rec["result"]["recovered"]
                else:
                    if block is None:
                        block = t.new_block()
                    block.pools.append(np.asarray(rec["pool"], dtype=np.int64))
                    block.y.append(rec["y"])
                    block.yhat.append(rec["yhat"])
        return t
