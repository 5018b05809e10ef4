"""Binary linear codes with linear-time bit-flipping decoding.

The localization half of every test design embeds each candidate item as a
distinct codeword of one of these codes.  Construction is a random
left-regular bipartite parity graph (each of the m2 variable nodes picks
``left_degree`` distinct check nodes), retried with fresh subseeds until
the parity matrix has full row rank; a systematic generator then comes out
of GF(2) elimination.  Random left-regular graphs are expanders with high
probability, which is what the flip decoder needs; reliability is
certified empirically by the calibration suite rather than by a
spectral-gap computation.

Decoding repeatedly flips the lowest-indexed variable whose unsatisfied
check count strictly exceeds half its degree (lowest-index tie-break keeps
replays deterministic), stops after ``2 * m2`` flips, and reports FAIL
unless the final word is a codeword.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .core import SeedTree, StepCounter, binary_entropy

FLIP_CAP_FACTOR = 2
DEFAULT_LEFT_DEGREE = 5
RATE_CAP = 0.25
_BUILD_RETRIES = 64


def default_rate(q_design: float, rate_cap: float = RATE_CAP) -> float:
    """Code rate used by the test designs: min(rate_cap, (1 - H(q)) / 2)."""
    return min(rate_cap, (1.0 - binary_entropy(q_design)) / 2.0)


class CodeBuildError(RuntimeError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    k: int
    m2: int
    left_degree: int
    seed_digest: int

    @property
    def rate(self) -> float:
        return self.k / self.m2

    def __post_init__(self):
        if not (0 < self.k < self.m2):
            raise ValueError(f"need 0 < k < m2, got k={self.k}, m2={self.m2}")
        if self.left_degree < 3:
            raise ValueError("left_degree >= 3 required")


def gf2_rref(mat: np.ndarray) -> Tuple[np.ndarray, list]:
    """Reduced row echelon form over GF(2). Returns (rref, pivot columns)."""
    a = mat.astype(np.uint8).copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if len(hits) == 0:
            continue
        pivot = r + hits[0]
        if pivot != r:
            a[[r, pivot]] = a[[pivot, r]]
        elim = np.nonzero(a[:, c])[0]
        elim = elim[elim != r]
        a[elim] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


class LinearCode:
    """A concrete code instance: parity graph, systematic generator, decoder."""

    def __init__(self, spec: CodeSpec, var_checks: np.ndarray,
                 generator: np.ndarray, systematic_cols: np.ndarray):
        self.spec = spec
        self.var_checks = var_checks              # (m2, left_degree) int32
        self.generator = generator                # (k, m2) uint8
        self.systematic_cols = systematic_cols    # (k,) int64, ascending
        n_checks = spec.m2 - spec.k
        flat = var_checks.ravel()
        order = np.argsort(flat, kind="stable")
        self.check_vars = (order // spec.left_degree).astype(np.int32)
        counts = np.bincount(flat, minlength=n_checks)
        self.check_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int32)

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def m2(self) -> int:
        return self.spec.m2

    def encode(self, message: int) -> np.ndarray:
        """Codeword of a k-bit message (bit j of the message drives generator row j)."""
        if not 0 <= message < (1 << self.k):
            raise ValueError(f"message {message} out of range for k={self.k}")
        bits = np.fromiter(((message >> j) & 1 for j in range(self.k)),
                           dtype=np.uint8, count=self.k)
        return (bits @ self.generator) & 1

    def encode_many(self, messages: np.ndarray) -> np.ndarray:
        bits = ((messages[:, None].astype(np.uint64) >> np.arange(self.k, dtype=np.uint64)) & 1)
        return (bits.astype(np.uint8) @ self.generator) & 1

    def message_of(self, word: np.ndarray) -> int:
        """Read the message back off the systematic positions."""
        bits = word[self.systematic_cols].astype(np.uint64)
        return int((bits << np.arange(self.k, dtype=np.uint64)).sum())

    def is_codeword(self, word: np.ndarray) -> bool:
        syn = np.bincount(self.var_checks[word.astype(bool)].ravel(),
                          minlength=self.m2 - self.k)
        return not (syn & 1).any()

    def decode_bitflip(self, received: np.ndarray,
                       counter: Optional[StepCounter] = None):
        """Bit-flip decode. Returns (message or None, flips, steps)."""
        if len(received) != self.m2:
            raise ValueError(f"received length {len(received)} != m2={self.m2}")
        word = np.ascontiguousarray(received, dtype=np.uint8).copy()
        flips, steps, converged = kernels.bitflip_decode(
            self.var_checks, self.check_indptr, self.check_vars, word,
            FLIP_CAP_FACTOR * self.m2)
        if counter is not None:
            counter.add_bitflip(steps)
        if not converged:
            return None, flips, steps
        return self.message_of(word), flips, steps

    def dump_adjacency(self, path):
        """One check node per line, its variable indices space-separated."""
        n_checks = self.m2 - self.k
        with open(path, "w") as fh:
            for c in range(n_checks):
                lo, hi = self.check_indptr[c], self.check_indptr[c + 1]
                fh.write(" ".join(map(str, sorted(self.check_vars[lo:hi].tolist()))) + "\n")


def build_code(k: int, m2: int, left_degree: int, seed: SeedTree) -> LinearCode:
    """Construct a code, retrying with fresh subseeds until full row rank."""
    spec = CodeSpec(k=k, m2=m2, left_degree=left_degree, seed_digest=seed.digest)
    n_checks = m2 - k
    if left_degree > n_checks:
        raise CodeBuildError(
            f"left_degree={left_degree} exceeds check count {n_checks} (k={k}, m2={m2})")
    for attempt in range(_BUILD_RETRIES):
        gen = seed.child("build", attempt).generator()
        # each variable picks left_degree distinct checks
        scores = gen.random((m2, n_checks))
        var_checks = np.argpartition(scores, left_degree - 1, axis=1)[:, :left_degree]
        var_checks = np.sort(var_checks, axis=1).astype(np.int32)

        H = np.zeros((n_checks, m2), dtype=np.uint8)
        H[var_checks.ravel(), np.repeat(np.arange(m2), left_degree)] = 1
        rref, pivots = gf2_rref(H)
        if len(pivots) != n_checks:
            continue
        pivot_cols = np.asarray(pivots, dtype=np.int64)
        free_cols = np.setdiff1d(np.arange(m2, dtype=np.int64), pivot_cols)
        generator = np.zeros((k, m2), dtype=np.uint8)
        generator[np.arange(k), free_cols] = 1
        # x_pivot[i] = sum of rref[i, f] * x_f over free columns f
        generator[:, pivot_cols] = rref[:, free_cols].T
        code = LinearCode(spec, var_checks, generator, free_cols)
        assert not ((generator @ H.T) & 1).any(), "generator rows must satisfy all checks"
        return code
    raise CodeBuildError(
        f"no full-rank parity matrix after {_BUILD_RETRIES} tries "
        f"(k={k}, m2={m2}, deg={left_degree}, seed={seed.digest:#x})")


_code_cache: dict = {}
_CODE_CACHE_MAX = 256


def cached_code(k: int, m2: int, left_degree: int, seed: SeedTree) -> LinearCode:
    """Memoized build: designs that share a dimension class share one code."""
    key = (k, m2, left_degree, seed.digest)
    code = _code_cache.get(key)
    if code is None:
        if len(_code_cache) >= _CODE_CACHE_MAX:
            _code_cache.clear()
        code = build_code(k, m2, left_degree, seed)
        _code_cache[key] = code
    return code
