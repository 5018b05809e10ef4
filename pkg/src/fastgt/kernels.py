"""Hot-kernel backend selection.

The two kernels that dominate runtime -- sequential bit-flip decoding and
bulk counter-hash bit generation -- have a compiled Cython implementation
(``fastgt._fastkern``) and a numpy fallback defined here.  The compiled
version is used when importable unless ``FASTGT_PURE_PYTHON=1`` is set.
Both implement the same deterministic algorithm and must agree bit for
bit; ``tests/test_kernels.py`` enforces this, and
``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

import numpy as np

from .core import _NP_GAMMA, _NP_M1, _NP_M2, _NP_27, _NP_30, _NP_31, _U


def _bitflip_decode_np(var_checks, check_indptr, check_vars, word, max_flips):
    """Sequential bit-flip decoding, numpy edition.

    Repeatedly flips the lowest-indexed variable whose unsatisfied-check
    count strictly exceeds half its degree, until no candidate remains or
    ``max_flips`` is reached.  Mutates ``word`` in place.

    Returns (flips, steps, converged) where steps counts one visit per
    variable in the initial syndrome pass plus one per flip, and
    converged means every check is satisfied (the word is a codeword).
    """
    m2, deg = var_checks.shape
    n_checks = len(check_indptr) - 1

    # initial syndrome: parity of word over each check's variables
    owners = np.repeat(np.arange(n_checks), np.diff(check_indptr))
    sums = np.bincount(owners, weights=word[check_vars].astype(np.float64), minlength=n_checks)
    syn = (sums.astype(np.int64) & 1).astype(np.uint8)

    unsat = syn[var_checks].astype(np.int64).sum(axis=1)
    steps = m2
    flips = 0
    two_unsat_gt_deg = unsat * 2 > deg
    while flips < max_flips:
        v = int(np.argmax(two_unsat_gt_deg))
        if not two_unsat_gt_deg[v]:
            break
        word[v] ^= 1
        flips += 1
        steps += 1
        for c in var_checks[v]:
            lo, hi = check_indptr[c], check_indptr[c + 1]
            members = check_vars[lo:hi]
            if syn[c]:
                syn[c] = 0
                unsat[members] -= 1
            else:
                syn[c] = 1
                unsat[members] += 1
            two_unsat_gt_deg[members] = unsat[members] * 2 > deg
    converged = not syn.any()
    return flips, steps, bool(converged)


def _hash_fill_np(seed, start, count):
    """count u64 hash values at counters start .. start+count-1."""
    x = np.arange(start, start + count, dtype=np.uint64)
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


BACKEND = "numpy"
bitflip_decode = _bitflip_decode_np
hash_fill = _hash_fill_np

if not os.environ.get("FASTGT_PURE_PYTHON"):
    try:
        from . import _fastkern

        bitflip_decode = _fastkern.bitflip_decode
        hash_fill = _fastkern.hash_fill
        BACKEND = "cython"
    except ImportError:
        pass
