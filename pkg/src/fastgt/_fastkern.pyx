# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: sequential bit-flip decoding and counter-hash fill.

Must stay semantically identical to the numpy fallbacks in
fastgt.kernels (enforced by tests/test_kernels.py).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.uint64_t u64
ctypedef cnp.uint8_t u8
ctypedef cnp.int32_t i32

cdef u64 SM_GAMMA = 0x9E3779B97F4A7C15UL
cdef u64 SM_M1 = 0xBF58476D1CE4E5B9UL
cdef u64 SM_M2 = 0x94D049BB133111EBUL


cdef inline u64 _splitmix(u64 x) nogil:
    x += SM_GAMMA
    x = (x ^ (x >> 30)) * SM_M1
    x = (x ^ (x >> 27)) * SM_M2
    return x ^ (x >> 31)


def hash_fill(seed, start, count):
    """count u64 hash values at counters start .. start+count-1."""
    cdef u64 s = <u64> seed
    cdef u64 base = <u64> start
    cdef Py_ssize_t n = <Py_ssize_t> count
    out_arr = np.empty(n, dtype=np.uint64)
    cdef u64[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _splitmix(_splitmix(base + <u64> i) ^ s)
    return out_arr


def bitflip_decode(var_checks, check_indptr, check_vars, word, max_flips):
    """Sequential bit-flip decoding; see kernels._bitflip_decode_np."""
    cdef i32[:, ::1] vc = np.ascontiguousarray(var_checks, dtype=np.int32)
    cdef i32[::1] indptr = np.ascontiguousarray(check_indptr, dtype=np.int32)
    cdef i32[::1] cvars = np.ascontiguousarray(check_vars, dtype=np.int32)
    cdef u8[::1] w = word
    cdef Py_ssize_t m2 = vc.shape[0]
    cdef int deg = <int> vc.shape[1]
    cdef Py_ssize_t n_checks = indptr.shape[0] - 1
    cdef long cap = <long> max_flips

    syn_arr = np.zeros(n_checks, dtype=np.uint8)
    unsat_arr = np.zeros(m2, dtype=np.int32)
    cdef u8[::1] syn = syn_arr
    cdef i32[::1] unsat = unsat_arr

    cdef Py_ssize_t c, v, e, j, lo, hi
    cdef int parity
    cdef long flips = 0
    cdef long steps = <long> m2
    cdef int any_unsat

    with nogil:
        for c in range(n_checks):
            parity = 0
            for e in range(indptr[c], indptr[c + 1]):
                parity ^= w[cvars[e]]
            syn[c] = <u8> parity
        for v in range(m2):
            for e in range(deg):
                unsat[v] += syn[vc[v, e]]

        while flips < cap:
            # lowest-indexed variable with strict-majority unsatisfied checks
            v = -1
            for e in range(m2):
                if unsat[e] * 2 > deg:
                    v = e
                    break
            if v < 0:
                break
            w[v] ^= 1
            flips += 1
            steps += 1
            for e in range(deg):
                c = vc[v, e]
                lo = indptr[c]
                hi = indptr[c + 1]
                if syn[c]:
                    syn[c] = 0
                    for j in range(lo, hi):
                        unsat[cvars[j]] -= 1
                else:
                    syn[c] = 1
                    for j in range(lo, hi):
                        unsat[cvars[j]] += 1

        any_unsat = 0
        for c in range(n_checks):
            if syn[c]:
                any_unsat = 1
                break

    return int(flips), int(steps), not any_unsat
