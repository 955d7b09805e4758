# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Howell-form kernel over Z/p^M for moduli below 2^31."""

import numpy as np
cimport numpy as cnp

ctypedef long long i64


cdef inline int _val(i64 x, i64 p):
    cdef int v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


cdef i64 _inv(i64 u, i64 mod):
    cdef i64 t = 0, newt = 1, r = mod, newr = u % mod, q, tmp
    while newr != 0:
        q = r // newr
        tmp = t - q * newt
        t = newt
        newt = tmp
        tmp = r - q * newr
        r = newr
        newr = tmp
    if t < 0:
        t += mod
    return t


def howell_rows(rows, int ncols, int p, int M):
    cdef i64 mod = 1
    cdef int i, j, k, c, best, bv, v, n, npool, nout
    for i in range(M):
        mod *= p
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, ncols) % mod
    n = arr.shape[0]
    # room for one saturation row per pivot
    work = np.zeros((n + ncols + 1, ncols), dtype=np.int64)
    work[:n] = arr
    cdef i64[:, :] W = work
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] alive = np.zeros(n + ncols + 1, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.zeros(ncols, dtype=np.int64)
    cdef i64 x, pk, u, uinv, q, sat
    for i in range(n):
        for j in range(ncols):
            if W[i, j] != 0:
                alive[i] = 1
                break
    npool = n
    nout = 0
    pivcols = []
    for c in range(ncols):
        best = -1
        bv = M
        for i in range(npool):
            if alive[i] and W[i, c] != 0:
                v = _val(W[i, c], p)
                if v < bv:
                    best = i
                    bv = v
                    if v == 0:
                        break
        if best < 0:
            continue
        alive[best] = 0
        pk = 1
        for k in range(bv):
            pk *= p
        u = W[best, c] // pk
        uinv = _inv(u, mod)
        for j in range(ncols):
            W[best, j] = (W[best, j] * uinv) % mod
        for i in range(npool):
            if alive[i] and W[i, c] != 0:
                q = W[i, c] // pk
                x = 0
                for j in range(c, ncols):
                    W[i, j] = (W[i, j] - q * W[best, j]) % mod
                    if W[i, j] < 0:
                        W[i, j] += mod
                    x |= W[i, j]
                if x == 0:
                    alive[i] = 0
        if bv > 0:
            sat = 1
            for k in range(M - bv):
                sat *= p
            x = 0
            for j in range(ncols):
                W[npool, j] = (W[best, j] * sat) % mod
                x |= W[npool, j]
            if x != 0:
                alive[npool] = 1
            npool += 1
        order[nout] = best
        nout += 1
        pivcols.append(c)
    cdef int a, b, cc, rj, rp
    for a in range(nout):
        rp = order[a]
        cc = pivcols[a]
        pk = W[rp, cc]
        for b in range(a):
            rj = order[b]
            q = W[rj, cc] // pk
            if q:
                for j in range(cc, ncols):
                    W[rj, j] = (W[rj, j] - q * W[rp, j]) % mod
                    if W[rj, j] < 0:
                        W[rj, j] += mod
    out = [[int(W[order[a], j]) for j in range(ncols)] for a in range(nout)]
    return out, pivcols
