# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels (primary backend).

Line-for-line C translation of ``_kernels_py``; see that module for the
algorithm commentary.  Floating-point expressions are kept in the same
evaluation order and the extension is built with FMA contraction
disabled, so results are bit-identical to the pure-Python fallback.
"""

import numpy as np

from libc.math cimport INFINITY, log, sqrt

ctypedef unsigned long long u64
ctypedef long long i64

backend_name = "compiled"

cdef double INV53 = 1.0 / 9007199254740992.0
cdef u64 GOLDEN = <u64>0x9E3779B97F4A7C15


cdef struct RngState:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline u64 _rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline void _stream_init(RngState* st, u64 master, u64 idx) noexcept nogil:
    cdef u64 s = master ^ (idx * GOLDEN)
    cdef u64 z
    cdef u64 outs[4]
    cdef int i
    for i in range(4):
        s = s + GOLDEN
        z = s
        z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
        outs[i] = z ^ (z >> 31)
    if outs[0] == 0 and outs[1] == 0 and outs[2] == 0 and outs[3] == 0:
        outs[0] = GOLDEN
    st.s0 = outs[0]
    st.s1 = outs[1]
    st.s2 = outs[2]
    st.s3 = outs[3]


cdef inline double _u01(RngState* st) noexcept nogil:
    cdef u64 s0 = st.s0
    cdef u64 s1 = st.s1
    cdef u64 s2 = st.s2
    cdef u64 s3 = st.s3
    cdef u64 x = s0 + s3
    cdef u64 res = _rotl(x, 23) + s0
    cdef u64 t = s1 << 17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    st.s0 = s0
    st.s1 = s1
    st.s2 = s2
    st.s3 = s3
    return <double>((res >> 11) + 1) * INV53


cdef bint _block(int i, double d, int dr, int n_seeds,
                 double* xs, double* ys, unsigned char* kinds,
                 double* fbd, double* tbd) noexcept nogil:
    # dr: 0=E 1=W 2=N 3=S; monotone bound memoization as in _kernels_py.
    cdef int b4 = 4 * i + dr
    if d <= fbd[b4]:
        return False
    if d >= tbd[b4]:
        return True
    cdef double xi = xs[i]
    cdef double yi = ys[i]
    cdef bint want_h = dr >= 2
    cdef bint res = False
    cdef int jj
    cdef int sub
    cdef double a
    cdef double b
    cdef double ab
    for jj in range(n_seeds):
        if jj == i or (<bint>kinds[jj]) != want_h:
            continue
        if dr == 0:
            a = xs[jj] - xi
            b = ys[jj] - yi
        elif dr == 1:
            a = xi - xs[jj]
            b = ys[jj] - yi
        elif dr == 2:
            a = ys[jj] - yi
            b = xs[jj] - xi
        else:
            a = yi - ys[jj]
            b = xs[jj] - xi
        if a < 0.0 or a > d:
            continue
        ab = -b if b < 0.0 else b
        if ab > a:
            continue
        if dr <= 1:
            sub = 3 if ys[jj] > yi else 2
        else:
            sub = 1 if xs[jj] > xi else 0
        if not _block(jj, ab, sub, n_seeds, xs, ys, kinds, fbd, tbd):
            res = True
            break
    if res:
        if d < tbd[b4]:
            tbd[b4] = d
    else:
        if d > fbd[b4]:
            fbd[b4] = d
    return res


def episode_fill(u64 master_seed, i64 start_index, i64 count, double q,
                 int n_cap, int[::1] out):
    """Run ``count`` episodes; out[e] = blocking index n* (0 = cap hit)."""
    xs_a = np.zeros(n_cap, dtype=np.float64)
    ys_a = np.zeros(n_cap, dtype=np.float64)
    kinds_a = np.zeros(n_cap, dtype=np.uint8)
    fbd_a = np.zeros(4 * n_cap, dtype=np.float64)
    tbd_a = np.zeros(4 * n_cap, dtype=np.float64)
    A_a = np.zeros(n_cap + 2, dtype=np.float64)
    cdef double[::1] xs_m = xs_a
    cdef double[::1] ys_m = ys_a
    cdef unsigned char[::1] kinds_m = kinds_a
    cdef double[::1] fbd_m = fbd_a
    cdef double[::1] tbd_m = tbd_a
    cdef double[::1] A_m = A_a
    cdef double* xs = &xs_m[0]
    cdef double* ys = &ys_m[0]
    cdef unsigned char* kinds = &kinds_m[0]
    cdef double* fbd = &fbd_m[0]
    cdef double* tbd = &tbd_m[0]
    cdef double* A = &A_m[0]

    cdef RngState st
    cdef i64 e
    cdef int k, i, b4, result, dr, n_seeds
    cdef double X, Dk, side, t, x, y, ay
    cdef bint kind_h

    with nogil:
        for e in range(count):
            _stream_init(&st, master_seed, <u64>(start_index + e))
            A[1] = -log(_u01(&st))
            A[2] = A[1] - log(_u01(&st))
            X = INFINITY
            n_seeds = 0
            result = 0
            for k in range(1, n_cap + 1):
                Dk = sqrt(2.0 * A[k])
                side = _u01(&st)
                t = _u01(&st)
                x = 0.5 * Dk * (1.0 + t)
                y = 0.5 * Dk * (1.0 - t)
                if side > 0.5:
                    y = -y
                kind_h = _u01(&st) <= q
                i = k - 1
                xs[i] = x
                ys[i] = y
                kinds[i] = kind_h
                b4 = 4 * i
                fbd[b4] = fbd[b4 + 1] = fbd[b4 + 2] = fbd[b4 + 3] = 0.0
                tbd[b4] = tbd[b4 + 1] = tbd[b4 + 2] = tbd[b4 + 3] = INFINITY
                n_seeds = k
                if not kind_h:
                    ay = -y if y < 0.0 else y
                    dr = 3 if y > 0.0 else 2
                    if not _block(i, ay, dr, n_seeds, xs, ys, kinds, fbd, tbd) and x < X:
                        X = x
                if 2.0 * X * X < A[k + 1]:
                    result = k
                    break
                if k < n_cap:
                    A[k + 2] = A[k + 1] - log(_u01(&st))
            out[e] = result


def half_fill(u64 master_seed, i64 start_index, i64 count, double q, double lam,
              double[::1] out_len, int[::1] out_steps):
    """Sample ``count`` half-model ray lengths and step counts."""
    cdef double pv = 1.0 - q
    cdef RngState st
    cdef i64 e
    cdef int steps
    cdef double y, xt, E, c, r
    with nogil:
        for e in range(count):
            _stream_init(&st, master_seed, <u64>(start_index + e))
            y = 0.0
            xt = 0.0
            steps = 0
            while True:
                steps += 1
                E = -log(_u01(&st))
                c = 2.0 * E / lam
                r = 0.0 if c == 0.0 else c / (y + sqrt(y * y + c))
                xt = xt + r
                if _u01(&st) <= pv:
                    break
                y = _u01(&st) * (r + y)
            out_len[e] = xt
            out_steps[e] = steps
