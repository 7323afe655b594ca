"""Compiled min-sum successive-cancellation list kernel.

The tree is traversed in natural order for ``c = u F^{(x)t}``: the left child
of a node of size ``2m`` sees ``f(a[:m], a[m:])`` and the right child sees
``a[m:] + (1 - 2 p) a[:m]`` where ``p`` are the re-encoded bits of the left
child.  Level ``d`` of a path's tree (``n >> d`` entries) sits at offset
``2n - 2(n >> d)`` of a flat row.  A path that keeps one child stays in its
slot; only parents that keep both children are copied.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _penalty(v, s):
    # sgn(0) := +1, so a zero statistic never penalises bit 0.
    if s >= 0.0:
        return -s if v == 1 else 0.0
    return s if v == 0 else 0.0


@njit(cache=True, inline="always")
def _ctz(i):
    c = 0
    while (i & 1) == 0:
        i >>= 1
        c += 1
    return c


@njit(cache=True, inline="always")
def _descend(alpha, pl, p, i, t, n):
    d0 = 1 if i == 0 else t - _ctz(i)
    for d in range(d0, t + 1):
        m = n >> d
        src = 2 * n - 4 * m
        dst = 2 * n - 2 * m
        if (i >> (t - d)) & 1:
            for k in range(m):
                a = alpha[p, src + k]
                b = alpha[p, src + m + k]
                if pl[p, dst + k]:
                    alpha[p, dst + k] = b - a
                else:
                    alpha[p, dst + k] = b + a
        else:
            for k in range(m):
                a = alpha[p, src + k]
                b = alpha[p, src + m + k]
                mag = min(abs(a), abs(b))
                if (a < 0.0) != (b < 0.0):
                    mag = -mag
                alpha[p, dst + k] = mag


@njit(cache=True, inline="always")
def _push_bit(pl, cw, buf, p, i, v, t, n):
    # ``buf`` holds two scratch rows used alternately while climbing
    src = 0
    buf[0, 0] = v
    size = 1
    d = t
    while d > 0 and (i >> (t - d)) & 1:
        off = 2 * n - 2 * (n >> d)
        dst = 1 - src
        for k in range(size):
            b = buf[src, k]
            buf[dst, k] = pl[p, off + k] ^ b
            buf[dst, size + k] = b
        size *= 2
        src = dst
        d -= 1
    if d == 0:
        for k in range(size):
            cw[p, k] = buf[src, k]
    else:
        off = 2 * n - 2 * (n >> d)
        for k in range(size):
            pl[p, off + k] = buf[src, k]


@njit(cache=True)
def scl_kernel(llr, scores, frozen, src_ptr, src_idx, ext, list_size):
    n_in, n = llr.shape
    t = 0
    while (1 << t) < n:
        t += 1
    cap = max(list_size, n_in)

    alpha = np.zeros((cap, 2 * n))
    pl = np.zeros((cap, 2 * n), dtype=np.uint8)
    u = np.zeros((cap, n), dtype=np.uint8)
    cw = np.zeros((cap, n), dtype=np.uint8)
    sc = np.zeros(cap)
    origin = np.zeros(cap, dtype=np.int64)

    buf = np.zeros((2, n), dtype=np.uint8)
    cand = np.zeros(2 * cap)
    keep0 = np.zeros(cap, dtype=np.bool_)
    keep1 = np.zeros(cap, dtype=np.bool_)
    alive = np.zeros(cap, dtype=np.bool_)
    act = np.zeros(cap, dtype=np.int64)
    free = np.zeros(cap, dtype=np.int64)

    for p in range(n_in):
        alpha[p, :n] = llr[p]
        sc[p] = scores[p]
        origin[p] = p
        alive[p] = True
        act[p] = p
    nact = n_in

    for i in range(n):
        for k in range(nact):
            _descend(alpha, pl, act[k], i, t, n)

        if frozen[i]:
            for k in range(nact):
                p = act[k]
                v = ext[origin[p], i]
                for s in range(src_ptr[i], src_ptr[i + 1]):
                    v ^= u[p, src_idx[s]]
                sc[p] += _penalty(v, alpha[p, 2 * n - 2])
                u[p, i] = v
                _push_bit(pl, cw, buf, p, i, v, t, n)
            continue

        for k in range(nact):
            p = act[k]
            st = alpha[p, 2 * n - 2]
            cand[2 * k] = sc[p] + _penalty(0, st)
            cand[2 * k + 1] = sc[p] + _penalty(1, st)
        ncand = 2 * nact
        keep = min(list_size, ncand)
        if keep == ncand:
            for k in range(nact):
                keep0[k] = True
                keep1[k] = True
        else:
            for k in range(nact):
                keep0[k] = False
                keep1[k] = False
            # stable: equal scores keep the lower candidate index (slot, bit)
            order = np.argsort(-cand[:ncand], kind="mergesort")
            for r in range(keep):
                ci = order[r]
                if ci & 1:
                    keep1[ci // 2] = True
                else:
                    keep0[ci // 2] = True

        for k in range(nact):
            if not keep0[k] and not keep1[k]:
                alive[act[k]] = False
        nfree = 0
        for q in range(cap):
            if not alive[q]:
                free[nfree] = q
                nfree += 1
        fi = 0
        for k in range(nact):
            p = act[k]
            if keep0[k] and keep1[k]:
                q = free[fi]
                fi += 1
                alive[q] = True
                alpha[q] = alpha[p]
                pl[q] = pl[p]
                u[q] = u[p]
                origin[q] = origin[p]
                u[q, i] = 1
                sc[q] = cand[2 * k + 1]
                u[p, i] = 0
                sc[p] = cand[2 * k]
                _push_bit(pl, cw, buf, q, i, 1, t, n)
                _push_bit(pl, cw, buf, p, i, 0, t, n)
            elif keep0[k] or keep1[k]:
                v = 1 if keep1[k] else 0
                u[p, i] = v
                sc[p] = cand[2 * k + v]
                _push_bit(pl, cw, buf, p, i, v, t, n)
        nact = 0
        for q in range(cap):
            if alive[q]:
                act[nact] = q
                nact += 1

    npaths = nact
    order = np.empty(npaths, dtype=np.int64)
    rank = np.argsort(-sc[act[:nact]], kind="mergesort")
    for k in range(npaths):
        order[k] = act[rank[k]]
    out_origin = np.empty(npaths, dtype=np.int64)
    out_u = np.empty((npaths, n), dtype=np.uint8)
    out_c = np.empty((npaths, n), dtype=np.uint8)
    out_sc = np.empty(npaths)
    for k in range(npaths):
        p = order[k]
        out_origin[k] = origin[p]
        out_u[k] = u[p]
        out_c[k] = cw[p]
        out_sc[k] = sc[p]
    return out_origin, out_u, out_c, out_sc
