# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: ancestor weight updates and MCMC walk steps.

Both functions read the numpy tables a :class:`~tanglesim.tangle.Tangle`
maintains (past-cone bitsets, ``weights`` and the child edge lists)
and must stay result-identical to ``_pykernels``.
"""

from libc.math cimport exp


def bump_ancestors(tangle, Py_ssize_t node):
    """Add one to the cumulative weight of every strict ancestor of ``node``.

    Scans the site's past-cone bitset byte by byte.
    """
    strict = tangle.past_bits(node) ^ ((<object> 1) << node)
    if not strict:
        return
    cdef bytes raw = strict.to_bytes((node + 7) // 8, "little")
    cdef const unsigned char[::1] bits = raw
    cdef long long[::1] weights = tangle.weights
    cdef Py_ssize_t i, base, n = bits.shape[0]
    cdef unsigned char b
    with nogil:
        for i in range(n):
            b = bits[i]
            base = i * 8
            while b:
                if b & 1:
                    weights[base] += 1
                b >>= 1
                base += 1


def mcmc_walk(tangle, Py_ssize_t start, double alpha, const double[::1] uniforms):
    """Walk from ``start`` towards a tip, consuming one uniform per branching step.

    Returns ``(site, used, done)``; ``done`` is False when the uniforms ran
    out before a tip was reached, in which case ``site`` is where to resume.
    """
    cdef const long long[::1] head = tangle.child_head
    cdef const long long[::1] nxt = tangle.edge_next
    cdef const long long[::1] child = tangle.edge_child
    cdef const long long[::1] weights = tangle.weights
    cdef Py_ssize_t cur = start, used = 0, n_u = uniforms.shape[0]
    cdef long long e, wmax
    cdef double total, acc, target
    cdef bint done = True
    with nogil:
        while True:
            e = head[cur]
            if e < 0:
                break
            if nxt[e] < 0:
                cur = child[e]
                continue
            if used >= n_u:
                done = False
                break
            wmax = weights[child[e]]
            e = nxt[e]
            while e >= 0:
                if weights[child[e]] > wmax:
                    wmax = weights[child[e]]
                e = nxt[e]
            total = 0.0
            e = head[cur]
            while e >= 0:
                total += exp(-alpha * <double> (wmax - weights[child[e]]))
                e = nxt[e]
            target = uniforms[used] * total
            used += 1
            acc = 0.0
            e = head[cur]
            while True:
                acc += exp(-alpha * <double> (wmax - weights[child[e]]))
                if target < acc or nxt[e] < 0:
                    break
                e = nxt[e]
            cur = child[e]
    return cur, used, done
