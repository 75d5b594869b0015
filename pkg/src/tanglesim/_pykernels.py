"""Pure-Python versions of the compiled kernels (same results, slower)."""

from math import exp

import numpy as np


def bump_ancestors(tangle, node):
    strict = tangle.past_bits(node) ^ (1 << node)
    if not strict:
        return
    raw = np.frombuffer(strict.to_bytes((node + 7) // 8, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:node]
    tangle.weights[:node] += bits


def mcmc_walk(tangle, start, alpha, uniforms):
    children = tangle._children
    weights = tangle.weights
    cur = start
    used = 0
    while True:
        kids = children[cur]
        if not kids:
            return cur, used, True
        if len(kids) == 1:
            cur = kids[0]
            continue
        if used >= len(uniforms):
            return cur, used, False
        ws = [int(weights[k]) for k in kids]
        wmax = max(ws)
        terms = [exp(-alpha * (wmax - w)) for w in ws]
        total = 0.0
        for t in terms:
            total += t
        target = uniforms[used] * total
        used += 1
        acc = 0.0
        pick = kids[-1]
        for k, t in zip(kids, terms):
            acc += t
            if target < acc:
                pick = k
                break
        cur = pick
