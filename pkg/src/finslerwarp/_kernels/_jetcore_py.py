"""Pure numpy fallback for the truncated-series kernels.

Same contract as the compiled ``_jetcore`` module: float64 arrays shaped
``(R+1, S+1, N)``.  The Cauchy product is done as one gather/reduce per
chunk of batch columns, using an index plan cached per table shape.
"""
from functools import lru_cache

import numpy as np

BACKEND = "python"

# bounds the (pairs x columns) temporary in mul()
_CHUNK_ELEMS = 1 << 22


@lru_cache(maxsize=None)
def _mul_plan(R1, S1):
    a_idx, b_idx, starts = [], [], []
    for i in range(R1):
        for j in range(S1):
            starts.append(len(a_idx))
            for p in range(i + 1):
                for q in range(j + 1):
                    a_idx.append(p * S1 + q)
                    b_idx.append((i - p) * S1 + (j - q))
    return np.array(a_idx), np.array(b_idx), np.array(starts)


@lru_cache(maxsize=None)
def _div_plan(R1, S1):
    plan = []
    for i in range(R1):
        for j in range(S1):
            b_idx, c_idx = [], []
            for p in range(i + 1):
                for q in range(j + 1):
                    if p == 0 and q == 0:
                        continue
                    b_idx.append(p * S1 + q)
                    c_idx.append((i - p) * S1 + (j - q))
            plan.append((i * S1 + j, np.array(b_idx, dtype=int), np.array(c_idx, dtype=int)))
    return plan


def mul(a, b):
    R1, S1, N = a.shape
    a_idx, b_idx, starts = _mul_plan(R1, S1)
    af = a.reshape(R1 * S1, N)
    bf = b.reshape(R1 * S1, N)
    out = np.empty((R1 * S1, N))
    step = max(1, _CHUNK_ELEMS // len(a_idx))
    for lo in range(0, N, step):
        hi = min(N, lo + step)
        prod = af[a_idx, lo:hi] * bf[b_idx, lo:hi]
        out[:, lo:hi] = np.add.reduceat(prod, starts, axis=0)
    return out.reshape(R1, S1, N)


def div(a, b):
    R1, S1, N = a.shape
    af = a.reshape(R1 * S1, N)
    bf = b.reshape(R1 * S1, N)
    cf = np.empty((R1 * S1, N))
    b0 = bf[0]
    for flat, b_idx, c_idx in _div_plan(R1, S1):
        acc = af[flat].copy()
        if len(b_idx):
            acc -= (bf[b_idx] * cf[c_idx]).sum(axis=0)
        cf[flat] = acc / b0
    return cf.reshape(R1, S1, N)


def compose(a, fk):
    h = np.array(a, copy=True)
    h[0, 0] = 0.0
    K = fk.shape[0] - 1
    res = np.zeros_like(h)
    res[0, 0] = fk[K]
    for m in range(K - 1, -1, -1):
        res = mul(res, h)
        res[0, 0] += fk[m]
    return res
