"""Slow, loop-based reference implementations used only by the tests.

They follow the defining index formulas directly and share no code with
the package.
"""

import itertools

import numpy as np


def unfold_by_formula(t, n):
    """Mode-n unfolding from the 1-based column formula
    j = 1 + sum_{k != n} (i_k - 1) J_k,  J_k = prod_{m < k, m != n} I_m."""
    dims = t.shape
    cols = int(np.prod(dims)) // dims[n]
    out = np.empty((dims[n], cols))
    for idx in itertools.product(*[range(1, d + 1) for d in dims]):
        j = 1
        for k in range(len(dims)):
            if k == n:
                continue
            jk = 1
            for m in range(k):
                if m != n:
                    jk *= dims[m]
            j += (idx[k] - 1) * jk
        out[idx[n] - 1, j - 1] = t[tuple(i - 1 for i in idx)]
    return out


def mode_product_by_sum(t, u, n):
    dims = list(t.shape)
    new_dims = dims.copy()
    new_dims[n] = u.shape[0]
    out = np.zeros(new_dims)
    for idx in itertools.product(*[range(d) for d in new_dims]):
        acc = 0.0
        for i_n in range(dims[n]):
            src = list(idx)
            src[n] = i_n
            acc += t[tuple(src)] * u[idx[n], i_n]
        out[idx] = acc
    return out


def kron_by_blocks(a, b):
    m, n = a.shape
    p, q = b.shape
    out = np.zeros((m * p, n * q))
    for i in range(m):
        for j in range(n):
            out[i * p:(i + 1) * p, j * q:(j + 1) * q] = a[i, j] * b
    return out


def inner_by_loop(a, b):
    acc = 0.0
    for idx in np.ndindex(a.shape):
        acc += a[idx] * b[idx]
    return acc


def random_orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def central_gradient(f, x, h=1e-5):
    """Central-difference gradient of scalar ``f`` at array ``x``."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g
