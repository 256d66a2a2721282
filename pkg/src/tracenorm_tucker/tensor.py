"""Dense N-way tensor kernels.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The mode-n
unfolding follows the first-index-fastest convention: element
``(i_1, ..., i_N)`` lands in column ``sum_{k != n} i_k * J_k`` with
``J_k = prod_{m < k, m != n} I_m`` (0-based here), so the Kronecker
products that appear next to an unfolding run in descending mode order,
``U_N ⊗ ... ⊗ U_{n+1} ⊗ U_{n-1} ⊗ ... ⊗ U_1``.

Modes are 0-based throughout the library API.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

__all__ = [
    "as_tensor",
    "unfold",
    "refold",
    "mode_product",
    "multi_mode_product",
    "kronecker",
    "kron_chain",
    "inner",
    "frob_norm",
]


def as_tensor(data, dims: Sequence[int] | None = None) -> np.ndarray:
    """Validate and copy ``data`` into a float64 tensor.

    When ``dims`` is given, ``data`` is read as a flat buffer in
    first-index-fastest order.
    """
    arr = np.array(data, dtype=np.float64, copy=True)
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims) or len(dims) < 1:
            raise ValueError(f"invalid dims {dims}")
        if arr.size != int(np.prod(dims)):
            raise ValueError(f"buffer of length {arr.size} does not match dims {dims}")
        arr = arr.reshape(dims, order="F")
    if arr.ndim < 1:
        arr = arr.reshape(1)
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"every extent must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


def _check_mode(ndim: int, mode: int) -> int:
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order-{ndim} tensor")
    return mode


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding, shape ``(I_mode, prod_{j != mode} I_j)``."""
    _check_mode(t.ndim, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def refold(m: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    rest = int(np.prod(dims)) // dims[mode]
    if m.shape != (dims[mode], rest):
        raise ValueError(f"matrix of shape {m.shape} cannot be refolded to {dims} along mode {mode}")
    moved = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    return np.moveaxis(np.reshape(m, moved, order="F"), 0, mode)


def mode_product(t: np.ndarray, u: np.ndarray, mode: int) -> np.ndarray:
    """n-mode product ``t ×_mode u``; ``u`` has shape ``(J, I_mode)``."""
    _check_mode(t.ndim, mode)
    if u.ndim != 2 or u.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix of shape {u.shape} incompatible with mode {mode} of extent {t.shape[mode]}"
        )
    # tensordot puts the new axis last; move it back into place
    out = np.tensordot(t, u, axes=([mode], [1]))
    return np.moveaxis(out, -1, mode)


def multi_mode_product(
    t: np.ndarray,
    mats: Sequence[np.ndarray | None],
    transpose: bool = False,
    skip: int | None = None,
) -> np.ndarray:
    """Apply ``t ×_1 A_1 ×_2 ... ×_N A_N``.

    Entries of ``mats`` that are ``None``, and the mode ``skip``, are left
    untouched. With ``transpose=True`` each ``A_n`` is used as ``A_n^T``.
    """
    if len(mats) != t.ndim:
        raise ValueError(f"expected {t.ndim} matrices, got {len(mats)}")
    out = t
    for n, a in enumerate(mats):
        if a is None or n == skip:
            continue
        out = mode_product(out, a.T if transpose else a, n)
    return out


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``[a_ij * b]``."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def kron_chain(factors: Sequence[np.ndarray], skip: int | None = None) -> np.ndarray:
    """``U_N ⊗ ... ⊗ U_1`` (descending order), omitting mode ``skip``.

    Materializes the full product; only meant for small problems and tests.
    """
    mats = [f for n, f in enumerate(factors) if n != skip]
    if not mats:
        return np.ones((1, 1))
    return reduce(kronecker, reversed(mats))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def frob_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(t)))
