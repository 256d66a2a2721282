"""Tensor text I/O (``TNSR v1``), CSV tensors and ``key=value`` files.

``TNSR v1`` layout::

    N
    I_1 I_2 ... I_N
    v_1 v_2 ...            # whitespace separated, first index fastest

Lines starting with ``#`` are ignored on read.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .tensor import as_tensor

__all__ = ["read_tensor", "write_tensor", "read_csv_tensor", "load_tensor", "read_kv", "format_float"]


class TensorFormatError(ValueError):
    pass


def format_float(x: float) -> str:
    """Scientific notation that round-trips a float64 exactly."""
    return f"{float(x):.16e}"


def write_tensor(path, t: np.ndarray) -> None:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        t = t.reshape(1)
    flat = t.reshape(-1, order="F")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{t.ndim}\n")
        fh.write(" ".join(str(d) for d in t.shape) + "\n")
        for v in flat:
            fh.write(format_float(v) + "\n")


def _tokens(path) -> list[str]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            out.extend(line.split())
    return out


def read_tensor(path) -> np.ndarray:
    tok = _tokens(path)
    if tok[:2] == ["TNSR", "v1"]:
        tok = tok[2:]
    try:
        order = int(tok[0])
        dims = [int(x) for x in tok[1:1 + order]]
        values = np.array([float(x) for x in tok[1 + order:]])
    except (IndexError, ValueError) as exc:
        raise TensorFormatError(f"{path}: not a TNSR v1 file ({exc})") from exc
    if order < 1 or len(dims) != order:
        raise TensorFormatError(f"{path}: bad header")
    try:
        return as_tensor(values, dims)
    except ValueError as exc:
        raise TensorFormatError(f"{path}: {exc}") from exc


def read_csv_tensor(path, dims: Sequence[int]) -> np.ndarray:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.extend(float(x) for x in line.replace(";", ",").split(",") if x.strip())
            except ValueError as exc:
                raise TensorFormatError(f"{path}: {exc}") from exc
    try:
        return as_tensor(np.array(vals), dims)
    except ValueError as exc:
        raise TensorFormatError(f"{path}: {exc}") from exc


def load_tensor(path, dims: Sequence[int] | None = None) -> np.ndarray:
    """Read ``.csv`` (needs ``dims``) or TNSR v1 (anything else)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if dims is None:
            raise TensorFormatError(f"{path}: CSV input needs --dims")
        return read_csv_tensor(path, dims)
    return read_tensor(path)


def read_kv(path) -> dict[str, str]:
    """Flat ``key=value`` text; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values
