"""Dense tensor kernels shared by every attention variant.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The logits
contraction and the value projection accumulate over the feature axis in a
fixed sequential order so that results are reproducible run to run and can
be compared bitwise against a naive loop.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .rng import make_rng

__all__ = [
    "as_matrix",
    "contract_logits",
    "softmax_multi_axis",
    "apply_values",
    "norm_one",
    "norm_inf",
    "norm_one_inf",
    "PowerIteration",
    "power_iteration",
    "spectral_norm",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def _outer_axis(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = vec.shape[0]
    return vec.reshape(shape)


def contract_logits(keys: Sequence[np.ndarray], scale: float) -> np.ndarray:
    """Contract N+1 projected key matrices into the ``n**(N+1)`` logits tensor.

    ``out[k0, ..., kN] = scale * sum_a prod_i keys[i][k_i, a]``, with the
    product taken left to right over ``i`` and the sum accumulated
    sequentially over the feature axis ``a``.
    """
    keys = [as_matrix(k, f"keys[{i}]") for i, k in enumerate(keys)]
    if len(keys) < 2:
        raise ValueError("need at least two key matrices (order N >= 1)")
    shape = keys[0].shape
    for i, k in enumerate(keys):
        if k.shape != shape:
            raise ValueError(f"keys[{i}] has shape {k.shape}, expected {shape}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")

    ndim = len(keys)
    n, d = shape
    acc = np.zeros((n,) * ndim)
    for a in range(d):
        term = _outer_axis(keys[0][:, a], 0, ndim)
        for i in range(1, ndim):
            term = term * _outer_axis(keys[i][:, a], i, ndim)
        acc += term
    return scale * acc


def softmax_multi_axis(logits: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Softmax over every axis but the first (the query axis).

    ``mask`` is a boolean array of the same shape; ``False`` entries are left
    out of both the max and the partition sum and come back as exact zeros.
    """
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    flat = logits.reshape(n, -1)
    if mask is None:
        shifted = flat - flat.max(axis=1, keepdims=True)
        w = np.exp(shifted)
        out = w / w.sum(axis=1, keepdims=True)
        return out.reshape(logits.shape)

    mask = np.asarray(mask, dtype=bool)
    if mask.shape != logits.shape:
        raise ValueError(f"mask shape {mask.shape} does not match logits {logits.shape}")
    fmask = mask.reshape(n, -1)
    empty = np.flatnonzero(~fmask.any(axis=1))
    if empty.size:
        raise ValueError(f"query {int(empty[0])} has no unmasked simplex")
    row_max = np.where(fmask, flat, -np.inf).max(axis=1, keepdims=True)
    w = np.zeros_like(flat)
    w[fmask] = np.exp(flat[fmask] - np.broadcast_to(row_max, flat.shape)[fmask])
    out = w / w.sum(axis=1, keepdims=True)
    return out.reshape(logits.shape)


def apply_values(attn: np.ndarray, values: Sequence[np.ndarray]) -> np.ndarray:
    """Project attention back onto tokens.

    ``out[i, j] = sum_{k1..kN} attn[i, k1, ..., kN] * prod_m values[m][k_m, j]``
    """
    attn = np.asarray(attn, dtype=np.float64)
    values = [as_matrix(v, f"values[{m}]") for m, v in enumerate(values)]
    order = attn.ndim - 1
    if len(values) != order:
        raise ValueError(f"attention of order {order} needs {order} value matrices, got {len(values)}")
    n = attn.shape[0]
    if attn.shape != (n,) * (order + 1):
        raise ValueError(f"attention tensor must be cubical, got shape {attn.shape}")
    d = values[0].shape[1]
    for m, v in enumerate(values):
        if v.shape != (n, d):
            raise ValueError(f"values[{m}] has shape {v.shape}, expected {(n, d)}")

    # prod[k1, ..., kN, j] = prod_m values[m][k_m, j]
    prod = values[0].reshape((n,) + (1,) * (order - 1) + (d,))
    for m in range(1, order):
        shape = [1] * order + [d]
        shape[m] = n
        prod = prod * values[m].reshape(shape)
    prod = prod.reshape(-1, d)
    flat = attn.reshape(n, -1)
    out = np.zeros((n, d))
    for k in range(flat.shape[1]):
        out += flat[:, k : k + 1] * prod[k : k + 1, :]
    return out


def _check_nonempty(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    if a.size == 0:
        raise ValueError("norm of an empty matrix is undefined")
    return a


def norm_one(a) -> float:
    """Max absolute column sum."""
    a = _check_nonempty(a)
    return float(np.abs(a).sum(axis=0).max())


def norm_inf(a) -> float:
    """Max absolute row sum."""
    a = _check_nonempty(a)
    return float(np.abs(a).sum(axis=1).max())


def norm_one_inf(a) -> float:
    """Composite norm ``sqrt(||A||_1 ||A||_inf)``."""
    return float(np.sqrt(norm_one(a) * norm_inf(a)))


class PowerIteration(NamedTuple):
    value: float
    converged: bool
    iterations: int


def power_iteration(
    matvec,
    rmatvec,
    dim: int,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    seed: int = 0,
) -> PowerIteration:
    """Largest singular value of a linear operator given as ``matvec``/``rmatvec``.

    Iterates ``v <- A^T A v`` from a fixed pseudo-random start until the
    singular value estimate changes by less than ``tol`` relative.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    v = make_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for it in range(1, max_iter + 1):
        w = rmatvec(matvec(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return PowerIteration(0.0, True, it)
        new_sigma = float(np.sqrt(nw))
        v = w / nw
        if abs(new_sigma - sigma) <= tol * new_sigma:
            return PowerIteration(float(np.linalg.norm(matvec(v))), True, it)
        sigma = new_sigma
    return PowerIteration(float(np.linalg.norm(matvec(v))), False, max_iter)


def spectral_norm(a, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    a = as_matrix(a)
    if a.size == 0 or not np.any(a):
        return 0.0
    res = power_iteration(lambda v: a @ v, lambda u: a.T @ u, a.shape[1], tol, max_iter)
    return res.value
