"""Determinant logits and chunked rotary position embeddings.

The N+1-linear form ``sum_a prod_i x_i[a]`` is not invariant under a common
rotation of its arguments; the determinant of the stacked chunk vectors is.
Feature vectors are cut into ``d // (N+1)`` chunks of width ``N+1`` (leftover
trailing features are ignored by the logits and left unrotated), and::

    logits[m0..mN] = sum_a det([K_0[m0, chunk a], ..., K_N[mN, chunk a]])

Rotations are ``exp(p * omega_a * G)`` for a fixed skew-symmetric generator
``G``, so they form a commuting one-parameter group with determinant 1. A
common shift of every position therefore leaves the logits unchanged.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .attention import SimplicialParams, _check_input, _dense_mask
from .tensor import apply_values, as_matrix, softmax_multi_axis

__all__ = [
    "RopeConfig",
    "default_generator",
    "rotation",
    "det_logits",
    "apply_rotations",
    "rotate_all",
    "rope_forward",
    "rotation_deviation",
    "shift_deviation",
    "antisymmetry_deviation",
]


def default_generator(size: int) -> np.ndarray:
    g = np.zeros((size, size))
    for i in range(size - 1):
        g[i, i + 1] = 1.0
        g[i + 1, i] = -1.0
    return g


@dataclass(frozen=True)
class RopeConfig:
    order: int
    dim: int
    base: float = 10000.0
    scale_by_chunks: bool = False
    generator: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.dim < self.order + 1:
            raise ValueError(
                f"dim {self.dim} is smaller than the chunk width {self.order + 1}"
            )
        g = default_generator(self.chunk) if self.generator is None else as_matrix(self.generator)
        if g.shape != (self.chunk, self.chunk):
            raise ValueError(f"generator must be {self.chunk}x{self.chunk}")
        if not np.array_equal(g, -g.T):
            raise ValueError("generator must be exactly skew-symmetric")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)

    @property
    def chunk(self) -> int:
        return self.order + 1

    @property
    def num_chunks(self) -> int:
        return self.dim // self.chunk

    def frequencies(self) -> np.ndarray:
        a = np.arange(self.num_chunks)
        return self.base ** (-a / self.num_chunks)


def _expm_skew(theta: float, g: np.ndarray) -> np.ndarray:
    size = g.shape[0]
    if theta == 0.0:
        return np.eye(size)
    if size == 2:
        # g = w * [[0, 1], [-1, 0]]
        w = theta * g[0, 1]
        c, s = math.cos(w), math.sin(w)
        return np.array([[c, s], [-s, c]])
    if size == 3:
        # Rodrigues: exp(A) = I + sin(t)/t A + (1 - cos(t))/t^2 A^2 with t = |axis|
        a = theta * g
        t = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if t == 0.0:
            return np.eye(3)
        a2 = a @ a
        return np.eye(3) + (math.sin(t) / t) * a + ((1.0 - math.cos(t)) / t**2) * a2
    return scipy.linalg.expm(theta * g)


def rotation(theta: float, generator: np.ndarray) -> np.ndarray:
    """``exp(theta * G)``; special orthogonal for skew-symmetric ``G``."""
    r = _expm_skew(float(theta), np.asarray(generator, dtype=np.float64))
    if abs(np.linalg.det(r) - 1.0) > 1e-9:
        raise ArithmeticError(f"rotation determinant {np.linalg.det(r)} is not 1")
    return r


@lru_cache(maxsize=None)
def _permutations(size: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for perm in itertools.permutations(range(size)):
        inversions = sum(1 for i in range(size) for j in range(i + 1, size) if perm[i] > perm[j])
        out.append((perm, -1 if inversions % 2 else 1))
    return tuple(out)


def det_logits(keys, config: RopeConfig) -> np.ndarray:
    """Sum of chunk determinants over every (N+1)-tuple of rows, via Leibniz expansion."""
    keys = [as_matrix(k, f"keys[{i}]") for i, k in enumerate(keys)]
    if len(keys) != config.order + 1:
        raise ValueError(f"need {config.order + 1} key matrices, got {len(keys)}")
    n, d = keys[0].shape
    if d < config.chunk:
        raise ValueError(f"feature dim {d} is smaller than the chunk width {config.chunk}")
    for i, k in enumerate(keys):
        if k.shape != (n, d):
            raise ValueError(f"keys[{i}] has shape {k.shape}, expected {(n, d)}")
    w = config.chunk
    ndim = len(keys)
    out = np.zeros((n,) * ndim)
    for a in range(d // w):
        cols = [k[:, a * w : (a + 1) * w] for k in keys]
        for perm, sign in _permutations(w):
            term = cols[0][:, perm[0]].reshape((n,) + (1,) * (ndim - 1))
            for i in range(1, ndim):
                shape = [1] * ndim
                shape[i] = n
                term = term * cols[i][:, perm[i]].reshape(shape)
            if sign > 0:
                out += term
            else:
                out -= term
    if config.scale_by_chunks:
        out /= math.sqrt(d // w)
    return out


def apply_rotations(K, positions, config: RopeConfig) -> np.ndarray:
    """Rotate chunk ``a`` of row ``i`` by ``exp(positions[i] * omega_a * G)``."""
    K = as_matrix(K, "K")
    positions = np.asarray(positions)
    if positions.shape != (K.shape[0],):
        raise ValueError(f"need {K.shape[0]} positions, got shape {positions.shape}")
    if np.any(positions < 0):
        raise ValueError("positions must be nonnegative")
    w = config.chunk
    out = K.copy()
    for a, omega in enumerate(config.frequencies()):
        block = slice(a * w, (a + 1) * w)
        for i, p in enumerate(positions):
            if p == 0:
                continue
            out[i, block] = rotation(float(p) * omega, config.generator) @ K[i, block]
    return out


def rotate_all(K, theta: float, config: RopeConfig) -> np.ndarray:
    """Apply the same rotation ``exp(theta * G)`` to every chunk of every row."""
    K = as_matrix(K, "K")
    r = rotation(theta, config.generator)
    out = K.copy()
    w = config.chunk
    for a in range(config.num_chunks):
        block = slice(a * w, (a + 1) * w)
        out[:, block] = K[:, block] @ r.T
    return out


def rope_forward(
    X,
    params: SimplicialParams,
    positions,
    config: RopeConfig | None = None,
    mask=None,
    skip: bool = False,
    rotate: bool = True,
) -> np.ndarray:
    """Forward pass with determinant logits on position-rotated keys.

    Values are never rotated. ``rotate=False`` gives the plain determinant
    variant without positional rotations.
    """
    X = _check_input(X, params)
    if config is None:
        config = RopeConfig(params.order, params.head_dim)
    if config.order != params.order or config.dim != params.head_dim:
        raise ValueError("rope config does not match the parameter order/head dim")
    dense = _dense_mask(mask, X.shape[0], params.order)
    heads = []
    for kh, vh in zip(params.keys, params.values):
        P = [X @ w for w in kh]
        if rotate:
            P = [apply_rotations(p, positions, config) for p in P]
        attn = softmax_multi_axis(det_logits(P, config), dense)
        heads.append(apply_values(attn, [X @ w for w in vh]))
    out = np.concatenate(heads, axis=1) @ params.out
    if skip:
        out = X + out
    return out


def rotation_deviation(keys, theta: float, config: RopeConfig) -> float:
    """Max change of the determinant logits when every key is rotated by ``exp(theta G)``."""
    before = det_logits(keys, config)
    after = det_logits([rotate_all(k, theta, config) for k in keys], config)
    return float(np.max(np.abs(after - before)))


def shift_deviation(keys, positions, shift: int, config: RopeConfig) -> float:
    """Max change of the rotated logits when all positions move by ``shift``."""
    positions = np.asarray(positions)
    base = det_logits([apply_rotations(k, positions, config) for k in keys], config)
    moved = det_logits([apply_rotations(k, positions + shift, config) for k in keys], config)
    return float(np.max(np.abs(moved - base)))


def antisymmetry_deviation(keys, i: int, j: int, config: RopeConfig) -> float:
    """Max of ``|L' + L^T|`` where ``L'`` uses keys ``i`` and ``j`` swapped and ``L^T`` swaps axes ``i`` and ``j``.

    Swapping two arguments of a determinant flips its sign, so the logits
    negate once the corresponding tensor axes are exchanged back.
    """
    if i == j:
        raise ValueError("antisymmetry needs two distinct argument slots")
    keys = list(keys)
    swapped = list(keys)
    swapped[i], swapped[j] = keys[j], keys[i]
    base = det_logits(keys, config)
    flipped = det_logits(swapped, config)
    return float(np.max(np.abs(flipped + np.swapaxes(base, i, j))))
