"""N-simplicial attention forward pass.

For one head with projected keys ``P_i = X @ W_K[i]`` (i = 0..N) and values
``V_m = X @ W_V[m]`` (m = 1..N)::

    logits[k0..kN] = 1/sqrt(d_h) * sum_a prod_i P_i[k_i, a]
    attn           = softmax over (k1..kN) for each k0
    out[k0, j]     = sum_{k1..kN} attn[k0, k1..kN] * prod_m V_m[k_m, j]

Heads are concatenated and merged by an output projection ``W_O``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .hypergraph import SimplicialMask
from .tensor import apply_values, as_matrix, contract_logits, softmax_multi_axis

__all__ = [
    "SimplicialParams",
    "random_params",
    "head_attention",
    "forward",
    "forward_stack",
    "reduce_order",
    "reduce_check",
    "dumps_params",
    "loads_params",
    "save_params",
    "load_params",
]


@dataclass(frozen=True)
class SimplicialParams:
    """Weights of one N-simplicial attention layer.

    ``keys[h]`` holds the N+1 key projections of head ``h`` and ``values[h]``
    its N value projections, each ``dim x head_dim``. ``out`` is the
    ``(heads * head_dim) x dim`` merge matrix.
    """

    keys: tuple[tuple[np.ndarray, ...], ...]
    values: tuple[tuple[np.ndarray, ...], ...]
    out: np.ndarray

    def __post_init__(self):
        keys = tuple(tuple(as_matrix(w, "key weight") for w in head) for head in self.keys)
        values = tuple(tuple(as_matrix(w, "value weight") for w in head) for head in self.values)
        out = as_matrix(self.out, "output projection")
        if not keys or len(keys) != len(values):
            raise ValueError("need the same, nonzero number of key and value heads")
        order = len(keys[0]) - 1
        if order < 1:
            raise ValueError("each head needs at least two key matrices")
        shape = keys[0][0].shape
        for h, (kh, vh) in enumerate(zip(keys, values)):
            if len(kh) != order + 1 or len(vh) != order:
                raise ValueError(
                    f"head {h}: expected {order + 1} key and {order} value matrices, "
                    f"got {len(kh)} and {len(vh)}"
                )
            for w in kh + vh:
                if w.shape != shape:
                    raise ValueError(f"head {h}: weight shape {w.shape} differs from {shape}")
                if not np.all(np.isfinite(w)):
                    raise ValueError(f"head {h}: non-finite weight")
        if out.shape != (len(keys) * shape[1], shape[0]):
            raise ValueError(f"output projection has shape {out.shape}, expected {(len(keys) * shape[1], shape[0])}")
        for w in (w for head in keys + values for w in head):
            w.setflags(write=False)
        out.setflags(write=False)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "out", out)

    @property
    def order(self) -> int:
        return len(self.keys[0]) - 1

    @property
    def dim(self) -> int:
        return self.keys[0][0].shape[0]

    @property
    def head_dim(self) -> int:
        return self.keys[0][0].shape[1]

    @property
    def heads(self) -> int:
        return len(self.keys)

    @classmethod
    def single_head(cls, keys: Sequence, values: Sequence, out=None) -> "SimplicialParams":
        keys = tuple(as_matrix(k) for k in keys)
        if out is None:
            out = np.eye(keys[0].shape[1], keys[0].shape[0])
        return cls((keys,), (tuple(values),), out)

    def with_values(self, values) -> "SimplicialParams":
        return SimplicialParams(self.keys, values, self.out)


def random_params(
    rng: np.random.Generator,
    dim: int,
    order: int,
    heads: int = 1,
    scale: float = 1.0,
    head_dim: int | None = None,
) -> SimplicialParams:
    """Gaussian weights with entry std ``scale``; ``W_O`` is the identity-like block matrix."""
    if head_dim is None:
        if dim % heads:
            raise ValueError(f"dim {dim} is not divisible by heads {heads}")
        head_dim = dim // heads
    keys = tuple(
        tuple(scale * rng.standard_normal((dim, head_dim)) for _ in range(order + 1))
        for _ in range(heads)
    )
    values = tuple(
        tuple(scale * rng.standard_normal((dim, head_dim)) for _ in range(order))
        for _ in range(heads)
    )
    out = np.eye(heads * head_dim, dim)
    return SimplicialParams(keys, values, out)


def _dense_mask(mask, n: int, order: int) -> np.ndarray | None:
    if mask is None:
        return None
    if isinstance(mask, SimplicialMask):
        if mask.n != n or mask.order != order:
            raise ValueError(
                f"mask is for n={mask.n}, order={mask.order}; input has n={n}, order={order}"
            )
        return mask.to_dense()
    dense = np.asarray(mask, dtype=bool)
    if dense.shape != (n,) * (order + 1):
        raise ValueError(f"dense mask shape {dense.shape} does not match n={n}, order={order}")
    return dense


def head_attention(X: np.ndarray, keys, values, mask=None) -> tuple[np.ndarray, np.ndarray]:
    """One head: returns ``(output, attention tensor)``."""
    P = [X @ w for w in keys]
    V = [X @ w for w in values]
    logits = contract_logits(P, 1.0 / math.sqrt(P[0].shape[1]))
    attn = softmax_multi_axis(logits, mask)
    return apply_values(attn, V), attn


def _check_input(X, params: SimplicialParams) -> np.ndarray:
    X = as_matrix(X, "X")
    if X.shape[1] != params.dim:
        raise ValueError(f"X has {X.shape[1]} features, params expect {params.dim}")
    if X.shape[0] < 1:
        raise ValueError("X must have at least one token")
    return X


def forward(X, params: SimplicialParams, mask=None, skip: bool = False) -> np.ndarray:
    X = _check_input(X, params)
    dense = _dense_mask(mask, X.shape[0], params.order)
    heads = [head_attention(X, kh, vh, dense)[0] for kh, vh in zip(params.keys, params.values)]
    out = np.concatenate(heads, axis=1) @ params.out
    if skip:
        out = X + out
    return out


def forward_stack(
    X0,
    layers: Sequence[SimplicialParams],
    mask=None,
    skip: bool = False,
    record: bool = True,
) -> tuple[np.ndarray, list[np.ndarray]]:
    X = as_matrix(X0, "X0")
    trajectory = [X]
    if mask is not None and layers:
        mask = _dense_mask(mask, X.shape[0], layers[0].order)
    for params in layers:
        X = forward(X, params, mask, skip)
        if record:
            trajectory.append(X)
    return X, trajectory


def reduce_order(params: SimplicialParams, X, head: int = 0) -> dict[int, np.ndarray]:
    """Lower-order logits recovered from one order-N contraction.

    Every projected key matrix on axes 2..N gets an extra all-ones row (a
    pseudo-token at index ``n``). Fixing axes m+1..N on that pseudo-token
    reduces the N+1-linear form to the m+1-linear form over the first m+1
    keys. Returns ``{m: slice}`` for ``m = 1..N-1``, each of shape
    ``(n,) * (m + 1)``.
    """
    if params.order < 2:
        raise ValueError(f"order reduction needs N >= 2, got N = {params.order}")
    X = _check_input(X, params)
    n = X.shape[0]
    P = [X @ w for w in params.keys[head]]
    d_h = P[0].shape[1]
    ones = np.ones((1, d_h))
    # pad every axis to n+1 rows so contract_logits sees equal shapes; the
    # pseudo-token rows on axes 0 and 1 are never read
    augmented = [np.vstack([p, ones]) for p in P]
    logits = contract_logits(augmented, 1.0 / math.sqrt(d_h))
    slices = {}
    for m in range(1, params.order):
        index = (slice(0, n),) * (m + 1) + (n,) * (params.order - m)
        slices[m] = logits[index]
    return slices


def reduce_check(params: SimplicialParams, X, head: int = 0) -> dict[int, bool]:
    """Exact-equality check of every reduced slice against a direct lower-order contraction."""
    slices = reduce_order(params, X, head)
    P = [np.asarray(X, dtype=np.float64) @ w for w in params.keys[head]]
    scale = 1.0 / math.sqrt(P[0].shape[1])
    return {m: bool(np.array_equal(s, contract_logits(P[: m + 1], scale))) for m, s in slices.items()}


def _matrix_text(a: np.ndarray) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in a)


def dumps_params(params: SimplicialParams) -> str:
    """Text serialization: one JSON header line, then row blocks of float reprs."""
    blocks = []
    for h in range(params.heads):
        for i, w in enumerate(params.keys[h]):
            blocks.append((f"head{h}.key{i}", w))
        for m, w in enumerate(params.values[h], start=1):
            blocks.append((f"head{h}.value{m}", w))
    blocks.append(("out", params.out))
    header = {
        "format": "nsimplicial-params",
        "version": 1,
        "order": params.order,
        "dim": params.dim,
        "head_dim": params.head_dim,
        "heads": params.heads,
        "matrices": [{"name": name, "shape": list(w.shape)} for name, w in blocks],
    }
    parts = [json.dumps(header, sort_keys=True)]
    parts.extend(_matrix_text(w) for _, w in blocks)
    return "\n".join(parts) + "\n"


def loads_params(text: str) -> SimplicialParams:
    lines = text.splitlines()
    header = json.loads(lines[0])
    if header.get("format") != "nsimplicial-params":
        raise ValueError("not a parameter file")
    pos = 1
    mats = {}
    for spec in header["matrices"]:
        rows, cols = spec["shape"]
        data = [[float(t) for t in lines[pos + r].split()] for r in range(rows)]
        pos += rows
        arr = np.array(data, dtype=np.float64).reshape(rows, cols)
        mats[spec["name"]] = arr
    order, heads = header["order"], header["heads"]
    keys = tuple(tuple(mats[f"head{h}.key{i}"] for i in range(order + 1)) for h in range(heads))
    values = tuple(tuple(mats[f"head{h}.value{m}"] for m in range(1, order + 1)) for h in range(heads))
    return SimplicialParams(keys, values, mats["out"])


def save_params(params: SimplicialParams, path) -> None:
    Path(path).write_text(dumps_params(params))


def load_params(path) -> SimplicialParams:
    return loads_params(Path(path).read_text())
