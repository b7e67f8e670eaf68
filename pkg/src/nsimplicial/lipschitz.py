"""Local Lipschitz behaviour of unmasked simplicial attention on ``B_R^n``.

The directional derivative of one head splits into two parts: the value
product rule (each of the N value factors differentiated in turn, the other
N-1 held fixed) and the attention-weight derivative

    dA[i, K] = A[i, K] * (dB[i, K] - sum_M A[i, M] dB[i, M])

where ``dB`` is the derivative of the scaled logits.
"""
from __future__ import annotations

import csv
import io
import json
import math
import string
from dataclasses import asdict, dataclass

import numpy as np

from .attention import SimplicialParams, _check_input, forward
from .rng import make_rng
from .tensor import apply_values, contract_logits, power_iteration, softmax_multi_axis, spectral_norm

__all__ = [
    "thm3_bound",
    "analytic_jvp",
    "analytic_vjp",
    "jacobian",
    "fd_jacobian",
    "jacobian_norm",
    "sample_ball_rows",
    "LipschitzReport",
    "empirical_lipschitz",
]

DENSE_JACOBIAN_LIMIT = 256


def thm3_bound(n: int, d: int, order: int, V: float, K: float, R: float) -> float:
    """``n sqrt(2n) N V^N R^(N-1) (1 + d N^2 (K R)^(2(N+1)))^(1/2)``."""
    if R < 0:
        raise ValueError("R must be nonnegative")
    N = order
    return (
        n * math.sqrt(2 * n) * N * V**N * R ** (N - 1)
        * math.sqrt(1 + d * N**2 * (K * R) ** (2 * (N + 1)))
    )


def _reject_mask(mask) -> None:
    if mask is not None:
        raise NotImplementedError("derivatives are only implemented for unmasked attention")


def _head_jvp(X, U, keys, values):
    P = [X @ w for w in keys]
    dP = [U @ w for w in keys]
    V = [X @ w for w in values]
    dV = [U @ w for w in values]
    scale = 1.0 / math.sqrt(P[0].shape[1])
    A = softmax_multi_axis(contract_logits(P, scale))
    dB = np.zeros_like(A)
    for i in range(len(P)):
        if not np.any(dP[i]):
            continue
        dB += contract_logits(P[:i] + [dP[i]] + P[i + 1 :], scale)
    n = A.shape[0]
    mean = (A * dB).reshape(n, -1).sum(axis=1).reshape((n,) + (1,) * (A.ndim - 1))
    dA = A * (dB - mean)
    out = apply_values(dA, V)
    for m in range(len(V)):
        out += apply_values(A, V[:m] + [dV[m]] + V[m + 1 :])
    return out


def analytic_jvp(X, params: SimplicialParams, direction, mask=None, skip: bool = False) -> np.ndarray:
    """``(D_X f)(direction)`` for the multi-head layer ``f``."""
    _reject_mask(mask)
    X = _check_input(X, params)
    U = np.asarray(direction, dtype=np.float64)
    if U.shape != X.shape:
        raise ValueError(f"direction has shape {U.shape}, expected {X.shape}")
    heads = [_head_jvp(X, U, kh, vh) for kh, vh in zip(params.keys, params.values)]
    out = np.concatenate(heads, axis=1) @ params.out
    return out + U if skip else out


def _head_vjp(X, G, keys, values):
    N = len(values)
    P = [X @ w for w in keys]
    V = [X @ w for w in values]
    scale = 1.0 / math.sqrt(P[0].shape[1])
    A = softmax_multi_axis(contract_logits(P, scale))
    n = A.shape[0]

    ax = list(string.ascii_lowercase[1 : N + 1])  # k_1..k_N
    q, a, j = "x", "y", "z"
    att = q + "".join(ax)
    vprod = ",".join(f"{ax[m]}{j}" for m in range(N))
    gA = np.einsum(f"{q}{j},{vprod}->{att}", G, *V)
    mean = (A * gA).reshape(n, -1).sum(axis=1).reshape((n,) + (1,) * N)
    gB = A * (gA - mean)

    gX = np.zeros_like(X)
    idx = [q] + ax
    for i in range(N + 1):
        ops = [gB] + [P[l] for l in range(N + 1) if l != i]
        subs = [att] + [f"{idx[l]}{a}" for l in range(N + 1) if l != i]
        gP = scale * np.einsum(",".join(subs) + f"->{idx[i]}{a}", *ops)
        gX += gP @ keys[i].T
    for m in range(N):
        ops = [A, G] + [V[l] for l in range(N) if l != m]
        subs = [att, q + j] + [f"{ax[l]}{j}" for l in range(N) if l != m]
        gV = np.einsum(",".join(subs) + f"->{ax[m]}{j}", *ops)
        gX += gV @ values[m].T
    return gX


def analytic_vjp(X, params: SimplicialParams, cotangent, mask=None, skip: bool = False) -> np.ndarray:
    """Adjoint of :func:`analytic_jvp`: ``(D_X f)^T (cotangent)``."""
    _reject_mask(mask)
    X = _check_input(X, params)
    G = np.asarray(cotangent, dtype=np.float64)
    if G.shape != X.shape:
        raise ValueError(f"cotangent has shape {G.shape}, expected {X.shape}")
    Gh = G @ params.out.T
    d_h = params.head_dim
    out = np.zeros_like(X)
    for h, (kh, vh) in enumerate(zip(params.keys, params.values)):
        out += _head_vjp(X, Gh[:, h * d_h : (h + 1) * d_h], kh, vh)
    return out + G if skip else out


def jacobian(X, params: SimplicialParams, skip: bool = False) -> np.ndarray:
    """Dense ``(n d) x (n d)`` Jacobian assembled column by column from the JVP."""
    X = _check_input(X, params)
    size = X.size
    J = np.empty((size, size))
    E = np.zeros(size)
    for k in range(size):
        E[k] = 1.0
        J[:, k] = analytic_jvp(X, params, E.reshape(X.shape), skip=skip).reshape(-1)
        E[k] = 0.0
    return J


def fd_jacobian(X, params: SimplicialParams, h: float = 1e-5, skip: bool = False) -> np.ndarray:
    """Central-difference Jacobian, columns in row-major order over the entries of ``X``."""
    if not h > 0:
        raise ValueError("h must be positive")
    X = _check_input(X, params)
    size = X.size
    J = np.empty((size, size))
    flat = X.reshape(-1)
    for k in range(size):
        xp = flat.copy()
        xm = flat.copy()
        xp[k] += h
        xm[k] -= h
        fp = forward(xp.reshape(X.shape), params, skip=skip)
        fm = forward(xm.reshape(X.shape), params, skip=skip)
        J[:, k] = ((fp - fm) / (2 * h)).reshape(-1)
    return J


def jacobian_norm(X, params: SimplicialParams) -> float:
    """Spectral norm of ``D_X f``.

    Dense SVD for small problems, otherwise matrix-free power iteration on
    the analytic JVP/VJP pair.
    """
    X = _check_input(X, params)
    if X.size <= DENSE_JACOBIAN_LIMIT:
        return float(np.linalg.norm(jacobian(X, params), 2))
    res = power_iteration(
        lambda v: analytic_jvp(X, params, v.reshape(X.shape)).reshape(-1),
        lambda u: analytic_vjp(X, params, u.reshape(X.shape)).reshape(-1),
        X.size,
        tol=1e-10,
    )
    return res.value


def sample_ball_rows(rng: np.random.Generator, n: int, d: int, R: float) -> np.ndarray:
    """``n`` points drawn independently and uniformly from the radius-``R`` ball in ``R^d``."""
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = R * rng.random(n) ** (1.0 / d)
    return g * radii[:, None]


@dataclass
class LipschitzReport:
    n: int
    d: int
    order: int
    R: float
    V: float
    K: float
    bound: float
    empirical: float
    samples: int
    margin: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.bound * (1 + 1e-9)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    CSV_FIELDS = ("n", "d", "order", "R", "V", "K", "bound", "empirical", "samples", "margin")

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.CSV_FIELDS)

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [v if isinstance(v, int) else repr(float(v)) for v in (getattr(self, f) for f in self.CSV_FIELDS)]
        )
        return buf.getvalue()


def empirical_lipschitz(
    params: SimplicialParams,
    n: int,
    R: float,
    samples: int,
    seed: int = 0,
) -> LipschitzReport:
    """Max of ``||D_X f||_2`` over ``samples`` random ``X`` in ``B_R^n``, with the closed-form bound.

    Sample ``i`` draws from its own stream ``(seed, i)`` so results do not
    depend on evaluation order.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if R < 0:
        raise ValueError("R must be nonnegative")
    if params.heads != 1:
        raise ValueError("the closed-form bound covers single-head layers")
    V = max(spectral_norm(w) for w in params.values[0])
    K = max(spectral_norm(w) for w in params.keys[0])
    bound = thm3_bound(n, params.dim, params.order, V, K, R)
    best = 0.0
    for i in range(samples):
        X = sample_ball_rows(make_rng(seed, i), n, params.dim, R)
        best = max(best, jacobian_norm(X, params))
    return LipschitzReport(n, params.dim, params.order, float(R), V, K, bound, best, samples, bound - best)
