"""Rank-collapse diagnostics for stacked simplicial attention.

The residual of a token matrix is its distance to the closest row-constant
matrix, ``res(X) = X - 1 x^T`` with ``x`` the column mean (the Frobenius
minimiser). All norms below are the composite ``||.||_{1,inf}``.

Unmasked layers: logits split as ``C + L1 + E`` where ``C`` is constant,
``L1`` collects terms with exactly one residual factor, and ``E`` the terms
with two or more. Only ``E`` moves the output off the row-constant manifold,
which gives the cubic bound ``||res(X')|| <= 4 gamma / sqrt(d) * beta' *
||X||^(2(N-1)) * ||res(X)||^3``. ``gamma`` is measured from ``E``.

Masked layers: for a quasi-strongly connected mask, on-edge attention stays
bounded below by some ``eps`` and the residual decays like
``(1 - eps^r)^(t/r)`` with ``r`` the mask radius.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attention import SimplicialParams, _dense_mask, head_attention
from .hypergraph import SimplicialMask, has_center_self_loop, is_quasi_strongly_connected, radius
from .tensor import as_matrix, contract_logits, norm_one_inf

__all__ = [
    "SPREAD_LIMIT",
    "residual",
    "res_norm",
    "beta_prime",
    "error_tensor",
    "Gamma",
    "measure_gamma",
    "Thm1Result",
    "thm1_check",
    "CorollaryResult",
    "corollary_check",
    "cubic_slope",
    "ResidualTrajectory",
    "DecayResult",
    "masked_decay_check",
]

# The softmax perturbation bound holds while every row of E spreads by at most this much.
SPREAD_LIMIT = 1.256


def residual(X) -> np.ndarray:
    X = as_matrix(X, "X")
    return X - X.mean(axis=0, keepdims=True)


def res_norm(X) -> float:
    return norm_one_inf(residual(X))


def _single_head(params: SimplicialParams):
    if params.heads != 1:
        raise ValueError("bound checks are defined for single-head layers")
    return params.keys[0], params.values[0]


def beta_prime(params: SimplicialParams) -> float:
    keys, values = _single_head(params)
    wk = max(norm_one_inf(w) for w in keys)
    wv = max(norm_one_inf(w) for w in values)
    return (2 * wk) ** (params.order + 1) * (2 * wv) ** params.order


def error_tensor(X, params: SimplicialParams) -> np.ndarray:
    """Logit terms carrying at least two residual factors (scale included)."""
    keys, _ = _single_head(params)
    X = as_matrix(X, "X")
    R = residual(X)
    mean_part = X - R
    scale = 1.0 / math.sqrt(params.head_dim)
    res_keys = [R @ w for w in keys]
    const_keys = [mean_part @ w for w in keys]
    N = params.order
    out = np.zeros((X.shape[0],) * (N + 1))
    for size in range(2, N + 2):
        for subset in itertools.combinations(range(N + 1), size):
            picked = [res_keys[i] if i in subset else const_keys[i] for i in range(N + 1)]
            out += contract_logits(picked, scale)
    return out


@dataclass(frozen=True)
class Gamma:
    gamma: float
    spread: float
    precondition: bool


def measure_gamma(E) -> Gamma:
    """Ratio of the worst in-row spread of ``E`` to its worst column-pair L1 gap.

    ``E`` is flattened to ``n x n**N``. ``precondition`` reports whether the
    in-row spread stays within ``SPREAD_LIMIT``.
    """
    E = np.asarray(E, dtype=np.float64)
    E = E.reshape(E.shape[0], -1)
    spread = float((E.max(axis=1) - E.min(axis=1)).max())
    # max over column pairs (j, j') of sum_i |E_ij - E_ij'|
    den = 0.0
    for j in range(E.shape[1]):
        den = max(den, float(np.abs(E[:, j : j + 1] - E).sum(axis=0).max()))
    gamma = spread / den if den > 0 else 0.0
    return Gamma(gamma, spread, spread <= SPREAD_LIMIT)


@dataclass(frozen=True)
class Thm1Result:
    lhs: float
    rhs: float
    gamma: float
    spread: float
    applicable: bool
    holds: bool | None

    @property
    def status(self) -> str:
        if self.holds is None:
            return "not-applicable"
        return "pass" if self.holds else "fail"


SLACK = 1e-9


def thm1_check(X, params: SimplicialParams) -> Thm1Result:
    X = as_matrix(X, "X")
    keys, values = _single_head(params)
    out, _ = head_attention(X, keys, values)
    Xp = out @ params.out
    lhs = res_norm(Xp)
    g = measure_gamma(error_tensor(X, params))
    N = params.order
    rhs = (
        4 * g.gamma / math.sqrt(params.head_dim)
        * beta_prime(params)
        * norm_one_inf(X) ** (2 * (N - 1))
        * res_norm(X) ** 3
    )
    holds = lhs <= rhs * (1 + SLACK) if g.precondition else None
    if lhs == 0.0:
        holds = True
    return Thm1Result(lhs, rhs, g.gamma, g.spread, g.precondition, holds)


@dataclass(frozen=True)
class CorollaryResult:
    lhs: float
    log_rhs: float
    gamma: float
    layers: int
    inapplicable_layers: tuple[int, ...]
    holds: bool | None

    @property
    def rhs(self) -> float:
        return math.exp(self.log_rhs) if self.log_rhs > -745 else 0.0

    @property
    def status(self) -> str:
        if self.holds is None:
            return "not-applicable"
        return "pass" if self.holds else "fail"


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def corollary_check(
    trajectory: Sequence[np.ndarray],
    layers: Sequence[SimplicialParams],
    heads: int = 1,
) -> CorollaryResult:
    """L-layer bound ``res(X^L) <= res(X^0)^(3^L) * c^((3^L - 1) / 2)``, evaluated in logs.

    ``c = 4 gamma H / sqrt(d) * beta * max_t ||X^t||^(2(N-1))`` with every
    constant maximised over layers.
    """
    L = len(layers)
    if len(trajectory) != L + 1:
        raise ValueError(f"trajectory has {len(trajectory)} states for {L} layers")
    lhs = res_norm(trajectory[-1])
    r0 = res_norm(trajectory[0])
    if L == 0:
        return CorollaryResult(lhs, _log(r0), 0.0, 0, (), True)

    N = layers[0].order
    d = layers[0].head_dim
    wk = max(norm_one_inf(w) for p in layers for w in _single_head(p)[0])
    wv = max(norm_one_inf(w) for p in layers for w in _single_head(p)[1])
    beta = (2 * wk) ** (N + 1) * (2 * wv) ** N
    xmax = max(norm_one_inf(x) for x in trajectory)
    gammas = [measure_gamma(error_tensor(x, p)) for x, p in zip(trajectory[:-1], layers)]
    gamma = max(g.gamma for g in gammas)
    bad = tuple(t for t, g in enumerate(gammas) if not g.precondition)

    power = 3**L
    log_c = _log(4 * gamma * heads / math.sqrt(d) * beta) + 2 * (N - 1) * _log(xmax)
    log_rhs = power * _log(r0) + (power - 1) / 2 * log_c
    if lhs == 0.0:
        holds = True
    elif bad:
        holds = None
    else:
        holds = _log(lhs) <= log_rhs + math.log1p(SLACK)
    return CorollaryResult(lhs, log_rhs, gamma, L, bad, holds)


def cubic_slope(norms: Sequence[float], floor: float = 0.0) -> tuple[float, int]:
    """Least-squares slope of ``log r[t+1]`` against ``log r[t]``.

    Pairs where either value is at or below ``floor`` are dropped. Returns
    ``(slope, pairs_used)``; the slope is ``nan`` with fewer than two pairs.
    """
    pts = [
        (math.log(a), math.log(b))
        for a, b in zip(norms[:-1], norms[1:])
        if a > floor and b > floor
    ]
    if len(pts) < 2:
        return math.nan, len(pts)
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, len(pts)


@dataclass
class ResidualTrajectory:
    res_norm: list[float] = field(default_factory=list)
    x_norm: list[float] = field(default_factory=list)
    bound_rhs: list[float] = field(default_factory=list)
    attn_min_on_edges: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.res_norm)

    def rows(self):
        for t in range(len(self)):
            yield {
                "t": t,
                "res_norm": self.res_norm[t],
                "x_norm": self.x_norm[t],
                "bound_rhs": self.bound_rhs[t],
                "attn_min_on_edges": self.attn_min_on_edges[t],
            }

    def to_csv(self, extra: dict[str, Sequence] | None = None) -> str:
        buf = io.StringIO()
        buf.write("# schema=1\n")
        cols = ["t", "res_norm", "x_norm", "bound_rhs", "attn_min_on_edges"]
        extra = extra or {}
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols + list(extra))
        for t, row in enumerate(self.rows()):
            vals = [row[c] for c in cols] + [extra[k][t] for k in extra]
            writer.writerow([_fmt(v) for v in vals])
        return buf.getvalue()

    @classmethod
    def unmasked(cls, trajectory: Sequence[np.ndarray], layers: Sequence[SimplicialParams]) -> "ResidualTrajectory":
        """Per-layer norms plus the one-step bound predicted from the previous state."""
        out = cls()
        for t, X in enumerate(trajectory):
            out.res_norm.append(res_norm(X))
            out.x_norm.append(norm_one_inf(X))
            if t == 0:
                out.bound_rhs.append(math.nan)
                out.attn_min_on_edges.append(math.nan)
            else:
                prev, params = trajectory[t - 1], layers[t - 1]
                out.bound_rhs.append(thm1_check(prev, params).rhs)
                keys, values = _single_head(params)
                _, attn = head_attention(prev, keys, values)
                out.attn_min_on_edges.append(float(attn.min()))
        return out


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class DecayResult:
    trajectory: ResidualTrajectory
    r: int | None
    eps_hat: float
    C: float
    certified: list[float]
    positive: bool
    decays: bool
    gate_ok: bool
    gate_failures: list[int]
    holds: bool | None
    message: str = ""

    @property
    def status(self) -> str:
        if self.holds is None:
            return "not-applicable"
        return "pass" if self.holds else "fail"


def _gate_value(X: np.ndarray, vmax: float, order: int) -> float:
    return norm_one_inf(X) ** (order - 1) * vmax**order


def masked_decay_check(X0, layers: Sequence[SimplicialParams], mask: SimplicialMask) -> DecayResult:
    """Run a masked, no-skip stack and certify exponential residual decay.

    The certificate uses ``r = radius(mask)``, ``eps_hat`` = smallest on-edge
    attention entry seen in any layer, and ``C = res(X^0)`` so the curve
    starts at the first point.
    """
    X = as_matrix(X0, "X0")
    n = X.shape[0]
    if not layers:
        raise ValueError("need at least one layer")
    N = layers[0].order
    ok, centers = is_quasi_strongly_connected(mask)
    if not ok:
        raise ValueError("mask is not quasi-strongly connected")
    if not any(has_center_self_loop(mask, c) for c in centers):
        raise ValueError("no center node of the mask carries a self-loop")
    dense = _dense_mask(mask, n, N)
    r = radius(mask)
    vmax = max(norm_one_inf(w) for p in layers for w in _single_head(p)[1])

    traj = ResidualTrajectory()
    traj.res_norm.append(res_norm(X))
    traj.x_norm.append(norm_one_inf(X))
    traj.bound_rhs.append(math.nan)
    traj.attn_min_on_edges.append(math.nan)
    gate_failures = []
    positive = True
    for t, params in enumerate(layers):
        if _gate_value(X, vmax, N) > 1.0:
            gate_failures.append(t)
        keys, values = _single_head(params)
        out, attn = head_attention(X, keys, values, dense)
        X = out @ params.out
        on_edge = attn[dense]
        positive &= bool(np.all(on_edge > 0))
        traj.res_norm.append(res_norm(X))
        traj.x_norm.append(norm_one_inf(X))
        traj.attn_min_on_edges.append(float(on_edge.min()))

    eps_hat = float(min(traj.attn_min_on_edges[1:]))
    C = traj.res_norm[0]
    rate = 1.0 - eps_hat**r if r > 0 else 0.0
    certified = [C * rate ** (t / r) if r > 0 else (C if t == 0 else 0.0) for t in range(len(layers) + 1)]
    traj.bound_rhs = list(certified)
    decays = all(a <= b * (1 + SLACK) + 1e-300 for a, b in zip(traj.res_norm, certified))
    gate_ok = not gate_failures
    if not gate_ok:
        holds = None
        message = f"assumption gate failed at layer {gate_failures[0]}"
    else:
        holds = positive and decays
        message = "" if holds else ("non-positive on-edge attention" if not positive else "decay bound violated")
    return DecayResult(traj, r, eps_hat, C, certified, positive, decays, gate_ok, gate_failures, holds, message)
