"""Command-line runner for the verification suites.

Each subcommand reads an optional JSON config, applies flag overrides (flags
win), validates everything up front and then writes CSV/JSON artifacts into
the output directory. The directory comes from ``--out``, else the
``NSIMPLICIAL_OUT`` environment variable, else the config's ``out`` field.

Exit codes: 0 when every check passes or is not applicable, 1 when a check
is violated, 2 for config or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, curvature, hypergraph, lipschitz, rope, routing
from .attention import forward, forward_stack, random_params, reduce_check
from .rng import make_rng

OUT_ENV = "NSIMPLICIAL_OUT"
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

COMMON = {
    "seed": 0,
    "n": 4,
    "d": 4,
    "order": 2,
    "heads": 1,
    "layers": 4,
    "weight_scale": 0.25,
    "feature_scale": 0.1,
    "mask": "none",
    "mask_file": None,
    "out": "nsimplicial-out",
}

# per-command defaults layered over COMMON
DEFAULTS = {
    "collapse": {},
    "masked-collapse": {"mask": "causal", "layers": 6, "weight_scale": 0.1, "k": 2},
    "lipschitz": {"n": 3, "weight_scale": 1.0, "R": [0.25, 0.5, 1.0], "samples": 20},
    "rope-check": {"n": 5, "d": 6, "feature_scale": 1.0, "instances": 10, "tol": 1e-10},
    "route-stats": {"n": 6, "k": 2, "weight_scale": 1.0, "feature_scale": 1.0},
    "curvature": {"batch": 100, "graphs": "tree", "n_min": 5, "n_max": 20, "density": 0.12, "triangles": False},
    "reduce-check": {"instances": 5, "feature_scale": 1.0, "weight_scale": 1.0},
}

POSITIVE_INTS = ("n", "d", "order", "heads", "samples", "k", "batch", "instances", "n_min", "n_max")
NONNEG_INTS = ("seed", "layers")
POSITIVE_REALS = ("weight_scale", "feature_scale", "tol")
MASK_KINDS = ("none", "causal", "file", "router")
GRAPH_KINDS = ("tree", "sparse", "path", "cycle", "mixed")

# stream ids: each random object gets its own Philox stream
STREAM_INPUT, STREAM_WEIGHTS, STREAM_ROUTER, STREAM_SAMPLES = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _check_int(cfg, key, low):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"field '{key}': expected an integer, got {v!r}")
    if v < low:
        raise ConfigError(f"field '{key}': must be >= {low}, got {v}")


def validate(cfg: dict, command: str) -> dict:
    for key in POSITIVE_INTS:
        if key in cfg:
            _check_int(cfg, key, 1)
    for key in NONNEG_INTS:
        if key in cfg:
            _check_int(cfg, key, 0)
    for key in POSITIVE_REALS:
        if key in cfg:
            v = cfg[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
                raise ConfigError(f"field '{key}': must be a positive real, got {v!r}")
    if cfg["mask"] not in MASK_KINDS:
        raise ConfigError(f"field 'mask': expected one of {', '.join(MASK_KINDS)}, got {cfg['mask']!r}")
    if cfg["mask"] == "file" and not cfg.get("mask_file"):
        raise ConfigError("field 'mask_file': required when mask is 'file'")
    if "R" in cfg:
        grid = cfg["R"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("field 'R': expected a non-empty list of radii")
        for r in grid:
            if isinstance(r, bool) or not isinstance(r, (int, float)) or r < 0 or not math.isfinite(r):
                raise ConfigError(f"field 'R': radii must be finite and >= 0, got {r!r}")
    if "graphs" in cfg and cfg["graphs"] not in GRAPH_KINDS:
        raise ConfigError(f"field 'graphs': expected one of {', '.join(GRAPH_KINDS)}, got {cfg['graphs']!r}")
    if "density" in cfg and not 0 < cfg["density"] <= 1:
        raise ConfigError(f"field 'density': must be in (0, 1], got {cfg['density']!r}")
    if "n_min" in cfg and cfg["n_min"] > cfg["n_max"]:
        raise ConfigError(f"field 'n_min': {cfg['n_min']} exceeds n_max {cfg['n_max']}")
    if cfg["d"] % cfg["heads"]:
        raise ConfigError(f"field 'heads': d={cfg['d']} is not divisible by heads={cfg['heads']}")
    return cfg


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ConfigError(f"field '{unknown[0]}': not a {command} setting")
        cfg.update(loaded)
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        cfg["out"] = env_out
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return validate(cfg, command)


# ---------------------------------------------------------------- output


def _clean(v):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _write_json(path: Path, payload: dict) -> None:
    # the output location is not part of the experiment, so keep it out of the record
    if "config" in payload:
        payload = dict(payload, config={k: v for k, v in payload["config"].items() if k != "out"})
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _layers(cfg: dict, count: int):
    return [
        random_params(make_rng(cfg["seed"], STREAM_WEIGHTS, t), cfg["d"], cfg["order"], cfg["heads"], cfg["weight_scale"])
        for t in range(count)
    ]


def _input(cfg: dict) -> np.ndarray:
    rng = make_rng(cfg["seed"], STREAM_INPUT)
    return cfg["feature_scale"] * rng.standard_normal((cfg["n"], cfg["d"]))


def _mask(cfg: dict):
    kind = cfg["mask"]
    if kind == "none":
        return None
    if kind == "causal":
        return hypergraph.causal_mask(cfg["n"], cfg["order"])
    if kind == "file":
        try:
            mask = hypergraph.load_mask(cfg["mask_file"])
        except OSError as exc:
            raise ConfigError(f"field 'mask_file': cannot read {cfg['mask_file']}: {exc.strerror}") from exc
        except ValueError as exc:
            raise ConfigError(f"field 'mask_file': {exc}") from exc
        if mask.n != cfg["n"] or mask.order != cfg["order"]:
            raise ConfigError(
                f"field 'mask_file': mask is for n={mask.n}, order={mask.order}; config has n={cfg['n']}, order={cfg['order']}"
            )
        return mask
    return _router(cfg).mask()


def _router(cfg: dict, admissible=None) -> routing.RouterState:
    """DSA-style router on random queries/keys; token weights drawn from [0.5, 1.5)."""
    n, d = cfg["n"], cfg["d"]
    if cfg["k"] > n:
        raise ConfigError(f"field 'k': at most n={n} pairs can be selected per token, got {cfg['k']}")
    if admissible is None:
        admissible = hypergraph.causal_mask(n, 1)
    rng = make_rng(cfg["seed"], STREAM_ROUTER)
    X = cfg["feature_scale"] * rng.standard_normal((n, d))
    wq = cfg["weight_scale"] * rng.standard_normal((d, d))
    wk = cfg["weight_scale"] * rng.standard_normal((d, d))
    w = rng.uniform(0.5, 1.5, size=n)
    return routing.RouterState.build(X @ wq, X @ wk, w, admissible, cfg["k"], cfg["order"])


def _require_single_head(cfg: dict, command: str) -> None:
    if cfg["heads"] != 1:
        raise ConfigError(f"field 'heads': {command} checks cover single-head layers, got heads={cfg['heads']}")


# ---------------------------------------------------------------- commands


def cmd_collapse(cfg: dict) -> int:
    """Unmasked stack: per-layer cubic bound, L-layer bound and the log-log slope."""
    _require_single_head(cfg, "collapse")
    if cfg["mask"] != "none":
        raise ConfigError("field 'mask': collapse runs unmasked layers; use masked-collapse")
    layers = _layers(cfg, cfg["layers"])
    _, traj = forward_stack(_input(cfg), layers)
    checks = [analysis.thm1_check(x, p) for x, p in zip(traj[:-1], layers)]
    report = analysis.ResidualTrajectory.unmasked(traj, layers)
    status = ["na"] + [c.status for c in checks]
    gamma = [math.nan] + [c.gamma for c in checks]
    out = _out_dir(cfg)
    (out / "collapse_trajectory.csv").write_text(report.to_csv({"gamma": gamma, "status": status}))

    cor = analysis.corollary_check(traj, layers)
    floor = precision_floor(report.x_norm)
    slope, pairs = analysis.cubic_slope(report.res_norm, floor=floor)
    failed = [t + 1 for t, c in enumerate(checks) if c.holds is False]
    violated = bool(failed) or cor.holds is False
    summary = {
        "command": "collapse",
        "config": cfg,
        "status": "fail" if violated else ("not-applicable" if "not-applicable" in status else "pass"),
        "layer_status": status[1:],
        "offending_layers": failed,
        "corollary": {"lhs": cor.lhs, "log_rhs": cor.log_rhs, "status": cor.status,
                      "inapplicable_layers": list(cor.inapplicable_layers)},
        "cubic_slope": slope,
        "cubic_slope_pairs": pairs,
        "precision_floor": floor,
        "final_res_norm": report.res_norm[-1],
    }
    _write_json(out / "collapse_summary.json", summary)
    print(f"collapse: {summary['status']} final_res_norm={report.res_norm[-1]:.3e} slope={slope:.3f} ({pairs} pairs)")
    return EXIT_VIOLATION if violated else EXIT_OK


def precision_floor(x_norms) -> float:
    """Residual norms at or below this are float64 rounding noise, not signal."""
    return 64 * np.finfo(np.float64).eps * max(x_norms)


def cmd_masked_collapse(cfg: dict) -> int:
    """Masked stack: connectivity, on-edge positivity and the exponential decay certificate."""
    _require_single_head(cfg, "masked-collapse")
    if cfg["mask"] == "none":
        raise ConfigError("field 'mask': masked-collapse needs a causal, file or router mask")
    if cfg["layers"] < 1:
        raise ConfigError("field 'layers': masked-collapse needs at least one layer")
    mask = _mask(cfg)
    ok, centers = hypergraph.is_quasi_strongly_connected(mask)
    if not ok:
        best = max(range(mask.n), key=lambda c: len(hypergraph.reachable_from(mask, c)))
        missing = sorted(set(range(mask.n)) - hypergraph.reachable_from(mask, best))
        raise ConfigError(
            f"mask is not quasi-strongly connected: best start node {best} cannot reach nodes {missing}"
        )
    uncovered = mask.uncovered_targets()
    if uncovered:
        raise ConfigError(f"mask leaves query rows {uncovered} without any simplex")
    try:
        result = analysis.masked_decay_check(_input(cfg), _layers(cfg, cfg["layers"]), mask)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(cfg)
    steps = len(result.certified)
    extra = {"r": [result.r] * steps, "eps_hat": [result.eps_hat] * steps, "certified": result.certified}
    (out / "masked_trajectory.csv").write_text(result.trajectory.to_csv(extra))
    summary = {
        "command": "masked-collapse",
        "config": cfg,
        "status": result.status,
        "message": result.message,
        "radius": result.r,
        "eps_hat": result.eps_hat,
        "C": result.C,
        "positive": result.positive,
        "decays": result.decays,
        "gate_failures": result.gate_failures,
        "final_res_norm": result.trajectory.res_norm[-1],
    }
    _write_json(out / "masked_summary.json", summary)
    print(f"masked-collapse: {result.status} r={result.r} eps_hat={result.eps_hat:.3e} {result.message}".rstrip())
    return EXIT_VIOLATION if result.holds is False else EXIT_OK


def cmd_lipschitz(cfg: dict) -> int:
    """Empirical Jacobian norms on the radius-R ball against the closed-form bound."""
    _require_single_head(cfg, "lipschitz")
    params = _layers(cfg, 1)[0]
    reports = [
        lipschitz.empirical_lipschitz(params, cfg["n"], float(R), cfg["samples"], seed=cfg["seed"])
        for R in cfg["R"]
    ]
    out = _out_dir(cfg)
    lines = ["# schema=1", lipschitz.LipschitzReport.csv_header() + ",holds"]
    lines += [r.csv_row() + f",{str(r.holds).lower()}" for r in reports]
    (out / "lipschitz.csv").write_text("\n".join(lines) + "\n")
    violated = [r.R for r in reports if not r.holds]
    summary = {
        "command": "lipschitz",
        "config": cfg,
        "status": "fail" if violated else "pass",
        "violations_at_R": violated,
        "reports": [r.to_dict() | {"holds": r.holds} for r in reports],
    }
    _write_json(out / "lipschitz_summary.json", summary)
    print(f"lipschitz: {summary['status']} " + " ".join(f"R={r.R}:{r.empirical:.4g}<={r.bound:.4g}" for r in reports))
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_rope_check(cfg: dict) -> int:
    """Rotation, shift and antisymmetry invariances of the determinant logits."""
    n, d, N = cfg["n"], cfg["d"], cfg["order"]
    if d < N + 1:
        raise ConfigError(f"field 'd': determinant logits need d >= order + 1 = {N + 1}, got {d}")
    config = rope.RopeConfig(N, d)
    tol = cfg["tol"]
    worst = {"rotation": 0.0, "shift": 0.0, "antisymmetry": 0.0, "zero_positions": 0.0}
    for i in range(cfg["instances"]):
        rng = make_rng(cfg["seed"], STREAM_SAMPLES, i)
        keys = [cfg["feature_scale"] * rng.standard_normal((n, d)) for _ in range(N + 1)]
        positions = rng.integers(0, 64, size=n)
        theta = float(rng.uniform(-math.pi, math.pi))
        shift = int(rng.integers(1, 64))
        worst["rotation"] = max(worst["rotation"], rope.rotation_deviation(keys, theta, config))
        worst["shift"] = max(worst["shift"], rope.shift_deviation(keys, positions, shift, config))
        worst["antisymmetry"] = max(worst["antisymmetry"], rope.antisymmetry_deviation(keys, 0, N, config))
    if d % cfg["heads"] == 0 and d // cfg["heads"] >= N + 1:
        params = _layers(cfg, 1)[0]
        hc = rope.RopeConfig(N, params.head_dim)
        X = _input(cfg)
        zero = rope.rope_forward(X, params, np.zeros(n, dtype=np.int64), hc)
        plain = rope.rope_forward(X, params, np.zeros(n, dtype=np.int64), hc, rotate=False)
        worst["zero_positions"] = float(np.max(np.abs(zero - plain)))
    failed = sorted(k for k, v in worst.items() if not v <= tol)
    out = _out_dir(cfg)
    summary = {
        "command": "rope-check",
        "config": cfg,
        "status": "fail" if failed else "pass",
        "failed": failed,
        "max_deviation": worst,
    }
    _write_json(out / "rope_summary.json", summary)
    print(f"rope-check: {summary['status']}" + (f" failed={','.join(failed)}" if failed else ""))
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_route_stats(cfg: dict) -> int:
    """Path-sparse simplex selection: counts, density, serialized mask and a masked forward."""
    n, N, k = cfg["n"], cfg["order"], cfg["k"]
    if cfg["mask"] == "none":
        admissible = hypergraph.full_mask(n, 1)
    elif cfg["mask"] == "causal":
        admissible = hypergraph.causal_mask(n, 1)
    else:
        raise ConfigError("field 'mask': route-stats admissibility must be 'none' or 'causal'")
    state = _router(cfg, admissible)
    try:
        mask = state.mask()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(cfg)
    state.save(out)
    brute = routing.count_paths(state.pair_mask, N)
    params = _layers(cfg, 1)[0]
    try:
        Y = forward(_input(cfg), params, mask)
        well_formed = bool(np.all(np.isfinite(Y)))
        orphaned = []
    except ValueError:
        well_formed = False
        orphaned = mask.uncovered_targets()
    ok = len(mask) == brute and well_formed
    summary = {
        "command": "route-stats",
        "config": cfg,
        "status": "pass" if ok else "fail",
        "pair_density": float(state.pair_mask.mean()),
        "simplices": len(mask),
        "brute_force_count": brute,
        "n_k_pow_N": n * k**N,
        "full_count": n ** (N + 1),
        "forward_well_formed": well_formed,
        "orphaned_queries": orphaned,
    }
    _write_json(out / "route_summary.json", summary)
    print(f"route-stats: {summary['status']} simplices={len(mask)} (n*k^N={n * k**N}, full={n ** (N + 1)})")
    return EXIT_OK if ok else EXIT_VIOLATION


def _sample_graph(kind: str, rng: np.random.Generator, n: int, density: float):
    if kind == "mixed":
        kind = ("tree", "sparse", "path", "cycle")[int(rng.integers(0, 4))]
    if kind == "tree":
        return kind, curvature.random_tree(rng, n)
    if kind == "sparse":
        return kind, curvature.random_sparse_graph(rng, n, density)
    if kind == "path":
        return kind, curvature.path_graph(n)
    return kind, curvature.cycle_graph(n)


def cmd_curvature(cfg: dict) -> int:
    """Per-graph Forman curvature of G and its line graph, plus the strict-increase fractions."""
    if cfg["n_min"] < 3:
        raise ConfigError(f"field 'n_min': graphs need at least 3 nodes for two edges, got {cfg['n_min']}")
    fields = ["index", "kind", "nodes", "edges", "avg_G", "min_G", "avg_L", "min_L", "density",
              "avg_increased", "min_increased"]
    rows = ["# schema=1", ",".join(fields)]
    avg_hits = min_hits = 0
    for i in range(cfg["batch"]):
        rng = make_rng(cfg["seed"], STREAM_SAMPLES, i)
        n = int(rng.integers(cfg["n_min"], cfg["n_max"] + 1))
        kind, G = _sample_graph(cfg["graphs"], rng, n, cfg["density"])
        rep = curvature.curvature_report(G, triangles=cfg["triangles"])
        avg_hits += rep.avg_increased
        min_hits += rep.min_increased
        vals = [i, kind, G.n, len(G.edges), rep.avg_G, rep.min_G, rep.avg_L, rep.min_L, rep.density,
                rep.avg_increased, rep.min_increased]
        rows.append(",".join(analysis._fmt(v) for v in vals))
    out = _out_dir(cfg)
    (out / "curvature.csv").write_text("\n".join(rows) + "\n")
    summary = {
        "command": "curvature",
        "config": cfg,
        "status": "pass",
        "batch": cfg["batch"],
        "avg_increase_fraction": avg_hits / cfg["batch"],
        "min_increase_fraction": min_hits / cfg["batch"],
    }
    _write_json(out / "curvature_summary.json", summary)
    print(f"curvature: avg increased in {avg_hits}/{cfg['batch']}, min increased in {min_hits}/{cfg['batch']}")
    return EXIT_OK


def cmd_reduce_check(cfg: dict) -> int:
    """Ones-token slices of an order-N contraction against direct lower-order logits."""
    if cfg["order"] < 2:
        raise ConfigError(f"field 'order': order reduction needs order >= 2, got {cfg['order']}")
    results = []
    for i in range(cfg["instances"]):
        rng = make_rng(cfg["seed"], STREAM_SAMPLES, i)
        params = random_params(rng, cfg["d"], cfg["order"], cfg["heads"], cfg["weight_scale"])
        X = cfg["feature_scale"] * rng.standard_normal((cfg["n"], cfg["d"]))
        for h in range(cfg["heads"]):
            results.append({"instance": i, "head": h, "equal": reduce_check(params, X, h)})
    ok = all(all(r["equal"].values()) for r in results)
    out = _out_dir(cfg)
    _write_json(out / "reduce_summary.json",
                {"command": "reduce-check", "config": cfg, "status": "pass" if ok else "fail", "results": results})
    print(f"reduce-check: {'pass' if ok else 'fail'} ({len(results)} heads checked)")
    return EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {
    "collapse": cmd_collapse,
    "masked-collapse": cmd_masked_collapse,
    "lipschitz": cmd_lipschitz,
    "rope-check": cmd_rope_check,
    "route-stats": cmd_route_stats,
    "curvature": cmd_curvature,
    "reduce-check": cmd_reduce_check,
}


# ---------------------------------------------------------------- argparse


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _radii(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated radii, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsimplicial",
        description="Numerical checks for N-simplicial attention.",
        epilog=f"Output directory: --out, else ${OUT_ENV}, else the config 'out' field.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, model=True):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if model:
            p.add_argument("--n", type=int, help="number of tokens")
            p.add_argument("--order", type=int, help="simplex order N")
            p.add_argument("--d", type=int, help="feature dimension")
            p.add_argument("--heads", type=int)
            p.add_argument("--weight-scale", dest="weight_scale", type=float)
            p.add_argument("--feature-scale", dest="feature_scale", type=float)

    p = sub.add_parser("collapse", help="unmasked rank-collapse bounds")
    common(p)
    p.add_argument("--layers", type=int)

    p = sub.add_parser("masked-collapse", help="masked residual decay certificate")
    common(p)
    p.add_argument("--layers", type=int)
    p.add_argument("--mask", choices=MASK_KINDS)
    p.add_argument("--mask-file", dest="mask_file")
    p.add_argument("--k", type=int, help="pairs per token for a router mask")

    p = sub.add_parser("lipschitz", help="empirical Jacobian norm against the closed-form bound")
    common(p)
    p.add_argument("--R", type=_radii, help="comma-separated ball radii")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("rope-check", help="determinant-logit invariances")
    common(p)
    p.add_argument("--instances", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("route-stats", help="path-sparse simplex selection statistics")
    common(p)
    p.add_argument("--k", type=int, help="pairs selected per token")
    p.add_argument("--mask", choices=("none", "causal"), help="pair admissibility")

    p = sub.add_parser("curvature", help="Forman curvature of graphs and their line graphs")
    common(p, model=False)
    p.add_argument("--batch", type=int)
    p.add_argument("--graphs", choices=GRAPH_KINDS)
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--triangles", type=_bool, help="add triangle terms to the curvature (true/false)")

    p = sub.add_parser("reduce-check", help="order reduction through an all-ones token")
    common(p)
    p.add_argument("--instances", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
