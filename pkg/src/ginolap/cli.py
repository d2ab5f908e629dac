"""Command line surface: deterministic experiments and comparison reports.

Subcommands::

    theory   evaluate a limit law on a zhat grid      -> CSV + JSON sidecar
    mc       Monte Carlo density estimates            -> CSV + JSON sidecar
    exact    exact finite-N quadrature (rank 1-2)     -> CSV + JSON sidecar
    compare  z-scores / deviations across the routes  -> JSON report
    ie       debug evaluation of IE_s(x)              -> stdout

Conventions: complex scalars are "re,im" pairs; grids are "start:stop:step"
(inclusive) over Re zhat (edge curves) or |zhat| (outlier curves).  Outputs
are UTF-8 CSV with '.' decimals and '\n' line ends; floats are written with
shortest round-trip repr, so identical invocations produce identical bytes.
Every CSV gets a ``<name>.meta.json`` sidecar holding the full provenance
(parameters, seed, version, resample counters).  Exit codes: 0 success (also
covers starvation warnings), 2 configuration errors, 3 numerical-accuracy
failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from ginolap import __version__
from ginolap.asymptotics import (
    EvaluationPoint,
    Scaling,
    theory_curve,
)
from ginolap.exactrep import (
    QuadratureAccuracyError,
    QuadratureSettings,
    Strategy,
    UnsupportedRankError,
    exact_density_report,
)
from ginolap.model import (
    InvalidSpecError,
    JordanBlockGroup,
    JordanSpec,
    ModelParams,
    spec_from_json,
    spec_to_json,
)
from ginolap.sampler import EstimatorConfig, estimate_densities
from ginolap.specfun import ie, ie_scaled

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ACCURACY = 3

_REGIMES = ("edge", "outlier-jordan", "outlier-identity")


class ConfigError(ValueError):
    """Bad command configuration; maps to exit code 2."""


def _parse_complex(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise ConfigError(f"expected a complex 're,im' pair, got {text!r}") from exc


def _parse_range(text: str) -> list[float]:
    try:
        start_s, stop_s, step_s = text.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError as exc:
        raise ConfigError(f"expected a 'start:stop:step' range, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"need start <= stop and step > 0 in range {text!r}")
    n = int(round((stop - start) / step)) + 1
    return [round(start + k * step, 12) for k in range(n)]


def _fmt(x) -> str:
    if isinstance(x, bool):
        raise TypeError("no boolean CSV fields")
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _write_csv(path: str | Path, header: list[str], rows: list[list[float]]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def _write_sidecar(csv_path: str | Path, meta: dict) -> None:
    side = Path(f"{csv_path}.meta.json")
    side.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_spec(x0: str | None) -> JordanSpec:
    if x0 is None or x0 == "none":
        return JordanSpec(())
    try:
        return spec_from_json(json.loads(Path(x0).read_text(encoding="utf-8")))
    except FileNotFoundError as exc:
        raise ConfigError(f"Jordan spec file not found: {x0}") from exc
    except (json.JSONDecodeError, InvalidSpecError) as exc:
        raise ConfigError(f"bad Jordan spec {x0}: {exc}") from exc


def _build_spec(args, regime: str | None) -> JordanSpec:
    """Spec from --x0, or inline from --r/--z0 for the single-block regimes."""
    spec = _load_spec(getattr(args, "x0", None))
    if spec.groups or getattr(args, "r", None) is None:
        return spec
    if args.z0 is None:
        raise ConfigError("inline --r needs --z0")
    z0 = _parse_complex(args.z0)
    r = int(args.r)
    if regime == "outlier-identity":
        return JordanSpec((JordanBlockGroup(z0, 1, r),))  # z0 * identity
    return JordanSpec((JordanBlockGroup(z0, r, 1),))  # one Jordan block R_r(z0)


def _zhat_grid(args, default_axis: str) -> list[complex]:
    zhats: list[complex] = []
    if getattr(args, "zhat", None):
        zhats += [_parse_complex(t) for t in args.zhat]
    if getattr(args, "re_zhat", None):
        zhats += [complex(u, 0.0) for u in _parse_range(args.re_zhat)]
    if getattr(args, "abs_zhat", None):
        vals = _parse_range(args.abs_zhat)
        if any(v < 0 for v in vals):
            raise ConfigError("|zhat| grid must be nonnegative")
        zhats += [complex(v, 0.0) for v in vals]
    if not zhats:
        raise ConfigError(
            f"no zhat points given; use --zhat or --{default_axis.replace('_', '-')}"
        )
    return zhats


def _regime_points(
    regime: str, spec: JordanSpec, z0_arg: str | None, tau: float, zhats: list[complex]
) -> list[EvaluationPoint]:
    if regime == "edge":
        z0 = _parse_complex(z0_arg) if z0_arg else complex(math.sqrt(tau), 0.0)
        scaling, rho = Scaling.EDGE_MULTIPLICATIVE, 0.5
    else:
        if spec.r == 0:
            raise ConfigError(f"regime {regime} needs a nonzero deformation (--x0 or --r/--z0)")
        block_z0, r = spec.groups[0].theta, spec.r
        z0 = _parse_complex(z0_arg) if z0_arg else block_z0
        if z0 != block_z0:
            raise ConfigError(f"--z0 {z0} does not match the spec eigenvalue {block_z0}")
        if regime == "outlier-jordan":
            scaling, rho = Scaling.OUTLIER_ADDITIVE, 1.0 / (2.0 * r)
        else:
            scaling, rho = Scaling.OUTLIER_ADDITIVE_NORMALIZED, 0.5
    return [EvaluationPoint(z0=z0, zhat=zh, rho=rho, scaling=scaling) for zh in zhats]


def _norm_factor(scaling: Scaling, N: int) -> float:
    return N ** -0.5 if scaling is Scaling.EDGE_MULTIPLICATIVE else 1.0


# ---------------------------------------------------------------------------
# subcommands


def cmd_theory(args) -> int:
    tau = float(args.tau)
    if tau <= 0:
        raise ConfigError("tau must be positive")
    tag = args.tag
    spec = _build_spec(args, tag)
    axis = "re_zhat" if tag == "edge" else "abs_zhat"
    zhats = _zhat_grid(args, axis)
    kwargs: dict = {"tau": tau}
    if tag == "edge":
        if args.t is None:
            raise ConfigError("edge curve needs --t")
        kwargs["t"] = int(args.t)
    elif tag == "outlier-identity":
        if args.r is None or args.z0 is None:
            raise ConfigError("outlier-identity curve needs --r and --z0")
        kwargs["r"] = int(args.r)
        kwargs["z0"] = _parse_complex(args.z0)
    else:
        if not spec.groups:
            raise ConfigError(f"{tag} curve needs --x0 or --r/--z0")
        kwargs["spec"] = spec
    try:
        curve = theory_curve(tag, zhats, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [[zh.real, zh.imag, v] for zh, v in curve.points]
    _write_csv(args.out, ["re_zhat", "im_zhat", "value"], rows)
    meta = {
        "tool": "ginolap",
        "version": __version__,
        "command": "theory",
        "method": "theory",
        "params": {
            "tag": tag,
            "tau": tau,
            "t": args.t,
            "r": args.r,
            "z0": args.z0,
            "x0": getattr(args, "x0", None),
            "points": len(rows),
        },
        "meta": curve.meta,
    }
    _write_sidecar(args.out, meta)
    print(f"theory[{tag}]: wrote {len(rows)} points to {args.out}")
    return EXIT_OK


def cmd_mc(args) -> int:
    tau = float(args.tau)
    if tau <= 0:
        raise ConfigError("tau must be positive")
    regime = args.regime
    spec = _build_spec(args, regime)
    try:
        params = ModelParams(N=int(args.n), tau=tau, spec=spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    axis = "re_zhat" if regime == "edge" else "abs_zhat"
    zhats = _zhat_grid(args, axis)
    points = _regime_points(regime, spec, args.z0, tau, zhats)
    cfg = EstimatorConfig(
        trials=int(args.trials),
        seed=int(args.seed),
        eps_hat=float(args.eps_hat),
        dedup_tol=args.dedup_tol,
        threads=args.threads,
    )
    try:
        ests, stats, samples = estimate_densities(
            params, points, cfg, collect_samples=args.dump_samples is not None
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [
        [e.zhat.real, e.zhat.imag, e.value, e.stderr, e.count] for e in ests
    ]
    _write_csv(args.out, ["re_zhat", "im_zhat", "value", "stderr", "count"], rows)
    starved = [[e.zhat.real, e.zhat.imag] for e in ests if e.starved]
    meta = {
        "tool": "ginolap",
        "version": __version__,
        "command": "mc",
        "method": "mc",
        "params": {
            "n": params.N,
            "tau": tau,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "eps_hat": cfg.eps_hat,
            "dedup_tol": cfg.dedup_tol,
            "regime": regime,
            "z0": [points[0].z0.real, points[0].z0.imag],
            "rho": points[0].rho,
            "scaling": points[0].scaling.value,
            "x0": spec_to_json(spec),
            "points": len(rows),
        },
        "resamples": {
            "spacing": stats.resampled_spacing,
            "condition": stats.resampled_condition,
        },
        "starved": starved,
    }
    _write_sidecar(args.out, meta)
    if args.dump_samples:
        sample_rows = [[s.trial, s.z.real, s.z.imag, s.o] for s in samples]
        _write_csv(args.dump_samples, ["trial", "re_z", "im_z", "overlap"], sample_rows)
        _write_sidecar(args.dump_samples, meta)
    for coord in starved:
        print(f"warning: no eigenvalues captured at zhat=({coord[0]},{coord[1]})", file=sys.stderr)
    print(f"mc: wrote {len(rows)} points to {args.out}")
    return EXIT_OK


def cmd_exact(args) -> int:
    tau = float(args.tau)
    if tau <= 0:
        raise ConfigError("tau must be positive")
    spec = _build_spec(args, args.regime)
    try:
        params = ModelParams(N=int(args.n), tau=tau, spec=spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.z is not None:
        if args.regime is not None or args.zhat or args.re_zhat or args.abs_zhat:
            raise ConfigError("--z is exclusive with regime/zhat addressing")
        points = [EvaluationPoint.at_physical(_parse_complex(args.z))]
    else:
        if args.regime is None:
            raise ConfigError("need either --z or --regime with zhat points")
        axis = "re_zhat" if args.regime == "edge" else "abs_zhat"
        zhats = _zhat_grid(args, axis)
        points = _regime_points(args.regime, spec, args.z0, tau, zhats)
    settings = QuadratureSettings(
        radial_nodes=int(args.radial_nodes),
        angle_nodes=int(args.angle_nodes),
        strategy=Strategy.PRINTED_MINORS if args.strategy == "minors" else Strategy.MU_EXTRACTION,
        check=not args.no_check,
    )
    rows = []
    deltas = []
    for pt in points:
        try:
            rep = exact_density_report(params, pt, settings)
        except UnsupportedRankError as exc:
            raise ConfigError(str(exc)) from exc
        norm = _norm_factor(pt.scaling, params.N) if args.regime else 1.0
        rows.append([pt.zhat.real, pt.zhat.imag, rep.value * norm, 0.0, 0])
        deltas.append(rep.node_delta)
    _write_csv(args.out, ["re_zhat", "im_zhat", "value", "stderr", "count"], rows)
    meta = {
        "tool": "ginolap",
        "version": __version__,
        "command": "exact",
        "method": "exact",
        "params": {
            "n": params.N,
            "tau": tau,
            "x0": spec_to_json(spec),
            "z": args.z,
            "regime": args.regime,
            "radial_nodes": settings.radial_nodes,
            "angle_nodes": settings.angle_nodes,
            "strategy": settings.strategy.value,
            "points": len(rows),
        },
        "convergence_delta": deltas,
    }
    _write_sidecar(args.out, meta)
    for rdelta in deltas:
        if not math.isnan(rdelta):
            print(f"exact: node-doubling delta {rdelta:.3e}")
    print(f"exact: wrote {len(rows)} points to {args.out}")
    return EXIT_OK


def _read_table(path: str) -> dict[tuple[float, float], dict[str, float]]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    out = {}
    for line in lines[1:]:
        vals = dict(zip(header, (float(v) for v in line.split(","))))
        out[(vals["re_zhat"], vals["im_zhat"])] = vals
    return out


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    mc = _read_table(args.mc)
    theory = _read_table(args.theory)
    exact = _read_table(args.exact) if args.exact else None
    missing = [k for k in mc if k not in theory]
    if exact is not None:
        missing += [k for k in mc if k not in exact]
    common = [k for k in mc if k in theory and (exact is None or k in exact)]
    if missing or not common:
        for k in missing:
            print(f"grid mismatch at zhat=({k[0]},{k[1]})", file=sys.stderr)
        if not common:
            print("empty grid intersection", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for k in common:
        m, t = mc[k], theory[k]
        row = {
            "re_zhat": k[0],
            "im_zhat": k[1],
            "mc_value": m["value"],
            "mc_stderr": m["stderr"],
            "theory_value": t["value"],
            "z_score": (m["value"] - t["value"]) / m["stderr"] if m["stderr"] > 0 else None,
            "rel_dev": (m["value"] - t["value"]) / t["value"] if t["value"] != 0 else None,
        }
        if exact is not None:
            e = exact[k]
            row["exact_value"] = e["value"]
            row["mc_vs_exact_z"] = (
                (m["value"] - e["value"]) / m["stderr"] if m["stderr"] > 0 else None
            )
            row["exact_vs_theory_rel"] = (
                (e["value"] - t["value"]) / t["value"] if t["value"] != 0 else None
            )
        rows.append(row)
    zscores = [abs(r["z_score"]) for r in rows if r["z_score"] is not None]
    reldevs = [abs(r["rel_dev"]) for r in rows if r["rel_dev"] is not None]
    mc_meta = {}
    side = Path(f"{args.mc}.meta.json")
    if side.exists():
        mc_meta = json.loads(side.read_text(encoding="utf-8"))
    summary = {
        "points": len(rows),
        "max_abs_z": max(zscores) if zscores else None,
        "mean_rel_dev": sum(reldevs) / len(reldevs) if reldevs else None,
        "threshold": args.threshold,
        "pass": (max(zscores) <= args.threshold) if zscores else True,
        "resamples": mc_meta.get("resamples"),
        "runtime_s": round(time.perf_counter() - t0, 6),
    }
    report = {"tool": "ginolap", "version": __version__, "points": rows, "summary": summary}
    Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(
        f"compare: {len(rows)} points, max|z|="
        f"{summary['max_abs_z'] if summary['max_abs_z'] is not None else 'n/a'}, "
        f"pass={summary['pass']}"
    )
    return EXIT_OK


def cmd_ie(args) -> int:
    s, x = float(args.s), float(args.x)
    try:
        val = ie_scaled(s, x) if args.scaled else ie(s, x)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(_fmt(val))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x0", help="Jordan spec JSON path, or 'none'")
    p.add_argument("--r", type=int, help="inline single-block rank (with --z0)")
    p.add_argument("--z0", help="base point 're,im'")


def _add_grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--zhat", action="append", help="rescaled point 're,im' (repeatable)")
    p.add_argument("--re-zhat", dest="re_zhat", help="grid 'start:stop:step' over Re zhat")
    p.add_argument("--abs-zhat", dest="abs_zhat", help="grid 'start:stop:step' over |zhat|")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ginolap", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"ginolap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="evaluate a limit law on a zhat grid")
    p.add_argument("tag", choices=["edge", "outlier-jordan", "outlier-identity", "one-point"])
    p.add_argument("--t", type=int, help="edge multiplicity")
    p.add_argument("--tau", type=float, default=1.0)
    _add_spec_args(p)
    _add_grid_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("mc", help="Monte Carlo overlap-density estimates")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-hat", dest="eps_hat", type=float, default=0.2)
    p.add_argument("--dedup-tol", dest="dedup_tol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--regime", choices=_REGIMES, required=True)
    _add_spec_args(p)
    _add_grid_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-samples", dest="dump_samples")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("exact", help="exact finite-N density by quadrature")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--z", help="physical point 're,im' (exclusive with --regime)")
    p.add_argument("--regime", choices=_REGIMES)
    _add_spec_args(p)
    _add_grid_args(p)
    p.add_argument("--radial-nodes", dest="radial_nodes", type=int, default=64)
    p.add_argument("--angle-nodes", dest="angle_nodes", type=int, default=32)
    p.add_argument("--strategy", choices=["mu", "minors"], default="mu")
    p.add_argument("--no-check", dest="no_check", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("compare", help="cross-route comparison report")
    p.add_argument("--mc", required=True)
    p.add_argument("--theory", required=True)
    p.add_argument("--exact")
    p.add_argument("--threshold", type=float, default=3.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ie", help="evaluate IE_s(x)")
    p.add_argument("--s", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--scaled", action="store_true")
    p.set_defaults(func=cmd_ie)

    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InvalidSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureAccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
