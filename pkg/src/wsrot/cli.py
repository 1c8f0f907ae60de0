"""Command-line front end.

Subcommands: simulate | fixed-point | scan-fh | splay-check | invariants.
One JSON config file describes each run; outputs are CSV/JSON files in the
--out directory (byte-identical for identical config and seed), with PNG
figures rendered alongside when the config asks for them. Failures print a
machine-readable JSON object on stderr; exit codes are 2 for validation
problems, 3 for numerical ones, 4 when no truncated fixed point exists.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .averaging import scan_curves
from .errors import (
    ConfigError,
    NoFixedPointError,
    ValidationError,
    WsrotError,
)
from .invariants import run_invariants
from .mobius import Convention, CrossRatios, cross_ratios, splay_lambda
from .models import ModelSpec, PerturbationSpec
from .orbits import IntegratorConfig, find_limit_cycle, integrate, splay_check
from .serialize import (
    fmt_float,
    json_dump,
    write_scan_csv,
    write_trajectory_csv,
)
from .torus_state import TWO_PI, canonicalize, splay_state
from .ws_reduced import FREQ_MIN, fixed_point

log = logging.getLogger("wsrot.cli")

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

_PERT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "eps": _NUM,
        "a": {"type": "object", "additionalProperties": False,
              "patternProperties": {"^[0-9]+$": _NUM}},
        "b": {"type": "object", "additionalProperties": False,
              "patternProperties": {"^[0-9]+$": _NUM}},
    },
}

_MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "n", "omega", "kappa"],
    "properties": {
        "kind": {"enum": ["classic_rotator", "generalized_rotator"]},
        "n": {"type": "integer", "minimum": 4},
        "omega": _NUM,
        "kappa": _NUM,
        "perturbation": _PERT_SCHEMA,
    },
}

_INTEGRATOR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "method": {"enum": ["rk4", "rk45"]},
        "dt": _POS,
        "rel_tol": _POS,
        "abs_tol": _POS,
        "t_transient": _POS,
        "t_max": {"type": ["number", "null"]},
        "n_samples": {"type": "integer", "minimum": 8},
    },
}

_SCHEMAS = {
    "simulate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["model", "initial", "t_final"],
        "properties": {
            "model": _MODEL_SCHEMA,
            "initial": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "splay": {"type": "boolean"},
                    "phases": {"type": "array", "minItems": 4,
                               "items": _NUM},
                    "random": {"type": "boolean"},
                    "min_gap": _POS,
                },
            },
            "t_final": _POS,
            "n_out": {"type": "integer", "minimum": 2},
            "integrator": _INTEGRATOR_SCHEMA,
            "plot": {"type": "boolean"},
        },
    },
    "fixed-point": {
        "type": "object",
        "additionalProperties": False,
        "required": ["omega", "kappa"],
        "properties": {"omega": _NUM, "kappa": _NUM},
    },
    "scan-fh": {
        "type": "object",
        "additionalProperties": False,
        "required": ["model", "perturbations"],
        "properties": {
            "model": _MODEL_SCHEMA,
            "perturbations": {"type": "array", "minItems": 1,
                              "items": _PERT_SCHEMA},
            "grid": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "lo": _NUM, "hi": _NUM,
                    "n": {"type": "integer", "minimum": 2},
                },
            },
            "integrator": _INTEGRATOR_SCHEMA,
            "refine_roots": {"type": "boolean"},
            "zero_tol": _POS,
            "root_tol": _POS,
            "plot": {"type": "boolean"},
        },
    },
    "splay-check": {
        "type": "object",
        "additionalProperties": False,
        "required": ["model"],
        "properties": {
            "model": _MODEL_SCHEMA,
            "lambda": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "splay": {"type": "boolean"},
                    "values": {"type": "array", "minItems": 1, "items": _NUM},
                    "convention": {"enum": ["canonical", "consecutive"]},
                },
            },
            "integrator": _INTEGRATOR_SCHEMA,
            "splay_tol": _POS,
            "plot": {"type": "boolean"},
        },
    },
    "invariants": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "tolerances": {"type": "object", "additionalProperties": False,
                           "patternProperties": {"^[a-z_.]+$": _POS}},
        },
    },
}


def _setup_logging() -> None:
    level_name = os.environ.get("WSROT_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        if command == "invariants":
            return {}
        raise ConfigError(f"{command} requires --config PATH", pointer="")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", pointer="") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", pointer="") from None
    try:
        jsonschema.validate(raw, _SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        pointer = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(exc.message, pointer=pointer) from None
    return raw


def _integrator_from(cfg: dict) -> IntegratorConfig:
    d = cfg.get("integrator", {})
    kwargs = {k: d[k] for k in
              ("method", "dt", "rel_tol", "abs_tol", "t_transient", "t_max",
               "n_samples") if k in d}
    return IntegratorConfig(**kwargs)


def _model_from(cfg: dict) -> ModelSpec:
    try:
        return ModelSpec.from_dict(cfg["model"])
    except ValidationError as exc:
        raise ConfigError(str(exc), pointer="/model") from exc


def _initial_state(cfg: dict, n: int, seed: int):
    init = cfg["initial"]
    chosen = [k for k in ("splay", "phases", "random") if init.get(k)]
    if len(chosen) != 1:
        raise ConfigError("initial needs exactly one of splay/phases/random",
                          pointer="/initial")
    if chosen[0] == "splay":
        return splay_state(n)
    if chosen[0] == "phases":
        phases = np.asarray(init["phases"], dtype=float)
        if phases.shape[0] != n:
            raise ConfigError(
                f"initial phases have length {phases.shape[0]}, model has n = {n}",
                pointer="/initial/phases")
        try:
            return canonicalize(phases)
        except WsrotError as exc:
            raise ConfigError(f"initial phases rejected: {exc}",
                              pointer="/initial/phases") from exc
    rng = np.random.default_rng(seed)
    min_gap = init.get("min_gap", 0.05)
    if min_gap * n >= TWO_PI:
        raise ConfigError("min_gap too large for this n", pointer="/initial/min_gap")
    gaps = rng.uniform(min_gap, 1.0, n)
    gaps *= TWO_PI / gaps.sum()
    while gaps.min() < min_gap:
        gaps = rng.uniform(min_gap, 1.0, n)
        gaps *= TWO_PI / gaps.sum()
    phases = -np.pi + np.concatenate(([0.0], np.cumsum(gaps[:-1])))
    return canonicalize(phases)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config, "simulate")
    m = _model_from(cfg)
    icfg = _integrator_from(cfg)
    s0 = _initial_state(cfg, m.n_units, args.seed)
    t_final = float(cfg["t_final"])
    n_out = int(cfg.get("n_out", 513))
    log.info("simulate: n=%d kind=%s t_final=%g", m.n_units, m.kind.value, t_final)

    t_eval = np.linspace(0.0, t_final, n_out)
    traj = integrate(m, s0, (0.0, t_final), icfg, t_eval=t_eval)

    lam0 = cross_ratios(traj.state(0), Convention.CONSECUTIVE).values
    lams = np.array([
        cross_ratios(traj.state(i), Convention.CONSECUTIVE).values
        for i in range(n_out)
    ])
    drift_max = float(np.max(np.abs(lams - lam0)))
    # Least-squares slope of each invariant over time; for the perturbed
    # model this estimates the secular drift rate.
    a = np.vstack([t_eval, np.ones_like(t_eval)]).T
    slopes, _, _, _ = np.linalg.lstsq(a, lams, rcond=None)
    zmods = np.array([abs(np.mean(np.exp(1j * traj.phases[i])))
                      for i in range(n_out)])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", traj)
    summary = {
        "model": m.to_dict(),
        "t_final": t_final,
        "n_out": n_out,
        "lambda_initial": [float(v) for v in lam0],
        "lambda_final": [float(v) for v in lams[-1]],
        "lambda_drift_max": drift_max,
        "lambda_drift_slope": [float(v) for v in slopes[0]],
        "z_modulus": {"min": float(zmods.min()), "max": float(zmods.max()),
                      "mean": float(zmods.mean())},
    }
    json_dump(out / "summary.json", summary)
    if cfg.get("plot"):
        from .report import trajectory_figure
        trajectory_figure(traj, out / "trajectory.png")
    print(f"simulate: wrote {n_out} samples; lambda drift max = "
          f"{fmt_float(drift_max)}")
    return 0


def cmd_fixed_point(args) -> int:
    cfg = _load_config(args.config, "fixed-point")
    omega, kappa = float(cfg["omega"]), float(cfg["kappa"])
    fp = fixed_point(omega, kappa)
    if abs(fp.omega_rot) < FREQ_MIN:
        print(json.dumps({
            "warning": "rotation frequency below threshold; period-based "
                       "machinery would refuse this point",
            "omega_rot": fp.omega_rot,
        }, sort_keys=True), file=sys.stderr)
    payload = fp.to_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        json_dump(out / "fixed_point.json", payload)
    return 0


def cmd_scan_fh(args) -> int:
    cfg = _load_config(args.config, "scan-fh")
    m = _model_from(cfg)
    if m.n_units != 4:
        raise ConfigError("scan-fh requires n = 4 (scalar leaf coordinate)",
                          pointer="/model/n")
    perts = []
    for i, p in enumerate(cfg["perturbations"]):
        try:
            spec = PerturbationSpec.from_dict(p)
            if spec.norm() == 0.0:
                raise ConfigError("perturbation has no modes",
                                  pointer=f"/perturbations/{i}")
            perts.append(PerturbationSpec.normalized(spec.a, spec.b,
                                                     spec.epsilon))
        except ValidationError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), pointer=f"/perturbations/{i}") from exc
    grid_cfg = cfg.get("grid", {})
    lo = float(grid_cfg.get("lo", 0.02))
    hi = float(grid_cfg.get("hi", 0.98))
    n_pts = int(grid_cfg.get("n", 101))
    if not 0.0 < lo < hi < 1.0:
        raise ConfigError("grid must satisfy 0 < lo < hi < 1", pointer="/grid")
    grid = np.linspace(lo, hi, n_pts)
    icfg = _integrator_from(cfg)
    log.info("scan-fh: %d points x %d curves, jobs=%d", n_pts, len(perts),
             args.jobs)

    reports = scan_curves(m, perts, grid, icfg, jobs=args.jobs,
                          refine_roots=cfg.get("refine_roots", True),
                          root_tol=cfg.get("root_tol", 1e-8),
                          zero_tol=cfg.get("zero_tol", 1e-7))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = ok = 0
    for i, rep in enumerate(reports, start=1):
        write_scan_csv(out / f"scan_{i}.csv", rep, n_units=4)
        json_dump(out / f"roots_{i}.json", rep.to_dict())
        total += len(rep.samples)
        ok += rep.n_ok
        roots = ", ".join(fmt_float(r.lam_root) for r in rep.roots) or "none"
        print(f"curve {i}: {rep.n_ok}/{len(rep.samples)} points ok; "
              f"roots: {roots}")
    if cfg.get("plot"):
        from .report import scan_figure
        scan_figure(reports, [f"h{i}" for i in range(1, len(reports) + 1)],
                    out / "scan.png")
    if total and ok / total < 0.9:
        print(json.dumps({
            "error": "ScanQuality",
            "message": f"only {ok}/{total} grid points converged (< 90%)",
        }, sort_keys=True), file=sys.stderr)
        return 3
    return 0


def cmd_splay_check(args) -> int:
    cfg = _load_config(args.config, "splay-check")
    m = _model_from(cfg)
    n = m.n_units
    lam_cfg = cfg.get("lambda", {"splay": True})
    if lam_cfg.get("splay") or "values" not in lam_cfg:
        lam = splay_lambda(n, Convention.CANONICAL)
    else:
        conv = Convention(lam_cfg.get("convention", "canonical"))
        try:
            lam = CrossRatios(np.asarray(lam_cfg["values"], dtype=float), conv)
        except ValidationError as exc:
            raise ConfigError(str(exc), pointer="/lambda/values") from exc
        if conv is Convention.CONSECUTIVE:
            from .averaging import _to_canonical
            lam = _to_canonical(lam)
    icfg = _integrator_from(cfg)
    orb = find_limit_cycle(m.unperturbed(), lam, icfg)
    rep = splay_check(orb, splay_tol=float(cfg.get("splay_tol", 1e-6)))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "report": rep.to_dict(),
        "orbit": {
            "period": orb.period,
            "residual": orb.residual,
            "converged": orb.converged,
            "n_returns": orb.n_returns,
            "winding": orb.winding,
            "lambda": orb.lam.to_dict(),
        },
    }
    json_dump(out / "splay.json", payload)
    if cfg.get("plot"):
        from .report import splay_figure
        splay_figure(orb, rep, out / "splay.png")
    print(f"splay check: is_splay={rep.is_splay} "
          f"max_shift_error={fmt_float(rep.max_shift_error)} "
          f"period={fmt_float(rep.period)}")
    return 0


def cmd_invariants(args) -> int:
    cfg = _load_config(args.config, "invariants")
    overrides = {k: float(v) for k, v in cfg.get("tolerances", {}).items()}
    results = run_invariants(seed=args.seed, name_filter=args.filter or "",
                             tol_overrides=overrides)
    if not results:
        raise ConfigError(f"no invariant suite matches filter "
                          f"{args.filter!r}", pointer="")
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  max_error={r.max_error:.3e}  "
              f"tol={r.tol:.1e}  {r.detail}")
    n_fail = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_fail}/{len(results)} invariant suites passed")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        json_dump(out / "invariants.json",
                  {"seed": args.seed, "results": [r.to_dict() for r in results]})
    return 0 if n_fail == 0 else 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsrot",
        description="Ensembles of identically driven phase oscillators: "
                    "simulation, reduced fixed points, averaged perturbation "
                    "scans, splay verification, and property suites.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config file for this run")
    common.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (default: current)")
    common.add_argument("--jobs", metavar="K", type=int, default=1,
                        help="worker processes for grid scans")
    common.add_argument("--seed", metavar="U64", type=int, default=12345,
                        help="seed for any randomness in the run")
    common.add_argument("--filter", metavar="NAME", default=None,
                        help="substring filter for invariant suites")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common],
                   help="integrate the ensemble and write a trajectory"
                   ).set_defaults(fn=cmd_simulate)
    sub.add_parser("fixed-point", parents=[common],
                   help="truncated self-consistent fixed point and spectrum"
                   ).set_defaults(fn=cmd_fixed_point)
    sub.add_parser("scan-fh", parents=[common],
                   help="scan the averaged functional over leaf coordinates"
                   ).set_defaults(fn=cmd_scan_fh)
    sub.add_parser("splay-check", parents=[common],
                   help="locate a cycle and test the splay shift identity"
                   ).set_defaults(fn=cmd_splay_check)
    sub.add_parser("invariants", parents=[common],
                   help="run the named property suites"
                   ).set_defaults(fn=cmd_invariants)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print(json.dumps({"error": "ConfigError",
                          "message": "--seed must fit in 64 bits"},
                         sort_keys=True), file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except WsrotError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        pointer = getattr(exc, "pointer", None)
        if pointer:
            payload["pointer"] = pointer
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        if isinstance(exc, ValidationError):
            return 2
        if isinstance(exc, NoFixedPointError):
            return 4
        return 3


if __name__ == "__main__":
    sys.exit(main())
