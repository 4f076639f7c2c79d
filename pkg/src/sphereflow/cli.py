"""Scenario runner: validates a JSON config, runs one experiment, writes
deterministic CSV/JSON artifacts plus a manifest.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import ambient as amb
from ._backend import backend_name
from .analysis import (LatitudeOracle, mesh_tolerance, perturbed_sphere_suite,
                       rigidity_report)
from .flow import (FlowConfig, LadderConfig, construct_ancient,
                   export_sections_text, export_trajectory_csv, run_mcf,
                   FlowError, laplacian_problem)
from .holder import schauder_ratio_experiment
from .jacobi import (EigenSolverError, assemble_jacobi, eigen_spectrum,
                     export_spectrum_csv)
from .mesh import build_icosphere
from .surface import (BlowUpSignal, GaugeLossError, SurfaceError,
                      embed_equator, normal_frame)
from .width import (SliceError, bump_conformal_metric,
                    constant_conformal_metric, evaluate_width,
                    optimize_width_upper, standard_sweepout)

EXPERIMENTS = ("spectrum", "flow", "ancient", "rigidity", "schauder", "width")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ schema

SCHEMA = {
    "experiment": {"type": str, "required": True, "choices": EXPERIMENTS},
    "seed": {"type": int, "default": 0, "min": 0},
    "mesh_level": {"type": int, "default": 4, "min": 0, "max": 7},
    "ambient": {
        "type": dict,
        "default": {"kind": "round_sphere", "dim": 3},
        "fields": {
            "kind": {"type": str, "required": True,
                     "choices": ("round_sphere", "euclidean",
                                 "conformal_sphere3")},
            "dim": {"type": int, "default": 3, "min": 3, "max": 8},
            "conformal": {
                "type": dict, "default": None,
                "fields": {
                    "type": {"type": str, "required": True,
                             "choices": ("constant", "bump")},
                    "value": {"type": float, "default": 0.0},
                    "amplitude": {"type": float, "default": 0.0},
                    "center": {"type": list, "default": [1.0, 0.0, 0.0, 0.0]},
                    "sigma": {"type": float, "default": 0.4, "min": 1e-3},
                },
            },
        },
    },
    "flow": {
        "type": dict,
        "default": {},
        "fields": {
            "time_step": {"type": float, "default": 1e-4, "min": 1e-8},
            "scheme": {"type": str, "default": "semi_implicit",
                       "choices": ("semi_implicit", "explicit")},
            "horizon": {"type": float, "default": 1.0, "min": 1e-6},
            "initial_latitude": {"type": float, "default": 0.1,
                                 "min": 1e-4, "max": 1.4},
            "record_every": {"type": int, "default": 50, "min": 1},
            "blow_up_threshold": {"type": float, "default": 0.5, "min": 1e-6},
            "gauge_margin": {"type": float, "default": 0.2, "min": 1e-6},
        },
    },
    "ladder": {
        "type": dict,
        "default": {},
        "fields": {
            "delta_a": {"type": float, "default": 1.0, "min": 1e-3},
            "start_sup": {"type": float, "default": 0.05, "min": 1e-6},
            "sup_cap": {"type": float, "default": 0.5, "min": 1e-3},
            "tolerance": {"type": float, "default": 1e-4, "min": 0.0},
            "max_rungs": {"type": int, "default": 6, "min": 1, "max": 20},
        },
    },
    "spectrum": {
        "type": dict,
        "default": {},
        "fields": {
            "count": {"type": int, "default": 12, "min": 1},
        },
    },
    "rigidity": {
        "type": dict,
        "default": {},
        "fields": {
            "count": {"type": int, "default": 10, "min": 1, "max": 500},
            "amplitude": {"type": float, "default": 0.15, "min": 0.0,
                          "max": 0.5},
        },
    },
    "schauder": {
        "type": dict,
        "default": {},
        "fields": {
            "horizons": {"type": list, "default": [1.0, 2.0, 4.0, 8.0]},
            "alpha": {"type": float, "default": 0.5, "min": 0.01, "max": 0.99},
            "time_step": {"type": float, "default": 2e-3, "min": 1e-8},
        },
    },
    "width": {
        "type": dict,
        "default": {},
        "fields": {
            "n_slices": {"type": int, "default": 41, "min": 3},
            "budget": {"type": int, "default": 60, "min": 1},
            "param_bound": {"type": float, "default": 1.0, "min": 0.0},
            "optimize": {"type": bool, "default": True},
        },
    },
}


def _validate_section(data, schema, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown key {path + key!r}")
    for key, spec in schema.items():
        if key in data:
            value = data[key]
        elif spec.get("required"):
            raise ConfigError(f"missing required key {path + key!r}")
        else:
            value = spec.get("default")
        if value is None and spec["type"] is dict:
            out[key] = None
            continue
        if spec["type"] is float and isinstance(value, int) \
                and not isinstance(value, bool):
            value = float(value)
        if spec["type"] is dict:
            out[key] = _validate_section(value, spec["fields"], path + key + ".")
            continue
        if not isinstance(value, spec["type"]) \
                or (spec["type"] is int and isinstance(value, bool)):
            raise ConfigError(
                f"key {path + key!r} must be {spec['type'].__name__}")
        if "choices" in spec and value not in spec["choices"]:
            raise ConfigError(
                f"key {path + key!r} must be one of {spec['choices']}")
        if "min" in spec and value < spec["min"]:
            raise ConfigError(f"key {path + key!r} below minimum {spec['min']}")
        if "max" in spec and value > spec["max"]:
            raise ConfigError(f"key {path + key!r} above maximum {spec['max']}")
        out[key] = value
    return out


def validate_config(raw):
    cfg = _validate_section(raw, SCHEMA, "")
    if cfg["experiment"] in ("flow", "ancient", "spectrum") \
            and cfg["ambient"]["kind"] != "round_sphere":
        raise ConfigError(f"experiment {cfg['experiment']!r} requires the "
                          "round_sphere ambient")
    if cfg["ambient"]["kind"] == "conformal_sphere3" \
            and cfg["ambient"]["conformal"] is None:
        raise ConfigError("conformal_sphere3 ambient needs key "
                          "'ambient.conformal'")
    return cfg


def scenario_schema():
    """The published configuration schema (introspectable dict)."""
    def strip(spec):
        out = {}
        for key, val in spec.items():
            entry = {"type": val["type"].__name__}
            for attr in ("required", "default", "choices", "min", "max"):
                if attr in val:
                    entry[attr] = val[attr]
            if "fields" in val:
                entry["fields"] = strip(val["fields"])
            out[key] = entry
        return out
    return strip(SCHEMA)


# ------------------------------------------------------------- experiments

def _fmt(x):
    return f"{x:.17g}"


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _manifest(cfg, tolerances):
    return {
        "config": cfg,
        "versions": {
            "sphereflow": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "backend": backend_name(),
        },
        "tolerances": tolerances,
    }


def _build_metric(cfg):
    a = cfg["ambient"]
    if a["kind"] == "round_sphere":
        return amb.round_sphere(a["dim"])
    if a["kind"] == "euclidean":
        return amb.euclidean(a["dim"])
    conf = a["conformal"]
    if conf["type"] == "constant":
        return constant_conformal_metric(conf["value"])
    return bump_conformal_metric(conf["amplitude"], conf["center"],
                                 conf["sigma"])


def run_spectrum(cfg, out_dir):
    n = cfg["ambient"]["dim"]
    mesh = build_icosphere(cfg["mesh_level"])
    eq = embed_equator(mesh, n)
    frame = normal_frame(eq)
    op = assemble_jacobi(eq, frame)
    vals, _, residuals = eigen_spectrum(op, cfg["spectrum"]["count"])
    tag = f"spectrum-{cfg['seed']}"
    export_spectrum_csv(out_dir / f"{tag}.csv", vals, residuals)
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"eigen_residual_tol": 1e-8,
                                "shift_invert_tol": 1e-10}))
    return 0


def _flow_pieces(cfg):
    n = cfg["ambient"]["dim"]
    mesh = build_icosphere(cfg["mesh_level"])
    eq = embed_equator(mesh, n)
    frame = normal_frame(eq)
    f = cfg["flow"]
    flow_cfg = FlowConfig(time_step=f["time_step"], scheme=f["scheme"],
                          horizon=f["horizon"],
                          blow_up_threshold=f["blow_up_threshold"],
                          gauge_margin=f["gauge_margin"],
                          record_every=f["record_every"])
    return mesh, eq, frame, flow_cfg


def run_flow(cfg, out_dir):
    mesh, eq, frame, flow_cfg = _flow_pieces(cfg)
    s0 = cfg["flow"]["initial_latitude"]
    u0 = np.full((mesh.n_vertices, frame.rank), 0.0)
    u0[:, 0] = s0
    traj = run_mcf(eq, frame, u0, flow_cfg)
    tag = f"flow-{cfg['seed']}"
    export_trajectory_csv(out_dir / f"{tag}.csv", traj)
    export_sections_text(out_dir / f"{tag}-sections.txt", traj)
    oracle = LatitudeOracle(s0)
    _write_json(out_dir / f"{tag}.json", {
        "termination": traj.termination,
        "blow_up_time_oracle": oracle.blow_up_time,
        "final_time": float(traj.times[-1]),
        "eps_mesh": mesh_tolerance(mesh),
    })
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"eps_mesh": mesh_tolerance(mesh)}))
    return 0


def run_ancient(cfg, out_dir):
    mesh, eq, frame, flow_cfg = _flow_pieces(cfg)
    op = assemble_jacobi(eq, frame)
    vals, sections, _ = eigen_spectrum(op, 1)
    lad = cfg["ladder"]
    ladder = LadderConfig(delta_a=lad["delta_a"], start_sup=lad["start_sup"],
                          sup_cap=lad["sup_cap"], tolerance=lad["tolerance"],
                          max_rungs=lad["max_rungs"])
    traj, report = construct_ancient(eq, frame, sections[0], flow_cfg,
                                     ladder=ladder, operator=op)
    tag = f"ancient-{cfg['seed']}"
    export_trajectory_csv(out_dir / f"{tag}.csv", traj)
    export_sections_text(out_dir / f"{tag}-sections.txt", traj)
    payload = report.to_dict()
    payload["lambda0_matrix"] = float(vals[0])
    _write_json(out_dir / f"{tag}.json", payload)
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"ladder_tolerance": ladder.tolerance,
                                "eps_mesh": mesh_tolerance(mesh)}))
    return 0


def run_rigidity(cfg, out_dir):
    mesh = build_icosphere(cfg["mesh_level"])
    suite = perturbed_sphere_suite(mesh, cfg["rigidity"]["count"],
                                   seed=cfg["seed"],
                                   amplitude=cfg["rigidity"]["amplitude"])
    rows = []
    for surf in suite:
        rep = rigidity_report(surf)
        d = rep.to_dict()
        d["lower_bounds_ok"] = rep.check_lower_bounds()
        d["ambient"] = surf.ambient.kind
        rows.append(d)
    tag = f"rigidity-{cfg['seed']}"
    _write_json(out_dir / f"{tag}.json", {"reports": rows})
    with open(out_dir / f"{tag}.csv", "w") as fh:
        fh.write("index,ambient,f_value,umbilic_defect,curvature_pinch,"
                 "eps_mesh,lower_bounds_ok\n")
        for i, d in enumerate(rows):
            fh.write(",".join([
                str(i), d["ambient"], _fmt(d["f_value"]),
                _fmt(d["umbilic_defect"]), _fmt(d["curvature_pinch"]),
                _fmt(d["eps_mesh"]), str(int(d["lower_bounds_ok"]))]) + "\n")
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"eps_mesh": mesh_tolerance(mesh)}))
    return 0


def run_schauder(cfg, out_dir):
    mesh = build_icosphere(cfg["mesh_level"])
    eq = embed_equator(mesh, 3)
    frame = normal_frame(eq)
    sc = cfg["schauder"]

    def builder():
        problem = laplacian_problem(eq, frame, shift=-1.0)
        u0 = np.zeros((mesh.n_vertices, frame.rank))
        u0[:, 0] = mesh.ref_positions[:, 2]      # degree-1 harmonic mode
        return problem, u0, mesh, None

    rows = schauder_ratio_experiment(builder, sc["horizons"],
                                     alpha=sc["alpha"],
                                     time_step=sc["time_step"])
    tag = f"schauder-{cfg['seed']}"
    with open(out_dir / f"{tag}.csv", "w") as fh:
        fh.write("horizon,u_c2_alpha,f_c0_alpha,u0_c2_alpha,l2,ratio\n")
        for r in rows:
            fh.write(",".join(_fmt(r[k]) for k in
                              ("horizon", "u_c2_alpha", "f_c0_alpha",
                               "u0_c2_alpha", "l2", "ratio")) + "\n")
    ratios = [r["ratio"] for r in rows]
    _write_json(out_dir / f"{tag}.json", {
        "rows": rows,
        "max_over_min": max(ratios) / min(ratios),
        "monotone_increasing": all(b > a for a, b in zip(ratios, ratios[1:])),
    })
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"alpha": sc["alpha"],
                                "ratio_spread_limit": 1.2}))
    return 0


def run_width(cfg, out_dir):
    metric = _build_metric(cfg)
    w = cfg["width"]
    standard = evaluate_width(standard_sweepout(
        metric, n_slices=w["n_slices"], mesh_level=cfg["mesh_level"]))
    if w["optimize"]:
        best = optimize_width_upper(metric, param_bound=w["param_bound"],
                                    budget=w["budget"], seed=cfg["seed"],
                                    n_slices=w["n_slices"],
                                    mesh_level=cfg["mesh_level"])
    else:
        best = standard
    tag = f"width-{cfg['seed']}"
    payload = best.to_dict()
    payload["standard_value"] = standard.value
    del payload["trace"]
    _write_json(out_dir / f"{tag}.json", payload)
    with open(out_dir / f"{tag}-trace.csv", "w") as fh:
        params_header = ",".join(f"p{i}" for i in range(len(best.params)))
        fh.write(f"iteration,{params_header},L\n")
        for it, params, val in (best.trace or
                                [(0, best.params, best.value)]):
            fh.write(",".join([str(it)] + [_fmt(p) for p in params]
                              + [_fmt(val)]) + "\n")
    mesh = build_icosphere(cfg["mesh_level"])
    _write_json(out_dir / f"{tag}-manifest.json",
                _manifest(cfg, {"eps_mesh": mesh_tolerance(mesh),
                                "bound_kind": "upper_bound"}))
    return 0


RUNNERS = {
    "spectrum": run_spectrum,
    "flow": run_flow,
    "ancient": run_ancient,
    "rigidity": run_rigidity,
    "schauder": run_schauder,
    "width": run_width,
}


# -------------------------------------------------------------------- main

def _load_config(path, seed_override=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if seed_override is not None:
        raw = dict(raw)
        raw["seed"] = seed_override
    return validate_config(raw)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sphereflow",
        description="Run spectrum / flow / ancient / rigidity / schauder / "
                    "width experiments from a JSON scenario")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config,
                           getattr(args, "seed", None))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print("config ok")
        return 0

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return RUNNERS[cfg["experiment"]](cfg, out_dir)
    except (FlowError, EigenSolverError, SliceError, SurfaceError,
            BlowUpSignal, GaugeLossError) as exc:
        print(f"numerical failure in {cfg['experiment']}: {exc}",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
