"""Command-line experiment runner.

    delta-ilc freq-map       workspace frequency map (CSV)
    delta-ilc design-shaper  optimal three-impulse shaper and its J surface
    delta-ilc run            ILC run of one controller
    delta-ilc compare        side-by-side runs of several controllers
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import json
import logging
from pathlib import Path
import sys

import numpy as np

from . import __version__, config as cfgmod
from . import kinematics, modal, shaper, sim, trajectory
from .controllers import AFC_GAINS, CASE1_GAINS, CASE2_GAINS, AMCILCGains
from .dynamics import RigidModel, true_plant
from .errors import ConfigError, DeltaError
from .params import params_from_dict

log = logging.getLogger("delta_ilc")

TRAJECTORIES = {
    "square": trajectory.square_trajectory,
    "butterfly": trajectory.butterfly_trajectory,
    "pick_and_place": trajectory.pick_and_place,
}


def build_params(cfg):
    return params_from_dict(cfg["robot"])


def build_reference(cfg, params):
    tcfg = cfg["trajectory"]
    try:
        return TRAJECTORIES[tcfg["kind"]](params, dt=tcfg["dt"], **tcfg["options"])
    except TypeError as exc:
        raise ConfigError(f"trajectory.options: {exc}") from exc


def build_gains(cfg, name):
    base = AFC_GAINS if name == "afc" else (CASE1_GAINS if cfg["controller"]["preset"] == "case1"
                                            else CASE2_GAINS)
    try:
        return AMCILCGains(**dict(base, **cfg["controller"]["gains"]))
    except TypeError as exc:
        raise ConfigError(f"controller.gains: {exc}") from exc


def build_shaper(cfg, params, workers=1):
    scfg = cfg["shaper"]
    if scfg["f_n"] is not None and scfg["k_t"] is not None:
        return shaper.make_shaper(scfg["f_n"], scfg["zeta"], scfg["k_t"]), None
    weighting = None
    if scfg["weighting"] == "workspace":
        weighting = frequency_map(cfg, params, workers).weighting()
    design = shaper.optimize_shaper(tuple(scfg["f_range"]), tuple(scfg["k_range"]), scfg["grid"],
                                    scfg["zeta"], weighting, scfg["w1"], scfg["w2"])
    return design.shaper, design


def frequency_map(cfg, params, workers=1):
    w = cfg["workspace"]
    samples = kinematics.sample_workspace(params, w["spacing"], w["z_planes"], w["extent"])
    return modal.frequency_map(params, samples, workers)


def manifest(cfg, command, **extra):
    return dict(command=command, version=__version__, config=cfg, seed=cfg["seed"], **extra)


def write_manifest(out, data):
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True, default=str))


def cmd_freq_map(cfg, out, workers):
    params = build_params(cfg)
    fmap = frequency_map(cfg, params, workers)
    fmap.to_csv(out / "freq_map.csv")
    lo, hi = fmap.range
    summary = {"samples": int(fmap.f1.size), "failures": len(fmap.failures),
               "f1_min_Hz": lo, "f1_max_Hz": hi}
    write_manifest(out, manifest(cfg, "freq-map", summary=summary))
    print(f"first natural frequency: {lo:.3f} .. {hi:.3f} Hz over {fmap.f1.size} samples"
          f" ({len(fmap.failures)} failed)")
    return 0


def cmd_design_shaper(cfg, out, workers):
    params = build_params(cfg)
    scfg = dict(cfg, shaper=dict(cfg["shaper"], f_n=None, k_t=None))
    spec, design = build_shaper(scfg, params, workers)
    (out / "shaper.json").write_text(json.dumps(spec.to_dict(), indent=2))
    np.savetxt(out / "j_surface.csv", design.surface_rows(), delimiter=",",
               header="f_n,k_t,J1,J2,J", comments="", fmt="%.10g")
    write_manifest(out, manifest(cfg, "design-shaper", optimum=spec.to_dict(), J=design.J))
    print(f"optimal shaper: f_n = {design.f_n:.2f} Hz, k_t = {design.k_t:.2f}, J = {design.J:.5f}")
    return 0


def _experiment(cfg, name, workers=1):
    """Run one controller and return its result plus run-level diagnostics."""
    params = build_params(cfg)
    ref = build_reference(cfg, params)
    spec = None
    if cfg["shaper"]["enabled"]:
        spec, _ = build_shaper(cfg, params, workers)
        ref = shaper.shape_trajectory(spec, ref)
    nominal = RigidModel(params)
    scfg = cfg["simulation"]
    plant = true_plant(params, scfg["perturbation"], scfg["damping"])
    gains = build_gains(cfg, name)
    controller = sim.make_controller(name, nominal, gains)
    sim_cfg = sim.SimConfig(int(scfg["iterations"]), scfg["theta_dot_max"], scfg["noise_std"],
                            cfg["seed"])
    if name != "pidilc":
        gains.check_feasible(sim.velocity_limit(sim_cfg, ref, gains.v_c), ref.max_rate)
    result = sim.run_ilc(plant, controller, ref, sim_cfg)
    info = {"shaper": spec.to_dict() if spec else None, "reference_max_rate": ref.max_rate,
            "theta_dot_max": result.theta_dot_max}
    if name == "amcilc" and result.iterations:
        star, eps_bar = sim.ideal_weights(plant, nominal, ref)
        bcef = sim.bcef_monitor(result, gains, star, eps_bar)
        info["bcef_final"] = bcef.final.tolist()
        info["bcef_nonincreasing"] = bcef.is_nonincreasing()
    if result.iterations:
        last = result.iterations[-1]
        m = modal.analyse_pose(params, ref.origin)
        report = sim.residual_vibration_report(last.theta_ddot, ref.dt, m, spec is not None)
        info["residual_modes"] = report.modes.tolist()
        info["residual_tips_z"] = report.connection_points.tolist()
    info["max_eta"] = max((float(it.max_eta.max()) for it in result.iterations), default=None)
    info["max_rate"] = max((float(it.max_rate.max()) for it in result.iterations), default=None)
    return result, info


def _violations(result, info, name):
    problems = []
    if result.aborted:
        problems.append(f"aborted at {result.aborted}")
    if info["max_rate"] is not None and info["max_rate"] >= result.theta_dot_max:
        problems.append(f"joint rate {info['max_rate']:.4g} reached the limit "
                        f"{result.theta_dot_max:.4g}")
    return problems


def _write_summary(path, rows_by_name):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["controller", "iteration", "e1_max", "e2_max", "e3_max",
                    "edot1_norm", "edot2_norm", "edot3_norm"])
        for name, rows in rows_by_name.items():
            for row in rows:
                w.writerow([name, row[0]] + [f"{v:.6e}" for v in row[1:]])


def _print_table(rows_by_name):
    print(f"{'controller':<10}{'iter':>5}  {'|e1|max':>10}{'|e2|max':>10}{'|e3|max':>10}"
          f"  {'|de1|':>10}{'|de2|':>10}{'|de3|':>10}")
    for name, rows in rows_by_name.items():
        for row in rows:
            print(f"{name:<10}{row[0]:>5}  " + "".join(f"{v:>10.3e}" for v in row[1:4])
                  + "  " + "".join(f"{v:>10.3e}" for v in row[4:]))


def cmd_run(cfg, out, workers):
    name = cfg["controller"]["name"]
    result, info = _experiment(cfg, name, workers)
    result.save(out / name, manifest(cfg, "run", controller=name, **info))
    rows = {name: result.metrics()}
    _write_summary(out / "summary.csv", rows)
    write_manifest(out, manifest(cfg, "run", controller=name, **info))
    _print_table(rows)
    problems = _violations(result, info, name)
    for p in problems:
        print(f"error: {name}: {p}", file=sys.stderr)
    return 1 if problems else 0


def _compare_job(args):
    cfg, name = args
    result, info = _experiment(cfg, name)
    return name, result, info


def cmd_compare(cfg, out, workers):
    names = cfg["compare"]["controllers"]
    if len(names) < 2:
        raise ConfigError("compare needs at least two controllers")
    jobs = [(cfg, n) for n in names]
    if workers > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            runs = list(pool.map(_compare_job, jobs))
    else:
        runs = [_compare_job(j) for j in jobs]
    rows, infos, problems = {}, {}, []
    for name, result, info in runs:
        result.save(out / name, manifest(cfg, "compare", controller=name, **info))
        rows[name] = result.metrics()
        infos[name] = info
        problems += [f"{name}: {p}" for p in _violations(result, info, name)]
    _write_summary(out / "comparison.csv", rows)
    write_manifest(out, manifest(cfg, "compare", runs=infos))
    _print_table(rows)
    for p in problems:
        print(f"error: {p}", file=sys.stderr)
    return 1 if problems else 0


COMMANDS = {
    "freq-map": cmd_freq_map,
    "design-shaper": cmd_design_shaper,
    "run": cmd_run,
    "compare": cmd_compare,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="delta-ilc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML experiment config")
        p.add_argument("--out", type=Path, help="output directory (overrides config 'out')")
        p.add_argument("--seed", type=int, help="random seed (overrides config 'seed')")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted config override, repeatable")
        p.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        if args.out is not None:
            overrides.append(f"out={args.out}")
        cfg = cfgmod.load(args.config, overrides)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        cfgmod.dump(cfg, out / "config.resolved.yaml")
        return COMMANDS[args.command](cfg, out, max(1, args.parallel))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DeltaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
