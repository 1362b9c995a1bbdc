"""Command-line front end.

One JSON config document drives every command; flags override the common
scalar entries. Reports embed the fully resolved config so a run can be
reproduced from its own artifact. Exit codes: 0 success, 1 assertion
failure, 2 config error. Nothing is written when validation fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .elasticity import (
    ElasticParams,
    divergence_residual,
    extend_displacement,
    slab_summary_json,
    slip_stress_sigma12,
    write_slab_csv,
)
from .energy import (
    EnergyContext,
    REFERENCE_PROFILE,
    eval_energy,
    eval_gradient,
    make_potential,
    rearrange_pair,
    translate,
)
from .grid import RealField, build_grid
from .kernel import positivity_scan, write_scan_csv
from .minimize import (
    MinimizeConfig,
    align_translation,
    minimize_energy,
    random_perturbation,
    solve_solitary,
    write_profile_csv,
)
from .spectrum import build_linearized, kernel_simplicity_check, lowest_eigenpairs
from .symbols import half_laplacian, pn_reduced

COMMANDS = ("solve", "verify-analytic", "spectrum", "kernel-scan",
            "reconstruct", "rearrange-test", "solitary")

DEFAULT_CONFIG = {
    "grid": {"d": 1, "half_length": 200.0, "n_x": 8192, "n_y": []},
    "model": {
        "poisson_ratio": 0.0,
        "shear_modulus": 1.0,
        "potential": "cosine",
        "potential_coefficients": None,
        "symbol": "pn_reduced",
    },
    "minimize": {
        "max_iterations": 5000,
        "tol_residual": 1e-8,
        "precond_shift": 1.0,
        "step": 1.0,
        "clip_each_step": True,
        "interval": None,
    },
    "spectrum": {"k": 6, "tol_zero": None},
    "kernel_scan": {
        "nu_list": [-0.4, 0.0, 0.3, 0.34, 0.45],
        "half_length": 8.0,
        "n_x": 8192,
        "n_y": [512],
    },
    "reconstruct": {"y_levels": [0.5, -0.5, 1.0, -1.0]},
    "rearrange": {"trials": 1000, "grid_n_x": 256, "half_length": 16.0},
    "solitary": {"half_length": 6000.0, "n_x": 65536},
    "output": {"directory": "pnlayer_out", "prefix": "run"},
    "seed": 0,
    "threads": 1,
}


class ConfigError(Exception):
    pass


def _merge(base, override, path=""):
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides=None):
    cfg = DEFAULT_CONFIG
    if path is not None:
        with open(path) as fh:
            cfg = _merge(cfg, json.load(fh))
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        cfg = _merge(cfg, {section: {name: value}} if name else {key: value})
    return cfg


def _build_context(cfg):
    g = cfg["grid"]
    grid = build_grid(g["d"], g["half_length"], g["n_x"], g["n_y"])
    grid = type(grid)(d=grid.d, half_length=grid.half_length, n_x=grid.n_x,
                      n_y=grid.n_y, fft_workers=int(cfg["threads"]))
    m = cfg["model"]
    if m["symbol"] == "half_laplacian":
        symbol = half_laplacian(grid.d)
    elif m["symbol"] == "pn_reduced":
        symbol = pn_reduced(m["poisson_ratio"], d=min(grid.d, 2)) \
            if grid.d <= 2 else half_laplacian(grid.d)
        if grid.d == 3:
            raise ConfigError("the reduced symbol supports d <= 2; "
                              "use half_laplacian for d = 3")
    else:
        raise ConfigError(f"unknown symbol {m['symbol']!r}")
    potential = make_potential(m["potential"], m["potential_coefficients"])
    return EnergyContext(grid=grid, symbol=symbol, potential=potential,
                         shear_modulus=m["shear_modulus"])


def _minimize_config(cfg):
    mc = cfg["minimize"]
    interval = mc["interval"]
    return MinimizeConfig(
        max_iterations=int(mc["max_iterations"]),
        tol_residual=float(mc["tol_residual"]),
        precond_shift=float(mc["precond_shift"]),
        step=float(mc["step"]),
        clip_each_step=bool(mc["clip_each_step"]),
        interval=tuple(interval) if interval else None,
        seed=int(cfg["seed"]),
    )


def _out_paths(cfg, command):
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg['output']['prefix']}_{command.replace('-', '_')}"
    return out / f"{stem}.json", out / f"{stem}.csv"


def _report_extras(cfg):
    return {
        "config": cfg,
        "version": __version__,
        "deterministic": int(cfg["threads"]) == 1,
    }


# -- commands --------------------------------------------------------------


def _cmd_solve(cfg):
    ctx = _build_context(cfg)
    u, report = minimize_energy(ctx, _minimize_config(cfg))
    aligned, offset = align_translation(u)
    report.translation_offset = offset
    json_path, csv_path = _out_paths(cfg, "solve")
    write_profile_csv(aligned, csv_path)
    json_path.write_text(report.to_json(**_report_extras(cfg)) + "\n")
    print(f"solve: residual {report.residual:.3e} energy {report.energy:.12g} "
          f"-> {json_path}")
    return 0 if report.converged else 1


def _cmd_verify_analytic(cfg):
    ctx = _build_context(cfg)
    nu = cfg["model"]["poisson_ratio"]
    G = cfg["model"]["shear_modulus"]
    u, report = minimize_energy(ctx, _minimize_config(cfg))
    aligned, offset = align_translation(u)
    x = ctx.grid.x
    shape1d = (ctx.grid.n_x,) + (1,) * (ctx.grid.d - 1)
    layer = np.broadcast_to(
        (2.0 / np.pi) * np.arctan((1.0 - nu) * x / (2.0 * G)).reshape(shape1d),
        ctx.grid.shape)
    diff = np.abs(aligned.values - layer)
    X = ctx.grid.half_length
    absx = np.broadcast_to(np.abs(x).reshape(shape1d), ctx.grid.shape)
    sup_core = float(np.max(diff[absx <= X / 10]))
    sup_half = float(np.max(diff[absx <= X / 2]))
    sup_full = float(np.max(diff))
    clipped = RealField(ctx.grid, np.clip(layer, -1.0, 1.0).copy())
    g_ana = eval_gradient(clipped, ctx).values
    ana_sup = float(np.max(np.abs(g_ana[absx <= X / 2])))
    ok = sup_core <= 1e-3 and report.converged
    payload = {
        "sup_distance": sup_core,
        "comparison_window_halfwidth": X / 10,
        "sup_distance_half_box": sup_half,
        "sup_distance_full_box": sup_full,
        "residual": report.residual,
        "analytic_gradient_sup_interior": ana_sup,
        "translation_offset": offset,
        "truncation_error": report.truncation_error,
        "passed": ok,
    }
    payload.update(_report_extras(cfg))
    json_path, _ = _out_paths(cfg, "verify-analytic")
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"verify-analytic: sup distance {sup_core:.3e} on |x| <= X/10, "
          f"residual {report.residual:.3e} -> {json_path}")
    return 0 if ok else 1


def _cmd_spectrum(cfg):
    ctx = _build_context(cfg)
    u, report = minimize_energy(ctx, _minimize_config(cfg))
    op = build_linearized(ctx, u, converged=report.converged)
    spec = lowest_eigenpairs(op, k=int(cfg["spectrum"]["k"]))
    simple, diag = kernel_simplicity_check(spec, cfg["spectrum"]["tol_zero"])
    json_path, _ = _out_paths(cfg, "spectrum")
    json_path.write_text(
        spec.to_json(simple_zero_eigenvalue=simple,
                     simplicity_diagnostics=diag,
                     **_report_extras(cfg)) + "\n")
    print(f"spectrum: lambda0 {spec.eigenvalues[0]:.3e} "
          f"overlap {spec.translation_overlap:.6f} -> {json_path}")
    return 0 if simple and report.converged else 1


def _cmd_kernel_scan(cfg):
    ks = cfg["kernel_scan"]
    grid = build_grid(2, ks["half_length"], ks["n_x"], ks["n_y"])
    rows = positivity_scan(ks["nu_list"], grid)
    json_path, csv_path = _out_paths(cfg, "kernel-scan")
    write_scan_csv(rows, csv_path)
    payload = {"rows": rows}
    payload.update(_report_extras(cfg))
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"kernel-scan: nu={r['nu']:+.3f} {r['verdict']:8s} "
              f"min={r['min_interior_value']:.3e} "
              f"exponent={r['fitted_exponent']:.3f}")
    return 0


def _cmd_reconstruct(cfg):
    ctx = _build_context(cfg)
    if ctx.grid.d != 1:
        raise ConfigError("reconstruction expects the 1D slip-plane trace")
    u, report = minimize_energy(ctx, _minimize_config(cfg))
    params = ElasticParams(cfg["model"]["shear_modulus"],
                           cfg["model"]["poisson_ratio"])
    levels = cfg["reconstruct"]["y_levels"]
    slab = extend_displacement(u, params, levels)
    json_path, csv_path = _out_paths(cfg, "reconstruct")
    for y in slab.y_levels:
        level_path = csv_path.with_name(
            csv_path.stem + f"_y{str(y).replace('-', 'm')}.csv")
        write_slab_csv(slab, y, level_path)
    sigma12 = slip_stress_sigma12(u, params)
    bc = 2.0 * sigma12.values - ctx.potential.dgamma(u.values)
    json_path.write_text(slab_summary_json(
        slab,
        slip_boundary_residual_sup=float(np.max(np.abs(bc))),
        solve_residual=report.residual,
        **_report_extras(cfg)) + "\n")
    resid = divergence_residual(slab)
    worst = max(r["relative"] for r in resid.values())
    print(f"reconstruct: worst relative divergence {worst:.3e} -> {json_path}")
    return 0 if report.converged else 1


def _cmd_rearrange_test(cfg):
    rc = cfg["rearrange"]
    grid = build_grid(1, rc["half_length"], rc["grid_n_x"], [])
    ctx = EnergyContext(
        grid=grid,
        symbol=pn_reduced(cfg["model"]["poisson_ratio"], d=1),
        potential=make_potential(cfg["model"]["potential"],
                                 cfg["model"]["potential_coefficients"]),
        shear_modulus=cfg["model"]["shear_modulus"])
    rng = np.random.default_rng(cfg["seed"])
    trials = int(rc["trials"])
    worst_slack = np.inf
    violations = 0
    for _ in range(trials):
        a = _smooth_sample(ctx, rng)
        b = _smooth_sample(ctx, rng)
        m, M = rearrange_pair(a, b)
        slack = (eval_energy(a, ctx) + eval_energy(b, ctx)
                 - eval_energy(m, ctx) - eval_energy(M, ctx))
        worst_slack = min(worst_slack, slack)
        if slack < -1e-10:
            violations += 1
    shift = float(rng.uniform(-grid.half_length / 8, grid.half_length / 8))
    u = ctx.profile_field()
    trans_err = abs(eval_energy(translate(u, shift), ctx) - eval_energy(u, ctx))
    trans_rel = trans_err / max(abs(eval_energy(u, ctx)), 1e-30)
    payload = {
        "trials": trials,
        "violations": violations,
        "worst_slack": float(worst_slack),
        "translation_shift": shift,
        "translation_energy_error_rel": float(trans_rel),
    }
    payload.update(_report_extras(cfg))
    json_path, _ = _out_paths(cfg, "rearrange-test")
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"rearrange-test: {trials} trials, {violations} violations, "
          f"worst slack {worst_slack:.3e} -> {json_path}")
    return 0 if violations == 0 else 1


def _smooth_sample(ctx, rng):
    g = ctx.grid
    x = g.x
    vals = np.zeros(g.shape)
    for m in range(1, 6):
        vals += (rng.uniform(-1, 1) / m) * np.cos(
            m * np.pi * x / g.half_length + 2 * np.pi * rng.random())
    vals *= np.exp(-(x / (g.half_length / 3)) ** 2)
    peak = np.max(np.abs(vals)) or 1.0
    return RealField(g, ctx.eta_values + 0.4 * vals / peak)


def _cmd_solitary(cfg):
    sc = cfg["solitary"]
    grid = build_grid(1, sc["half_length"], sc["n_x"], [])
    ctx = EnergyContext(grid=grid, symbol=half_laplacian(1),
                        potential=make_potential("benjamin_ono_cubic"),
                        shear_modulus=cfg["model"]["shear_modulus"])
    u, report = solve_solitary(ctx, _minimize_config(cfg))
    json_path, csv_path = _out_paths(cfg, "solitary")
    write_profile_csv(u, csv_path)
    json_path.write_text(report.to_json(**_report_extras(cfg)) + "\n")
    print(f"solitary: residual {report.residual:.3e} peak "
          f"{float(np.max(u.values)):.6f} -> {json_path}")
    return 0 if report.converged else 1


_DISPATCH = {
    "solve": _cmd_solve,
    "verify-analytic": _cmd_verify_analytic,
    "spectrum": _cmd_spectrum,
    "kernel-scan": _cmd_kernel_scan,
    "reconstruct": _cmd_reconstruct,
    "rearrange-test": _cmd_rearrange_test,
    "solitary": _cmd_solitary,
}


def _parser():
    p = argparse.ArgumentParser(
        prog="pnlayer",
        description="Nonlocal dislocation layer profiles on the truncated "
                    "cylinder: solve, certify, analyze, reconstruct.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config document")
    p.add_argument("--d", type=int, dest="grid.d")
    p.add_argument("--half-length", "-X", type=float, dest="grid.half_length")
    p.add_argument("--n-x", type=int, dest="grid.n_x")
    p.add_argument("--n-y", type=int, nargs="*", dest="grid.n_y")
    p.add_argument("--nu", type=float, dest="model.poisson_ratio")
    p.add_argument("--shear-modulus", "-G", type=float,
                   dest="model.shear_modulus")
    p.add_argument("--potential", dest="model.potential")
    p.add_argument("--symbol", dest="model.symbol")
    p.add_argument("--tol", type=float, dest="minimize.tol_residual")
    p.add_argument("--max-iterations", type=int, dest="minimize.max_iterations")
    p.add_argument("--k", type=int, dest="spectrum.k")
    p.add_argument("--out", dest="output.directory")
    p.add_argument("--prefix", dest="output.prefix")
    p.add_argument("--seed", type=int, dest="seed")
    p.add_argument("--threads", type=int, dest="threads")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config") and v is not None}
    try:
        cfg = load_config(args.config, overrides)
        cfg = _validate_against_command(args.command, cfg)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 1


def _validate_against_command(command, cfg):
    g = cfg["grid"]
    build_grid(g["d"], g["half_length"], g["n_x"], g["n_y"])  # raises early
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


if __name__ == "__main__":
    sys.exit(main())
