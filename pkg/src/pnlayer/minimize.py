"""Energy minimization on the truncated cylinder.

Sobolev-preconditioned descent: steps are scaled by (sigma(nu) + mu)^{-1}
in frequency space, since plain L2 descent is intolerably stiff for an
order-1 operator. Values are clipped into [-1, 1] each step (the cut-off
projection never increases the energy) and, in interval mode, reset to the
reference profile outside (a, b). Stopping is residual based so converged
reports certify the discrete Euler-Lagrange equation directly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy import fft as sfft
from scipy.optimize import brentq

from .energy import (
    BENJAMIN_ONO_CUBIC,
    REFERENCE_PROFILE,
    EnergyContext,
    eval_energy,
    eval_gradient,
    translate,
)
from .grid import RealField, spectral_x_derivative


@dataclass
class MinimizeConfig:
    max_iterations: int = 5000
    tol_residual: float = 1e-8
    precond_shift: float = 1.0
    step: float = 1.0
    clip_each_step: bool = True
    interval: tuple = None          # (a, b) with a < -1 < 1 < b, or None
    seed: int = 0

    def __post_init__(self):
        if self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if self.precond_shift <= 0:
            raise ValueError("preconditioner shift must be positive")
        if self.interval is not None:
            a, b = self.interval
            if not (a < -1.0 < 1.0 < b):
                raise ValueError("interval must satisfy a < -1 < 1 < b")


@dataclass
class SolveReport:
    iterations: int
    residual: float
    energy: float
    monotonicity_margin: float
    transverse_variation: float
    translation_offset: float
    truncation_error: float
    converged: bool
    profile_converged: bool = True    # warning flag carried into spectra
    notes: str = ""

    def to_json(self, **extra):
        d = asdict(self)
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def _interval_mask(ctx: EnergyContext, interval):
    a, b = interval
    x = ctx.grid.x
    inside = (x > a) & (x < b)
    return inside.reshape((ctx.grid.n_x,) + (1,) * (ctx.grid.d - 1))


def x_derivative_with_profile(u: RealField, ctx: EnergyContext) -> RealField:
    """d/dx of u = eta + v: analytic eta' plus the spectral derivative of v."""
    v = RealField(ctx.grid, ctx.perturbation(u))
    dv = spectral_x_derivative(v)
    return RealField(ctx.grid, dv.values + ctx.eta_prime_values)


def monotonicity_check(u: RealField, ctx: EnergyContext) -> float:
    """min over the grid of the x-derivative; > 0 for accepted minimizers."""
    return float(np.min(x_derivative_with_profile(u, ctx).values))


def symmetry_check(u: RealField) -> float:
    """max over x of the transverse range of u; needs d >= 2."""
    if u.grid.d < 2:
        raise ValueError("transverse symmetry check needs d >= 2")
    axes = tuple(range(1, u.grid.d))
    ranges = u.values.max(axis=axes) - u.values.min(axis=axes)
    return float(np.max(ranges))


def _truncation_error(u: RealField):
    left = np.abs(u.values[0] + 1.0)
    right = np.abs(u.values[-1] - 1.0)
    return float(max(np.max(left), np.max(right)))


def minimize_energy(ctx: EnergyContext, cfg: MinimizeConfig = None,
                    u0: RealField = None):
    """Descend F to a residual below cfg.tol_residual.

    Returns (minimizer, SolveReport). Non-convergence within the iteration
    budget is reported through the ``converged`` flag, not an exception;
    NaNs raise.
    """
    cfg = cfg or MinimizeConfig()
    g = ctx.grid
    if u0 is None:
        u0 = ctx.profile_field()
    if u0.grid.shape != g.shape:
        raise ValueError("initial field lives on a different grid")
    mask = _interval_mask(ctx, cfg.interval) if cfg.interval else None
    v = ctx.perturbation(u0).copy()
    if mask is not None:
        outside_defect = np.max(np.abs(np.where(mask, 0.0, v)))
        if outside_defect > 1e-12:
            raise ValueError("interval mode needs u0 = eta outside (a, b)")
        v = np.where(mask, v, 0.0)

    shape1d = (g.n_x,) + (1,) * (g.d - 1)
    precond = 1.0 / (ctx.sigma + cfg.precond_shift)

    def project(vv):
        u_vals = ctx.eta_values + vv
        if cfg.clip_each_step:
            u_vals = np.clip(u_vals, -1.0, 1.0)
        vv = u_vals - ctx.eta_values
        if mask is not None:
            vv = np.where(mask, vv, 0.0)
        return vv

    def residual_norm(grad_vals):
        gv = grad_vals if mask is None else np.where(mask, grad_vals, 0.0)
        return g.l2_norm(gv)

    energy = eval_energy(RealField(g, ctx.eta_values + v), ctx)
    res = np.inf
    it = 0
    converged = False
    for it in range(1, cfg.max_iterations + 1):
        grad = eval_gradient(RealField(g, ctx.eta_values + v), ctx).values
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("gradient produced non-finite values")
        res = residual_norm(grad)
        if res <= cfg.tol_residual:
            converged = True
            break
        gstep = grad if mask is None else np.where(mask, grad, 0.0)
        direction = sfft.ifftn(precond * sfft.fftn(gstep, workers=g.fft_workers),
                               workers=g.fft_workers).real
        step = cfg.step
        for _ in range(30):
            v_trial = project(v - step * direction)
            e_trial = eval_energy(RealField(g, ctx.eta_values + v_trial), ctx)
            if e_trial <= energy + 1e-12 * max(1.0, abs(energy)):
                break
            step *= 0.5
        else:
            raise RuntimeError("descent step failed to decrease the energy")
        v, energy = v_trial, e_trial

    u = RealField(g, ctx.eta_values + v)
    report = SolveReport(
        iterations=it,
        residual=float(res),
        energy=float(energy),
        monotonicity_margin=monotonicity_check(u, ctx),
        transverse_variation=symmetry_check(u) if g.d >= 2 else 0.0,
        translation_offset=0.0,
        truncation_error=_truncation_error(u),
        converged=converged,
        profile_converged=converged,
        notes="" if converged else
        f"residual {res:.3e} above tol {cfg.tol_residual:.1e} "
        f"after {it} iterations",
    )
    return u, report


def _transverse_average(u: RealField):
    if u.grid.d == 1:
        return u.values.copy()
    return u.values.mean(axis=tuple(range(1, u.grid.d)))


def align_translation(u: RealField, profile=REFERENCE_PROFILE):
    """Translate so the transverse-averaged profile crosses zero at x = 0.

    Returns (aligned field, offset); the offset is the displacement applied
    to the profile position (a layer centered at x0 reports -x0).
    """
    g = u.grid
    ubar = _transverse_average(u)
    sign_change = np.nonzero(np.diff(np.sign(ubar)) > 0)[0]
    if sign_change.size == 0:
        raise ValueError("not a transition profile: no upward zero crossing")
    # bracket around the crossing nearest the box center
    x = g.x
    i = sign_change[np.argmin(np.abs(x[sign_change]))]
    vbar = ubar - profile.eta(x)
    spec = sfft.fft(vbar)
    xi = 2.0 * np.pi * sfft.fftfreq(g.n_x, d=g.h_x)
    n = g.n_x

    def interp(x0):
        phases = np.exp(1j * xi * (x0 + g.half_length))
        return float(np.real(spec @ phases) / n) + float(profile.eta(x0))

    left, right = x[i], x[i] + g.h_x
    c = brentq(interp, left, right, xtol=1e-14)
    aligned = translate(u, c, profile=profile) if c != 0.0 else u.copy()
    return aligned, -float(c)


def solve_solitary(ctx: EnergyContext, cfg: MinimizeConfig = None,
                   u0: RealField = None):
    """Petviashvili fixed point for the solitary transverse component.

    Solves (2G Lam + 1) u = u^2 on the line grid (the traveling-wave form
    of the cubic-nonlinearity equation at Poisson ratio zero). Converges to
    the positive even profile A*delta/(x^2 + delta^2) with delta = 2G,
    A = 4G up to box truncation.
    """
    cfg = cfg or MinimizeConfig()
    g = ctx.grid
    if g.d != 1:
        raise ValueError("the solitary solve runs on the 1D line grid")
    if ctx.potential.kind != BENJAMIN_ONO_CUBIC:
        raise ValueError("the solitary solve needs the cubic nonlinearity")
    if abs(ctx.c_l - 1.0) > 1e-12:
        raise ValueError("the solitary solve needs a Poisson-ratio-zero context")
    G = ctx.G
    x = g.x
    lam = np.abs(g.xi)
    lin = 2.0 * G * lam + 1.0
    if u0 is None:
        u = 4.0 * G * np.exp(-(x * x) / (8.0 * G * G))
    else:
        u = u0.values.copy()

    def residual(uu):
        r = 2.0 * G * sfft.ifft(lam * sfft.fft(uu)).real + ctx.potential.dgamma(uu)
        return g.l2_norm(r)

    res = np.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        if np.max(np.abs(u)) < 1e-8:
            raise RuntimeError("trivial fixed point; adjust initial amplitude")
        nonlin = u * u
        lin_u = sfft.ifft(lin * sfft.fft(u)).real
        factor = (g.inner(u, lin_u) / g.inner(u, nonlin)) ** 2
        u_next = factor * sfft.ifft(sfft.fft(nonlin) / lin).real
        delta = np.max(np.abs(u_next - u))
        u = u_next
        if delta < 1e-14 * max(1.0, np.max(np.abs(u))):
            break
    res = residual(u)
    field = RealField(g, u)
    energy = G * g.inner(u, sfft.ifft(lam * sfft.fft(u)).real) \
        + float(np.sum(ctx.potential.gamma(u))) * g.cell_volume
    report = SolveReport(
        iterations=it,
        residual=float(res),
        energy=float(energy),
        monotonicity_margin=float(np.min(spectral_x_derivative(field).values)),
        transverse_variation=0.0,
        translation_offset=0.0,
        truncation_error=float(max(abs(u[0]), abs(u[-1]))),
        converged=bool(res <= cfg.tol_residual),
    )
    return field, report


def random_perturbation(ctx: EnergyContext, seed, amplitude=0.1, modes=6):
    """Smooth seeded perturbation localized at the core, for restart trials."""
    g = ctx.grid
    rng = np.random.default_rng(seed)
    x = g.x
    envelope = np.exp(-(x * x) / 25.0).reshape((g.n_x,) + (1,) * (g.d - 1))
    bump = np.zeros(g.shape)
    for m in range(1, modes + 1):
        coeff = rng.standard_normal() / m
        wave = np.cos(m * np.pi * x / g.half_length
                      + 2.0 * np.pi * rng.random()).reshape(envelope.shape)
        bump = bump + coeff * wave
    for a in range(g.d - 1):
        y = g.y(a).reshape((1,) * (a + 1) + (g.n_y[a],) + (1,) * (g.d - 2 - a))
        bump = bump * (1.0 + 0.5 * np.cos(2.0 * np.pi * y + rng.random()))
    bump *= envelope
    peak = np.max(np.abs(bump))
    if peak > 0:
        bump *= amplitude / peak
    return RealField(g, ctx.eta_values + bump)


def write_profile_csv(u: RealField, path):
    """Profile CSV: x, then one column per transverse line, 17 digits."""
    g = u.grid
    vals = u.values.reshape(g.n_x, -1)
    header = ["x"]
    if g.d == 1:
        header.append("u")
    else:
        lines = np.indices(g.shape[1:]).reshape(g.d - 1, -1).T
        for idx in lines:
            label = ",".join(f"{g.y(a)[j]:.6g}" for a, j in enumerate(idx))
            header.append(f"u[y={label}]")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, xv in enumerate(g.x):
            w.writerow([f"{xv:.17g}"] + [f"{val:.17g}" for val in vals[i]])
