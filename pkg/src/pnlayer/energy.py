"""Misfit potentials, the reference transition profile, and the energy.

The energy of a candidate u = eta + v (eta the fixed transition profile, v
periodic on the box) is

    F(u) = 1/2 <v, L v> + c_L <v, Lam eta> + 1/(2G) int gamma(u),

whose first variation is the slip-plane equation L u + gamma'(u)/(2G) = 0.
All operator applications, including the profile term Lam eta, go through
the discrete multipliers of the box (eta enters via its compactly supported
derivative and the Hilbert multiplier -i sgn(xi)), so the discrete energy
inherits the translation structure of the continuum one to aliasing
accuracy. The continuum line transform of eta is kept available in closed
form for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .grid import GridSpec, RealField
from .kernel import MAX_ORACLE_POINTS, extract_kernel
from .symbols import SymbolSpec, apply_multiplier, reduced_1d_constant, symbol_bounds

COSINE = "cosine"
QUARTIC = "quartic"
BENJAMIN_ONO_CUBIC = "benjamin_ono_cubic"
POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class Potential:
    """Nonlinearity gamma with derivatives, selectable by name.

    Double-well kinds satisfy gamma(+-1) = 0, gamma > 0 on (-1, 1) and
    gamma''(+-1) > 0. The cubic kind is the solitary-wave nonlinearity and
    is exempt from the well conditions.
    """

    kind: str
    coefficients: tuple = ()

    def gamma(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == COSINE:
            return (np.cos(np.pi * u) + 1.0) / np.pi**2
        if self.kind == QUARTIC:
            return (1.0 - u * u) ** 2
        if self.kind == BENJAMIN_ONO_CUBIC:
            return u * u / 2.0 - u**3 / 3.0
        return np.polynomial.polynomial.polyval(u, self.coefficients)

    def dgamma(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == COSINE:
            return -np.sin(np.pi * u) / np.pi
        if self.kind == QUARTIC:
            return 4.0 * u**3 - 4.0 * u
        if self.kind == BENJAMIN_ONO_CUBIC:
            return u - u * u
        c = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(u, c)

    def d2gamma(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == COSINE:
            return -np.cos(np.pi * u)
        if self.kind == QUARTIC:
            return 12.0 * u * u - 4.0
        if self.kind == BENJAMIN_ONO_CUBIC:
            return 1.0 - 2.0 * u
        c = np.polynomial.polynomial.polyder(self.coefficients, 2)
        return np.polynomial.polynomial.polyval(u, c)

    @property
    def is_double_well(self):
        return self.kind != BENJAMIN_ONO_CUBIC

    def well_curvatures(self):
        """(gamma''(-1), gamma''(+1)), the far-field well stiffnesses."""
        return float(self.d2gamma(-1.0)), float(self.d2gamma(1.0))


def eval_potential(p: Potential, u):
    """Consistent triple (gamma, gamma', gamma'') at u."""
    return p.gamma(u), p.dgamma(u), p.d2gamma(u)


def _validate_double_well(p: Potential):
    if abs(float(p.gamma(1.0))) > 1e-12 or abs(float(p.gamma(-1.0))) > 1e-12:
        raise ValueError("double-well potential must vanish at u = +-1")
    c_m, c_p = p.well_curvatures()
    if c_m <= 0 or c_p <= 0:
        raise ValueError("double-well potential needs gamma''(+-1) > 0")
    probe = np.linspace(-0.999, 0.999, 2001)
    if np.min(p.gamma(probe)) <= 0:
        raise ValueError("double-well potential must be positive on (-1, 1)")


def cosine_potential() -> Potential:
    """gamma(u) = (cos(pi u) + 1)/pi^2; wells at +-1 with curvature 1."""
    return Potential(kind=COSINE)


def quartic_potential() -> Potential:
    """gamma(u) = (1 - u^2)^2; wells at +-1 with curvature 8."""
    return Potential(kind=QUARTIC)


def benjamin_ono_cubic() -> Potential:
    """gamma(u) = u^2/2 - u^3/3, the solitary-wave nonlinearity."""
    return Potential(kind=BENJAMIN_ONO_CUBIC)


def polynomial_double_well(coefficients) -> Potential:
    """Custom double-well from ascending polynomial coefficients."""
    p = Potential(kind=POLYNOMIAL, coefficients=tuple(float(c) for c in coefficients))
    _validate_double_well(p)
    return p


def make_potential(name, coefficients=None) -> Potential:
    table = {
        COSINE: cosine_potential,
        QUARTIC: quartic_potential,
        BENJAMIN_ONO_CUBIC: benjamin_ono_cubic,
    }
    if name in table:
        return table[name]()
    if name == POLYNOMIAL:
        return polynomial_double_well(coefficients or ())
    raise ValueError(f"unknown potential {name!r}")


class ReferenceProfile:
    """The fixed 1D transition: quintic smoothstep, +-1 outside [-1, 1].

    eta(x) = x (15 - 10 x^2 + 3 x^4) / 8 on [-1, 1]; odd, monotone, C^2.
    The half-Laplacian trace on the line, (1/pi) PV int eta'(s)/(x-s) ds,
    has the closed form implemented by :meth:`half_laplacian_line` (eta' is
    a polynomial bump, so the principal value integrates exactly).
    """

    transition_halfwidth = 1.0

    def eta(self, x):
        x = np.asarray(x, dtype=float)
        core = x * (15.0 - 10.0 * x * x + 3.0 * x**4) / 8.0
        return np.where(x >= 1.0, 1.0, np.where(x <= -1.0, -1.0, core))

    def eta_prime(self, x):
        x = np.asarray(x, dtype=float)
        core = 15.0 * (1.0 - x * x) ** 2 / 8.0
        return np.where(np.abs(x) < 1.0, core, 0.0)

    def half_laplacian_line(self, x):
        """Closed-form Hilbert transform of eta' on the real line."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.log(np.abs((x + 1.0) / (x - 1.0)))
            val = (1.0 - x * x) ** 2 * log_term
        # the quartic zero kills the log singularity; patch the 0*inf cells
        val = np.where(np.isclose(ax, 1.0, atol=1e-12), 0.0, val)
        val = val + (10.0 / 3.0) * x - 2.0 * x**3
        return 15.0 / (8.0 * np.pi) * val


REFERENCE_PROFILE = ReferenceProfile()


def hilbert_multiplier_1d(values, n_x, h_x, workers=1):
    """Discrete Hilbert transform along x: multiplier -i sgn(xi)."""
    xi = 2.0 * np.pi * sfft.fftfreq(n_x, d=h_x)
    spec = sfft.fft(values, workers=workers)
    return sfft.ifft(-1j * np.sign(xi) * spec, workers=workers).real


@dataclass
class EnergyContext:
    """Grid, symbol, potential and profile bundled with cached tables."""

    grid: GridSpec
    symbol: SymbolSpec
    potential: Potential
    profile: ReferenceProfile = field(default_factory=lambda: REFERENCE_PROFILE)
    shear_modulus: float = 1.0

    def __post_init__(self):
        if self.shear_modulus <= 0:
            raise ValueError("shear modulus must be positive")
        c, C = symbol_bounds(self.symbol, self.grid)
        self.symbol_bounds = (c, C)
        self.c_l = reduced_1d_constant(self.symbol, self.grid)
        self.sigma = self.symbol.on_lattice(self.grid)
        x = self.grid.x
        shape1d = (self.grid.n_x,) + (1,) * (self.grid.d - 1)
        self.eta_values = np.broadcast_to(
            self.profile.eta(x).reshape(shape1d), self.grid.shape)
        self.eta_prime_values = np.broadcast_to(
            self.profile.eta_prime(x).reshape(shape1d), self.grid.shape)
        # profile operator image through the box multipliers: c_L * H(eta')
        leta_1d = hilbert_multiplier_1d(
            self.profile.eta_prime(x), self.grid.n_x, self.grid.h_x,
            workers=self.grid.fft_workers)
        self.cross_field = np.broadcast_to(
            (self.c_l * leta_1d).reshape(shape1d), self.grid.shape)

    @property
    def G(self):
        return self.shear_modulus

    def apply_symbol(self, values):
        return apply_multiplier(values, self.sigma, workers=self.grid.fft_workers)

    def perturbation(self, u: RealField):
        return u.values - self.eta_values

    def profile_field(self) -> RealField:
        return RealField(self.grid, self.eta_values.copy())


def eval_energy(u: RealField, ctx: EnergyContext) -> float:
    """F(u) = 1/2 <v, Lv> + c_L <v, Lam eta> + 1/(2G) int gamma(u)."""
    g = ctx.grid
    v = ctx.perturbation(u)
    quad = 0.5 * g.inner(v, ctx.apply_symbol(v))
    cross = g.inner(v, ctx.cross_field)
    pot = float(np.sum(ctx.potential.gamma(u.values))) * g.cell_volume
    total = quad + cross + pot / (2.0 * ctx.G)
    if not np.isfinite(total):
        raise ValueError("energy evaluated to a non-finite value")
    return total


def eval_gradient(u: RealField, ctx: EnergyContext) -> RealField:
    """L2 gradient: L v + c_L Lam eta + gamma'(u)/(2G)."""
    v = ctx.perturbation(u)
    vals = ctx.apply_symbol(v) + ctx.cross_field \
        + ctx.potential.dgamma(u.values) / (2.0 * ctx.G)
    return RealField(ctx.grid, vals)


def eval_energy_bruteforce(u: RealField, ctx: EnergyContext) -> float:
    """Energy with the quadratic term as a direct O(N^2) double sum.

    Evaluates 1/4 sum_{w,w'} (v(w) - v(w'))^2 K(w - w') over the extracted
    raw kernel; the profile cross term and the potential are shared with
    :func:`eval_energy`. Refuses grids above 8192 points.
    """
    g = ctx.grid
    if g.size > MAX_ORACLE_POINTS:
        raise ValueError(
            f"brute-force energy limited to {MAX_ORACLE_POINTS} points, "
            f"grid has {g.size}")
    v = ctx.perturbation(u)
    K = -extract_kernel(ctx.symbol, g).values
    idx_axes = [np.arange(s) for s in g.shape]
    quad = 0.0
    for flat in range(g.size):
        w = np.unravel_index(flat, g.shape)
        shifted = K[np.ix_(*[(i - wi) % s for i, wi, s in
                             zip(idx_axes, w, g.shape)])]
        diff = v[w] - v
        quad += float(np.sum(diff * diff * shifted))
    quad *= 0.25 * g.cell_volume**2
    cross = g.inner(v, ctx.cross_field)
    pot = float(np.sum(ctx.potential.gamma(u.values))) * g.cell_volume
    return quad + cross + pot / (2.0 * ctx.G)


def rearrange_pair(u: RealField, v: RealField):
    """(pointwise min, pointwise max); never increases F(u) + F(v)."""
    if u.grid.shape != v.grid.shape:
        raise ValueError("rearrangement needs fields on the same grid")
    m = RealField(u.grid, np.minimum(u.values, v.values))
    M = RealField(u.grid, np.maximum(u.values, v.values))
    return m, M


def clip_to_wells(u: RealField) -> RealField:
    """Cut off to [-1, 1]; energy never increases under this projection."""
    return RealField(u.grid, np.clip(u.values, -1.0, 1.0))


def translate(u: RealField, c, profile: ReferenceProfile = REFERENCE_PROFILE) -> RealField:
    """u(. + c, .): spectral phase shift of v, analytic shift of eta.

    The shift must satisfy |c| <= X/4 to keep the transition interior.
    """
    g = u.grid
    if abs(c) > g.half_length / 4:
        raise ValueError(f"shift {c} exceeds X/4 = {g.half_length / 4}")
    shape1d = (g.n_x,) + (1,) * (g.d - 1)
    eta = np.broadcast_to(profile.eta(g.x).reshape(shape1d), g.shape)
    v = u.values - eta
    phase = np.exp(1j * g.xi * c).reshape(shape1d)
    v_shift = sfft.ifftn(phase * sfft.fftn(v, workers=g.fft_workers),
                         workers=g.fft_workers).real
    eta_shift = np.broadcast_to(profile.eta(g.x + c).reshape(shape1d), g.shape)
    return RealField(g, np.ascontiguousarray(v_shift + eta_shift))
