"""Two-half-space elastic state reconstructed from the slip-plane trace.

Given the shear trace u1 on the slip plane y = 0 (rigidity makes the
transverse component vanish and removes the z dependence), the bulk
displacement follows per x-frequency xi from closed-form multipliers in the
wall distance t = |y|:

    u1_hat(xi, y) = +-U(xi) (1 - |xi| t / (2 - 2 nu)) exp(-|xi| t)
    u2_hat(xi, y) = -(U(xi)/(2 - 2 nu)) ((1-2 nu) i sgn(xi)
                    + i xi t) exp(-|xi| t)

with the sign of u1 flipping across the plane (odd u1, even u2). Strains
use analytic y-derivatives of the multipliers, so the resulting stress is
divergence free for any trace, to round-off; equilibrium with a given
misfit potential enters only through the slip-plane condition. The
non-decaying +-1 background of the trace enters through the derivative of
the reference profile (compactly supported), with its zero-frequency
constant extended rigidly.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .energy import REFERENCE_PROFILE
from .grid import GridSpec, RealField

_KERNEL_POSITIVE_RANGE = (-0.5, 1.0 / 3.0)


@dataclass(frozen=True)
class ElasticParams:
    """Shear modulus and Poisson ratio of the isotropic half-spaces."""

    shear_modulus: float
    poisson_ratio: float

    def __post_init__(self):
        if self.shear_modulus <= 0:
            raise ValueError("shear modulus must be positive")
        nu = self.poisson_ratio
        if not (-1.0 < nu < 0.5):
            raise ValueError(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
        lo, hi = _KERNEL_POSITIVE_RANGE
        if not (lo < nu < hi):
            warnings.warn(
                f"Poisson ratio {nu} is outside ({lo}, {hi:.4f}); the reduced "
                "model loses kernel positivity there", stacklevel=2)

    @property
    def G(self):
        return self.shear_modulus

    @property
    def nu(self):
        return self.poisson_ratio

    @property
    def lame_factor(self):
        """2 nu G / (1 - 2 nu), the trace coefficient of the stress law."""
        return 2.0 * self.nu * self.G / (1.0 - 2.0 * self.nu)


def trace_spectrum(u1_plus: RealField, profile=REFERENCE_PROFILE):
    """True Fourier coefficients of the slip trace, background via eta'.

    The decaying part v = u1 - eta transforms directly; the +-1 background
    contributes eta'_hat / (i xi) at xi != 0 (the antiderivative constant is
    fixed by the far fields) and its box mean at xi = 0.
    """
    g = u1_plus.grid
    if g.d != 1:
        raise ValueError("the slip trace is one-dimensional")
    x = g.x
    xi = g.xi
    phase = np.where(np.rint(sfft.fftfreq(g.n_x) * g.n_x).astype(int) % 2 == 0,
                     1.0, -1.0)
    v = u1_plus.values - profile.eta(x)
    v_hat = g.h_x * phase * sfft.fft(v)
    etap_hat = g.h_x * phase * sfft.fft(profile.eta_prime(x))
    eta_hat = np.zeros_like(etap_hat)
    nz = xi != 0
    eta_hat[nz] = etap_hat[nz] / (1j * xi[nz])
    return v_hat + eta_hat


def _to_real(grid: GridSpec, coeffs):
    phase = np.where(np.rint(sfft.fftfreq(grid.n_x) * grid.n_x).astype(int) % 2 == 0,
                     1.0, -1.0)
    return sfft.ifft(coeffs * phase).real / grid.h_x


def _wall_multipliers(xi, t, params: ElasticParams):
    """m1, m2 and their first two wall-distance derivatives at t = |y|."""
    q = np.abs(xi)
    sgn = np.sign(xi)
    s = 1.0 / (2.0 - 2.0 * params.nu)
    two_nu = 2.0 * params.nu
    E = np.exp(-q * t)
    m1 = (1.0 - s * q * t) * E
    dm1 = -q * (1.0 + s - s * q * t) * E
    d2m1 = q * q * (1.0 + 2.0 * s - s * q * t) * E
    m2 = -1j * s * sgn * ((1.0 - two_nu) + q * t) * E
    dm2 = -1j * s * sgn * q * (two_nu - q * t) * E
    d2m2 = 1j * s * sgn * q * q * (1.0 + two_nu - q * t) * E
    return m1, dm1, d2m1, m2, dm2, d2m2


@dataclass
class DisplacementSlab:
    """Per-level displacement spectra of the reconstructed elastic state."""

    grid: GridSpec                  # 1D x-grid of the trace
    params: ElasticParams
    y_levels: tuple
    u1_hat: dict = field(default_factory=dict)   # level -> complex coeffs
    u2_hat: dict = field(default_factory=dict)
    trace_hat: np.ndarray = None
    u3_is_zero: bool = True

    def displacements(self, level):
        """Real-space (u1, u2) at a stored level."""
        return (_to_real(self.grid, self.u1_hat[level]),
                _to_real(self.grid, self.u2_hat[level]))


def extend_displacement(u1_plus: RealField, params: ElasticParams,
                        y_levels) -> DisplacementSlab:
    """Evaluate the bulk extension at the requested heights.

    Levels must be nonzero; their sign selects the half-space (u1 flips
    across the slip plane, u2 does not).
    """
    levels = tuple(float(y) for y in y_levels)
    if any(y == 0.0 for y in levels):
        raise ValueError("y = 0 is the trace itself; extension levels must "
                         "be nonzero")
    g = u1_plus.grid
    U = trace_spectrum(u1_plus)
    xi = g.xi
    slab = DisplacementSlab(grid=g, params=params, y_levels=levels,
                            trace_hat=U)
    for y in levels:
        m1, _, _, m2, _, _ = _wall_multipliers(xi, abs(y), params)
        half = 1.0 if y > 0 else -1.0
        slab.u1_hat[y] = half * U * m1
        slab.u2_hat[y] = U * m2
    return slab


def _stress_spectra(slab: DisplacementSlab, level):
    """(s11, s12, s22) spectra and their divergence rows at one level.

    Everything is evaluated at the wall distance t = |y| with the
    upper-half multipliers; s11, s22 and the first divergence row are odd
    across the slip plane, s12 and the second row even.
    """
    params = slab.params
    if abs(params.nu - 0.5) < 1e-12:
        raise ValueError("the incompressible limit nu = 1/2 is excluded")
    g = slab.grid
    xi = g.xi
    U = slab.trace_hat
    half = 1.0 if level > 0 else -1.0
    m1, dm1, d2m1, m2, dm2, d2m2 = _wall_multipliers(xi, abs(level), params)
    G = params.G
    lam = params.lame_factor
    ix = 1j * xi
    tr = ix * U * m1 + U * dm2
    s11_up = 2.0 * G * ix * U * m1 + lam * tr
    s22_up = 2.0 * G * U * dm2 + lam * tr
    s12 = G * (U * dm1 + ix * U * m2)
    ds12_up = G * (U * d2m1 + ix * U * dm2)
    ds22 = 2.0 * G * U * d2m2 + lam * (ix * U * dm1 + U * d2m2)
    div1_up = ix * s11_up + ds12_up
    div2 = ix * s12 + ds22
    return (half * s11_up, s12, half * s22_up), (half * div1_up, div2)


def stress_tensor(slab: DisplacementSlab, params: ElasticParams = None):
    """Real-space stress components per level: sigma_11, sigma_12, sigma_22."""
    params = params or slab.params
    out = {}
    for y in slab.y_levels:
        (s11, s12, s22), _ = _stress_spectra(slab, y)
        out[y] = {
            "sigma11": _to_real(slab.grid, s11),
            "sigma12": _to_real(slab.grid, s12),
            "sigma22": _to_real(slab.grid, s22),
        }
    return out


def divergence_residual(slab: DisplacementSlab, params: ElasticParams = None):
    """L2 norm of div(sigma) per level, absolute and relative to ||sigma||."""
    params = params or slab.params
    g = slab.grid
    out = {}
    for y in slab.y_levels:
        (s11, s12, s22), (div1, div2) = _stress_spectra(slab, y)
        def _norm(spec):
            return float(np.sqrt(np.sum(np.abs(spec) ** 2) / g.volume))
        res = np.sqrt(_norm(div1) ** 2 + _norm(div2) ** 2)
        scale = np.sqrt(_norm(s11) ** 2 + 2 * _norm(s12) ** 2 + _norm(s22) ** 2)
        out[y] = {"residual": res, "relative": res / scale if scale else 0.0}
    return out


def slip_stress_sigma12(u1_plus: RealField, params: ElasticParams) -> RealField:
    """Slip-plane shear stress trace via the wall multiplier.

    sigma_12(x) = -(G/((1 - nu) pi)) PV int (u1)'(s)/(x - s) ds, evaluated
    spectrally as the multiplier -(G/(1 - nu)) |xi| on the trace spectrum.
    """
    g = u1_plus.grid
    U = trace_spectrum(u1_plus)
    vals = _to_real(g, -(params.G / (1.0 - params.nu)) * np.abs(g.xi) * U)
    return RealField(g, vals)


def background_self_energy(grid: GridSpec, params: ElasticParams,
                           profile=REFERENCE_PROFILE) -> float:
    """Box self-energy of the reference transition under the reduced symbol.

    Diverges logarithmically with the box on the line; the lattice value is
    finite and reported alongside elastic energies.
    """
    xi = grid.xi
    x = grid.x
    phase = np.where(np.rint(sfft.fftfreq(grid.n_x) * grid.n_x).astype(int) % 2 == 0,
                     1.0, -1.0)
    etap_hat = grid.h_x * phase * sfft.fft(profile.eta_prime(x))
    eta_hat = np.zeros_like(etap_hat)
    nz = xi != 0
    eta_hat[nz] = etap_hat[nz] / (1j * xi[nz])
    sig = np.abs(xi) / (1.0 - params.nu)
    return float(np.sum(sig * np.abs(eta_hat) ** 2).real / grid.volume)


def elastic_energy(u1_plus: RealField, params: ElasticParams,
                   profile=REFERENCE_PROFILE) -> float:
    """Slip-plane expression <L u1, u1> of the bulk elastic energy.

    Uses the reduced 1D symbol c_L |xi| and the usual eta regularization:
    <v, Lv> + 2 c_L <v, Lam eta> plus the box self-energy of eta. The pure
    background returns that self-energy constant, not zero.
    """
    g = u1_plus.grid
    x = g.x
    xi = g.xi
    v = u1_plus.values - profile.eta(x)
    sig = np.abs(xi) / (1.0 - params.nu)
    v_spec = sfft.fft(v)
    quad = float(np.sum(sig * np.abs(v_spec) ** 2) * g.h_x / g.n_x)
    from .energy import hilbert_multiplier_1d
    leta = hilbert_multiplier_1d(profile.eta_prime(x), g.n_x, g.h_x) \
        / (1.0 - params.nu)
    cross = 2.0 * g.inner(v, leta)
    return quad + cross + background_self_energy(g, params, profile)


def write_slab_csv(slab: DisplacementSlab, level, path):
    """Per-level CSV: x, u1, u2, sigma11, sigma12, sigma22 (17 digits)."""
    g = slab.grid
    u1, u2 = slab.displacements(level)
    stresses = stress_tensor(slab)[level]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u1", "u2", "sigma11", "sigma12", "sigma22"])
        for i, xv in enumerate(g.x):
            w.writerow([f"{val:.17g}" for val in (
                xv, u1[i], u2[i], stresses["sigma11"][i],
                stresses["sigma12"][i], stresses["sigma22"][i])])


def slab_summary_json(slab: DisplacementSlab, **extra):
    """JSON summary with per-level divergence residuals."""
    resid = divergence_residual(slab)
    d = {
        "poisson_ratio": slab.params.nu,
        "shear_modulus": slab.params.G,
        "y_levels": list(slab.y_levels),
        "divergence_residuals": {str(y): r for y, r in resid.items()},
        "u3_is_zero": slab.u3_is_zero,
    }
    d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True)
