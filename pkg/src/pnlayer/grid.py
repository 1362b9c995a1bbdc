"""Truncated-cylinder grids and spectral transforms.

The computational domain is a periodic box [-X, X) in the shear direction x
crossed with up to two unit tori in the transverse directions. Frequencies
live on the dual lattice: xi in (pi/X)*{-n_x/2, ..., n_x/2 - 1} along x and
k in 2*pi*{-n_y/2, ..., n_y/2 - 1} per torus axis. The transform convention
is

    F(nu) = cell_volume * sum_w f(w) exp(-i <nu, w>)

with w running over the true grid coordinates, so single-mode and constant
fields have the coefficients one would write down by hand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

logger = logging.getLogger(__name__)

_HERMITIAN_TOL = 1e-10
_IMAG_RESIDUE_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform discretization of [-X, X) x T^{d-1}.

    Attributes
    ----------
    d : int
        Spatial dimension, 1, 2 or 3 (up to two transverse torus axes).
    half_length : float
        Truncation X of the real axis; the box is [-X, X).
    n_x : int
        Grid points along x (even, >= 4).
    n_y : tuple of int
        Grid points per torus axis, length d - 1 (each even, >= 4).
    """

    d: int
    half_length: float
    n_x: int
    n_y: tuple = ()
    fft_workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if self.half_length < 4:
            raise ValueError(
                f"half_length must be >= 4 so the transition region [-1, 1] "
                f"sits well inside the box, got {self.half_length}"
            )
        if len(self.n_y) != self.d - 1:
            raise ValueError(
                f"n_y must have length d - 1 = {self.d - 1}, got {len(self.n_y)}"
            )
        for n in (self.n_x, *self.n_y):
            if n < 4 or n % 2 != 0:
                raise ValueError(f"grid counts must be even and >= 4, got {n}")

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self):
        return (self.n_x, *self.n_y)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def h_x(self):
        return 2.0 * self.half_length / self.n_x

    @property
    def h_y(self):
        return tuple(1.0 / n for n in self.n_y)

    @property
    def cell_volume(self):
        v = self.h_x
        for h in self.h_y:
            v *= h
        return v

    @property
    def volume(self):
        """Total volume of the box, 2X * 1^{d-1}."""
        return 2.0 * self.half_length

    @property
    def x(self):
        return -self.half_length + self.h_x * np.arange(self.n_x)

    def y(self, axis):
        """Coordinates of transverse axis `axis` (0-based), in [0, 1)."""
        return self.h_y[axis] * np.arange(self.n_y[axis])

    # -- dual lattice -----------------------------------------------------

    @property
    def xi(self):
        """x-frequencies (pi/X) * {-n_x/2, ..., n_x/2 - 1} in FFT order."""
        return 2.0 * np.pi * sfft.fftfreq(self.n_x, d=self.h_x)

    def k(self, axis):
        """Torus frequencies 2*pi*{-n/2, ..., n/2 - 1} of axis `axis`."""
        return 2.0 * np.pi * sfft.fftfreq(self.n_y[axis], d=self.h_y[axis])

    def frequency_grids(self):
        """Broadcast-ready frequency arrays, one per axis."""
        axes = [self.xi] + [self.k(a) for a in range(self.d - 1)]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def frequency_norm(self):
        """|nu| on the dual lattice, shape = grid shape."""
        grids = self.frequency_grids()
        return np.sqrt(sum(np.broadcast_to(g * g, self.shape) for g in grids))

    # -- inner products ---------------------------------------------------

    def inner(self, f, g):
        """Discrete L2 inner product, cell-volume weighted."""
        return float(np.sum(np.asarray(f) * np.asarray(g)) * self.cell_volume)

    def l2_norm(self, f):
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.cell_volume))

    # internal phase accounting for the x-origin at -X
    def _x_phase(self):
        idx = np.rint(sfft.fftfreq(self.n_x) * self.n_x).astype(int)
        ph = np.where(idx % 2 == 0, 1.0, -1.0)
        return ph.reshape((self.n_x,) + (1,) * (self.d - 1))


@dataclass
class RealField:
    """Real-valued field sampled on a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} != grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(x, *ys)`` on the grid."""
        coords = np.meshgrid(
            grid.x, *[grid.y(a) for a in range(grid.d - 1)], indexing="ij", sparse=True
        )
        vals = np.broadcast_to(fn(*coords), grid.shape).astype(float)
        return cls(grid, vals.copy())

    def copy(self):
        return RealField(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """Complex coefficients on the dual lattice, FFT index order."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} != grid shape "
                f"{self.grid.shape}"
            )

    def hermitian_defect(self):
        """Max |F(nu) - conj(F(-nu))| over the lattice."""
        c = self.coefficients
        rev = tuple((-np.arange(s)) % s for s in c.shape)
        mirrored = np.conj(c[np.ix_(*rev)])
        return float(np.max(np.abs(c - mirrored)))


def build_grid(d, half_length, n_x, n_y=()):
    """Validated grid for the truncated cylinder.

    Parameters
    ----------
    d : int
        Dimension (1, 2 or 3).
    half_length : float
        Truncation X >= 4 of the x axis.
    n_x : int
        Even number of x points.
    n_y : sequence of int
        Even point counts for the d - 1 torus axes.
    """
    return GridSpec(d=d, half_length=float(half_length), n_x=int(n_x),
                    n_y=tuple(int(n) for n in n_y))


def forward_transform(f: RealField) -> SpectralField:
    """Discrete Fourier coefficients of a real field.

    Returns F(nu) = cell_volume * sum_w f(w) exp(-i<nu, w>), where the phase
    convention accounts for the x origin at -X.
    """
    g = f.grid
    coeffs = sfft.fftn(f.values, workers=g.fft_workers)
    coeffs *= g.cell_volume * g._x_phase()
    return SpectralField(g, coeffs)


def inverse_transform(F: SpectralField) -> RealField:
    """Exact inverse of :func:`forward_transform`.

    Raises if the coefficients violate Hermitian symmetry beyond 1e-10
    (relative); a smaller imaginary residue is discarded with a debug log.
    """
    g = F.grid
    scale = float(np.max(np.abs(F.coefficients)))
    if scale > 0 and F.hermitian_defect() > _HERMITIAN_TOL * scale:
        raise ValueError(
            "spectral coefficients are not Hermitian-symmetric; "
            "the inverse transform would not be real"
        )
    pre = F.coefficients * g._x_phase() / g.cell_volume
    vals = sfft.ifftn(pre, workers=g.fft_workers)
    imag = float(np.max(np.abs(vals.imag)))
    if scale > 0 and imag > _IMAG_RESIDUE_TOL * scale / g.cell_volume:
        logger.debug("discarding imaginary residue %.3e from inverse transform", imag)
    return RealField(g, np.ascontiguousarray(vals.real))


def spectral_x_derivative(f: RealField) -> RealField:
    """d/dx of a periodic field via the multiplier i*xi."""
    g = f.grid
    F = sfft.fftn(f.values, workers=g.fft_workers)
    xi = g.xi.reshape((g.n_x,) + (1,) * (g.d - 1))
    out = sfft.ifftn(1j * xi * F, workers=g.fft_workers).real
    return RealField(g, np.ascontiguousarray(out))
