import numpy as np

from pnlayer.grid import RealField


def smooth_random_field(grid, rng, modes=5, amplitude=1.0):
    """Band-limited periodic field: a few random low-frequency modes."""
    spec = np.zeros(grid.shape, complex)
    for _ in range(modes):
        idx = tuple(int(rng.integers(1, 4)) for _ in grid.shape)
        spec[idx] += rng.standard_normal() + 1j * rng.standard_normal()
    mirror = tuple((-np.arange(s)) % s for s in grid.shape)
    spec = spec + np.conj(spec[np.ix_(*mirror)])
    vals = np.fft.ifftn(spec).real
    peak = np.max(np.abs(vals)) or 1.0
    return RealField(grid, np.ascontiguousarray(amplitude * vals / peak))
