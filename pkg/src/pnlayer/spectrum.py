"""Spectral analysis of the operator linearized at a computed profile.

L phi = Lop phi + gamma''(u*) phi / (2G) is self-adjoint with essential
spectrum starting near min gamma''(+-1)/(2G) (the far-field well
stiffness). At a layer profile, zero is expected to be a simple eigenvalue
with eigenfunction d/dx u*, isolated below that edge. Eigenpairs come from
shift-inverted Lanczos with the shift placed slightly negative on purpose:
a spurious negative mode, if the solver ever produced one, would be found
first rather than hidden.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, cg, eigsh

from .energy import EnergyContext
from .grid import RealField
from .kernel import extract_kernel
from .minimize import x_derivative_with_profile
from .symbols import SymbolSpec

MAX_ITERATIVE_POINTS = 2**18
MAX_DENSE_POINTS = 4096


@dataclass
class LinearizedOperator:
    """phi -> Lop phi + gamma''(u*) phi / (2G) at a base profile."""

    ctx: EnergyContext
    base: RealField
    multiplier: np.ndarray = field(init=False)
    base_converged: bool = True

    def __post_init__(self):
        self.multiplier = (
            self.ctx.potential.d2gamma(self.base.values) / (2.0 * self.ctx.G)
        )

    def apply(self, values):
        return self.ctx.apply_symbol(values) + self.multiplier * values

    def matvec_flat(self, flat):
        shaped = flat.reshape(self.ctx.grid.shape)
        return self.apply(shaped).ravel()

    @property
    def essential_edge_estimate(self):
        c_m, c_p = self.ctx.potential.well_curvatures()
        return min(c_m, c_p) / (2.0 * self.ctx.G)

    @property
    def lower_bound_estimate(self):
        """min over the grid of gamma''(u*)/(2G), clipped below zero."""
        return float(min(np.min(self.multiplier), 0.0))

    def translation_mode(self):
        return x_derivative_with_profile(self.base, self.ctx).values


def build_linearized(ctx: EnergyContext, u_star: RealField,
                     converged=True) -> LinearizedOperator:
    """Linearize at u_star; an unconverged base raises only a report flag."""
    return LinearizedOperator(ctx=ctx, base=u_star, base_converged=bool(converged))


@dataclass
class SpectrumReport:
    eigenvalues: list
    translation_overlap: float
    essential_edge_estimate: float
    gap: float
    lower_bound_estimate: float
    grid: dict
    base_converged: bool = True
    method: str = "shift-invert"

    def to_json(self, **extra):
        d = {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "translation_overlap": self.translation_overlap,
            "essential_edge_estimate": self.essential_edge_estimate,
            "gap": self.gap,
            "lower_bound_estimate": self.lower_bound_estimate,
            "grid": self.grid,
            "base_converged": self.base_converged,
            "method": self.method,
        }
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def _grid_meta(op: LinearizedOperator):
    g = op.ctx.grid
    return {"d": g.d, "half_length": g.half_length, "n_x": g.n_x,
            "n_y": list(g.n_y)}


def _shift_invert_solve(op: LinearizedOperator, shift):
    g = op.ctx.grid
    diag = op.ctx.sigma - shift + max(op.essential_edge_estimate, 0.1)
    precond = 1.0 / diag

    def pre(r):
        from scipy import fft as sfft
        return sfft.ifftn(precond * sfft.fftn(r.reshape(g.shape)),
                          workers=g.fft_workers).real.ravel()

    A = LinearOperator((g.size, g.size),
                       matvec=lambda p: op.matvec_flat(p) - shift * p,
                       dtype=float)
    M = LinearOperator((g.size, g.size), matvec=pre, dtype=float)

    def solve(b):
        sol, info = cg(A, b, rtol=1e-12, atol=0.0, maxiter=1000, M=M)
        if info != 0:
            raise RuntimeError(
                "inner solve of the shift-inverted iteration broke down; "
                "restart with a different shift or a finer tolerance"
            )
        return sol

    return LinearOperator((g.size, g.size), matvec=solve, dtype=float)


def lowest_eigenpairs(op: LinearizedOperator, k=6) -> SpectrumReport:
    """k smallest eigenpairs by shift-inverted Lanczos.

    The shift sits at -0.1 times the essential-edge estimate. Grids above
    2^18 points are refused; use the dense path only for cross-checks.
    """
    if k > 10:
        raise ValueError("at most 10 eigenpairs are supported")
    g = op.ctx.grid
    if g.size > MAX_ITERATIVE_POINTS:
        raise ValueError(f"grid too large for the iterative path ({g.size})")
    edge = op.essential_edge_estimate
    shift = -0.1 * edge
    opinv = _shift_invert_solve(op, shift)
    A = LinearOperator((g.size, g.size), matvec=op.matvec_flat, dtype=float)
    t = op.translation_mode().ravel()
    try:
        vals, vecs = eigsh(A, k=k, sigma=shift, OPinv=opinv, which="LM",
                           v0=t, maxiter=300)
    except Exception as exc:
        raise RuntimeError(
            "eigenvalue iteration breakdown; restart with a different "
            "shift or initial vector"
        ) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    overlap = abs(float(vecs[:, 0] @ t)) / (np.linalg.norm(t) or 1.0)
    return SpectrumReport(
        eigenvalues=[float(v) for v in vals],
        translation_overlap=float(overlap),
        essential_edge_estimate=float(edge),
        gap=float(vals[1] - vals[0]) if k >= 2 else float("nan"),
        lower_bound_estimate=op.lower_bound_estimate,
        grid=_grid_meta(op),
        base_converged=op.base_converged,
        method="shift-invert",
    )


def dense_eigenpairs(op: LinearizedOperator, k=6) -> SpectrumReport:
    """Dense cross-check path: assemble the matrix and call eigh.

    The multiplier part is diagonal; the nonlocal part is the (block)
    circulant built from the extracted raw kernel, which represents the
    spectral application exactly. Limited to 4096 points.
    """
    g = op.ctx.grid
    if g.size > MAX_DENSE_POINTS:
        raise ValueError(f"grid too large for the dense path ({g.size})")
    kern = extract_kernel(op.ctx.symbol, g).values * g.cell_volume
    n = g.size
    mat = np.empty((n, n))
    idx_axes = [np.arange(s) for s in g.shape]
    for flat in range(n):
        w = np.unravel_index(flat, g.shape)
        row = kern[np.ix_(*[(wi - i) % s for i, wi, s in
                            zip(idx_axes, w, g.shape)])]
        mat[flat] = row.ravel()
    mat[np.arange(n), np.arange(n)] += op.multiplier.ravel()
    mat = 0.5 * (mat + mat.T)
    vals, vecs = eigh(mat, subset_by_index=(0, k - 1))
    t = op.translation_mode().ravel()
    overlap = abs(float(vecs[:, 0] @ t)) / (np.linalg.norm(t) or 1.0) \
        / (np.linalg.norm(vecs[:, 0]) or 1.0)
    return SpectrumReport(
        eigenvalues=[float(v) for v in vals],
        translation_overlap=float(overlap),
        essential_edge_estimate=float(op.essential_edge_estimate),
        gap=float(vals[1] - vals[0]) if k >= 2 else float("nan"),
        lower_bound_estimate=op.lower_bound_estimate,
        grid=_grid_meta(op),
        base_converged=op.base_converged,
        method="dense",
    )


def kernel_simplicity_check(report: SpectrumReport, tol_zero=None):
    """True iff exactly one eigenvalue sits in (-tol, tol), next >= 10 tol.

    Needs a report with at least three eigenvalues; tol defaults to
    1e-5 times the essential-edge estimate.
    """
    if len(report.eigenvalues) < 3:
        raise ValueError("simplicity check needs a spectrum with k >= 3")
    if tol_zero is None:
        tol_zero = 1e-5 * report.essential_edge_estimate
    vals = np.asarray(report.eigenvalues)
    inside = np.abs(vals) < tol_zero
    count = int(np.sum(inside))
    above = vals[~inside]
    next_ok = bool(above.size == 0 or np.min(np.abs(above)) >= 10 * tol_zero)
    ok = count == 1 and next_ok
    diagnostics = {
        "tol_zero": float(tol_zero),
        "eigenvalues_in_window": count,
        "next_eigenvalue": float(np.min(np.abs(above))) if above.size else None,
    }
    return ok, diagnostics


def maximal_principle_probe(f: RealField, symbol: SymbolSpec, tol=1e-10):
    """Evaluate the operator at the global max/min grid points.

    For a positivity-certified symbol, Lf >= 0 at a global maximum and
    <= 0 at a global minimum (equality only for constants). Returns the
    verdict with both probed values.
    """
    from .symbols import apply_operator

    lf = apply_operator(f, symbol).values
    scale = float(np.max(np.abs(lf))) or 1.0
    imax = np.unravel_index(np.argmax(f.values), f.values.shape)
    imin = np.unravel_index(np.argmin(f.values), f.values.shape)
    at_max = float(lf[imax])
    at_min = float(lf[imin])
    ok = at_max >= -tol * scale and at_min <= tol * scale
    return {
        "verdict": "pass" if ok else "fail",
        "value_at_max": at_max,
        "value_at_min": at_min,
        "scale": scale,
    }
