"""Uniform box grids and spectral operator calculus.

Fields live on uniform tensor grids over a box.  Two boundary modes are
supported, each realized by the basis that diagonalizes the Neumann or
periodic Laplacian:

* ``neumann`` — samples at cell midpoints, cosine basis cos(m*pi*x/L).
  Every basis function has zero normal derivative on the box faces, so any
  representable field satisfies the no-flux conditions exactly.
* ``periodic`` — samples at x_j = j*h, discrete Fourier basis.

The operator A is the weak-form minus-Laplacian: diagonal on the basis with
eigenvalues >= 0 and a one-dimensional kernel of constants (mode 0).  On
zero-mean fields its inverse N = A^{-1} defines the dual norm
``||g||_{V0'} = ||grad(N g)|| = sqrt(<g, N g>)``.

All quadrature is uniform (equal weights x cell volume); sums use numpy's
pairwise reduction, which is deterministic for a fixed array layout.
Transforms allocate per-call scratch, so grids and fields can be shared
between concurrently running simulations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct, dst, fftfreq, fftn, ifftn

from .errors import MeanError, ShapeError

NEUMANN = "neumann"
PERIODIC = "periodic"

_MEAN_RTOL = 1e-10  # zero-mean precondition, relative to the L2 norm


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on a box (0,L1) x ... x (0,Ld), d in {1,2,3}."""

    lengths: tuple[float, ...]
    counts: tuple[int, ...]
    bc: str = NEUMANN

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(l) for l in np.atleast_1d(self.lengths)))
        object.__setattr__(self, "counts", tuple(int(n) for n in np.atleast_1d(self.counts)))
        if not 1 <= self.dim <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        if len(self.lengths) != len(self.counts):
            raise ValueError("lengths and counts must have equal length")
        if any(l <= 0 for l in self.lengths):
            raise ValueError("box lengths must be positive")
        if any(n < 4 for n in self.counts):
            raise ValueError("need at least 4 samples per axis")
        if self.bc not in (NEUMANN, PERIODIC):
            raise ValueError(f"unknown boundary mode {self.bc!r}")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(l / n for l, n in zip(self.lengths, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Sample coordinates along one axis (midpoints for neumann)."""
        n, h = self.counts[axis], self.spacings[axis]
        if self.bc == NEUMANN:
            return (np.arange(n) + 0.5) * h
        return np.arange(n) * h

    def meshgrid(self) -> list[np.ndarray]:
        axes = [self.axis_coords(i) for i in range(self.dim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def symbol(self) -> "OperatorSymbol":
        return _symbol_cached(self)


@dataclass(frozen=True)
class OperatorSymbol:
    """Eigenvalues of A = -Laplacian per spectral mode (transform layout)."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = self.eigenvalues
        if ev.flat[0] != 0.0:
            raise ValueError("mode-0 eigenvalue must be exactly zero")
        if np.any(ev < 0.0):
            raise ValueError("Laplacian symbol must be nonnegative")


@lru_cache(maxsize=64)
def _symbol_cached(grid: Grid) -> OperatorSymbol:
    per_axis = []
    for l, n in zip(grid.lengths, grid.counts):
        if grid.bc == NEUMANN:
            k = np.arange(n) * np.pi / l
        else:
            k = 2.0 * np.pi * fftfreq(n, d=l / n) * 1.0
        per_axis.append(k**2)
    ev = per_axis[0]
    for ax in per_axis[1:]:
        ev = np.add.outer(ev, ax)
    ev = np.ascontiguousarray(ev.reshape(grid.counts))
    return OperatorSymbol(ev)


@lru_cache(maxsize=64)
def _wavenumbers_cached(grid: Grid) -> tuple[np.ndarray, ...]:
    out = []
    for l, n in zip(grid.lengths, grid.counts):
        if grid.bc == NEUMANN:
            out.append(np.arange(n) * np.pi / l)
        else:
            out.append(2.0 * np.pi * fftfreq(n, d=l / n))
    return tuple(out)


class ScalarField:
    """Real sample values of one scalar on a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.shape:
            raise ShapeError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ShapeError("field values must all be finite")
        self.grid = grid
        self.values = values

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __repr__(self):
        return f"ScalarField(shape={self.grid.shape}, bc={self.grid.bc!r})"


def _vals(x, grid: Grid):
    if isinstance(x, ScalarField):
        if x.grid != grid:
            raise ShapeError("fields live on different grids")
        return x.values
    return x


def constant_field(grid: Grid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)))


# ---------------------------------------------------------------------------
# transforms


def _dctn(values: np.ndarray, inverse: bool = False) -> np.ndarray:
    out = values
    ndim = values.ndim
    for ax in range(ndim):
        out = dct(out, type=3 if inverse else 2, axis=ax, norm="ortho")
    return out


def transform_forward(u: ScalarField) -> np.ndarray:
    """Orthonormal spectral coefficients diagonalizing A.

    The coefficient array is real (cosine basis) for neumann grids and
    complex (Fourier basis) for periodic grids; index (0,..,0) is the mass
    mode in both layouts.
    """
    if u.grid.bc == NEUMANN:
        return _dctn(u.values)
    return fftn(u.values, norm="ortho")


def transform_backward(coeffs: np.ndarray, grid: Grid) -> ScalarField:
    """Inverse of :func:`transform_forward`."""
    if coeffs.shape != grid.shape:
        raise ShapeError(f"coefficient shape {coeffs.shape} != grid shape {grid.shape}")
    if grid.bc == NEUMANN:
        return ScalarField(grid, _dctn(coeffs, inverse=True))
    return ScalarField(grid, np.real(ifftn(coeffs, norm="ortho")))


def apply_symbol(u: ScalarField, multiplier: np.ndarray) -> ScalarField:
    """Apply a spectral multiplier (diagonal operator) to a field."""
    return transform_backward(transform_forward(u) * multiplier, u.grid)


def apply_A(u: ScalarField, power: int = 1) -> ScalarField:
    """Apply A^power, power in {1, 2, 3}; annihilates constants exactly."""
    if power not in (1, 2, 3):
        raise ValueError("power must be 1, 2 or 3")
    ev = u.grid.symbol().eigenvalues
    return apply_symbol(u, ev**power)


def laplacian(u: ScalarField) -> ScalarField:
    """Pointwise Laplacian: -A u."""
    return -apply_A(u, 1)


def inv_A_zero_mean(g: ScalarField) -> ScalarField:
    """Solve A v = g with mean(v) = 0, for zero-mean g.

    Raises MeanError when |mean(g)| > 1e-10 * ||g||_L2; the mass mode of
    the result is set to exactly zero.
    """
    gbar = mean(g)
    if abs(gbar) > _MEAN_RTOL * lp_norm(g, 2):
        raise MeanError(f"input must have zero mean, got {gbar:.3e}")
    ev = g.grid.symbol().eigenvalues
    coeffs = transform_forward(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ev > 0.0, coeffs / np.where(ev > 0.0, ev, 1.0), 0.0)
    return transform_backward(out, g.grid)


def resolvent(u: ScalarField, tau: float) -> ScalarField:
    """Apply (I + tau*A)^{-1}; preserves the mean exactly (mode 0 / 1.0)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    ev = u.grid.symbol().eigenvalues
    return apply_symbol(u, 1.0 / (1.0 + tau * ev))


# ---------------------------------------------------------------------------
# reductions and norms


def integral(u: ScalarField) -> float:
    return float(np.sum(u.values) * u.grid.cell_volume)


def mean(u: ScalarField) -> float:
    return float(np.sum(u.values) / u.values.size)


def lp_norm(u: ScalarField, p: float = 2) -> float:
    if p == np.inf:
        return float(np.max(np.abs(u.values)))
    if p == 1:
        return float(np.sum(np.abs(u.values)) * u.grid.cell_volume)
    if p == 2:
        return float(np.sqrt(np.sum(u.values**2) * u.grid.cell_volume))
    raise ValueError("supported norms: p in {1, 2, inf}")


def inner(u: ScalarField, v: ScalarField) -> float:
    return float(np.sum(u.values * _vals(v, u.grid)) * u.grid.cell_volume)


def gradient_axis(u: ScalarField, axis: int) -> np.ndarray:
    """Spectral partial derivative along one axis, sampled on the grid."""
    grid = u.grid
    n = grid.counts[axis]
    k = _wavenumbers_cached(grid)[axis]
    if grid.bc == PERIODIC:
        shape = [1] * grid.dim
        shape[axis] = n
        coeffs = fftn(u.values, axes=(axis,))
        return np.real(ifftn(1j * k.reshape(shape) * coeffs, axes=(axis,)))
    # cosine series -> sine series: d/dx cos(m pi x/L) = -(m pi/L) sin(...)
    y = dct(u.values, type=2, axis=axis)
    c = y / n
    sl = [slice(None)] * grid.dim
    sl[axis] = 0
    c[tuple(sl)] = 0.0  # constant mode has zero derivative
    shape = [1] * grid.dim
    shape[axis] = n
    b = -k.reshape(shape) * c
    z = np.zeros_like(b)
    head = [slice(None)] * grid.dim
    head[axis] = slice(0, n - 1)
    tail = [slice(None)] * grid.dim
    tail[axis] = slice(1, n)
    z[tuple(head)] = b[tuple(tail)]
    return dst(z, type=3, axis=axis) / 2.0


def gradient(u: ScalarField) -> list[np.ndarray]:
    return [gradient_axis(u, ax) for ax in range(u.grid.dim)]


def grad_norm_sq_field(u: ScalarField) -> ScalarField:
    """Pointwise |grad u|^2; tiny negative roundoff is floored to zero."""
    acc = np.zeros(u.grid.shape)
    for ax in range(u.grid.dim):
        acc += gradient_axis(u, ax) ** 2
    np.maximum(acc, 0.0, out=acc)
    return ScalarField(u.grid, acc)


def h1_seminorm(u: ScalarField) -> float:
    """||grad u|| computed spectrally: sqrt(sum_m lambda_m |c_m|^2 * w)."""
    ev = u.grid.symbol().eigenvalues
    coeffs = transform_forward(u)
    w = u.grid.cell_volume
    return float(np.sqrt(np.sum(ev * np.abs(coeffs) ** 2) * w))


def v0_dual_norm(g: ScalarField) -> float:
    """Dual norm ||g||_{V0'} = sqrt(<g, A^{-1} g>) on zero-mean fields."""
    v = inv_A_zero_mean(g)
    val = inner(g, v)
    return float(np.sqrt(max(val, 0.0)))


# ---------------------------------------------------------------------------
# dealiased products (optional 2x zero-padded evaluation)


def refined(grid: Grid, factor: int = 2) -> Grid:
    """The same box sampled `factor` times finer along every axis."""
    return Grid(grid.lengths, tuple(factor * n for n in grid.counts), grid.bc)


def pad_eval(func, *fields: ScalarField) -> ScalarField:
    """Evaluate a pointwise function of fields on a 2x-refined grid.

    Each field is spectrally interpolated onto a grid with doubled counts,
    the function is applied there, and the result is truncated back.  The
    singular nonlinearities are not polynomial, so this mitigates rather
    than removes aliasing; it exists for convergence studies.
    """
    grid = fields[0].grid
    fine = refined(grid)
    fine_vals = func(*(interpolate(f, fine).values for f in fields))
    return restrict(ScalarField(fine, fine_vals), grid)


def interpolate(u: ScalarField, fine: Grid) -> ScalarField:
    coarse = u.grid
    c = transform_forward(u)
    if coarse.bc == NEUMANN:
        out = np.zeros(fine.shape)
        out[tuple(slice(0, n) for n in coarse.shape)] = c
        # orthonormal DCT scaling depends on N: rescale by sqrt(prod(2n/n))
        out *= np.sqrt(np.prod([fn / cn for fn, cn in zip(fine.counts, coarse.counts)]))
        return transform_backward(out, fine)
    out = np.zeros(fine.shape, dtype=complex)
    src = fftn(u.values)
    for idx in np.ndindex(*coarse.shape):
        tgt = tuple(i if i <= n // 2 else i + fn - n for i, n, fn in zip(idx, coarse.shape, fine.shape))
        out[tgt] = src[idx]
    out *= np.prod([fn / cn for fn, cn in zip(fine.counts, coarse.counts)])
    return ScalarField(fine, np.real(ifftn(out)))


def restrict(u: ScalarField, coarse: Grid) -> ScalarField:
    fine = u.grid
    if fine.bc == NEUMANN:
        c = transform_forward(u)
        kept = c[tuple(slice(0, n) for n in coarse.shape)].copy()
        kept /= np.sqrt(np.prod([fn / cn for fn, cn in zip(fine.counts, coarse.counts)]))
        return transform_backward(kept, coarse)
    src = fftn(u.values)
    out = np.zeros(coarse.shape, dtype=complex)
    for idx in np.ndindex(*coarse.shape):
        srcidx = tuple(i if i <= n // 2 else i + fn - n for i, n, fn in zip(idx, coarse.shape, fine.shape))
        out[idx] = src[srcidx]
    out /= np.prod([fn / cn for fn, cn in zip(fine.counts, coarse.counts)])
    return ScalarField(coarse, np.real(ifftn(out)))
