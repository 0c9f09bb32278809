"""Scalar nonlinearities of the logarithmic free-energy model.

The configuration potential is

    F(r) = 1/2 (1+r) ln(1+r) + 1/2 (1-r) ln(1-r) - (lambda/2) r^2

on [-1, 1], with derivative f = F' split as f(r) = beta(r) - lambda*r where
beta(r) = atanh(r) is the monotone part.  The helper a(r) := 2*beta'(r) and
the lower-order combination

    g(r) = -lambda*r*beta'(r) + (eta - lambda)*beta(r) + (lambda^2 - lambda*eta)*r

appear when the chemical potential is written as a single sixth-order
expression.  All evaluators here are pure functions of their inputs and
accept scalars or numpy arrays.

Exact evaluators raise :class:`DomainError` outside their domain instead of
clamping; clamping is the explicit, separate :func:`truncate` operation.
The truncated solver mode replaces the singular functions by globally C^2
quadratic Taylor continuations past the knee 1 - 1/(2n); see
:class:`Nonlinearity`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import xlogy

from .errors import DomainError

FloatOrArray = Union[float, NDArray[np.float64]]


@dataclass(frozen=True)
class PotentialParams:
    """Potential convexity shift ``lam`` and sixth-order coupling ``eta``.

    Both are dimensionless and may take any finite real value; large
    positive ``lam`` makes the potential non-convex (spinodal regime),
    negative ``eta`` gives the functionalized variant of the energy.
    """

    lam: float
    eta: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.eta)):
            raise ValueError("potential parameters must be finite reals")


@dataclass(frozen=True)
class TruncationLevel:
    """Approximation level n: states are confined to [-1+1/n, 1-1/n]."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("truncation level must be an integer >= 3")

    @property
    def clamp_bound(self) -> float:
        """Half-width 1 - 1/n of the admissible interval."""
        return 1.0 - 1.0 / self.n

    @property
    def knee(self) -> float:
        """Matching point 1 - 1/(2n) where the smooth extension starts."""
        return 1.0 - 0.5 / self.n


def _as_array(r: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(r, dtype=np.float64)


def _check_open(r: NDArray[np.float64]) -> None:
    if np.any(np.abs(r) >= 1.0):
        raise DomainError("argument must satisfy |r| < 1")


def _check_closed(r: NDArray[np.float64]) -> None:
    if np.any(np.abs(r) > 1.0):
        raise DomainError("argument must satisfy |r| <= 1")


def _one_minus_sq(r: NDArray[np.float64]) -> NDArray[np.float64]:
    # (1-r)(1+r) keeps full relative accuracy up to |r| = 1 - 1e-12,
    # where 1 - r*r loses half the digits.
    return (1.0 - r) * (1.0 + r)


def eval_beta(r: ArrayLike) -> tuple[FloatOrArray, FloatOrArray, FloatOrArray]:
    """Evaluate beta(r) = atanh(r) together with beta' and beta''.

    beta(r) = (1/2) ln((1+r)/(1-r)),  beta'(r) = 1/(1-r^2),
    beta''(r) = 2r/(1-r^2)^2.  Raises DomainError unless |r| < 1.
    """
    arr = _as_array(r)
    _check_open(arr)
    omr2 = _one_minus_sq(arr)
    beta = 0.5 * (np.log1p(arr) - np.log1p(-arr))
    beta1 = 1.0 / omr2
    beta2 = 2.0 * arr / omr2**2
    if np.isscalar(r) or arr.ndim == 0:
        return float(beta), float(beta1), float(beta2)
    return beta, beta1, beta2


def _beta3(r: NDArray[np.float64]) -> NDArray[np.float64]:
    """Third derivative beta'''(r) = 2(1+3r^2)/(1-r^2)^3 (no domain check)."""
    return 2.0 * (1.0 + 3.0 * r**2) / _one_minus_sq(r) ** 3


def eval_F(p: PotentialParams, r: ArrayLike) -> FloatOrArray:
    """Potential F(r) on the closed interval [-1, 1].

    The entropy terms use the convention x*ln(x) -> 0 as x -> 0, so
    F(+-1) = ln 2 - lam/2 by continuity.
    """
    arr = _as_array(r)
    _check_closed(arr)
    val = 0.5 * (xlogy(1.0 + arr, 1.0 + arr) + xlogy(1.0 - arr, 1.0 - arr))
    val = val - 0.5 * p.lam * arr**2
    if np.isscalar(r) or arr.ndim == 0:
        return float(val)
    return val


def eval_f(p: PotentialParams, r: ArrayLike) -> FloatOrArray:
    """Derivative f(r) = F'(r) = beta(r) - lam*r, defined for |r| < 1."""
    arr = _as_array(r)
    _check_open(arr)
    val = 0.5 * (np.log1p(arr) - np.log1p(-arr)) - p.lam * arr
    if np.isscalar(r) or arr.ndim == 0:
        return float(val)
    return val


def eval_a(r: ArrayLike) -> tuple[FloatOrArray, FloatOrArray, FloatOrArray]:
    """Evaluate a(r) = 2 beta'(r) = 2/(1-r^2) with a' and a''.

    a'(r) = 4r/(1-r^2)^2 and a''(r) = 4(1+3r^2)/(1-r^2)^3; a >= 2 always.
    """
    arr = _as_array(r)
    _check_open(arr)
    omr2 = _one_minus_sq(arr)
    a = 2.0 / omr2
    a1 = 4.0 * arr / omr2**2
    a2 = 4.0 * (1.0 + 3.0 * arr**2) / omr2**3
    if np.isscalar(r) or arr.ndim == 0:
        return float(a), float(a1), float(a2)
    return a, a1, a2


def eval_g(p: PotentialParams, r: ArrayLike) -> tuple[FloatOrArray, FloatOrArray]:
    """Evaluate g(r) and g'(r) for the single-equation chemical potential.

    g(r)  = -lam*r*beta'(r) + (eta-lam)*beta(r) + (lam^2 - lam*eta)*r
    g'(r) = -lam*r*beta''(r) + (eta-2*lam)*beta'(r) + lam^2 - lam*eta

    Identically zero when lam = eta = 0.
    """
    arr = _as_array(r)
    _check_open(arr)
    lam, eta = p.lam, p.eta
    beta, beta1, beta2 = eval_beta(arr)
    g = -lam * arr * beta1 + (eta - lam) * beta + (lam**2 - lam * eta) * arr
    g1 = -lam * arr * beta2 + (eta - 2.0 * lam) * beta1 + lam**2 - lam * eta
    if np.isscalar(r) or arr.ndim == 0:
        return float(g), float(g1)
    return g, g1


def _g2(p: PotentialParams, r: NDArray[np.float64]) -> NDArray[np.float64]:
    """Second derivative of g (needed for the C^2 extension), |r| < 1."""
    _, _, beta2 = eval_beta(r)
    return -p.lam * r * _beta3(r) + (p.eta - 3.0 * p.lam) * beta2


def truncate(r: ArrayLike, lvl: TruncationLevel) -> FloatOrArray:
    """Clamp r into [-1+1/n, 1-1/n]; accepts any real, idempotent."""
    arr = _as_array(r)
    out = np.clip(arr, -lvl.clamp_bound, lvl.clamp_bound)
    if np.isscalar(r) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Nonlinearity:
    """Evaluator bundle for (F, f, beta, g) in exact or extended form.

    With ``level is None`` the bundle delegates to the exact evaluators and
    raises :class:`DomainError` outside their domain.  With a truncation
    level set, every function agrees bit-for-bit with its exact counterpart
    on [-1+1/(2n), 1-1/(2n)] and continues outside as the second-order
    Taylor polynomial about the knee, so beta stays C^2, monotone, and
    finite on all of R.  F is extended by the exact antiderivative of the
    extended f, which keeps mu = dE/du valid across the knee.
    """

    params: PotentialParams
    level: TruncationLevel | None = None

    # -- domain handling -------------------------------------------------

    @property
    def exact(self) -> bool:
        return self.level is None

    def check(self, values: ArrayLike, closed: bool = False) -> None:
        """Raise DomainError for inadmissible samples in exact mode."""
        if self.level is not None:
            return
        arr = _as_array(values)
        if closed:
            _check_closed(arr)
        else:
            _check_open(arr)

    def _split(self, r: ArrayLike):
        """Clip to the knee; return (clipped, signed overshoot)."""
        arr = _as_array(r)
        k = self.level.knee
        rc = np.clip(arr, -k, k)
        return rc, arr - rc

    # -- evaluators ------------------------------------------------------

    def beta_all(self, r: ArrayLike):
        if self.level is None:
            return eval_beta(r)
        rc, d = self._split(r)
        b, b1, b2 = eval_beta(rc)
        return b + b1 * d + 0.5 * b2 * d**2, b1 + b2 * d, b2 + 0.0 * d

    def beta(self, r: ArrayLike):
        return self.beta_all(r)[0]

    def beta3(self, r: ArrayLike):
        """Derivative of the beta'' evaluator (zero outside the knee)."""
        if self.level is None:
            arr = _as_array(r)
            _check_open(arr)
            return _beta3(arr)
        rc, d = self._split(r)
        return np.where(d == 0.0, _beta3(rc), 0.0)

    def f(self, r: ArrayLike):
        return self.beta(r) - self.params.lam * _as_array(r)

    def fprime(self, r: ArrayLike):
        return self.beta_all(r)[1] - self.params.lam

    def F(self, r: ArrayLike):
        if self.level is None:
            return eval_F(self.params, r)
        rc, d = self._split(r)
        lam = self.params.lam
        base = eval_F(self.params, rc)
        b, b1, b2 = eval_beta(rc)
        f_rc = b - lam * rc
        return base + f_rc * d + 0.5 * (b1 - lam) * d**2 + (b2 / 6.0) * d**3

    def g_all(self, r: ArrayLike):
        if self.level is None:
            return eval_g(self.params, r)
        rc, d = self._split(r)
        g, g1 = eval_g(self.params, rc)
        g2 = _g2(self.params, rc)
        return g + g1 * d + 0.5 * g2 * d**2, g1 + g2 * d

    def g(self, r: ArrayLike):
        return self.g_all(r)[0]


def exact_nonlinearity(p: PotentialParams) -> Nonlinearity:
    """Exact singular evaluators on (-1, 1)."""
    return Nonlinearity(p, None)


def extended_nonlinearity(lvl: TruncationLevel, p: PotentialParams) -> Nonlinearity:
    """Globally defined C^2 continuation of the nonlinearities past the knee."""
    return Nonlinearity(p, lvl)


def as_nonlinearity(p) -> Nonlinearity:
    """Coerce PotentialParams or Nonlinearity to a Nonlinearity."""
    if isinstance(p, Nonlinearity):
        return p
    if isinstance(p, PotentialParams):
        return Nonlinearity(p, None)
    raise TypeError(f"expected PotentialParams or Nonlinearity, got {type(p)!r}")
