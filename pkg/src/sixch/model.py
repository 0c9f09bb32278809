"""Model-level fields and functionals.

The free energy is

    E(u) = integral[ 1/2 |-lap(u) + f(u)|^2 + eta*(1/2 |grad u|^2 + F(u)) ]

with chemical potential mu = dE/du.  Besides the defining cascade

    omega = -lap(u) + f(u),   mu = -lap(omega) + f'(u)*omega + eta*omega,

mu can be written as a single sixth-order expression in several forms that
coincide for smooth states; all five are implemented so they can serve as
oracles for one another.  The default used for time stepping is UOM1,

    mu = lap^2 u - 2 lap(beta(u)) + beta''(u)|grad u|^2
         + beta(u) beta'(u) + (2 lam - eta) lap(u) + g(u),

whose nonlinear terms are exactly the quantities the diagnostic functionals
below monitor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import grid as gr
from .errors import DomainError, OverflowSignal
from .grid import ScalarField
from .potential import Nonlinearity, PotentialParams, as_nonlinearity, eval_a


class MuFormulation(Enum):
    """The five equivalent-on-smooth-states forms of the chemical potential."""

    CASCADE = "cascade"
    UOM = "uom"
    UOM1 = "uom1"
    UOM2 = "uom2"
    UOM3 = "uom3"


@dataclass(frozen=True)
class EnergyBreakdown:
    willmore: float  # 1/2 ||omega||^2
    ch_grad: float  # eta/2 ||grad u||^2
    ch_pot: float  # eta * integral F(u)
    total: float


@dataclass(frozen=True)
class AprioriDiagnostics:
    """Norms of the singular terms that the analysis keeps bounded."""

    beta_l2: float
    grad_beta_l2: float
    beta_betaprime_l1: float
    m_integral: float
    n_integral: float
    mu_mean: float


def omega(u: ScalarField, p, dealias: bool = False) -> ScalarField:
    """Fourth-order chemical potential omega = -lap(u) + f(u).

    With ``dealias=True`` the whole evaluation runs on a 2x zero-padded
    grid and is truncated back (aliasing mitigation for convergence
    studies; exact dealiasing is impossible for these non-polynomial
    nonlinearities).
    """
    nl = as_nonlinearity(p)
    nl.check(u.values)
    if dealias:
        fine = gr.interpolate(u, gr.refined(u.grid))
        return gr.restrict(omega(fine, nl), u.grid)
    return gr.laplacian(u) * (-1.0) + ScalarField(u.grid, nl.f(u.values))


def mu(u: ScalarField, p, form: MuFormulation = MuFormulation.UOM1,
       dealias: bool = False) -> ScalarField:
    """Chemical potential of the sixth-order flow, per the selected form."""
    nl = as_nonlinearity(p)
    nl.check(u.values)
    lam, eta = nl.params.lam, nl.params.eta

    if dealias:
        fine = gr.interpolate(u, gr.refined(u.grid))
        return gr.restrict(mu(fine, nl, form), u.grid)

    if form is MuFormulation.CASCADE:
        om = omega(u, nl)
        fp = nl.fprime(u.values)
        react = ScalarField(u.grid, (fp + eta) * om.values)
        return gr.laplacian(om) * (-1.0) + react

    vals = u.values
    beta, beta1, beta2 = nl.beta_all(vals)
    g_vals = nl.g(vals)
    ev = u.grid.symbol().eigenvalues
    u_hat = gr.transform_forward(u)
    lap_u = gr.transform_backward(-ev * u_hat, u.grid).values
    lap2_u = gr.transform_backward(ev**2 * u_hat, u.grid).values
    common = beta * beta1 + (2.0 * lam - eta) * lap_u + g_vals

    if form is MuFormulation.UOM:
        lap_beta = gr.laplacian(ScalarField(u.grid, beta)).values
        out = lap2_u - lap_beta - beta1 * lap_u + common
    elif form is MuFormulation.UOM1:
        lap_beta = gr.laplacian(ScalarField(u.grid, beta)).values
        gsq = gr.grad_norm_sq_field(u).values
        out = lap2_u - 2.0 * lap_beta + beta2 * gsq + common
    elif form is MuFormulation.UOM2:
        gsq = gr.grad_norm_sq_field(u).values
        out = lap2_u - 2.0 * beta1 * lap_u - beta2 * gsq + common
    elif form is MuFormulation.UOM3:
        a, a1, _ = eval_a(vals) if nl.exact else _a_extended(nl, vals)
        gsq = gr.grad_norm_sq_field(u).values
        out = lap2_u - a * lap_u - 0.5 * a1 * gsq + common
    else:
        raise ValueError(f"unknown formulation {form!r}")
    return ScalarField(u.grid, out)


def _a_extended(nl: Nonlinearity, vals):
    _, b1, b2 = nl.beta_all(vals)
    return 2.0 * b1, 2.0 * b2, None


def energy(u: ScalarField, p) -> EnergyBreakdown:
    """Energy breakdown; requires |u| <= 1 in exact mode (F is defined there)."""
    nl = as_nonlinearity(p)
    nl.check(u.values, closed=True)
    eta = nl.params.eta
    # f is singular at |u| = 1; on closed-domain states the omega part of the
    # energy is +infinity there, which numpy would turn into inf/nan.  Guard:
    if nl.exact and np.any(np.abs(u.values) >= 1.0):
        raise DomainError("energy omega-term needs |u| < 1 strictly")
    ev = u.grid.symbol().eigenvalues
    u_hat = gr.transform_forward(u)
    om_vals = gr.transform_backward(ev * u_hat, u.grid).values + nl.f(u.values)
    w = u.grid.cell_volume
    willmore = 0.5 * float(np.sum(om_vals**2)) * w
    ch_grad = 0.5 * eta * float(np.sum(ev * np.abs(u_hat) ** 2)) * w
    ch_pot = eta * float(np.sum(nl.F(u.values))) * w
    return EnergyBreakdown(willmore, ch_grad, ch_pot, willmore + ch_grad + ch_pot)


def mu_mean(u: ScalarField, p) -> float:
    """Spatial mean of mu via the integrated single-equation form.

    Only the zero-order terms survive integration:
    mean(mu) = |Omega|^{-1} * integral(beta''(u)|grad u|^2
               + beta(u) beta'(u) + g(u)).
    Computed this way the mass mode of mu never depends on spectral
    cancellation of the differential terms.
    """
    nl = as_nonlinearity(p)
    nl.check(u.values)
    beta, beta1, beta2 = nl.beta_all(u.values)
    gsq = gr.grad_norm_sq_field(u).values
    dens = beta2 * gsq + beta * beta1 + nl.g(u.values)
    return float(np.sum(dens)) / u.values.size


def arcsin_functional(u: ScalarField) -> float:
    """J(u) = integral |grad(arcsin u)|^2, finite for |u| <= 1.

    Constants (including +-1) give zero.  Raises OverflowSignal if the
    integrand leaves the representable range.
    """
    if np.any(np.abs(u.values) > 1.0):
        raise DomainError("arcsin functional needs |u| <= 1")
    theta = ScalarField(u.grid, np.arcsin(u.values))
    integrand = gr.grad_norm_sq_field(theta).values
    if np.any(integrand > 1e300):
        raise OverflowSignal("arcsin-gradient integrand exceeded 1e300")
    return float(np.sum(integrand)) * u.grid.cell_volume


def arcsin_gateaux(u: ScalarField, phi: ScalarField) -> float:
    """Directional derivative of J at u in direction phi.

    dJ(u)[phi] = integral a(u) grad u . grad phi
                 + 1/2 integral a'(u) |grad u|^2 phi,
    valid when u stays strictly separated from +-1.
    """
    if np.max(np.abs(u.values)) >= 1.0:
        raise DomainError("Gateaux derivative needs strict separation from +-1")
    a, a1, _ = eval_a(u.values)
    w = u.grid.cell_volume
    dot = np.zeros(u.grid.shape)
    for ax in range(u.grid.dim):
        dot += gr.gradient_axis(u, ax) * gr.gradient_axis(phi, ax)
    gsq = gr.grad_norm_sq_field(u).values
    return float(np.sum(a * dot) + 0.5 * np.sum(a1 * gsq * phi.values)) * w


def apriori_diagnostics(u: ScalarField, p) -> AprioriDiagnostics:
    """The a-priori quantities: beta norms, B = beta*beta', and the
    superlinear integrals of M(|B|) and N(|beta''(u)|grad u|^2|)."""
    nl = as_nonlinearity(p)
    nl.check(u.values)
    w = u.grid.cell_volume
    beta, beta1, beta2 = nl.beta_all(u.values)
    beta_l2 = float(np.sqrt(np.sum(beta**2) * w))
    grad_beta_l2 = gr.h1_seminorm(ScalarField(u.grid, beta))
    b_vals = beta * beta1
    beta_betaprime_l1 = float(np.sum(np.abs(b_vals)) * w)
    gsq = gr.grad_norm_sq_field(u).values
    a_vals = np.abs(beta2 * gsq)
    m_integral = float(np.sum(_M(np.abs(b_vals))) * w)
    n_integral = float(np.sum(_N(a_vals)) * w)
    mean_mu = float(np.sum(beta2 * gsq + b_vals + nl.g(u.values))) / u.values.size
    return AprioriDiagnostics(beta_l2, grad_beta_l2, beta_betaprime_l1,
                              m_integral, n_integral, mean_mu)


def _M(r):
    """M(r) = r * ln^(1/2)(1+r), superlinear at infinity."""
    return r * np.sqrt(np.log1p(r))


def _N(r):
    """N(r) = r * ln(ln(e^4 + r)), superlinear at infinity."""
    return r * np.log(np.log(np.exp(4.0) + r))


def dispersion_sigma(k: float, p: PotentialParams) -> float:
    """Growth rate of wavenumber k for the flow linearized at u = 0.

    With beta'(0) = 1 the linearization of the cascade is
    mu_hat = (k^2 + 1 - lam + eta) * (k^2 + 1 - lam) * u_hat and
    d/dt u_hat = -k^2 mu_hat, hence

        sigma(k) = -k^2 (k^2 + 1 - lam) (k^2 + 1 - lam + eta).

    The mass mode k = 0 is neutral.
    """
    k2 = float(k) ** 2
    return -k2 * (k2 + 1.0 - p.lam) * (k2 + 1.0 - p.lam + p.eta)
