"""Time integration of the conserved flow du/dt = lap(mu).

Two first-order integrators are provided:

* ``imex`` — per spectral mode, with a = eigenvalue of A and
  R(u) = mu(u) - lap^2 u (every term of the UOM1 form except the
  bilaplacian), the update solves

      (1 + dt*(a^3 + s1*a^2 + s2*a)) u_hat_new
          = (1 + dt*(s1*a^2 + s2*a)) u_hat - dt*a*R_hat(u).

  The stabilization constants s1, s2 majorize the frozen coefficients of
  the -2*lap(beta(u)) and (2*lam-eta)*lap(u) terms; the mass mode a = 0 is
  copied over exactly.

* ``newton`` — damped inexact Newton on G(v) = v - u + dt*A*mu(v), with
  the analytic Frechet derivative of mu as Jacobian action, Krylov inner
  solves preconditioned by the IMEX operator, and an update damping that
  keeps iterates strictly inside the admissible set (the separation guard).

Neither scheme is provably energy stable for this energy, so `advance`
enforces dissipation a posteriori: a step whose energy rises by more than
``energy_tol`` is rejected and retried with half the step size.  Admissible
constant states are exact fixed points of both schemes.  A single `advance`
call is sequential and owns its workspace; independent calls may run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, lgmres

from . import grid as gr
from .errors import DomainError, GuardViolation, NewtonDivergence, StepFloorError
from .grid import ScalarField
from .model import energy, mu
from .potential import Nonlinearity, PotentialParams, TruncationLevel, as_nonlinearity

IMEX = "imex"
NEWTON = "newton"

_FAST_ITERS = 4  # inner iterations counted as "fast" for step growth


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = IMEX
    dt0: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 1e-1
    s1: Optional[float] = None  # None -> stabilization defaults
    s2: Optional[float] = None
    energy_tol: float = 1e-10
    growth_factor: float = 1.2
    newton_tol: float = 1e-9
    newton_max_iters: int = 25
    guard_eps: float = 1e-3
    truncation: Optional[TruncationLevel] = None

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt0 <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt0 <= dt_max")
        if self.scheme not in (IMEX, NEWTON):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.growth_factor <= 1.0:
            raise ValueError("growth_factor must exceed 1")
        if not 0.0 < self.guard_eps < 0.5:
            raise ValueError("guard_eps must lie in (0, 0.5)")
        if self.energy_tol < 0 or self.newton_tol <= 0 or self.newton_max_iters < 1:
            raise ValueError("invalid tolerance settings")
        if self.truncation is not None and self.guard_eps >= 1.0 - self.truncation.clamp_bound:
            raise ValueError("guard_eps must be smaller than 1 - clamp bound")


@dataclass(frozen=True)
class StepResult:
    field: ScalarField
    dt_used: float
    accepted: bool
    inner_iters: int
    energy_after: float


def default_stabilization(p: PotentialParams, truncation: Optional[TruncationLevel] = None,
                          sup_u: float = 0.9) -> tuple[float, float]:
    """Stabilization constants majorizing the explicit frozen coefficients.

    s1 = max over the admissible range of 2*beta'(r) = 2/(1-r^2) and
    s2 = |2*lam - eta|.  In truncated mode the range is [-b, b] with
    b = 1 - 1/n, giving an exact bound.  In exact mode the open interval
    is unbounded, so the default majorizes over |r| up to the midpoint
    between the state's sup norm and 1 (states drift toward the binodal,
    never quite reaching it) and relies on the energy-rejection backstop
    beyond that.
    """
    if truncation is not None:
        b = truncation.clamp_bound
    else:
        b = min(0.5 * (1.0 + min(sup_u, 1.0)), 1.0 - 1e-6)
        b = max(b, 0.9)
    s1 = 2.0 / ((1.0 - b) * (1.0 + b))
    s2 = abs(2.0 * p.lam - p.eta)
    return s1, s2


def _resolve(cfg: SolverConfig, p: PotentialParams, sup_u: float = 0.9) -> tuple[float, float]:
    s1, s2 = default_stabilization(p, cfg.truncation, sup_u=sup_u)
    if cfg.s1 is not None:
        s1 = cfg.s1
    if cfg.s2 is not None:
        s2 = cfg.s2
    return s1, s2


def _nonlinearity(p, cfg: SolverConfig) -> Nonlinearity:
    nl = as_nonlinearity(p)
    if cfg.truncation is not None and nl.exact:
        nl = Nonlinearity(nl.params, cfg.truncation)
    return nl


def step_imex(u: ScalarField, dt: float, p, cfg: SolverConfig,
              mu_field: Optional[ScalarField] = None,
              energy_before: Optional[float] = None) -> StepResult:
    """One stabilized IMEX step; `mu_field` may pass a precomputed mu(u).

    When `energy_before` is given, the result's `accepted` flag reports the
    dissipation test energy_after <= energy_before + energy_tol; otherwise
    the proposal is returned as accepted and the caller decides.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    nl = _nonlinearity(p, cfg)
    s1, s2 = _resolve(cfg, nl.params, sup_u=float(np.max(np.abs(u.values))))
    if mu_field is None:
        mu_field = mu(u, nl)
    ev = u.grid.symbol().eigenvalues
    u_hat = gr.transform_forward(u)
    # R_hat = mu_hat - a^2 u_hat isolates everything but the bilaplacian.
    r_hat = gr.transform_forward(mu_field) - ev**2 * u_hat
    stab = s1 * ev**2 + s2 * ev
    new_hat = ((1.0 + dt * stab) * u_hat - dt * ev * r_hat) / (1.0 + dt * (ev**3 + stab))
    new_hat.flat[0] = u_hat.flat[0]  # mass mode copied exactly
    if np.array_equal(new_hat, u_hat):
        u_new = u.copy()  # spectral fixed point (e.g. constants): stay bit-identical
    else:
        u_new = gr.transform_backward(new_hat, u.grid)
    e_after = energy(u_new, nl).total
    ok = True if energy_before is None else e_after <= energy_before + cfg.energy_tol
    return StepResult(u_new, dt, ok, 1, e_after)


def step_implicit(u: ScalarField, dt: float, p, cfg: SolverConfig,
                  mu_field: Optional[ScalarField] = None,
                  energy_before: Optional[float] = None) -> StepResult:
    """One damped Newton--Krylov step for the fully implicit update."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nl = _nonlinearity(p, cfg)
    s1, s2 = _resolve(cfg, nl.params, sup_u=float(np.max(np.abs(u.values))))
    grid = u.grid
    ev = grid.symbol().eigenvalues
    bound = (1.0 if cfg.truncation is None else cfg.truncation.clamp_bound) - cfg.guard_eps
    if np.max(np.abs(u.values)) > bound:
        raise GuardViolation("initial state already violates the separation guard")

    n_dof = u.values.size
    precond_diag = 1.0 + dt * (ev**3 + s1 * ev**2 + s2 * ev)
    lam, eta = nl.params.lam, nl.params.eta

    def apply_G(v_vals: np.ndarray) -> np.ndarray:
        v = ScalarField(grid, v_vals.reshape(grid.shape))
        mu_v = mu(v, nl)
        lap_mu = gr.apply_A(mu_v, 1).values
        return (v_vals.reshape(grid.shape) - u.values + dt * lap_mu).ravel()

    def make_jac_vec(v_vals: np.ndarray):
        """Analytic Frechet derivative of G at v: J w = w + dt*A*(Dmu(v) w)."""
        v = ScalarField(grid, v_vals.reshape(grid.shape))
        beta, beta1, beta2 = nl.beta_all(v.values)
        beta3 = nl.beta3(v.values)
        _, g1 = nl.g_all(v.values)
        gsq = gr.grad_norm_sq_field(v).values
        grads_v = [gr.gradient_axis(v, ax) for ax in range(grid.dim)]
        zero_order = beta3 * gsq + beta1**2 + beta * beta2 + g1

        def jac_vec(w: np.ndarray) -> np.ndarray:
            wf = ScalarField(grid, w.reshape(grid.shape))
            w_hat = gr.transform_forward(wf)
            linear = gr.transform_backward((ev**2 - (2.0 * lam - eta) * ev) * w_hat, grid)
            grad_dot = np.zeros(grid.shape)
            for ax in range(grid.dim):
                grad_dot += grads_v[ax] * gr.gradient_axis(wf, ax)
            dmu = (linear.values
                   + 2.0 * gr.apply_A(ScalarField(grid, beta1 * w.reshape(grid.shape))).values
                   + 2.0 * beta2 * grad_dot
                   + zero_order * w.reshape(grid.shape))
            return w + dt * gr.apply_A(ScalarField(grid, dmu)).values.ravel()

        return jac_vec

    v_vals = u.values.copy().ravel()
    g_vec = (dt * gr.apply_A(mu_field if mu_field is not None else mu(u, nl), 1).values).ravel()
    norm_u = float(np.linalg.norm(u.values)) * np.sqrt(grid.cell_volume)
    tol = cfg.newton_tol * norm_u

    iters = 0
    while True:
        res = float(np.linalg.norm(g_vec)) * np.sqrt(grid.cell_volume)
        if res <= tol:
            break
        if iters >= cfg.newton_max_iters:
            raise NewtonDivergence(
                f"no convergence in {cfg.newton_max_iters} iterations (residual {res:.3e})")
        iters += 1

        def precond(w: np.ndarray) -> np.ndarray:
            w_hat = gr.transform_forward(ScalarField(grid, w.reshape(grid.shape)))
            return gr.transform_backward(w_hat / precond_diag, grid).values.ravel()

        J = LinearOperator((n_dof, n_dof), matvec=make_jac_vec(v_vals))
        M = LinearOperator((n_dof, n_dof), matvec=precond)
        delta, _ = lgmres(J, -g_vec, M=M, rtol=1e-4, atol=0.0, maxiter=40)

        # damp the update so the iterate keeps the separation guard
        theta = 1.0
        dmax = float(np.max(np.abs(delta)))
        if dmax > 0.0:
            room = bound - np.abs(v_vals)
            pushing = np.abs(v_vals + delta) > bound
            if np.any(pushing):
                theta = min(1.0, 0.95 * float(np.min(room[pushing] / np.abs(delta[pushing]))))
        if theta < 1e-8:
            raise GuardViolation("damping cannot keep the Newton iterate admissible")
        v_vals = v_vals + theta * delta
        np.clip(v_vals, -bound, bound, out=v_vals)
        g_vec = apply_G(v_vals)

    if np.array_equal(v_vals.reshape(grid.shape), u.values):
        u_new = u.copy()  # converged without moving (constants in 0 iterations)
    else:
        new_hat = gr.transform_forward(ScalarField(grid, v_vals.reshape(grid.shape)))
        new_hat.flat[0] = gr.transform_forward(u).flat[0]  # pin the mass mode
        u_new = gr.transform_backward(new_hat, grid)
    e_after = energy(u_new, nl).total
    ok = True if energy_before is None else e_after <= energy_before + cfg.energy_tol
    return StepResult(u_new, dt, ok, max(iters, 1), e_after)


_STEPPERS: dict[str, Callable] = {IMEX: step_imex, NEWTON: step_implicit}


def advance(u0: ScalarField, t_end: float, p, cfg: SolverConfig,
            ledger=None, max_steps: Optional[int] = None) -> ScalarField:
    """March from u0 to t_end (or max_steps accepted steps) adaptively.

    A trial step is rejected, and dt halved, when the energy rises by more
    than ``energy_tol`` or the state leaves the admissible set
    (DomainError / guard errors in exact mode).  Rejection at dt_min raises
    StepFloorError.  Accepted steps with fast inner convergence let dt grow
    by ``growth_factor`` up to dt_max.  If a ledger is given, one row is
    recorded per accepted state, including the initial one.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    nl = _nonlinearity(p, cfg)
    step_fn = _STEPPERS[cfg.scheme]

    u = u0
    t = 0.0
    dt = min(cfg.dt0, t_end)
    rejections_here = 0
    steps = 0
    mu_u = mu(u, nl)
    e_u = energy(u, nl).total
    if ledger is not None:
        ledger.record(u, t, 0.0, nl, mu_field=mu_u, rejections=0)

    while t < t_end - 1e-14 * t_end:
        dt_try = min(dt, t_end - t)
        try:
            result = step_fn(u, dt_try, nl, cfg, mu_field=mu_u, energy_before=e_u)
            ok = result.accepted
        except (DomainError, GuardViolation, NewtonDivergence):
            ok = False
            result = None
        if not ok:
            if dt_try <= cfg.dt_min * (1.0 + 1e-12):
                raise StepFloorError(
                    f"step rejected at dt_min={cfg.dt_min:g} (t={t:.6g}); "
                    "energy dissipation or admissibility cannot be maintained")
            dt = max(cfg.dt_min, 0.5 * dt_try)
            rejections_here += 1
            continue

        u = result.field
        t += dt_try
        steps += 1
        e_u = result.energy_after
        mu_u = mu(u, nl)
        if ledger is not None:
            ledger.record(u, t, dt_try, nl, mu_field=mu_u, rejections=rejections_here)
        rejections_here = 0
        if result.inner_iters <= _FAST_ITERS:
            dt = min(cfg.dt_max, dt_try * cfg.growth_factor)
        else:
            dt = dt_try
        if max_steps is not None and steps >= max_steps:
            break
    return u
