"""Regime-specific constrained flows on the mass sphere.

All solvers share the same skeleton: an explicit projected-gradient step
u <- normalize(u - tau * d, c) with Armijo backtracking, where d is the
tangent part of the relevant gradient.  The trial step size is seeded by
the previous accepted step (Barzilai-Borwein estimate when available),
then halved until the objective decreases; accepted steps are therefore
monotone by construction.

  global_minimize        descent of F          (gamma > 0 bounded regimes)
  local_minimize_capped  descent of F with steps rejected above the
                         kinetic cap A <= k0   (gamma > 0, p > 4, c < c0)
  lambda_branch_minimize descent of I(u) = F(u^s_u) on a fiber branch
  lambda_maximize        ascent of I over the admissible set V
                         (gamma < 0, a between the two coupling thresholds)

The fiber flows never materialize dilations inside the loop: by the
covariance of the gradient under dilation,

    grad I(u) = s^2 (-Delta u) + gamma (w - c log s) u - a s^(p-2) |u|^(p-2) u

with s the branch point of u, evaluated entirely on the original grid.
A dilation is resampled only to recenter the fiber parameter near 1 and
once at the end, after which the flow re-converges so the reported field
itself satisfies the residual certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

from . import constants as K
from .errors import (CapBoundaryError, ConvergenceError, DomainError,
                     GuardFloorError, RegimeError)
from .fiber import (BranchPoint, FiberScalars, critical_points, dilate, g as fiber_g,
                    phi as fiber_phi, t_star)
from .functionals import (EnergyBreakdown, KernelTable, Params, _core, _grad_values,
                          el_residual, energy, kernel_table, kinetic,
                          lagrange_multiplier, pnorm, pohozaev_residual)
from .grid import (Field, Grid, ProfileSpec, boundary_mass_fraction, discretize,
                   mass, normalize, _bump)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "TraceRow",
    "TwoBumpPoint",
    "global_minimize",
    "local_minimize_capped",
    "lambda_branch_minimize",
    "lambda_maximize",
    "two_bump_probe",
    "masscritical_probe",
]


@dataclass(frozen=True)
class SolverConfig:
    """Flow tolerances and step-control knobs."""

    tol_grad: float = 1e-4      # relative tangent-gradient tolerance
    tol_Q: float = 1e-3         # |Q| tolerance relative to A + |gamma| c^2/4
    max_iter: int = 8000
    step0: Optional[float] = None   # default 0.1 / max(1, A(init))
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    v_margin: float = 1e-3      # guard margin to the boundary of V, times k0
    boundary_tol: float = 1e-8  # admissible boundary mass fraction
    trace: bool = False

    def __post_init__(self):
        if self.tol_grad <= 0 or self.tol_Q <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.backtrack < 1.0):
            raise ValueError("backtrack factor must lie in (0, 1)")


@dataclass(frozen=True)
class TraceRow:
    iter: int
    F: float
    Q: float
    grad_res: float
    A: float
    C: float
    V: float


@dataclass
class SolveReport:
    """Converged field plus diagnostics and certificates."""

    field: Field
    breakdown: EnergyBreakdown
    lam: float
    q_value: float
    q_residual: float
    pohozaev_res: float
    el_res: float
    iters: int
    converged: bool
    objective: float
    regime: K.RegimeLabel
    mode: str
    seed: int
    branch: Optional[str] = None
    s_branch: Optional[float] = None
    gpp: Optional[float] = None
    trace: List[TraceRow] = dc_field(default_factory=list)
    extras: dict = dc_field(default_factory=dict)

    def summary(self) -> dict:
        """JSON-ready summary (field values excluded; stored separately)."""
        out = {
            "mode": self.mode,
            "converged": self.converged,
            "objective_F": self.objective,
            "lambda": self.lam,
            "q_value": self.q_value,
            "q_residual": self.q_residual,
            "pohozaev_residual": self.pohozaev_res,
            "el_residual": self.el_res,
            "iters": self.iters,
            "seed": self.seed,
            "breakdown": {
                "A": self.breakdown.A,
                "C": self.breakdown.C,
                "V": self.breakdown.V,
                "V1": self.breakdown.V1,
                "V2": self.breakdown.V2,
                "F": self.breakdown.F,
                "star_norm": self.breakdown.star_norm,
            },
            "regime": {"tag": self.regime.tag, "certificate": self.regime.certificate},
        }
        if self.branch is not None:
            out["branch"] = self.branch
            out["s_branch"] = self.s_branch
            out["gpp"] = self.gpp
        out.update(self.extras)
        return out


def _as_field(init: Union[ProfileSpec, Field], grid: Grid, c: float) -> Field:
    if isinstance(init, Field):
        if init.grid != grid:
            raise ValueError("init field lives on a different grid")
        return normalize(init, c)
    return normalize(discretize(init, grid), c)


def gaussian_on_branch(params: Params, branch: str,
                       sigma0: float = 1.0) -> ProfileSpec:
    """Gaussian profile whose fiber critical point of the requested branch
    sits at s = 1 (up to discretization).

    Dilating a Gaussian yields another Gaussian, so the projection is done
    analytically on the width: sigma* = sigma0 / s_branch(sigma0), with the
    fiber scalars of the mass-c Gaussian in closed form (A = c/sigma^2,
    C = (c/pi)^(p/2) (2 pi/p) sigma^(2-p))."""
    c, p = params.c, params.p
    A = c / sigma0 ** 2
    C = (c / math.pi) ** (0.5 * p) * (2.0 * math.pi / p) * sigma0 ** (2.0 - p)
    sc = FiberScalars(A=A, C=C, V=0.0, params=params)
    s = _branch_of(sc, branch).s
    return ProfileSpec.gaussian(sigma=sigma0 / s, c=c)


def _gn_on_branch(grid: Grid, params: Params, branch: str) -> Field:
    """Gagliardo-Nirenberg optimizer shape regenerated so the requested
    fiber branch point sits at s = 1; the dilation is absorbed into the
    radial stretch of the 1D profile, never resampled on the grid."""
    table = kernel_table(grid)
    stretch = 0.35 * grid.extent / K.ground_state_radial(params.p).r_stop
    u = K.gn_profile_field(grid, params.p, params.c, stretch=stretch)
    for _ in range(4):
        core = _core(u, params, table)
        sc = FiberScalars(A=core.A, C=core.C, V=core.V, params=params)
        s = _branch_of(sc, branch).s
        if abs(s - 1.0) < 1e-6:
            break
        stretch /= s
        u = K.gn_profile_field(grid, params.p, params.c, stretch=stretch)
    return u


def _q_scale(A: float, params: Params) -> float:
    return A + 0.25 * abs(params.gamma) * params.c ** 2


def _l2(values: np.ndarray, h: float) -> float:
    return math.sqrt(h * h * float(np.sum(values * values)))


def _finalize(u: Field, params: Params, table: KernelTable, regime: K.RegimeLabel,
              cfg: SolverConfig, mode: str, iters: int, converged: bool,
              trace: List[TraceRow], branch_info=None) -> SolveReport:
    bd = energy(u, params, table)
    lam = lagrange_multiplier(u, params, table)
    q = bd.A - params.a * (params.p - 2.0) / params.p * bd.C \
        - 0.25 * params.gamma * params.c ** 2
    report = SolveReport(
        field=u,
        breakdown=bd,
        lam=lam,
        q_value=q,
        q_residual=abs(q) / _q_scale(bd.A, params),
        pohozaev_res=pohozaev_residual(u, params, lam, table),
        el_res=el_residual(u, params, lam, table),
        iters=iters,
        converged=converged,
        objective=bd.F,
        regime=regime,
        mode=mode,
        seed=cfg.seed,
        trace=trace,
    )
    report.extras["boundary_mass_fraction"] = boundary_mass_fraction(u)
    if branch_info is not None:
        report.branch, report.s_branch, report.gpp = branch_info
    return report


# ---------------------------------------------------------------------------
# Energy descent (global and capped)
# ---------------------------------------------------------------------------


def _descend_energy(u: Field, params: Params, cfg: SolverConfig,
                    table: KernelTable, regime: K.RegimeLabel, mode: str,
                    cap: Optional[float] = None) -> SolveReport:
    h = u.grid.h
    c = params.c
    core = _core(u, params, table)
    tau = cfg.step0 if cfg.step0 is not None else 0.1 / max(1.0, core.A)
    trace: List[TraceRow] = []
    prev_u = prev_d = None
    converged = False
    it = 0
    boundary_strikes = 0

    for it in range(cfg.max_iter):
        grad = _grad_values(u.values, params, core)
        lam = -(core.A + params.gamma * core.V - params.a * core.C) / c
        d = grad + lam * u.values
        dnorm = _l2(d, h)
        res = dnorm / (1.0 + _l2(grad, h))
        q = core.A - params.a * (params.p - 2.0) / params.p * core.C \
            - 0.25 * params.gamma * c ** 2
        qres = abs(q) / _q_scale(core.A, params)
        if cfg.trace:
            trace.append(TraceRow(it, core.F, q, res, core.A, core.C, core.V))
        if res < cfg.tol_grad and qres < cfg.tol_Q:
            converged = True
            break
        if res < 1e-3 * cfg.tol_grad:
            break  # at the stationarity floor; Q will not improve by flowing
        if it % 25 == 0:
            frac = boundary_mass_fraction(u)
            boundary_strikes = boundary_strikes + 1 if frac > cfg.boundary_tol else 0
            if frac > 1e-4 or boundary_strikes >= 3:
                raise DomainError(
                    f"{mode}: iterate leaks mass through the boundary frame "
                    f"(fraction {frac:.2e}); the domain is too small")

        # Barzilai-Borwein trial step from the previous accepted move.
        if prev_u is not None:
            s_vec = u.values - prev_u
            y_vec = d - prev_d
            sy = float(np.sum(s_vec * y_vec))
            if sy > 0:
                tau = min(max(float(np.sum(s_vec * s_vec)) / sy, 1e-12), 1e3)
        prev_u, prev_d = u.values, d

        accepted = False
        step = tau
        for _ in range(60):
            v = normalize(Field(u.grid, u.values - step * d), c)
            core_v = _core(v, params, table)
            if cap is not None and core_v.A > cap:
                step *= cfg.backtrack
                continue
            if core_v.F <= core.F - cfg.armijo * step * dnorm * dnorm:
                u, core = v, core_v
                tau = step
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            if cap is not None and core.A > 0.999 * cap:
                raise CapBoundaryError(
                    f"{mode}: flow pinned at the kinetic cap A = k0 = {cap}; "
                    "this contradicts interiority of the capped minimizer and "
                    "signals a discretization or regime error",
                    report=_finalize(u, params, table, regime, cfg, mode, it,
                                     False, trace),
                )
            break  # line search exhausted: accept current point as stationary

    if not converged:
        # Re-test the residuals at the final point before giving up.
        grad = _grad_values(u.values, params, core)
        lam = -(core.A + params.gamma * core.V - params.a * core.C) / c
        res = _l2(grad + lam * u.values, h) / (1.0 + _l2(grad, h))
        q = core.A - params.a * (params.p - 2.0) / params.p * core.C \
            - 0.25 * params.gamma * c ** 2
        converged = res < cfg.tol_grad and abs(q) / _q_scale(core.A, params) < cfg.tol_Q
    report = _finalize(u, params, table, regime, cfg, mode, it, converged, trace)
    if cap is not None:
        report.extras["k0"] = cap
        report.extras["cap_interior"] = report.breakdown.A < cap
        if converged and not report.breakdown.A < cap:
            raise CapBoundaryError(
                f"{mode}: converged onto the kinetic cap", report=report)
    if not converged:
        raise ConvergenceError(
            f"{mode}: no convergence within {cfg.max_iter} iterations "
            f"(tangent residual {res:.3e})", report=report)
    return report


def global_minimize(params: Params, grid: Grid, config: SolverConfig,
                    init: Union[ProfileSpec, Field]) -> SolveReport:
    """Minimize F over the mass sphere in a bounded regime.

    Valid when the classifier reports GlobalMin or GlobalMinMassCritical;
    refuses to start otherwise, quoting the certificate."""
    sharp = K.sharp_constants(params.p)
    regime = K.regime_classify(params, sharp)
    if regime.tag not in ("GlobalMin", "GlobalMinMassCritical"):
        raise RegimeError(
            f"global_minimize requires a bounded-below regime, "
            f"classifier says {regime.tag}: {regime.certificate['conditions']}"
        )
    table = kernel_table(grid)
    u0 = _as_field(init, grid, params.c)
    report = _descend_energy(u0, params, config, table, regime, "global_minimize")
    # Analytic lower-bound diagnostic at the converged kinetic level.
    A = report.breakdown.A
    bound = 0.5 * A - 0.25 * abs(params.gamma) * sharp.kv2 * math.sqrt(A) * params.c ** 1.5
    if params.a > 0:
        bound -= (params.a / params.p) * sharp.kgn * A ** (0.5 * params.p - 1.0) * params.c
    report.extras["lower_bound"] = bound
    report.extras["lower_bound_ok"] = bool(report.breakdown.F >= bound)
    return report


def local_minimize_capped(params: Params, grid: Grid, config: SolverConfig,
                          init: Union[ProfileSpec, Field]) -> SolveReport:
    """Minimize F on the kinetic cap A <= k0 (gamma > 0, a > 0, p > 4, c < c0).

    Trial steps that cross the cap are rejected; the converged iterate must
    be strictly interior, otherwise CapBoundaryError is raised."""
    sharp = K.sharp_constants(params.p)
    regime = K.regime_classify(params, sharp)
    if regime.tag != "LocalMinPlusMountainPass":
        raise RegimeError(
            f"local_minimize_capped requires gamma > 0, a > 0, p > 4, c < c0; "
            f"classifier says {regime.tag}: {regime.certificate['conditions']}"
        )
    table = kernel_table(grid)
    cap = K.k0(params)
    u0 = _as_field(init, grid, params.c)
    A0 = _core(u0, params, table).A
    if A0 > 0.9 * cap:
        # Pre-contract along the fiber: A(u^t) = t^2 A puts the init inside.
        u0 = normalize(dilate(u0, math.sqrt(0.8 * cap / A0)), params.c)
    return _descend_energy(u0, params, config, table, regime,
                           "local_minimize_capped", cap=cap)


# ---------------------------------------------------------------------------
# Fiber-branch flows
# ---------------------------------------------------------------------------


def _branch_of(sc: FiberScalars, branch: str) -> BranchPoint:
    for bp in critical_points(sc):
        if bp.branch == branch:
            return bp
    raise RegimeError(f"fiber has no {branch} critical point for these scalars")


def _smooth_direction(vals: np.ndarray, table: KernelTable,
                      beta: float = 0.25) -> np.ndarray:
    """Inverse-Helmholtz (1 - beta Delta)^-1 applied spectrally on the
    padded grid: the Sobolev-metric representation of a gradient
    direction.  The change of metric removes the Laplacian stiffness from
    the flow while keeping every step a descent step; the short-range
    kernel (decay length sqrt(beta)) keeps the direction from smearing
    mass toward the boundary frame."""
    import scipy.fft as sfft

    n = vals.shape[0]
    pad = np.zeros((2 * n, 2 * n))
    pad[:n, :n] = vals
    spec = sfft.rfft2(pad) / (1.0 + beta * table.k2)
    return sfft.irfft2(spec, s=(2 * n, 2 * n))[:n, :n]


def _fiber_direction(vals: np.ndarray, grid: Grid) -> np.ndarray:
    """Tangent of the dilation orbit at u: d/dt (t u(tx)) at t=1 = u + x.grad u.

    Second-order differences are plenty here; the vector is only used to
    project numerical drift along the orbit out of step directions."""
    x = grid.coords1d()
    du_dx = np.gradient(vals, grid.h, axis=0)
    du_dy = np.gradient(vals, grid.h, axis=1)
    return vals + x[:, None] * du_dx + x[None, :] * du_dy


def _fiber_flow(u: Field, params: Params, cfg: SolverConfig, table: KernelTable,
                regime: K.RegimeLabel, mode: str, branch: str, sense: int,
                guard_v: bool) -> SolveReport:
    """Descent (sense=+1) or ascent (sense=-1) of I(u) = F(u^{s_u}).

    The gradient of I is evaluated by dilation covariance entirely on the
    original grid.  Step directions are taken in a Sobolev metric and
    projected against both the mass constraint and the dilation-orbit
    direction, so the fiber parameter s stays pinned near 1 without any
    mid-flow resampling; the closing loop materializes the branch dilation
    (a near-identity resample) and re-converges until the reported field
    itself certifies."""
    h = u.grid.h
    c = params.c
    p = params.p
    k0_level = K.k0(params) if guard_v else None
    recenters = 0
    trace: List[TraceRow] = []
    prev_u = prev_d = None
    tau = None
    converged = False
    it = 0
    res = math.inf
    boundary_strikes = 0

    # Resolution guard: iterates whose effective width c/A falls below a
    # couple of grid cells are rejected (drift along fibers could otherwise
    # concentrate the iterate past what the grid resolves).
    a_resolved = c / (2.0 * h) ** 2

    def eval_point(w: Field):
        core = _core(w, params, table)
        if core.A > a_resolved:
            return core, None, None
        sc = FiberScalars(A=core.A, C=core.C, V=core.V, params=params)
        if guard_v:
            ts = t_star(sc)
            if ts * ts * sc.A <= (1.0 + cfg.v_margin) * k0_level:
                return core, sc, None  # outside the guarded interior of V
        bp = _branch_of(sc, branch)
        return core, sc, bp

    core, sc, bp = eval_point(u)
    if bp is None:
        raise RegimeError(
            f"{mode}: initial field is not admissible (outside V, or more "
            "concentrated than the grid resolves)")
    tau = cfg.step0 if cfg.step0 is not None else 0.1 / max(1.0, core.A)

    for it in range(cfg.max_iter):
        s = bp.s
        log_s = math.log(s)
        sp2 = s ** (p - 2.0)
        nonlin = np.abs(u.values) ** (p - 2.0) * u.values
        gradI = (s * s * core.neg_lap
                 + params.gamma * (core.w - c * log_s) * u.values
                 - params.a * sp2 * nonlin)
        lamI = -(s * s * core.A + params.gamma * (core.V - c * c * log_s)
                 - params.a * sp2 * core.C) / c
        d_raw = gradI + lamI * u.values
        # The dilation-orbit component of the raw gradient is pure
        # discretization noise (I is invariant along orbits); project it out
        # of both the step direction and the convergence measure.  The
        # orbit direction of the reported solution is separately certified
        # through Q, which vanishes on the Pohozaev set.
        fib = _fiber_direction(u.values, u.grid)
        fib -= (h * h * float(np.sum(fib * u.values)) / c) * u.values
        fib_norm2 = h * h * float(np.sum(fib * fib))
        if fib_norm2 > 0:
            d_raw = d_raw - (h * h * float(np.sum(d_raw * fib)) / fib_norm2) * fib
        res = _l2(d_raw, h) / (1.0 + _l2(gradI, h))
        q_here = fiber_phi(sc, 1.0)
        qres = abs(q_here) / _q_scale(core.A, params)
        if cfg.trace:
            trace.append(TraceRow(it, core.F, q_here, res, core.A, core.C, core.V))

        if res < cfg.tol_grad:
            if qres < cfg.tol_Q:
                converged = True
                break
            # Tangent-converged but off the Pohozaev set: materialize the
            # branch dilation (s is near 1 by now), then keep flowing.
            if recenters >= 8:
                break
            u = normalize(dilate(u, s), c)
            core, sc, bp = eval_point(u)
            if bp is None:
                raise GuardFloorError(f"{mode}: recentered iterate is no "
                                      "longer admissible")
            recenters += 1
            prev_u = prev_d = None
            continue

        if abs(s - 1.0) > 0.4:
            # Safety recentering; rarely reached with the orbit projection.
            u = normalize(dilate(u, s), c)
            core, sc, bp = eval_point(u)
            if bp is None:
                raise GuardFloorError(f"{mode}: recentered iterate is no "
                                      "longer admissible")
            recenters += 1
            prev_u = prev_d = None
            continue

        if it % 25 == 0:
            frac = boundary_mass_fraction(u)
            boundary_strikes = boundary_strikes + 1 if frac > cfg.boundary_tol else 0
            if frac > 1e-4 or boundary_strikes >= 3:
                raise DomainError(
                    f"{mode}: iterate leaks mass through the boundary frame "
                    f"(fraction {frac:.2e}); the domain is too small")

        # Sobolev-metric direction, projected against the sphere tangent and
        # the dilation orbit.
        d_h = _smooth_direction(d_raw, table)
        d = d_h - (h * h * float(np.sum(d_h * u.values)) / c) * u.values
        if fib_norm2 > 0:
            d -= (h * h * float(np.sum(d * fib)) / fib_norm2) * fib
        slope = h * h * float(np.sum(d_raw * d))  # <grad, d> in L2
        if slope <= 0:
            d = d_raw
            slope = h * h * float(np.sum(d_raw * d))

        if prev_u is not None:
            s_vec = u.values - prev_u
            y_vec = d - prev_d
            sy = sense * float(np.sum(s_vec * y_vec))
            if sy > 0:
                tau = min(max(float(np.sum(s_vec * s_vec)) / sy, 1e-12), 1.0)
        prev_u, prev_d = u.values, d

        accepted = False
        step = tau
        guard_rejects = 0
        for _ in range(60):
            v = normalize(Field(u.grid, u.values - sense * step * d), c)
            core_v, sc_v, bp_v = eval_point(v)
            if bp_v is None:
                guard_rejects += 1
                step *= cfg.backtrack
                continue
            gain = sense * (bp.g - bp_v.g)
            if gain >= cfg.armijo * step * slope:
                u, core, sc, bp = v, core_v, sc_v, bp_v
                tau = step
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            if guard_rejects >= 40:
                raise GuardFloorError(
                    f"{mode}: step floor reached against the boundary of V; "
                    "the iterate is being driven to a degenerate fiber",
                    report=_finalize(u, params, table, regime, cfg, mode, it,
                                     False, trace, (branch, bp.s, bp.gpp)),
                )
            break

    # Certify on the materialized branch point when the fiber parameter has
    # not fully recentered.
    if abs(bp.s - 1.0) > 1e-9:
        u = normalize(dilate(u, bp.s), c)
        core, sc, bp2 = eval_point(u)
        bp = bp2 if bp2 is not None else bp
    report = _finalize(u, params, table, regime, cfg, mode, it, converged,
                       trace, (branch, bp.s, bp.gpp))
    report.extras["recenters"] = recenters
    ok = (report.q_residual < cfg.tol_Q and converged)
    report.converged = bool(ok)
    if not ok:
        raise ConvergenceError(
            f"{mode}: no certified convergence within {cfg.max_iter} iterations "
            f"(tangent residual {res:.3e}, q residual {report.q_residual:.3e})",
            report=report)
    return report


def lambda_branch_minimize(params: Params, grid: Grid, config: SolverConfig,
                           init: Union[ProfileSpec, Field], branch: str) -> SolveReport:
    """Minimize F over a fiber branch (gamma > 0, a > 0, p > 4, c < c0).

    branch='plus' targets the local minimizer (same solution as the capped
    minimization); branch='minus' the mountain-pass point."""
    if branch not in ("plus", "minus"):
        raise ValueError(f"unknown branch {branch!r}")
    sharp = K.sharp_constants(params.p)
    regime = K.regime_classify(params, sharp)
    if regime.tag != "LocalMinPlusMountainPass":
        raise RegimeError(
            f"lambda_branch_minimize requires gamma > 0, a > 0, p > 4, c < c0; "
            f"classifier says {regime.tag}: {regime.certificate['conditions']}"
        )
    table = kernel_table(grid)
    u0 = _as_field(init, grid, params.c)
    return _fiber_flow(u0, params, config, table, regime,
                       f"lambda_branch_minimize[{branch}]", branch,
                       sense=+1, guard_v=False)


def lambda_maximize(params: Params, grid: Grid, config: SolverConfig,
                    init: Union[ProfileSpec, Field],
                    branch: str = "minus") -> SolveReport:
    """Maximize F over a fiber branch inside V (gamma < 0, a > 0, p < 4).

    Requires the coupling at or above the lower threshold; two-branch runs
    need it strictly between the thresholds.  At the lower threshold
    exactly, V has empty interior and the run degenerates to the projected
    Gagliardo-Nirenberg optimizer, reported without gradient iteration."""
    if branch not in ("plus", "minus"):
        raise ValueError(f"unknown branch {branch!r}")
    sharp = K.sharp_constants(params.p)
    regime = K.regime_classify(params, sharp)
    if regime.tag == "TwoCriticalPointsOnLambda":
        table = kernel_table(grid)
        u0 = _as_field(init, grid, params.c)
        return _fiber_flow(u0, params, config, table, regime,
                           f"lambda_maximize[{branch}]", branch,
                           sense=-1, guard_v=True)
    if regime.tag == "MaxOnLambda":
        return _degenerate_threshold_report(params, grid, config, regime)
    raise RegimeError(
        f"lambda_maximize requires the coupling at or above the lower "
        f"threshold with p < 4 and gamma < 0; classifier says {regime.tag}: "
        f"{regime.certificate['conditions']}"
    )


def _degenerate_threshold_report(params: Params, grid: Grid, cfg: SolverConfig,
                                 regime: K.RegimeLabel) -> SolveReport:
    """At a = K1 threshold the Pohozaev set collapses onto the optimizer's
    fiber: report its projection, certified by the Q residual alone."""
    table = kernel_table(grid)
    u = K.gn_profile_field(grid, params.p, params.c)
    core = _core(u, params, table)
    sc = FiberScalars(A=core.A, C=core.C, V=core.V, params=params)
    ts = t_star(sc)
    u = normalize(dilate(u, ts), params.c)
    report = _finalize(u, params, table, regime, cfg, "lambda_maximize[threshold]",
                       0, True, [], (None, ts, None))
    report.converged = bool(report.q_residual < max(cfg.tol_Q, 1e-2))
    report.extras["degenerate_threshold_mode"] = True
    return report


# ---------------------------------------------------------------------------
# Verification probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoBumpPoint:
    n: int
    q: float
    f: float
    q_pred: float


def two_bump_probe(params: Params, grid: Grid, n_list: Sequence[int],
                   eta: float = 0.1) -> List[TwoBumpPoint]:
    """Energy collapse along the two-bump sequence
    u_n = u + (1/n) v((x - nR e1)/n).

    The stationary lobe u (mass (1-eta) c, compactly supported bump dilated
    to minimize its contribution to Q) carries the negativity of the
    disjoint-support limit A(u) - a (p-2)/p C(u) + |gamma| c^2/4 = lim Q(u_n);
    the spreading lobe v carries the small mass fraction eta, so its
    shrinking p-norm term (~ eta^(3/2) / n^(p-2)) is dominated by the
    growing log interaction (~ |gamma| eta log n) and F(u_n) decreases
    strictly along n."""
    gam, a, p, c = params.gamma, params.a, params.p, params.c
    if not (gam < 0.0 and a > 0.0 and 2.0 < p < 4.0):
        raise RegimeError("two_bump_probe requires gamma < 0, a > 0, 2 < p < 4")
    if not (0.0 < eta < 1.0):
        raise ValueError("mass split eta must lie in (0, 1)")
    t1, _ = K.a_thresholds(p, gam, c, K.kgn_estimate(p))
    if a <= t1:
        raise RegimeError(
            f"two_bump_probe requires the coupling above the lower threshold "
            f"{t1:.6g}, got a={a}")
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise ValueError("n_list must contain positive integers")
    table = kernel_table(grid)
    n_max = max(n_list)
    h = grid.h

    # Stationary-lobe radius minimizing the Q limit at mass (1-eta) c.
    rho = _optimal_lobe_radius(params, grid, mass_fraction=1.0 - eta)
    R = 2.2 * rho
    edge = n_max * (R + rho)
    if edge > 0.39 * grid.extent:
        raise DomainError(
            f"two-bump geometry needs half-extent {edge / 0.39:.1f}, grid has "
            f"{grid.extent}; enlarge the domain or reduce n")

    X, Y = grid.meshgrid()
    lobe_u = normalize(Field(grid, _bump(np.hypot(X, Y), rho)), (1.0 - eta) * c)
    amp_v = math.sqrt(eta * c /
                      mass(Field(grid, _bump(np.hypot(X, Y), rho))))
    A_u, C_u = kinetic(lobe_u, table), pnorm(lobe_u, p)
    v_ref = Field(grid, amp_v * _bump(np.hypot(X - R, Y), rho))
    A_v, C_v = kinetic(v_ref, table), pnorm(v_ref, p)
    q_limit = A_u - a * (p - 2.0) / p * C_u - 0.25 * gam * c * c
    if q_limit >= 0.0:
        raise RegimeError(
            f"two-bump limit Q = {q_limit:.4f} is nonnegative: the coupling "
            "is too close to the threshold for bump lobes; increase a")

    out: List[TwoBumpPoint] = []
    for n in n_list:
        r1 = np.hypot((X - n * R) / n, Y / n)
        u_n = lobe_u + Field(grid, (amp_v / n) * _bump(r1, rho))
        bd = energy(u_n, params, table)
        q = bd.A - a * (p - 2.0) / p * bd.C - 0.25 * gam * c * c
        q_pred = (A_u + A_v * n ** -2.0
                  - a * (p - 2.0) / p * (C_u + C_v * float(n) ** (2.0 - p))
                  - 0.25 * gam * c * c)
        out.append(TwoBumpPoint(n=n, q=q, f=bd.F, q_pred=q_pred))
    return out


def _optimal_lobe_radius(params: Params, grid: Grid,
                         mass_fraction: float = 0.5) -> float:
    """Radius of the bump carrying the given mass fraction that minimizes
    its disjoint-support Q contribution; closed form through the scaling
    A ~ rho^-2, C ~ rho^(2-p) of the fixed bump shape."""

    def bump(r):
        return np.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0

    tau = 2.0 * np.pi
    m1, _ = quad(lambda r: tau * r * bump(r) ** 2, 0.0, 1.0)
    a1, _ = quad(lambda r: tau * r * (2.0 * r / (1.0 - r * r) ** 2) ** 2
                 * bump(r) ** 2, 0.0, 1.0 - 1e-9)
    p = params.p
    c1, _ = quad(lambda r: tau * r * bump(r) ** p, 0.0, 1.0)
    m_lobe = mass_fraction * params.c
    # For amplitude alpha and radius rho: mass = alpha^2 rho^2 m1,
    # A = alpha^2 a1 (scale invariant), C = alpha^p rho^2 c1.  The Q
    # contribution A(rho) - a (p-2)/p C(rho) is minimized where
    # 2 A = a (p-2)^2/p C, which fixes rho^(4-p).
    coef = params.a * (p - 2.0) ** 2 / p
    ratio = 2.0 * m_lobe * a1 / m1 / (coef * (m_lobe / m1) ** (0.5 * p) * c1)
    rho = ratio ** (1.0 / (4.0 - p))
    # Guard against grids too coarse to resolve the lobe.
    return float(max(rho, 6.0 * grid.h))


def masscritical_probe(params: Params, grid: Grid) -> List[Tuple[float, float]]:
    """Fiber energies F(u^t) along t = 2^k, k = 0..6, for the
    Gagliardo-Nirenberg optimizer shape scaled to mass c at p = 4.

    Above the mass threshold 2/(a K_GN) the ray is unbounded below; below
    it the minimum along the ray is finite and interior."""
    if params.p != 4.0 or params.gamma <= 0.0 or params.a <= 0.0:
        raise RegimeError("masscritical_probe requires p = 4, gamma > 0, a > 0")
    table = kernel_table(grid)
    u = K.gn_profile_field(grid, 4.0, params.c)
    core = _core(u, params, table)
    sc = FiberScalars(A=core.A, C=core.C, V=core.V, params=params)
    return [(float(t), fiber_g(sc, float(t))) for t in (2.0 ** k for k in range(7))]
