"""Time integration of the coupled string-fluid system.

The flow field is carried as three Duhamel accumulators on the box,
u = A + E + B:

  A  - heat-relaxed response to the string force, driven by the sampled
       Stokes field S of the current curve;
  E  - the propagated initial field;
  B  - the accumulated advective correction.

Each accumulator advances by an exact per-mode exponential recurrence;
the curve advances by the fractional-heat analogue with the on-curve
forcing split into the exact singular part and the grid-sampled smooth
correction A - S + E + B.  Endpoint values are resolved by an inner
fixed-point (Picard) iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import grid_field as gf
from . import stokes_bie as bie
from . import torus_curve as tc

__all__ = [
    "SimState",
    "StepReport",
    "PicardParams",
    "BlowupThresholds",
    "BlowUpError",
    "PicardError",
    "initial_state",
    "stokes_step",
    "ns_step",
    "frozen_h_norm",
    "ReferenceState",
    "initial_reference_state",
    "reference_ib_step",
]


class BlowUpError(RuntimeError):
    """A runtime monitor fired; carries the scenario flags and values."""

    def __init__(self, scenarios: dict, values: dict, t: float):
        self.scenarios = scenarios
        self.values = values
        self.t = t
        fired = ",".join(k for k, v in scenarios.items() if v)
        super().__init__(f"blow-up monitor fired at t={t:.6g}: {fired} ({values})")


class PicardError(RuntimeError):
    """The inner fixed-point iteration stagnated above tolerance."""


@dataclass(frozen=True)
class PicardParams:
    sweeps: int = 2
    tol: float = 1e-10
    max_sweeps: int = 8


@dataclass(frozen=True)
class BlowupThresholds:
    """Operational stand-ins for the three breakdown scenarios."""

    u_lp_ceiling: float = 1e6
    lambda_floor: float = 0.0
    holder_half_ceiling: float = 1e6
    p: float = 4.0

    @classmethod
    def for_radius(cls, radius: float, p: float = 4.0) -> "BlowupThresholds":
        return cls(lambda_floor=1e-4 * radius, p=p)


@dataclass(frozen=True)
class StepReport:
    dt: float
    picard_iterations: int
    picard_residual: float
    residual_history: tuple
    near_fallbacks: int = 0
    dealiased: bool = True


@dataclass(frozen=True)
class SimState:
    """Time, the curve, and the three flow accumulators plus the cached
    Stokes field S of the current curve (projected onto divergence-free)."""

    t: float
    curve: tc.PeriodicCurve
    A: gf.GridField
    E: gf.GridField
    B: gf.GridField
    S: gf.GridField
    nu: float
    flow: object = field(default=None, compare=False, repr=False)

    @property
    def u(self) -> gf.GridField:
        return self.A + self.E + self.B

    def curve_flow(self) -> bie.CurveFlow:
        if self.flow is None:
            object.__setattr__(self, "flow", bie.CurveFlow(self.curve))
        return self.flow


def _project_sample(flow: bie.CurveFlow, spec: gf.GridSpec):
    raw, near = flow.field_on_grid(spec)
    return gf.leray_project(raw), near


def initial_state(curve: tc.PeriodicCurve, u0: gf.GridField, nu: float) -> SimState:
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if not u0.divergence_free:
        raise ValueError("initial field must be divergence-free")
    flow = bie.CurveFlow(curve)
    s_field, _ = _project_sample(flow, u0.spec)
    zero = gf.zero_field(u0.spec)
    return SimState(
        t=0.0, curve=curve, A=zero, E=u0, B=zero, S=s_field, nu=nu, flow=flow
    )


def _curve_fft(curve: tc.PeriodicCurve) -> np.ndarray:
    return np.fft.fft(curve.z)


def _curve_from_fft(zh: np.ndarray) -> tc.PeriodicCurve:
    return tc.dealias_curve(tc.PeriodicCurve.from_complex(np.fft.ifft(zh)))


def _curve_weights(n: int, dt: float):
    k = np.abs(tc._mode_numbers(n)).astype(float)
    z = 0.25 * dt * k
    decay = np.exp(-z)
    p1, p2 = gf.etd_phi_weights(z)
    return decay, p1, p2


def _nodes_fft(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values[:, 0] + 1j * values[:, 1])


def _x_duhamel(zh0, w0, w1, dt, decay, p1, p2):
    wh0 = _nodes_fft(w0)
    wh1 = _nodes_fft(w1) if w1 is not None else wh0
    if w1 is None:
        return decay * zh0 + dt * p1 * wh0
    return decay * zh0 + dt * (p1 * wh0 + p2 * (wh1 - wh0))


def _field_weights(spec: gf.GridSpec, nu: float, dt: float):
    _, _, k2, _, _, _ = gf._wavenumbers(spec.N, spec.L)
    z = nu * dt * k2
    decay = np.exp(-z)
    p1, p2 = gf.etd_phi_weights(z)
    return decay[..., None], (z * p1)[..., None], (z * p2)[..., None], p1[..., None], p2[..., None]


def _advance_forced(A: gf.GridField, s0: gf.GridField, s1: gf.GridField, decay, zp1, zp2):
    """Exact recurrence for the force accumulator with the driving field
    linear in time between its endpoint values s0 and s1."""
    ah = A.fft() * decay + s0.fft() * (zp1 - zp2) + s1.fft() * zp2
    return gf._from_fft(A.spec, ah, divergence_free=True)


def _advance_advective(B: gf.GridField, n0: gf.GridField, n1, dt, decay, p1, p2):
    bh = B.fft() * decay
    nh0 = n0.fft()
    if n1 is None:
        bh -= dt * p1 * nh0
    else:
        bh -= dt * (p1 * nh0 + p2 * (n1.fft() - nh0))
    return gf._from_fft(B.spec, bh, divergence_free=True)


def _curve_monitor_values(curve: tc.PeriodicCurve) -> dict:
    xp = tc.spectral_derivative(curve, 1)
    return {
        "lambda_hat": tc.well_stretched_constant(curve),
        "holder_half": tc.holder_seminorm(xp, 0.5),
    }


def _check_monitors(curve, u_field, t, thresholds: BlowupThresholds | None):
    if thresholds is None:
        return
    values = _curve_monitor_values(curve)
    if u_field is not None:
        values["u_lp"] = gf.lp_norm(u_field, thresholds.p)
    scenarios = {
        "u_lp_escape": values.get("u_lp", 0.0) > thresholds.u_lp_ceiling
        or not np.isfinite(values.get("u_lp", 0.0)),
        "well_stretched_collapse": values["lambda_hat"] < thresholds.lambda_floor,
        "tangent_oscillation": values["holder_half"] > thresholds.holder_half_ceiling,
    }
    if any(scenarios.values()):
        raise BlowUpError(scenarios, values, t)


def stokes_step(
    curve: tc.PeriodicCurve,
    dt: float,
    corrector_sweeps: int = 1,
    thresholds: BlowupThresholds | None = None,
    t: float = 0.0,
) -> tc.PeriodicCurve:
    """One contour step of the zero-Reynolds dynamics (exponential
    integrator with the stated number of fixed-point corrections)."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    decay, p1, p2 = _curve_weights(curve.n_nodes, dt)
    zh0 = _curve_fft(curve)
    g0 = bie.g_remainder(curve)
    new = _curve_from_fft(_x_duhamel(zh0, g0, None, dt, decay, p1, p2))
    for _ in range(corrector_sweeps):
        g1 = bie.g_remainder(new)
        new = _curve_from_fft(_x_duhamel(zh0, g0, g1, dt, decay, p1, p2))
    _check_monitors(new, None, t + dt, thresholds)
    return new


def ns_step(
    state: SimState,
    dt: float,
    picard: PicardParams = PicardParams(),
    thresholds: BlowupThresholds | None = None,
    freeze_curve: bool = False,
) -> tuple[SimState, StepReport]:
    """Advance the coupled system over [t, t + dt]."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    spec = state.A.spec
    nu = state.nu
    decay_f, zp1, zp2, p1_f, p2_f = _field_weights(spec, nu, dt)
    decay_x, p1_x, p2_x = _curve_weights(state.curve.n_nodes, dt)

    flow0 = state.curve_flow()
    u0_field = state.u
    n0 = gf.nonlinear_term(u0_field)
    combo0 = state.A - state.S + state.E + state.B
    w0 = flow0.g_nodes + gf.sample_on_curve(combo0, state.curve)
    zh0 = _curve_fft(state.curve)

    e1 = gf.heat_propagate(state.E, nu * dt)

    # predictor
    if freeze_curve:
        curve1, flow1 = state.curve, flow0
        s1, near = state.S, 0
    else:
        curve1 = _curve_from_fft(_x_duhamel(zh0, w0, None, dt, decay_x, p1_x, p2_x))
        flow1 = bie.CurveFlow(curve1)
        s1, near = _project_sample(flow1, spec)
    a1 = _advance_forced(state.A, state.S, s1, decay_f, zp1, zp2)
    b1 = _advance_advective(state.B, n0, None, dt, decay_f, p1_f, p2_f)

    residuals = []
    iterations = 0
    while True:
        iterations += 1
        u1 = a1 + e1 + b1
        n1 = gf.nonlinear_term(u1)
        if freeze_curve:
            residual = 0.0
        else:
            w1 = flow1.g_nodes + gf.sample_on_curve(a1 - s1 + e1 + b1, curve1)
            zh_new = _x_duhamel(zh0, w0, w1, dt, decay_x, p1_x, p2_x)
            curve_new = _curve_from_fft(zh_new)
            diff = tc.spectral_derivative(
                tc.PeriodicCurve.from_complex(curve_new.z - curve1.z), 1
            )
            residual = float(np.max(np.linalg.norm(diff.nodes, axis=1)))
            curve1 = curve_new
            flow1 = bie.CurveFlow(curve1)
        residuals.append(residual)
        converged = iterations >= picard.sweeps and residual <= picard.tol
        if not freeze_curve and not converged:
            # on the accepted sweep the curve moved at most tol since the
            # last sample, so the cached S stays within tolerance
            s1, near = _project_sample(flow1, spec)
        a1 = _advance_forced(state.A, state.S, s1, decay_f, zp1, zp2)
        b1 = _advance_advective(state.B, n0, n1, dt, decay_f, p1_f, p2_f)
        if converged:
            break
        if iterations >= picard.max_sweeps:
            raise PicardError(
                f"no convergence after {iterations} sweeps, residual {residual:.3e}"
            )

    new_state = SimState(
        t=state.t + dt, curve=curve1, A=a1, E=e1, B=b1, S=s1, nu=nu, flow=flow1
    )
    _check_monitors(curve1, new_state.u, new_state.t, thresholds)
    report = StepReport(
        dt=dt,
        picard_iterations=iterations,
        picard_residual=residuals[-1],
        residual_history=tuple(residuals),
        near_fallbacks=near,
    )
    return new_state, report


def frozen_h_norm(state: SimState) -> float:
    """sup-norm of A - S + e^{nu t Lap} S; identically zero while the curve
    is held fixed (the defining integrand of the memory term vanishes)."""
    relaxed = gf.heat_propagate(state.S, state.nu * state.t)
    h = state.A - state.S + relaxed
    return float(np.max(np.abs(h.values)))


# --- mollified-force reference solver -------------------------------------


@dataclass(frozen=True)
class ReferenceState:
    t: float
    curve: tc.PeriodicCurve
    u: gf.GridField


def initial_reference_state(
    curve: tc.PeriodicCurve, u0: gf.GridField
) -> ReferenceState:
    if not u0.divergence_free:
        raise ValueError("initial field must be divergence-free")
    return ReferenceState(t=0.0, curve=curve, u=u0)


def _reference_rhs(state_curve, u, spec, nu, eps):
    f = bie.mollified_spread(state_curve, spec, eps)
    forced = gf.leray_project(gf.GridField(spec, nu * f.values))
    return forced - gf.nonlinear_term(u)


def reference_ib_step(
    state: ReferenceState, dt: float, eps: float, nu: float
) -> ReferenceState:
    """One step of the classical mollified-force scheme: spread the force,
    advance the grid field exponentially, move nodes with the interpolated
    velocity (midpoint corrector for both)."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    spec = state.u.spec
    decay, _, _, p1, p2 = _field_weights(spec, nu, dt)
    r0 = _reference_rhs(state.curve, state.u, spec, nu, eps)
    k1 = gf.sample_on_curve(state.u, state.curve)

    uh = state.u.fft() * decay + dt * p1 * r0.fft()
    u_star = gf._from_fft(spec, uh, divergence_free=True)
    curve_star = tc.PeriodicCurve(state.curve.nodes + dt * k1)

    r1 = _reference_rhs(curve_star, u_star, spec, nu, eps)
    uh = state.u.fft() * decay + dt * (p1 * r0.fft() + p2 * (r1.fft() - r0.fft()))
    u_new = gf._from_fft(spec, uh, divergence_free=True)
    k2 = gf.sample_on_curve(u_star, curve_star)
    curve_new = tc.PeriodicCurve(state.curve.nodes + 0.5 * dt * (k1 + k2))
    return ReferenceState(t=state.t + dt, curve=curve_new, u=u_new)
