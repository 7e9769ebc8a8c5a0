"""Explicit time integration of u_t = lap(u^m) + g(u, |grad u|).

The degenerate diffusion is discretized in conservative flux form with
arithmetic face-averaged mobility m u^(m-1); no epsilon-regularization is
applied, so compactly supported fronts stay sharp.  Time stepping is
explicit with an adaptive CFL-limited dt that shrinks as the sup-norm grows,
which is what a blow-up trajectory needs anyway.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn

from .geometry import gradient, grad_norm_sq, integrate_volume
from .functionals import (
    FunctionalError,
    boundary_term,
    grad_energy,
    phi,
    psi,
    w_measure,
)

SOURCE_KINDS = ("power_absorption", "gradient_absorption", "none")

TRACE_COLUMNS = (
    "t",
    "dt",
    "sup_u",
    "phi",
    "psi",
    "w_measure",
    "grad_energy",
    "boundary_integral",
    "clamped_mass",
)


class SpecError(ValueError):
    """Invalid problem parameters."""


class BlowupDetectionError(RuntimeError):
    """detect_blowup called without a threshold crossing."""


@dataclass
class ProblemSpec:
    """PDE parameters for u_t = lap(u^m) + g with k u_nu + h u = 0."""

    m: float
    p: float = 1.0
    q: float = 1.0
    k1: float = 0.0
    k2: float = 0.0
    h: float = 1.0
    k: int = 1  # 0 -> Dirichlet u = 0, 1 -> Robin u_nu = -h u
    source_kind: str = "none"

    def __post_init__(self):
        if self.m <= 1:
            raise SpecError("diffusion exponent m must exceed 1 (slow diffusion)")
        if self.h <= 0:
            raise SpecError("boundary coefficient h must be positive")
        if self.p < 1 or self.q < 1:
            raise SpecError("source powers p, q must be >= 1")
        if self.k1 < 0 or self.k2 < 0:
            raise SpecError("source coefficients k1, k2 must be nonnegative")
        if self.k not in (0, 1):
            raise SpecError("boundary kind k must be 0 (Dirichlet) or 1 (Robin)")
        if self.source_kind not in SOURCE_KINDS:
            raise SpecError(f"unknown source kind {self.source_kind!r}")


@dataclass
class Field:
    """Nonnegative grid function at one time instant."""

    values: np.ndarray
    time: float = 0.0


@dataclass
class SimStatus:
    kind: str  # ran_to_end | blowup | step_failure
    t_end: float | None = None
    t_estimate: float | None = None
    sup_at_stop: float | None = None
    reason: str | None = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "t_end": self.t_end,
            "t_estimate": self.t_estimate,
            "sup_at_stop": self.sup_at_stop,
            "reason": self.reason,
        }


class Trace:
    """Time series of the simulated diagnostics (one row per sample)."""

    columns = TRACE_COLUMNS

    def __init__(self):
        self.rows = []
        self.clamp_flagged = False

    def append(self, **kw):
        self.rows.append(tuple(kw.get(c, np.nan) for c in self.columns))

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(float(v)) for v in row])


@dataclass
class RunResult:
    trace: "Trace"
    status: SimStatus
    final: Field


@dataclass
class RunControls:
    """Integration controls for :func:`run`."""

    t_end: float
    u_max: float = 1e8
    cadence: int = 50
    safety: float = 0.25
    dt_min: float = 1e-18
    window: int = 20
    max_steps: int | None = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise SpecError("t_end must be positive")
        if self.cadence < 1:
            raise SpecError("trace cadence must be >= 1")


# -- spatial operators --------------------------------------------------


def _pad(u, axis, dx, spec):
    """Add ghost planes along one axis implementing the boundary condition."""
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    if spec.k == 1:
        lo[axis], hi[axis] = slice(1, 2), slice(-2, -1)
        inner_lo, inner_hi = u[tuple(lo)], u[tuple(hi)]
        lo[axis], hi[axis] = slice(0, 1), slice(-1, None)
        ghost_lo = inner_lo - 2 * dx * spec.h * u[tuple(lo)]
        ghost_hi = inner_hi - 2 * dx * spec.h * u[tuple(hi)]
    else:
        # Dirichlet: boundary nodes are pinned to zero, ghost value is inert
        lo[axis], hi[axis] = slice(0, 1), slice(-1, None)
        ghost_lo, ghost_hi = u[tuple(lo)], u[tuple(hi)]
    return np.concatenate([ghost_lo, u, ghost_hi], axis=axis)


def pme_divergence(domain, u, spec):
    """Conservative-flux discretization of lap(u^m)."""
    if domain.kind == "ball":
        raise SpecError("time integration supports interval/box domains only")
    m = spec.m
    out = np.zeros_like(u)
    for axis in range(domain.dim):
        dx = domain.spacing[axis]
        P = _pad(u, axis, dx, spec)
        mob = m * np.maximum(P, 0.0) ** (m - 1.0)
        a = [slice(None)] * u.ndim
        b = [slice(None)] * u.ndim
        a[axis], b[axis] = slice(None, -1), slice(1, None)
        mob_face = 0.5 * (mob[tuple(a)] + mob[tuple(b)])
        flux = mob_face * np.diff(P, axis=axis) / dx
        out += np.diff(flux, axis=axis) / dx
    if spec.k == 0:
        bmask = domain.boundary_node_mask()
        out[bmask] = 0.0
    return out


def evaluate_source(domain, u, spec):
    """Pointwise source g(u, |grad u|)."""
    u = np.asarray(u, dtype=float)
    if spec.source_kind == "none":
        return np.zeros_like(u)
    if spec.source_kind == "power_absorption":
        return spec.k1 * u**spec.p - spec.k2 * u**spec.q
    gmag = np.sqrt(grad_norm_sq(domain, u))
    return spec.k1 * u**spec.p - spec.k2 * gmag**spec.q


def stable_dt(domain, u, spec, safety):
    """CFL-limited step from the current sup-norm and source slope."""
    sup = float(u.max())
    mob = spec.m * max(sup, 1e-30) ** (spec.m - 1.0)
    diff_rate = 2.0 * mob * sum(1.0 / dx**2 for dx in domain.spacing)
    src_rate = 0.0
    if spec.source_kind == "power_absorption":
        src_rate = spec.k1 * spec.p * sup ** (spec.p - 1.0)
        src_rate += spec.k2 * spec.q * sup ** (spec.q - 1.0)
    elif spec.source_kind == "gradient_absorption":
        gmax = float(np.sqrt(grad_norm_sq(domain, u)).max())
        src_rate = spec.k1 * spec.p * sup ** (spec.p - 1.0)
        if gmax > 0:
            src_rate += spec.k2 * gmax**spec.q / max(sup, 1e-30)
    return safety / (diff_rate + src_rate + 1e-30)


def step(domain, u, spec, dt):
    """One explicit update; returns (new values, clamped mass)."""
    if dt <= 0:
        raise SpecError("dt must be positive")
    du = pme_divergence(domain, u, spec) + evaluate_source(domain, u, spec)
    new = u + dt * du
    if spec.k == 0:
        new[domain.boundary_node_mask()] = 0.0
    clamped = np.where(new < 0, -new, 0.0)
    clamped_mass = integrate_volume(domain, clamped)
    return np.maximum(new, 0.0), clamped_mass


# -- trace recording ----------------------------------------------------


def _record(trace, domain, u, spec, t, dt, clamped_total):
    try:
        psi_val = psi(domain, u, spec) if spec.k == 1 else np.nan
    except FunctionalError:
        psi_val = np.nan
    try:
        w_val = w_measure(domain, u, spec.m, spec.p)
    except FunctionalError:
        w_val = np.nan
    trace.append(
        t=t,
        dt=dt,
        sup_u=float(u.max()),
        phi=phi(domain, u, spec.m),
        psi=psi_val,
        w_measure=w_val,
        grad_energy=grad_energy(domain, u, spec.m),
        boundary_integral=boundary_term(domain, u, spec.m)
        if domain.kind != "ball"
        else np.nan,
        clamped_mass=clamped_total,
    )


def run(domain, spec, u0, controls):
    """Integrate from u0 and return a RunResult (trace, status, final field).

    Stops at controls.t_end, on a sup-norm crossing of controls.u_max
    (blow-up detection), or on repeated dt underflow.
    """
    u = np.asarray(u0, dtype=float).copy()
    if u.min() < 0:
        raise SpecError("initial data must be nonnegative")
    if not np.any(u > 0):
        raise SpecError("initial data must not vanish identically")
    if spec.k == 0 and domain.kind != "ball":
        bmask = domain.boundary_node_mask()
        if float(np.abs(u[bmask]).max()) > 1e-10 * max(float(u.max()), 1e-30):
            raise SpecError("Dirichlet initial data must vanish on the boundary")
        u[bmask] = 0.0

    trace = Trace()
    t = 0.0
    clamped_total = 0.0
    peak_mass = integrate_volume(domain, u)
    _record(trace, domain, u, spec, t, 0.0, clamped_total)
    steps = 0
    status = None
    last_dt = 0.0

    while True:
        sup = float(u.max())
        if sup >= controls.u_max or not np.isfinite(sup):
            t_est = _blowup_estimate(trace, controls)
            status = SimStatus(
                kind="blowup", t_estimate=t_est, sup_at_stop=sup, t_end=t
            )
            break
        if t >= controls.t_end - 1e-15 * controls.t_end:
            status = SimStatus(kind="ran_to_end", t_end=t, sup_at_stop=sup)
            break
        if controls.max_steps is not None and steps >= controls.max_steps:
            status = SimStatus(
                kind="step_failure", t_end=t, sup_at_stop=sup,
                reason="step budget exhausted",
            )
            break

        dt = min(stable_dt(domain, u, spec, controls.safety), controls.t_end - t)
        ok = False
        for _ in range(40):
            if dt < controls.dt_min:
                break
            new, clamped = step(domain, u, spec, dt)
            if np.isfinite(new).all():
                ok = True
                break
            dt /= 2.0
        if not ok:
            rising = _sup_rising(trace)
            if rising:
                t_est = _blowup_estimate(trace, controls)
                status = SimStatus(
                    kind="blowup", t_estimate=t_est, sup_at_stop=sup, t_end=t
                )
            else:
                status = SimStatus(
                    kind="step_failure", t_end=t, sup_at_stop=sup,
                    reason="dt underflow without sup growth",
                )
            break

        u = new
        clamped_total += clamped
        peak_mass = max(peak_mass, integrate_volume(domain, u))
        t += dt
        last_dt = dt
        steps += 1
        if steps % controls.cadence == 0:
            _record(trace, domain, u, spec, t, dt, clamped_total)

    if len(trace) == 0 or trace.rows[-1][0] != t:
        _record(trace, domain, u, spec, t, last_dt, clamped_total)
    if peak_mass > 0 and clamped_total > 1e-8 * peak_mass:
        trace.clamp_flagged = True
    return RunResult(trace=trace, status=status, final=Field(values=u, time=t))


def _sup_rising(trace):
    sups = trace.column("sup_u")
    return len(sups) >= 2 and sups[-1] > sups[max(0, len(sups) - 5)]


def _blowup_estimate(trace, controls):
    ts = trace.column("t")
    sups = trace.column("sup_u")
    est = _extrapolate_pole(ts, sups, controls.window)
    if est is None or not np.isfinite(est) or est < ts[-1]:
        return float(ts[-1])
    return float(est)


# -- blow-up time extrapolation -----------------------------------------


def detect_blowup(ts, sups, u_max, window=20):
    """Estimate the pole time from the tail of a sup-norm trace.

    Extrapolates 1/sup^rho linearly to zero with the exponent rho fitted
    from the window; falls back to the crossing time when the fit is
    ill-conditioned.  Raises if the threshold was never crossed.
    """
    ts = np.asarray(ts, dtype=float)
    sups = np.asarray(sups, dtype=float)
    if sups.max() < u_max:
        raise BlowupDetectionError("no sup-norm crossing of the threshold")
    est = _extrapolate_pole(ts, sups, window)
    if est is None or not np.isfinite(est) or est < ts[-1]:
        return float(ts[-1])
    return float(est)


def _extrapolate_pole(ts, sups, window):
    finite = np.isfinite(sups) & np.isfinite(ts) & (sups > 0)
    t = ts[finite][-window:]
    s = sups[finite][-window:]
    if len(t) < 5 or np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0):
        return None
    logs = np.log(s)
    # stage 1: pole order from the logarithmic derivative
    L = np.diff(logs) / np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    a, b = np.polyfit(tm, 1.0 / L, 1)
    if not np.isfinite(a) or a >= 0:
        return None
    t_star = -b / a
    # stage 2: refine exponent and re-extrapolate s^(-rho) to zero
    for _ in range(3):
        if t_star <= t[-1]:
            t_star = t[-1] * (1 + 1e-12)
        x = t_star - t
        if np.any(x <= 0):
            return None
        c = -np.polyfit(np.log(x), logs, 1)[0]
        if not np.isfinite(c) or c <= 0:
            return None
        y = s ** (-1.0 / c)
        a2, b2 = np.polyfit(t, y, 1)
        if not np.isfinite(a2) or a2 >= 0:
            return None
        t_star = -b2 / a2
    return float(t_star)


# -- reference solution and initial data --------------------------------


def barenblatt_reference(r, t, m, dim, mass=1.0):
    """Self-similar source solution of the pure porous medium equation.

    r is the distance to the source point; the profile is
    t^-a (C - kappa r^2 t^(-2a/dim))_+^(1/(m-1)) with a = dim/(dim(m-1)+2),
    kappa = a (m-1) / (2 m dim) and C fixed by the total mass.
    """
    if t <= 0:
        raise SpecError("Barenblatt reference requires t > 0")
    if m <= 1:
        raise SpecError("Barenblatt reference requires m > 1")
    r = np.asarray(r, dtype=float)
    a = dim / (dim * (m - 1) + 2)
    kappa = a * (m - 1) / (2 * m * dim)
    C = _barenblatt_C(m, dim, mass, kappa)
    arg = C - kappa * r**2 * t ** (-2 * a / dim)
    return t ** (-a) * np.maximum(arg, 0.0) ** (1.0 / (m - 1))


def _barenblatt_C(m, dim, mass, kappa):
    surf = 2 * np.pi ** (dim / 2) / gamma_fn(dim / 2)
    shape_int = 0.5 * surf * beta_fn(dim / 2, m / (m - 1))
    expo = 1.0 / (m - 1) + dim / 2
    return (mass * kappa ** (dim / 2) / shape_int) ** (1.0 / expo)


def barenblatt_support_radius(t, m, dim, mass=1.0):
    """Front position of the Barenblatt solution at time t."""
    a = dim / (dim * (m - 1) + 2)
    kappa = a * (m - 1) / (2 * m * dim)
    C = _barenblatt_C(m, dim, mass, kappa)
    return float(np.sqrt(C / kappa) * t ** (a / dim))


def barenblatt_field(domain, t, m, mass=1.0, center=None):
    """Barenblatt profile sampled on a domain grid."""
    if center is None:
        center = domain.x0
    r = np.linalg.norm(domain.coords() - np.asarray(center), axis=-1)
    return barenblatt_reference(r, t, m, domain.dim, mass=mass)


def make_initial(domain, spec, kind, amplitude=1.0, mass=1.0, t0=0.1):
    """Initial-data library: eigenfunction / sine / bump / barenblatt / constant."""
    from . import spectral  # local import to avoid a cycle at module load

    if amplitude <= 0:
        raise SpecError("initial amplitude must be positive")
    if kind == "constant":
        if spec.k == 0:
            raise SpecError(
                "constant initial data is incompatible with Dirichlet boundaries"
            )
        return np.full(domain.shape, float(amplitude))
    if kind == "eigenfunction":
        if spec.k == 0:
            res = spectral.dirichlet_lambda1(domain)
        else:
            res = spectral.robin_xi1(domain, spec.h)
        return amplitude * res.eigenvector
    if kind == "sine":
        vals = np.ones(domain.shape)
        coords = domain.coords()
        for i, L in enumerate(_axis_lengths(domain)):
            vals = vals * np.sin(np.pi * coords[..., i] / L)
        return amplitude * np.maximum(vals, 0.0)
    if kind == "bump":
        center = domain.x0 if domain.kind != "ball" else np.zeros(domain.dim)
        if domain.kind == "ball":
            rho_max = domain.radius
        else:
            rho_max = min(
                min(c, L - c) for c, L in zip(center, domain.extents)
            )
        r = np.linalg.norm(domain.coords() - center, axis=-1) / (0.95 * rho_max)
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.where(r < 1.0, np.exp(1.0 - 1.0 / (1.0 - r**2)), 0.0)
        return amplitude * np.nan_to_num(vals, nan=0.0, posinf=0.0)
    if kind == "barenblatt":
        return amplitude * barenblatt_field(domain, t0, spec.m, mass=mass)
    raise SpecError(f"unknown initial-data kind {kind!r}")


def _axis_lengths(domain):
    return [ax[-1] - ax[0] for ax in domain.axes]
