"""Blow-up / global-existence criteria and their supporting inequalities.

Implements the admissible-parameter coefficient cascade, the blow-up upper
bound, the global-existence cap, the blow-up-time lower bound with its
computable constants, and the four preparatory inequalities as numerically
checkable residuals.
"""

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .functionals import phi, psi
from .geometry import (
    boundary_values,
    grad_norm_sq,
    gradient,
    integrate_boundary,
    integrate_volume,
    star_constants,
)

# Best constant of the 3D Sobolev embedding W^{1,2}_0 -> L^6.
SOBOLEV_GAMMA_3D = 4.0 ** 0.5 * 3.0 ** (-0.5) * np.pi ** (-2.0 / 3.0)


class CriteriaError(ValueError):
    """Parameter regime violated or criterion misapplied."""


@dataclass(frozen=True)
class H0Coefficients:
    """Derived coefficient cascade for the admissible (m, p, q) regime."""

    m: float
    p: float
    q: float
    s: float
    mu: float
    d: float
    delta: float
    alpha: float
    beta: float
    sigma_coeff: float
    gamma: float
    delta_interval: tuple

    @property
    def alpha_beta(self):
        return self.alpha * self.beta


@dataclass(frozen=True)
class Thm3Constants:
    """Computable constants of the blow-up-time lower bound."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    Gamma: float
    Sigma: float
    xi_m: float
    M: float
    N_const: float
    lambda1: float
    epsilon1: float
    epsilon2: float
    k1: float
    k2: float


@dataclass
class CriteriaReport:
    """Outcome of one criterion evaluation, JSON-serializable."""

    theorem: str
    applicable: bool
    constants: dict = field(default_factory=dict)
    bound: float | None = None
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "applicable": self.applicable,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "bound": None if self.bound is None else float(self.bound),
            "diagnostics": list(self.diagnostics),
        }


# -- coefficient cascade ------------------------------------------------


def h0_delta_interval(m, p, q):
    """Admissible open interval for the free exponent delta."""
    _require_h0_box(m, p, q)
    s = p - 1.0
    d = (m - 1.0) / s
    hi = (2.0 / 3.0) * (m + d) * (2 * m + 3 * d - 3.0) / (2 * m + 3 * d - 1.0)
    return (1.0, hi)


def _require_h0_box(m, p, q):
    if p < 2:
        raise CriteriaError(f"requires p >= 2, got p = {p}")
    if not (2.0 - 1.0 / p < m < p):
        raise CriteriaError(f"requires 2 - 1/p < m < p, got m = {m}, p = {p}")
    if not (p >= q >= 2):
        raise CriteriaError(f"requires p >= q >= 2, got p = {p}, q = {q}")


def h0_coefficients(m, p, q, delta_choice=None):
    """Validated coefficient cascade; delta defaults to the interval midpoint."""
    lo, hi = h0_delta_interval(m, p, q)
    if hi <= lo:
        raise CriteriaError(f"empty delta interval ({lo}, {hi}) for m={m}, p={p}, q={q}")
    delta = 0.5 * (lo + hi) if delta_choice is None else float(delta_choice)
    if not (lo < delta < hi):
        raise CriteriaError(f"delta = {delta} outside the admissible interval ({lo}, {hi})")

    s = p - 1.0
    mu = (q - 1.0) / s
    d = (m - 1.0) / s
    if mu >= 1.0:
        raise CriteriaError(f"requires mu = (q-1)/(p-1) < 1, got mu = {mu} (q must be below p)")
    if d >= 1.0:
        raise CriteriaError(f"requires d = (m-1)/(p-1) < 1, got d = {d}")

    two_md = 2.0 * (m + d)
    if two_md - 3.0 * delta <= 0:
        raise CriteriaError("requires 2(m+d) - 3 delta > 0")
    alpha = (two_md - delta) / (two_md - 3.0 * delta)
    if alpha <= 1.0:
        raise CriteriaError(f"derived alpha = {alpha} must exceed 1")
    denom_beta = 2 * m + 3 * d - 3.0 * alpha
    if denom_beta <= 0:
        raise CriteriaError("requires 2m + 3d - 3 alpha > 0 (delta too close to its upper end)")
    beta = (2 * m + 3 * d - 1.0) / denom_beta
    if beta <= 1.0:
        raise CriteriaError(f"derived beta = {beta} must exceed 1")
    sigma_coeff = (two_md - 3.0 * delta) / two_md
    gamma = d + delta
    if gamma <= 1.0:
        raise CriteriaError(f"derived gamma = {gamma} must exceed 1")

    return H0Coefficients(
        m=m, p=p, q=q, s=s, mu=mu, d=d, delta=delta, alpha=alpha,
        beta=beta, sigma_coeff=sigma_coeff, gamma=gamma,
        delta_interval=(lo, hi),
    )


# -- Theorem 1: blow-up upper bound -------------------------------------


def thm1_upper_bound(domain, spec, u0):
    """Blow-up upper bound T = (m+1)/(p-1) phi(0)/psi(0) when psi(0) > 0."""
    if spec.source_kind != "power_absorption":
        raise CriteriaError("blow-up upper bound needs the power-absorption source")
    if spec.k != 1:
        raise CriteriaError("blow-up upper bound needs Robin boundary conditions (k = 1)")
    if not (spec.m > 1 and spec.q > 1):
        raise CriteriaError("requires m > 1 and q > 1")
    if spec.p < max(spec.m, spec.q):
        raise CriteriaError(
            f"requires p >= max(m, q), got p = {spec.p}, m = {spec.m}, q = {spec.q}"
        )
    phi0 = phi(domain, u0, spec.m)
    psi0 = psi(domain, u0, spec)
    report = CriteriaReport(
        theorem="theorem1",
        applicable=psi0 > 0,
        constants={"phi0": phi0, "psi0": psi0},
    )
    if psi0 > 0:
        report.bound = (spec.m + 1.0) / (spec.p - 1.0) * phi0 / psi0
        report.diagnostics.append("psi(0) > 0: finite-time blow-up, upper bound set")
    else:
        report.diagnostics.append("psi(0) <= 0: theorem silent for this initial datum")
    return report


# -- Theorem 2: global-existence cap ------------------------------------


def thm2_global_bound(domain, spec, u0):
    """Uniform cap on phi(t) for the damped regime p < m under Robin outflow.

    When the membrane-eigenvalue feasibility test holds the cap uses the
    geometric damping constant sigma = eta(h m).  That test is infeasible for
    every interval/box/ball (see spectral.h3_frontier), so the cap is then
    computed with the direct Robin-Rayleigh constant xi1(h m), which bounds
    int |grad u^m|^2 + h m surf u^(2m) >= xi1(h m) int u^(2m) with no
    geometric penalty; the report is flagged conditional in that case.
    """
    if spec.source_kind != "power_absorption":
        raise CriteriaError("global-existence cap needs the power-absorption source")
    if spec.k != 1:
        raise CriteriaError("global-existence cap needs Robin boundary conditions (k = 1)")
    if spec.p >= spec.m:
        raise CriteriaError(f"requires p < m, got p = {spec.p}, m = {spec.m}")
    if spec.q < 1:
        raise CriteriaError("requires q >= 1")

    ok, margin = spectral.check_H3(domain, spec.h, spec.m)
    xi = spectral.robin_xi1(domain, spec.h * spec.m).eigenvalue
    report = CriteriaReport(theorem="theorem2", applicable=True)
    report.constants["h3_margin"] = margin
    report.constants["xi1_hm"] = xi
    if ok:
        sigma = spectral.eta(domain, spec.h * spec.m, xi1=xi)
        report.diagnostics.append("membrane feasibility holds; eta(h m) route")
    else:
        sigma = xi
        report.diagnostics.append(
            "membrane feasibility fails (margin < 0); conditional cap via the "
            "direct Robin-Rayleigh constant xi1(h m)"
        )
    if sigma <= 0:
        report.applicable = False
        report.diagnostics.append("no positive damping constant available")
        return report

    m, p, k1 = spec.m, spec.p, spec.k1
    eps = sigma / 2.0
    C_eps = (2 * m * eps / ((p + m) * k1)) ** ((m + p) / (p - m)) * (m - p) / (2 * m)
    vol = domain.volume()
    C0 = (m + 1.0) * sigma / 2.0 * vol ** ((1.0 - m) / (1.0 + m))
    C1 = (m + 1.0) * C_eps * vol
    phi0 = phi(domain, u0, m)
    cap = max(phi0, (C1 / C0) ** ((m + 1.0) / (2.0 * m)))
    report.constants.update(
        {"sigma": sigma, "epsilon": eps, "C_eps": C_eps, "C0": C0, "C1": C1, "phi0": phi0}
    )
    report.bound = cap
    return report


# -- Theorem 3: lower bound on the blow-up time -------------------------


def thm3_constants(coeffs, spec, domain, lambda1=None):
    """All computable constants of the blow-up-time lower bound."""
    if spec.source_kind != "gradient_absorption":
        raise CriteriaError("lower-bound constants need the gradient-absorption source")
    if spec.k != 0:
        raise CriteriaError("lower-bound constants need Dirichlet boundary conditions (k = 0)")
    if domain.dim != 3:
        raise CriteriaError("the lower bound is a three-dimensional result")
    m, s, mu, d, delta = coeffs.m, coeffs.s, coeffs.mu, coeffs.d, coeffs.delta
    alpha, gamma, sigma = coeffs.alpha, coeffs.gamma, coeffs.sigma_coeff
    q, k1, k2 = spec.q, spec.k1, spec.k2
    if k1 <= 0 or k2 <= 0:
        raise CriteriaError("requires positive k1 and k2")
    if m * s <= 1:
        raise CriteriaError(f"requires m s = m (p-1) > 1, got {m * s}")

    if lambda1 is None:
        lambda1 = spectral.dirichlet_lambda1(domain).eigenvalue
    Gamma = SOBOLEV_GAMMA_3D

    c1 = m**2 * (m * s - 1.0) / s
    c2 = m * s * k1
    c3 = 4.0 / (m + d) ** 2 * c1
    Q = (2.0 * np.sqrt(lambda1) / (m * s + q - 1.0)) ** q
    eps1 = k2 * Q * (gamma - mu) / (k1 * (gamma - 1.0))
    c4 = c2 * (1.0 - mu) / (gamma - mu) * eps1 ** (-(gamma - 1.0) / (1.0 - mu))
    two_md = 2.0 * (m + d)
    g_exp = 3.0 * delta / (m + d)
    g_exp2 = g_exp + 6.0 * alpha / (2 * m + 3 * d)
    c5 = Gamma**g_exp2 * 3.0 * alpha * d * c4 * sigma / (2 * m + 3 * d)
    c6 = 3.0 * delta * c4 * Gamma**g_exp / two_md
    xi_m = (3.0 * delta * c5 / (c6 * (two_md - 3.0 * delta))) ** (-3.0 * delta / two_md)
    eps2 = xi_m
    M = Gamma**g_exp * (1.0 - d) * eps2 * sigma * c4
    N_const = Gamma**g_exp2 * (2 * m + 3 * d - 3.0 * alpha) / (2 * m + 3 * d) * eps2 * c4 * d * sigma

    Sigma = (
        Gamma**g_exp * s**2 * (m + d) ** 2 / (4.0 * m * (m * s - 1.0))
        / (((gamma - mu) / (gamma - 1.0)) * Q) ** ((gamma - 1.0) / (1.0 - mu))
        * (1.0 - mu) / (gamma - mu)
        * (
            6.0 * (m + d) * Gamma ** (6.0 * alpha / (2 * m + 3 * d)) * d * alpha * sigma
            / ((2 * m + 3 * d) * (two_md - 3.0 * delta))
        ) ** (1.0 - 3.0 * delta / two_md)
    )

    return Thm3Constants(
        c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, c6=c6, Gamma=Gamma, Sigma=Sigma,
        xi_m=xi_m, M=M, N_const=N_const, lambda1=lambda1,
        epsilon1=eps1, epsilon2=eps2, k1=k1, k2=k2,
    )


def thm3_k2_threshold(consts, coeffs):
    """Absorption threshold in both published forms; they must agree.

    Returns (threshold, relative discrepancy between the Sigma form and the
    minimum-point form).  A discrepancy beyond roundoff means the constant
    wiring is broken, so callers should treat it as an internal error.
    """
    mu, gamma = coeffs.mu, coeffs.gamma
    k1, k2 = consts.k1, consts.k2
    thr_sigma = k1 * (k1 * consts.Sigma) ** ((1.0 - mu) / (gamma - 1.0))
    # minimum-point form: c3 >= Phi(xi_m); Phi(xi_m) scales like
    # k2^(-(gamma-1)/(1-mu)) through c4, so invert at the computed k2
    m, d, delta = coeffs.m, coeffs.d, coeffs.delta
    two_md = 2.0 * (m + d)
    phi_min = (
        consts.c5
        * (consts.c5 / consts.c6) ** (-3.0 * delta / two_md)
        * (3.0 * delta / (two_md - 3.0 * delta)) ** (-3.0 * delta / two_md)
        * two_md / (two_md - 3.0 * delta)
    )
    thr_ci = k2 * (phi_min / consts.c3) ** ((1.0 - mu) / (gamma - 1.0))
    rel = abs(thr_sigma - thr_ci) / thr_sigma
    return thr_sigma, rel


def thm3_check_k2(k1, k2, consts, coeffs, tol=1e-8):
    """Non-strict absorption-size condition k2 >= k1 (k1 Sigma)^((1-mu)/(gamma-1))."""
    if k1 <= 0 or k2 <= 0:
        raise CriteriaError("k1 and k2 must be positive")
    thr, rel = thm3_k2_threshold(consts, coeffs)
    if rel > tol:
        raise RuntimeError(
            f"internal error: the two forms of the k2 condition disagree (rel {rel:.3e})"
        )
    return bool(k2 >= thr * (1.0 - 1e-12))


def thm3_lower_bound(W0, consts, coeffs):
    """Lower bound on the blow-up time from the initial auxiliary measure.

    T_low = W0^(1 - alpha beta) / ((M W0^((1-beta) alpha) + N) (alpha beta - 1)),
    the positive form obtained by integrating the final differential
    inequality between the re-entry time and the blow-up time.
    """
    if W0 <= 0:
        raise CriteriaError("W(0) must be positive")
    ab = coeffs.alpha_beta
    if ab <= 1:
        raise CriteriaError("requires alpha beta > 1")
    if not thm3_check_k2(consts.k1, consts.k2, consts, coeffs):
        raise CriteriaError(
            "absorption coefficient k2 is below the admissibility threshold"
        )
    denom = (consts.M * W0 ** ((1.0 - coeffs.beta) * coeffs.alpha) + consts.N_const) * (ab - 1.0)
    T_low = W0 ** (1.0 - ab) / denom
    report = CriteriaReport(
        theorem="theorem3",
        applicable=True,
        constants={
            "W0": W0, "T_low": T_low, "Sigma": consts.Sigma, "xi_m": consts.xi_m,
            "M": consts.M, "N": consts.N_const, "lambda1": consts.lambda1,
            "alpha_beta": ab,
        },
        bound=T_low,
        diagnostics=[
            "lower bound is conditional on the auxiliary measure actually "
            "blowing up at finite time"
        ],
    )
    return report


# -- preparatory inequalities as residual checks ------------------------


def lemma1_residual(domain, V):
    """Boundary-trace inequality: surf V^2 <= 2 m1 N/3 int V^2 + 2(m2-1) int V |grad V|."""
    V = np.asarray(V, dtype=float)
    sc = star_constants(domain)
    lhs = integrate_boundary(domain, V, power=2)
    gmag = np.sqrt(grad_norm_sq(domain, V))
    rhs = (2.0 * sc.m1 * domain.dim / 3.0) * integrate_volume(domain, V**2)
    rhs += 2.0 * (sc.m2 - 1.0) * integrate_volume(domain, V * gmag)
    return {"lhs": lhs, "rhs": rhs, "residual": rhs - lhs}


def lemma2_residuals(domain, V, h, m):
    """Membrane-eigenvalue inequalities for a field with Robin-type trace.

    Checks the Rayleigh form xi1(hm) int V^2m <= int |grad V^m|^2
    + h m surf V^2m (nontrivial for any V) and the final damped form
    int |grad V^m|^2 >= eta(h m) int V^2m (trivial whenever eta < 0, which
    is every interval/box/ball; reported anyway).
    """
    V = np.asarray(V, dtype=float)
    hm = h * m
    xi = spectral.robin_xi1(domain, hm).eigenvalue
    Vm = V**m
    grad_sq = integrate_volume(domain, grad_norm_sq(domain, Vm))
    vol_2m = integrate_volume(domain, V ** (2 * m))
    surf_2m = integrate_boundary(domain, V, power=2 * m)
    sigma = spectral.eta(domain, hm, xi1=xi)
    return {
        "rayleigh": {
            "lhs": xi * vol_2m,
            "rhs": grad_sq + hm * surf_2m,
            "residual": grad_sq + hm * surf_2m - xi * vol_2m,
        },
        "damped": {
            "lhs": sigma * vol_2m,
            "rhs": grad_sq,
            "residual": grad_sq - sigma * vol_2m,
        },
        "sigma": sigma,
        "xi1_hm": xi,
    }


def lemma3a_residual(domain, V, coeffs, eps1):
    """Interpolation bound on int V^(m+1) with an arbitrary eps1 > 0."""
    if eps1 <= 0:
        raise CriteriaError("eps1 must be positive")
    V = np.asarray(V, dtype=float)
    m, mu, gamma = coeffs.m, coeffs.mu, coeffs.gamma
    lhs = integrate_volume(domain, V ** (m + 1.0))
    rhs = (gamma - 1.0) / (gamma - mu) * eps1 * integrate_volume(domain, V ** (m + mu))
    rhs += (
        (1.0 - mu) / (gamma - mu)
        * eps1 ** (-(gamma - 1.0) / (1.0 - mu))
        * integrate_volume(domain, V ** (m + gamma))
    )
    return {"lhs": lhs, "rhs": rhs, "residual": rhs - lhs}


def lemma3b_residual(domain, V, coeffs, eps2):
    """Sobolev-route bound on int V^(m+gamma) for V vanishing on the boundary."""
    if domain.dim != 3:
        raise CriteriaError("this inequality is three-dimensional")
    if eps2 <= 0:
        raise CriteriaError("eps2 must be positive")
    V = np.asarray(V, dtype=float)
    bvals, _ = boundary_values(domain, V)
    if np.max(np.abs(bvals)) > 1e-10 * max(float(V.max()), 1e-30):
        raise CriteriaError("field must vanish on the boundary")
    m, d, delta = coeffs.m, coeffs.d, coeffs.delta
    alpha, sigma = coeffs.alpha, coeffs.sigma_coeff
    Gamma = SOBOLEV_GAMMA_3D
    g_exp = 3.0 * delta / (m + d)
    g_exp2 = g_exp + 6.0 * alpha / (2 * m + 3 * d)
    two_md = 2.0 * (m + d)

    lhs = integrate_volume(domain, V ** (m + coeffs.gamma))
    grad_half = integrate_volume(domain, grad_norm_sq(domain, V ** ((m + d) / 2.0)))
    int_m = integrate_volume(domain, V**m)
    rhs = Gamma**g_exp2 * 3.0 * alpha * d * sigma / (2 * m + 3 * d) * eps2 * grad_half
    rhs += (
        Gamma**g_exp2 * d * sigma * (2 * m + 3 * d - 3.0 * alpha) / (2 * m + 3 * d)
        * eps2 * int_m ** (alpha * coeffs.beta)
    )
    rhs += (1.0 - d) * eps2 * Gamma**g_exp * sigma * int_m**alpha
    rhs += Gamma**g_exp * 3.0 * delta / two_md * eps2 ** (1.0 - two_md / (3.0 * delta)) * grad_half
    return {"lhs": lhs, "rhs": rhs, "residual": rhs - lhs}


def lemma4_sweep(consts, coeffs, n_points=50):
    """Minimality of Phi(xi) = c5 xi + c6 xi^(1 - 2(m+d)/(3 delta)) at xi_m."""
    m, d, delta = coeffs.m, coeffs.d, coeffs.delta
    expo = 1.0 - 2.0 * (m + d) / (3.0 * delta)

    def Phi(xi):
        return consts.c5 * xi + consts.c6 * xi**expo

    xi_grid = np.geomspace(consts.xi_m / 1e3, consts.xi_m * 1e3, n_points)
    values = Phi(xi_grid)
    phi_min = Phi(consts.xi_m)
    return {
        "xi_m": consts.xi_m,
        "phi_at_min": phi_min,
        "sweep_min": float(values.min()),
        "is_minimum": bool(phi_min <= values.min() * (1 + 1e-12)),
    }


def lemma_checks(domain, V, params):
    """Aggregate residual report for the preparatory inequalities.

    params is a dict; recognized keys: 'h' and 'm' (membrane check),
    'coeffs' (an H0Coefficients), 'eps1', 'eps2', 'consts' (Thm3Constants,
    enables the minimum-point sweep).  Residuals >= -tolerance mean pass.
    """
    out = {"lemma1": lemma1_residual(domain, V)}
    if "h" in params and "m" in params:
        out["lemma2"] = lemma2_residuals(domain, V, params["h"], params["m"])
    coeffs = params.get("coeffs")
    if coeffs is not None:
        out["lemma3a"] = lemma3a_residual(domain, V, coeffs, params.get("eps1", 1.0))
        if domain.dim == 3:
            bvals, _ = boundary_values(domain, V)
            if np.max(np.abs(bvals)) <= 1e-10 * max(float(np.max(V)), 1e-30):
                out["lemma3b"] = lemma3b_residual(
                    domain, V, coeffs, params.get("eps2", 1.0)
                )
        if params.get("consts") is not None:
            out["lemma4"] = lemma4_sweep(params["consts"], coeffs)
    return out


# -- random smooth fields for the randomized suites ---------------------


def random_smooth_field(domain, rng, dirichlet=False, n_modes=3):
    """Nonnegative smooth random field: squared low-frequency trig sum.

    With dirichlet=True the field is multiplied by the product of first
    sine modes so it vanishes on the boundary.
    """
    coords = domain.coords()
    lengths = [ax[-1] - ax[0] for ax in domain.axes]
    g = np.full(domain.shape, rng.uniform(0.5, 1.5))
    for _ in range(n_modes):
        term = np.ones(domain.shape)
        for i, L in enumerate(lengths):
            kfreq = rng.integers(1, 4)
            phase = rng.uniform(0, 2 * np.pi)
            x = coords[..., i] - domain.axes[i][0]
            term = term * np.cos(kfreq * np.pi * x / L + phase)
        g = g + rng.uniform(-0.5, 0.5) * term
    out = g**2
    if dirichlet:
        for i, L in enumerate(lengths):
            x = coords[..., i] - domain.axes[i][0]
            out = out * np.sin(np.pi * x / L)
    return out


def robin_adjusted_field(domain, rng, h, n_modes=3):
    """Random smooth nonnegative field with the Robin trace imposed discretely.

    Boundary planes are reset so the second-order one-sided normal
    derivative satisfies V_nu + h V = 0 on every face.
    """
    V = random_smooth_field(domain, rng, n_modes=n_modes)
    for axis in range(domain.dim):
        dx = domain.spacing[axis]
        sl = [slice(None)] * domain.dim

        def plane(i):
            s = list(sl)
            s[axis] = i
            return tuple(s)

        V[plane(0)] = (4.0 * V[plane(1)] - V[plane(2)]) / (3.0 + 2.0 * dx * h)
        V[plane(-1)] = (4.0 * V[plane(-2)] - V[plane(-3)]) / (3.0 + 2.0 * dx * h)
    return np.maximum(V, 0.0)
