"""Diagnostic functionals tracked along simulated trajectories.

All functions are pure in their inputs; gradients use the same centered /
one-sided operator as the rest of the package so discrete identities between
the functionals hold to scheme order.
"""

import numpy as np

from .geometry import grad_norm_sq, integrate_boundary, integrate_volume


class FunctionalError(ValueError):
    """Functional evaluated outside its admissible regime."""


def phi(domain, u, m):
    """Energy-like measure: integral of u^(m+1)."""
    u = np.asarray(u, dtype=float)
    return integrate_volume(domain, u ** (m + 1))


def grad_energy(domain, u, m):
    """Integral of |grad(u^m)|^2."""
    u = np.asarray(u, dtype=float)
    return integrate_volume(domain, grad_norm_sq(domain, u**m))


def boundary_term(domain, u, m):
    """Surface integral of u^(2m) over the domain boundary."""
    return integrate_boundary(domain, u, power=2 * m)


def psi(domain, u, spec):
    """Blow-up indicator for the power-absorption source.

    psi = -(p+m)/(2m) int |grad u^m|^2 + k1 int u^(p+m)
          - k2 int u^(q+m) - h (p+m)/2 surf u^(2m).
    Only defined for the power-absorption source family.
    """
    if spec.source_kind != "power_absorption":
        raise FunctionalError(
            "psi is defined for the power-absorption source only, "
            f"got {spec.source_kind!r}"
        )
    u = np.asarray(u, dtype=float)
    m, p, q = spec.m, spec.p, spec.q
    val = -(p + m) / (2 * m) * grad_energy(domain, u, m)
    val += spec.k1 * integrate_volume(domain, u ** (p + m))
    val -= spec.k2 * integrate_volume(domain, u ** (q + m))
    val -= spec.h * (p + m) / 2 * boundary_term(domain, u, m)
    return val


def w_measure(domain, u, m, p):
    """Auxiliary measure: integral of u^(m (p - 1))."""
    exponent = m * (p - 1)
    if exponent < 1:
        raise FunctionalError(
            f"w_measure exponent m (p - 1) = {exponent} is below 1"
        )
    u = np.asarray(u, dtype=float)
    return integrate_volume(domain, u**exponent)
