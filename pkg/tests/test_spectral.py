import numpy as np
import pytest
from scipy.optimize import brentq

from pmeblow.geometry import make_domain
from pmeblow.spectral import (
    check_H3,
    dirichlet_lambda1,
    eta,
    h3_frontier,
    rayleigh_quotient,
    robin_xi1,
)


def robin_interval_oracle(L, h):
    """Transcendental oracle for the first Robin eigenvalue on (0, L).

    With w = cos(omega (x - L/2)) symmetry the condition w'(L) + h w(L) = 0
    reduces to omega tan(omega L / 2) = h; xi1 = omega^2.
    """

    def f(om):
        return om * np.tan(om * L / 2.0) - h

    lo, hi = 1e-8, (np.pi / L) * (1.0 - 1e-10)
    om = brentq(f, lo, hi, xtol=1e-14)
    return om**2


def test_dirichlet_interval_vs_pi_squared(interval200):
    res = dirichlet_lambda1(interval200)
    assert abs(res.eigenvalue - np.pi**2) / np.pi**2 < 0.01


def test_robin_interval_vs_transcendental_oracle():
    dom = make_domain("interval", (1.0,), 1, resolution=600)
    for h in (0.5, 1.0, 3.0):
        res = robin_xi1(dom, h)
        oracle = robin_interval_oracle(1.0, h)
        assert abs(res.eigenvalue - oracle) / oracle < 1e-4


def test_rayleigh_quotient_consistency():
    dom = make_domain("interval", (1.0,), 1, resolution=300)
    res = robin_xi1(dom, 2.0, tol=1e-10)
    rq = rayleigh_quotient(dom, 2.0, res.eigenvector)
    assert abs(rq - res.eigenvalue) / res.eigenvalue < 1e-8


def test_robin_approaches_dirichlet_for_large_h():
    dom = make_domain("interval", (1.0,), 1, resolution=400)
    xi = robin_xi1(dom, 1e4).eigenvalue
    lam = dirichlet_lambda1(dom).eigenvalue
    assert xi < lam
    assert (lam - xi) / lam < 0.01


def test_square_dirichlet_eigenvalue():
    dom = make_domain("box", (1.0, 1.0), 2, resolution=80)
    res = dirichlet_lambda1(dom)
    assert abs(res.eigenvalue - 2.0 * np.pi**2) / (2.0 * np.pi**2) < 0.01


def test_ball_dirichlet_radial_oracle():
    # first Dirichlet eigenvalue of the unit ball in 3D is pi^2
    dom = make_domain("ball", (1.0,), 3, resolution=24)
    res = dirichlet_lambda1(dom)
    assert abs(res.eigenvalue - np.pi**2) / np.pi**2 < 1e-8


def test_ball_robin_below_dirichlet():
    dom = make_domain("ball", (1.0,), 3, resolution=24)
    xi = robin_xi1(dom, 1.0).eigenvalue
    assert 0 < xi < np.pi**2


def test_membrane_margin_negative_everywhere():
    # the feasibility margin xi1(hm)/(hm) - (2 m1 N/3 + m2 - 1) is provably
    # negative on interval/box/ball domains; the probe must agree
    dom = make_domain("interval", (1.0,), 1, resolution=200)
    sweep = h3_frontier(dom, m=2.0, h_values=np.geomspace(0.01, 100.0, 12))
    assert all(margin < 0 for _, margin in sweep)
    ok, margin = check_H3(dom, h=1.0, m=2.0)
    assert not ok and margin < 0


def test_eta_consistency_with_margin():
    dom = make_domain("interval", (1.0,), 1, resolution=200)
    # eta(hm) and the margin must share their sign (same inequality)
    for h in (0.1, 1.0, 10.0):
        _, margin = check_H3(dom, h, 2.0)
        e = eta(dom, 2.0 * h)
        assert np.sign(e) == np.sign(margin)


def test_invalid_inputs():
    dom = make_domain("interval", (1.0,), 1, resolution=50)
    with pytest.raises(ValueError):
        robin_xi1(dom, -1.0)
    with pytest.raises(ValueError):
        check_H3(dom, 1.0, 0.5)
