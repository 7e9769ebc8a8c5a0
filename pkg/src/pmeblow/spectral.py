"""First Laplacian eigenvalues: Dirichlet and Robin (supported membrane).

Box/interval problems use a symmetric finite-volume discretization and
inverse iteration.  Centered balls use the radial ODE reduction, which is
exact for the first (radial) eigenpair up to integrator tolerance.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse.linalg import splu

from .geometry import DomainError, star_constants

DEFAULT_TOL = 1e-8
MAX_ITERATIONS = 500


class EigenSolveError(RuntimeError):
    """Eigenvalue iteration failed to converge."""


@dataclass
class EigenResult:
    eigenvalue: float
    eigenvector: np.ndarray  # on the full domain grid, nonnegative, max = 1
    residual: float
    iterations: int


def _fv_1d_robin(n, L, h):
    """Symmetric FV (stiffness A, lumped mass M) for -w'' with Robin ends."""
    dx = L / (n - 1)
    main = np.full(n, 2.0 / dx)
    main[0] = main[-1] = 1.0 / dx + h
    off = np.full(n - 1, -1.0 / dx)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    m = np.full(n, dx)
    m[0] = m[-1] = dx / 2
    return A, m


def _fv_1d_dirichlet(n, L):
    """Interior-node stiffness/mass for -w'' with zero boundary values."""
    dx = L / (n - 1)
    ni = n - 2
    main = np.full(ni, 2.0 / dx)
    off = np.full(ni - 1, -1.0 / dx)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    m = np.full(ni, dx)
    return A, m


def _assemble(pieces):
    """Kronecker sum A = sum_i M x...x A_i x...x M, M = kron of masses."""
    dims = len(pieces)
    A_total = None
    for i in range(dims):
        term = None
        for j in range(dims):
            Aj, mj = pieces[j]
            block = Aj if j == i else sp.diags(mj)
            term = block if term is None else sp.kron(term, block, format="csr")
        A_total = term if A_total is None else A_total + term
    m_total = np.ones(1)
    for _, mj in pieces:
        m_total = np.kron(m_total, mj)
    return A_total.tocsc(), m_total


def _inverse_iteration(A, tol, maxit=MAX_ITERATIONS):
    """Smallest eigenvalue of SPD sparse A by inverse iteration."""
    lu = splu(A)
    n = A.shape[0]
    x = np.ones(n)
    x /= np.linalg.norm(x)
    lam = np.inf
    for it in range(1, maxit + 1):
        y = lu.solve(x)
        y /= np.linalg.norm(y)
        lam_new = float(y @ (A @ y))
        if abs(lam_new - lam) <= tol * abs(lam_new):
            resid = float(np.linalg.norm(A @ y - lam_new * y))
            if y.sum() < 0:
                y = -y
            return lam_new, y, resid, it
        lam = lam_new
        x = y
    raise EigenSolveError(f"inverse iteration did not converge in {maxit} steps")


def _radial_eigen(dim, R, h=None, tol=1e-12):
    """First radial eigenvalue on a centered ball.

    h is None for the Dirichlet condition w(R)=0, else the Robin condition
    w'(R) + h w(R) = 0.  Returns (eigenvalue, radial profile callable).
    """

    def shoot(xi):
        r0 = 1e-8 * R

        def rhs(r, y):
            w, v = y
            return [v, -xi * w - (dim - 1) / r * v]

        y0 = [1.0 - xi * r0**2 / (2 * dim), -xi * r0 / dim]
        sol = solve_ivp(
            rhs, (r0, R), y0, rtol=1e-11, atol=1e-13, dense_output=True
        )
        wR, vR = sol.y[0, -1], sol.y[1, -1]
        if h is None:
            return wR, sol
        return vR + h * wR, sol

    # bracket the first root on a geometric grid of trial eigenvalues
    lo = 1e-6 / R**2
    hi = 2.0 * (np.pi / R) ** 2 * dim
    grid = np.geomspace(lo, hi, 200)
    f_prev = shoot(grid[0])[0]
    prev_xi = grid[0]
    bracket = None
    for xi in grid[1:]:
        f = shoot(xi)[0]
        if np.sign(f) != np.sign(f_prev):
            bracket = (prev_xi, xi)
            break
        f_prev, prev_xi = f, xi
    if bracket is None:
        raise EigenSolveError("no radial eigenvalue bracket found")
    xi1 = brentq(lambda x: shoot(x)[0], *bracket, xtol=tol)
    _, sol = shoot(xi1)

    def profile(r):
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, sol.t[0], R)
        flat = sol.sol(rc.ravel())[0]
        return flat.reshape(rc.shape)

    return float(xi1), profile


def _grid_eigen(domain, h, tol):
    """Inverse iteration on the box/interval grid; h=None means Dirichlet."""
    pieces = []
    for L, n in zip(_axis_lengths(domain), domain.resolution):
        if h is None:
            pieces.append(_fv_1d_dirichlet(n, L))
        else:
            pieces.append(_fv_1d_robin(n, L, h))
    A, m = _assemble(pieces)
    d = np.sqrt(m)
    C = sp.diags(1.0 / d) @ A @ sp.diags(1.0 / d)
    lam, y, resid, it = _inverse_iteration(C.tocsc(), tol)
    w = y / d
    if h is None:
        shape_i = tuple(n - 2 for n in domain.resolution)
        full = np.zeros(domain.shape)
        inner = tuple(slice(1, -1) for _ in range(domain.dim))
        full[inner] = w.reshape(shape_i)
    else:
        full = w.reshape(domain.shape)
    full = np.where(full < 0, 0.0, full)
    full /= full.max()
    return EigenResult(eigenvalue=lam, eigenvector=full, residual=resid, iterations=it)


def _axis_lengths(domain):
    return [ax[-1] - ax[0] for ax in domain.axes]


def _ball_eigen(domain, h):
    xi1, profile = _radial_eigen(domain.dim, domain.radius, h=h)
    r = np.linalg.norm(domain.coords(), axis=-1)
    w = profile(r)
    w = np.where(domain.mask, np.maximum(w, 0.0), 0.0)
    w /= w.max()
    return EigenResult(eigenvalue=xi1, eigenvector=w, residual=1e-12, iterations=0)


def dirichlet_lambda1(domain, tol=DEFAULT_TOL):
    """First Dirichlet eigenvalue of -Laplace (optimal Poincare constant)."""
    if domain.kind == "ball":
        return _ball_eigen(domain, h=None)
    return _grid_eigen(domain, h=None, tol=tol)


def robin_xi1(domain, h, tol=DEFAULT_TOL):
    """First eigenvalue of the supported membrane problem w_nu + h w = 0."""
    if h <= 0:
        raise ValueError("Robin coefficient h must be positive")
    if domain.kind == "ball":
        return _ball_eigen(domain, h=h)
    return _grid_eigen(domain, h=h, tol=tol)


def rayleigh_quotient(domain, h, eigenvector):
    """Discrete Robin Rayleigh quotient consistent with the FV operator."""
    pieces = [
        _fv_1d_robin(n, L, h)
        for L, n in zip(_axis_lengths(domain), domain.resolution)
    ]
    A, m = _assemble(pieces)
    w = eigenvector.ravel()
    return float(w @ (A @ w)) / float(w @ (m * w))


def eta(domain, h, xi1=None):
    """Poincare-type constant eta(h) from the membrane eigenvalue.

    eta(h) = (3 xi1(h) - h (2 m1 N + 3 m2 - 3)) / (3 (h (m2 - 1) + 1)).
    """
    if xi1 is None:
        xi1 = robin_xi1(domain, h).eigenvalue
    sc = star_constants(domain)
    N = domain.dim
    num = 3.0 * xi1 - h * (2.0 * sc.m1 * N + 3.0 * sc.m2 - 3.0)
    den = 3.0 * (h * (sc.m2 - 1.0) + 1.0)
    return num / den


def check_H3(domain, h, m):
    """Membrane-eigenvalue feasibility test.

    Returns (ok, margin) with margin = xi1(h m)/(h m) - (2 m1 N / 3 + m2 - 1);
    ok means the margin is nonnegative, equivalently eta(h m) >= 0.
    """
    if m <= 1:
        raise ValueError("diffusion exponent m must exceed 1")
    if h <= 0:
        raise ValueError("Robin coefficient h must be positive")
    xi = robin_xi1(domain, h * m).eigenvalue
    sc = star_constants(domain)
    margin = xi / (h * m) - (2.0 * sc.m1 * domain.dim / 3.0 + sc.m2 - 1.0)
    return margin >= 0.0, float(margin)


def h3_frontier(domain, m, h_values):
    """Evaluate the feasibility margin over a sweep of Robin coefficients.

    Returns a list of (h, margin) pairs, sorted as given.  A sign change in
    the margins locates the feasibility frontier; for interval/box/ball
    domains the margin is provably negative for every h (the membrane
    quotient xi1(h)/h never exceeds |boundary|/|Omega| while the geometric
    side exceeds it by at least m2 - 1), so this probe reports how far from
    feasibility a configuration sits.
    """
    out = []
    for h in h_values:
        _, margin = check_H3(domain, h, m)
        out.append((float(h), margin))
    return out
