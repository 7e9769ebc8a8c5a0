"""Computational domains, star-shape constants, and structured-grid quadrature.

Supported domains are intervals, axis-aligned boxes and centered balls.  All
volume integrals elsewhere in the package go through ``integrate_volume`` and
all surface integrals through ``integrate_boundary``, so quadrature
conventions live in exactly one place.
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma as gamma_fn

SUPPORTED_KINDS = ("interval", "box", "ball")


class DomainError(ValueError):
    """Invalid domain description (bad extent, origin, resolution...)."""


@dataclass(frozen=True)
class StarConstants:
    """Geometric constants of a star-shaped domain.

    m1 = 3 / (2 min_{boundary} (x - x0).n),
    m2 = 1 + max |x - x0| / min_{boundary} (x - x0).n
    """

    m1: float
    m2: float


class Domain:
    """Uniform tensor grid over an interval, box or centered ball.

    Interval/box grids live on [0, L_i] per axis and include boundary nodes.
    Ball grids live on the bounding box [-R, R]^N with a node mask; surface
    quadrature on balls uses the analytic sphere parametrization, never the
    mask.
    """

    def __init__(self, kind, extents, dimension, x0=None, resolution=64):
        if kind not in SUPPORTED_KINDS:
            raise DomainError(f"unsupported domain kind {kind!r}")
        if dimension not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {dimension}")
        extents = tuple(float(e) for e in np.atleast_1d(extents))
        if any(e <= 0 for e in extents):
            raise DomainError("all extents must be strictly positive")

        if kind == "interval":
            if dimension != 1 or len(extents) != 1:
                raise DomainError("interval domains are one-dimensional")
        elif kind == "box":
            if len(extents) != dimension:
                raise DomainError("box needs one extent per axis")
        elif kind == "ball":
            if len(extents) != 1:
                raise DomainError("ball takes a single extent (the radius)")
            if dimension < 2:
                raise DomainError("use kind='interval' for 1D")

        if np.isscalar(resolution):
            resolution = (int(resolution),) * dimension
        else:
            resolution = tuple(int(r) for r in resolution)
        if len(resolution) != dimension or any(r < 4 for r in resolution):
            raise DomainError("resolution must be >= 4 nodes per axis")

        self.kind = kind
        self.extents = extents
        self.dim = dimension
        self.resolution = resolution

        if kind == "ball":
            R = extents[0]
            self.radius = R
            self.axes = [np.linspace(-R, R, n) for n in resolution]
            center = np.zeros(dimension)
            if x0 is not None:
                x0 = np.atleast_1d(np.asarray(x0, dtype=float))
                if not np.allclose(x0, center):
                    raise DomainError("ball domains require x0 at the center")
            self.x0 = center
        else:
            self.radius = None
            self.axes = [np.linspace(0.0, L, n) for L, n in zip(extents, resolution)]
            if x0 is None:
                x0 = np.array([L / 2 for L in extents])
            x0 = np.atleast_1d(np.asarray(x0, dtype=float))
            if x0.shape != (dimension,):
                raise DomainError("x0 must have one coordinate per axis")
            if any(not (0.0 < c < L) for c, L in zip(x0, extents)):
                raise DomainError("x0 must lie strictly inside the domain")
            self.x0 = x0

        self.spacing = tuple(ax[1] - ax[0] for ax in self.axes)
        self.shape = tuple(resolution)

        grids = np.meshgrid(*self.axes, indexing="ij")
        self._coords = np.stack(grids, axis=-1)

        if kind == "ball":
            r = np.linalg.norm(self._coords, axis=-1)
            self.mask = r <= self.radius + 1e-12
            cell = float(np.prod(self.spacing))
            self.volume_weights = np.where(self.mask, cell, 0.0)
        else:
            self.mask = None
            w1d = []
            for n, dx in zip(resolution, self.spacing):
                w = np.full(n, dx)
                w[0] = w[-1] = dx / 2
                w1d.append(w)
            W = w1d[0]
            for w in w1d[1:]:
                W = np.multiply.outer(W, w)
            self.volume_weights = W

    # -- basic measures -------------------------------------------------

    def volume(self):
        """Analytic |Omega|."""
        if self.kind == "ball":
            N, R = self.dim, self.radius
            return float(np.pi ** (N / 2) / gamma_fn(N / 2 + 1) * R**N)
        return float(np.prod(self.extents))

    def boundary_measure(self):
        """Analytic |boundary|."""
        if self.kind == "interval":
            return 2.0
        if self.kind == "ball":
            N, R = self.dim, self.radius
            return float(2 * np.pi ** (N / 2) / gamma_fn(N / 2) * R ** (N - 1))
        total = 0.0
        for i, L in enumerate(self.extents):
            face = np.prod([Lj for j, Lj in enumerate(self.extents) if j != i])
            total += 2 * face
        return float(total)

    def coords(self):
        """Node coordinates, shape = grid shape + (dim,)."""
        return self._coords

    def boundary_node_mask(self):
        """Boolean grid mask of boundary nodes (interval/box only)."""
        if self.kind == "ball":
            raise DomainError("ball boundaries are not grid-aligned")
        m = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            idx_lo = [slice(None)] * self.dim
            idx_lo[axis] = 0
            idx_hi = [slice(None)] * self.dim
            idx_hi[axis] = -1
            m[tuple(idx_lo)] = True
            m[tuple(idx_hi)] = True
        return m

    # -- quadrature -----------------------------------------------------

    def _check_shape(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise DomainError(
                f"values shape {values.shape} does not match grid {self.shape}"
            )
        return values

    def _sphere_rule(self):
        """Quadrature nodes/weights on the sphere |x| = R (ball domains)."""
        R = self.radius
        if self.dim == 2:
            n = 4 * max(self.resolution)
            theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
            pts = R * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            w = np.full(n, 2 * np.pi * R / n)
            return pts, w
        # 3D: Gauss-Legendre in cos(polar) x uniform azimuth
        nt = 2 * max(self.resolution)
        np_phi = 2 * nt
        mu, wmu = np.polynomial.legendre.leggauss(nt)
        phi = np.linspace(0.0, 2 * np.pi, np_phi, endpoint=False)
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        sin_t = np.sqrt(1.0 - MU**2)
        pts = R * np.stack(
            [sin_t * np.cos(PHI), sin_t * np.sin(PHI), MU], axis=-1
        ).reshape(-1, 3)
        w = (np.outer(wmu, np.full(np_phi, 2 * np.pi / np_phi)) * R**2).ravel()
        return pts, w


def make_domain(kind, extents, dimension, x0=None, resolution=64):
    """Build a :class:`Domain` with precomputed quadrature weights."""
    return Domain(kind, extents, dimension, x0=x0, resolution=resolution)


def star_constants(domain):
    """Analytic star-shape constants m1, m2 for the supported kinds."""
    if domain.kind == "ball":
        R = domain.radius
        rho_min = R
        r_max = R
    elif domain.kind == "interval":
        a = domain.x0[0]
        L = domain.extents[0]
        rho_min = min(a, L - a)
        r_max = max(a, L - a)
    else:
        rho_min = min(
            min(c, L - c) for c, L in zip(domain.x0, domain.extents)
        )
        corners = np.array(
            np.meshgrid(*[(0.0, L) for L in domain.extents], indexing="ij")
        ).reshape(domain.dim, -1).T
        r_max = float(np.max(np.linalg.norm(corners - domain.x0, axis=1)))
    m1 = 3.0 / (2.0 * rho_min)
    m2 = 1.0 + r_max / rho_min
    return StarConstants(m1=m1, m2=m2)


def integrate_volume(domain, values):
    """Composite trapezoid (box) / masked-cell (ball) volume integral."""
    values = domain._check_shape(values)
    return float(np.sum(values * domain.volume_weights))


def boundary_values(domain, values):
    """Concatenated boundary samples and weights, (vals, weights)."""
    values = domain._check_shape(values)
    if domain.kind == "ball":
        pts, w = domain._sphere_rule()
        interp = RegularGridInterpolator(
            domain.axes, values, bounds_error=False, fill_value=None
        )
        return interp(pts), w
    vals, weights = [], []
    if domain.dim == 1:
        return np.array([values[0], values[-1]]), np.array([1.0, 1.0])
    for axis in range(domain.dim):
        w1d = []
        for j in range(domain.dim):
            if j == axis:
                continue
            n, dx = domain.resolution[j], domain.spacing[j]
            w = np.full(n, dx)
            w[0] = w[-1] = dx / 2
            w1d.append(w)
        W = w1d[0]
        for w in w1d[1:]:
            W = np.multiply.outer(W, w)
        for side in (0, -1):
            idx = [slice(None)] * domain.dim
            idx[axis] = side
            vals.append(values[tuple(idx)].ravel())
            weights.append(W.ravel())
    return np.concatenate(vals), np.concatenate(weights)


def integrate_boundary(domain, values, power=1):
    """Surface integral of values**power over the domain boundary."""
    if power < 1:
        raise DomainError("boundary power must be >= 1")
    v, w = boundary_values(domain, values)
    return float(np.sum(np.asarray(v, dtype=float) ** power * w))


def gradient(domain, values):
    """Per-axis gradient: centered interior, one-sided 2nd order at edges."""
    values = domain._check_shape(values)
    if domain.dim == 1:
        return [np.gradient(values, domain.axes[0], edge_order=2)]
    return list(np.gradient(values, *domain.axes, edge_order=2))


def grad_norm_sq(domain, values):
    """Pointwise |grad values|^2 on the grid."""
    comps = gradient(domain, values)
    out = np.zeros(domain.shape)
    for c in comps:
        out += c * c
    return out
