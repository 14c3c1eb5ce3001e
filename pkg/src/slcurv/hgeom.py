"""Hyperboloid-model geometry of hyperbolic space.

Ambient hyperbolic space of curvature -1 is realised as the upper sheet of
the unit hyperboloid in Minkowski space with signature (-, +, ..., +).  The
base hypersurface is the totally geodesic hyperplane cut out by the last
spatial coordinate; graphs over it are parametrised in normal (Fermi)
coordinates: a base point at geodesic polar coordinates (s, alpha) is lifted
height t along the unit normal.

Umbilic caps (equidistant for 0 < lambda < 1, horospheric for lambda = 1)
over geodesic disks have closed-form graph functions and are the oracle
surfaces used throughout: their shape operator is lambda times the identity,
and their rescaled curvature level equals lambda for every angle parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Invalid base-domain description."""


def mink_dot(x, y):
    """Minkowski inner product -x0*y0 + sum_i xi*yi on trailing axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


@dataclass(frozen=True)
class MinkPoint:
    """Point on the unit hyperboloid: <X, X> = -1, X0 >= 1."""

    coords: tuple

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or len(c) < 3:
            raise ValueError("expected a flat coordinate vector")
        q = float(mink_dot(c, c))
        if abs(q + 1.0) > 1e-12 * (1.0 + float(np.max(np.abs(c))) ** 2):
            raise ValueError(f"not on the unit hyperboloid: <X,X> = {q}")
        if c[0] < 1.0 - 1e-12:
            raise ValueError("point lies on the lower sheet")

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def embed_batch(s, alpha, t):
    """Hyperboloid coordinates of the lift of base point (s, alpha) to height t.

    X = cosh(t) * P(s, alpha) + sinh(t) * e3 with P the base-plane point
    (cosh s, sinh s cos alpha, sinh s sin alpha, 0).  Accepts broadcastable
    arrays and returns an array with a trailing axis of length 4.
    """
    s, alpha, t = np.broadcast_arrays(np.asarray(s), np.asarray(alpha), np.asarray(t))
    ct, st = np.cosh(t), np.sinh(t)
    cs, ss = np.cosh(s), np.sinh(s)
    return np.stack(
        [ct * cs, ct * ss * np.cos(alpha), ct * ss * np.sin(alpha), st], axis=-1
    )


def fermi_embed(s, alpha, t) -> MinkPoint:
    """Single-point Fermi chart for ambient dimension 3 (n = 2 graphs)."""
    x = embed_batch(float(s), float(alpha), float(t))
    return MinkPoint(tuple(x))


def embed_profile(s, t):
    """Radial-plane lift in the 2+1 Minkowski block (X0, X_radial, X_vertical).

    Used by the rotational reduction: all radial geometry of a surface of
    revolution lives in this block.
    """
    s = np.asarray(s)
    t = np.asarray(t)
    ct, st = np.cosh(t), np.sinh(t)
    return np.stack([ct * np.cosh(s), ct * np.sinh(s), st], axis=-1)


def poincare_project(X):
    """Poincare-ball coordinates x_i = X_i / (1 + X0); norm < 1."""
    if isinstance(X, MinkPoint):
        X = X.array()
    X = np.asarray(X, dtype=float)
    return X[..., 1:] / (1.0 + X[..., 0])[..., None]


def poincare_unproject(x) -> np.ndarray:
    """Inverse of poincare_project; returns hyperboloid coordinates."""
    x = np.asarray(x, dtype=float)
    n2 = np.sum(x * x, axis=-1)
    if np.any(n2 >= 1.0):
        raise ValueError("Poincare coordinates must have norm < 1")
    denom = 1.0 - n2
    x0 = (1.0 + n2) / denom
    xi = 2.0 * x / denom[..., None]
    return np.concatenate([x0[..., None], xi], axis=-1)


_FOURIER_BUDGET = 0.3


@dataclass(frozen=True)
class DomainSpec:
    """Base domain in the totally geodesic hyperplane.

    Either a geodesic disk of radius rho, or a star-shaped perturbation with
    boundary radius rho(alpha) = rho * (1 + sum_k a_k cos(k alpha)).  Only
    even harmonics are accepted: the polar lattice continues across the
    centre by the antipodal rule, which is exact only for centrally
    symmetric boundaries.  The perturbation budget sum |a_k| (1 + k^2) <= 0.3
    keeps the boundary convex at the scales this package targets.
    """

    kind: str
    rho: float
    fourier: tuple = ()

    def __post_init__(self):
        if self.kind not in ("disk", "star"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise DomainError("rho must be a positive real")
        four = tuple((int(k), float(a)) for k, a in self.fourier)
        object.__setattr__(self, "fourier", four)
        if self.kind == "disk":
            if four:
                raise DomainError("disk domains take no Fourier coefficients")
            return
        if not four:
            raise DomainError("star domains need at least one Fourier coefficient")
        for k, _ in four:
            if k < 2 or k % 2 != 0:
                raise DomainError("star harmonics must be even and >= 2")
        budget = sum(abs(a) * (1 + k * k) for k, a in four)
        if budget > _FOURIER_BUDGET:
            raise DomainError(
                f"perturbation budget sum |a_k| (1 + k^2) = {budget:.3f} exceeds "
                f"{_FOURIER_BUDGET}"
            )
        alphas = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
        if np.any(self.radius(alphas) <= 0.0):
            raise DomainError("boundary radius must stay positive")

    def radius(self, alpha):
        """Boundary radius rho(alpha)."""
        alpha = np.asarray(alpha, dtype=float)
        out = np.ones_like(alpha)
        for k, a in self.fourier:
            out = out + a * np.cos(k * alpha)
        return self.rho * out

    @property
    def rho_min(self) -> float:
        if self.kind == "disk":
            return self.rho
        alphas = np.linspace(0.0, 2.0 * math.pi, 1440, endpoint=False)
        return float(np.min(self.radius(alphas)))

    @property
    def rho_max(self) -> float:
        if self.kind == "disk":
            return self.rho
        alphas = np.linspace(0.0, 2.0 * math.pi, 1440, endpoint=False)
        return float(np.max(self.radius(alphas)))


@dataclass(frozen=True)
class UmbilicCap:
    """Umbilic graph over a geodesic disk of radius rho.

    lam is the common principal curvature, equal to the rescaled curvature
    level of the cap for every angle parameter: geodesic plate at lam = 0,
    equidistant cap for 0 < lam < 1, horospheric cap at lam = 1.
    """

    lam: float
    rho: float

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must lie in [0, 1]")
        if not (self.rho > 0.0 and math.isfinite(self.rho)):
            raise ValueError("rho must be a positive real")

    @property
    def kind(self) -> str:
        if self.lam == 0.0:
            return "geodesic"
        return "horospheric" if self.lam == 1.0 else "equidistant"

    def height(self, s):
        """Graph function at geodesic base distance s from the cap centre."""
        return cap_height(self.lam, self.rho, s)


def _solve_cap(c, q):
    """Solve c * cosh(f) + q * sinh(f) = 1 for f, vectorised.

    c > 0 is cosh(distance from cap centre)/cosh(rho); q > 0 collects the
    curvature level.  The left side is increasing and convex in f, so Newton
    started from a point with nonnegative residual descends monotonically.
    Roots below zero (base point outside the cap's disk) are clipped to 0.
    """
    c = np.asarray(c, dtype=float)
    f = np.full(c.shape, math.asinh(1.0 / q))
    for _ in range(60):
        g = c * np.cosh(f) + q * np.sinh(f) - 1.0
        gp = c * np.sinh(f) + q * np.cosh(f)
        step = g / gp
        f = f - step
        if np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(f))):
            break
    # the root is exactly 0 on the rim (c = 1) and negative outside it
    return np.where(c >= 1.0, 0.0, np.maximum(f, 0.0))


def cap_height(lam, rho_cap, s, cosh_dist=None):
    """Height of the umbilic cap of curvature lam over a disk of radius rho_cap.

    ``s`` is geodesic distance from the cap centre in the base plane (or pass
    ``cosh_dist`` directly for off-centre evaluations).  Solves the section
    equation (cosh s / cosh rho) cosh f + q sinh f = 1 per point by Newton to
    full precision, with q = sqrt(1/lam^2 - 1 + 1/cosh^2 rho); the lam -> 1
    limit is the horospheric section and needs no separate branch.
    """
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must lie in [0, 1]")
    if cosh_dist is None:
        cosh_dist = np.cosh(np.asarray(s, dtype=float))
    else:
        cosh_dist = np.asarray(cosh_dist, dtype=float)
    if lam == 0.0:
        return np.zeros_like(cosh_dist)
    ch = math.cosh(rho_cap)
    q = math.sqrt(max(1.0 / (lam * lam) - 1.0 + 1.0 / (ch * ch), 0.0))
    return _solve_cap(cosh_dist / ch, q)


def umbilic_cap(lam, grid):
    """Umbilic cap of curvature lam as a graph sample over a disk grid."""
    from . import shape  # deferred: shape builds on this module

    if grid.dom.kind != "disk":
        raise DomainError("umbilic caps are defined over disk domains")
    cap = UmbilicCap(lam, grid.dom.rho)
    values = cap.height(grid.s)
    return shape.GraphFn(grid, values)


def offset_cap(lam, rho_cap, center_s, center_alpha, grid):
    """Graph of an umbilic cap over a disk centred away from the grid origin.

    The cap sits over the disk of radius rho_cap centred at base polar point
    (center_s, center_alpha); its height over each grid node follows from the
    hyperbolic law of cosines, clipped to 0 outside the cap's own disk.
    """
    from . import shape

    cd = np.cosh(grid.s) * math.cosh(center_s) - np.sinh(grid.s) * math.sinh(
        center_s
    ) * np.cos(grid.alphas[None, :] - center_alpha)
    values = cap_height(lam, rho_cap, None, cosh_dist=cd)
    return shape.GraphFn(grid, values, check_boundary=False)
