"""Perron-method primitives on graph functions.

Pointwise minimum of two graphs preserves weak curvature lower bounds away
from the crease where the active branch switches; mollification against a
smooth bump kernel restores smoothness (and strict convexity of creased
data) at the cost of a curvature degradation that vanishes with the
smoothing radius.  Convolution runs in base polar coordinates against the
hyperbolic area element sinh(s) ds dalpha; near the boundary the support
radius shrinks so the kernel never reaches outside the domain, and weights
are renormalised to unit mass at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .shape import GraphFn, Grid, shape_field
from .slcalc import CurvatureQuery, r_theta_eigs


class GridMismatchError(ValueError):
    """Operands sampled on different grids."""


@dataclass(frozen=True)
class MollifyConfig:
    """Smoothing radius for graph mollification (base geodesic length).

    The kernel is a fixed smooth bump psi with psi(t) = 1 for t <= 1/2 and
    psi(t) = 0 for t >= 1, normalised to unit mass node by node.
    """

    eps: float

    def __post_init__(self):
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise ValueError("eps must be a positive real")


def _psi(t):
    """Smooth bump: 1 on [0, 1/2], 0 on [1, inf), C-infinity in between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 1.0)
    tm = t[mid]
    # transition via exp(-1/u) partition on the rescaled coordinate
    u = (tm - 0.5) / 0.5
    a = np.exp(-1.0 / (1.0 - u))
    b = np.exp(-1.0 / u)
    out[mid] = a / (a + b)
    return out


def min_combine(f1: GraphFn, f2: GraphFn) -> GraphFn:
    """Nodewise minimum of two graphs over the same grid."""
    if f1.grid != f2.grid:
        raise GridMismatchError("min_combine needs identical grids")
    return GraphFn(
        f1.grid,
        np.minimum(f1.values, f2.values),
        check_boundary=False,
        check_nonneg=False,
    )


def crease_band(f1: GraphFn, f2: GraphFn, cells=2) -> np.ndarray:
    """Interior mask of nodes within ``cells`` lattice steps of the crease.

    The crease is where the active branch of min(f1, f2) switches; curvature
    statements about the minimum hold away from it.
    """
    if f1.grid != f2.grid:
        raise GridMismatchError("crease_band needs identical grids")
    grid = f1.grid
    which = (f1.values <= f2.values)[: grid.Ns]
    band = np.zeros_like(which, dtype=bool)
    for dj in range(-cells, cells + 1):
        for dk in range(-cells, cells + 1):
            rolled = np.roll(which, dk, axis=1)
            if dj > 0:
                shifted = np.vstack([rolled[dj:], np.repeat(rolled[-1:], dj, axis=0)])
            elif dj < 0:
                shifted = np.vstack([np.repeat(rolled[:1], -dj, axis=0), rolled[:dj]])
            else:
                shifted = rolled
            band |= shifted != which
    return band


def mollify(f: GraphFn, cfg: MollifyConfig) -> GraphFn:
    """Convolve a graph against the bump kernel in base polar coordinates.

    Weights are psi(d/eps_p) times the hyperbolic cell area sinh(s) ds dalpha,
    renormalised to unit mass.  The per-node support radius eps_p shrinks to
    the distance from the boundary so the kernel never needs values outside
    the domain; boundary nodes keep their input values.  The angular loop
    covers the whole circle, so neighbours across the centre are reached as
    ordinary nodes and need no ghost bookkeeping.
    """
    grid = f.grid
    if cfg.eps < 2.0 * grid.h_phys:
        raise ValueError(
            f"eps = {cfg.eps} must be at least two radial steps ({2 * grid.h_phys:.4g})"
        )
    Ns, Na = grid.Ns, grid.Nalpha
    s = grid.s  # (Ns+1, Na) physical radii, boundary row included
    cs, ss = np.cosh(s), np.sinh(s)
    # radial gap to the boundary is a lower proxy for the boundary distance;
    # clamping the support with it keeps the kernel inside the domain
    d_bdry = (grid.rho_alpha[None, :] - s)[:Ns]
    eps_p = np.minimum(cfg.eps, np.maximum(d_bdry, 0.5 * grid.h_phys))

    cell = ss * grid.h_sigma * grid.rho_alpha[None, :] * grid.h_alpha  # area weights
    target_c, target_s = cs[:Ns], ss[:Ns]

    max_dj = int(math.ceil(cfg.eps / (grid.h_sigma * grid.dom.rho_min))) + 1
    acc = np.zeros((Ns, Na))
    wsum = np.zeros((Ns, Na))
    cols = np.arange(Na)
    for dj in range(-max_dj, max_dj + 1):
        jsrc = np.arange(Ns) + dj
        valid = (jsrc >= 0) & (jsrc <= Ns)
        if not np.any(valid):
            continue
        jj = np.clip(jsrc, 0, Ns)
        for dk in range(Na):
            ksrc = (cols + dk) % Na
            src_c = cs[jj[:, None], ksrc[None, :]]
            src_sh = ss[jj[:, None], ksrc[None, :]]
            cd = target_c * src_c - target_s * src_sh * math.cos(dk * grid.h_alpha)
            dist = np.arccosh(np.maximum(cd, 1.0))
            w = _psi(dist / eps_p) * cell[jj[:, None], ksrc[None, :]]
            w = np.where(valid[:, None], w, 0.0)
            acc += w * f.values[jj[:, None], ksrc[None, :]]
            wsum += w
    out = np.array(f.values)
    out[:Ns] = acc / wsum
    return GraphFn(f.grid, out, check_boundary=False, check_nonneg=False)


def weak_curvature_lb(f: GraphFn, q: CurvatureQuery, mask=None, radial=None) -> float:
    """Smallest rescaled curvature level over admissible interior nodes.

    Returns 0 when no node is admissible.  ``mask`` (interior-shaped bool)
    excludes nodes, e.g. a crease band, from the minimum.
    """
    sf = shape_field(f, q, radial=radial)
    keep = sf.admissible.copy()
    if mask is not None:
        keep &= ~np.asarray(mask, dtype=bool).reshape(-1)
    if not np.any(keep):
        return 0.0
    r = r_theta_eigs(sf.lam[keep], q.theta)
    return float(math.tan(q.theta / q.n) * np.min(r))
