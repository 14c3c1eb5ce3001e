"""Discrete graphs over a geodesic domain and their shape operators.

Graphs are sampled on a radially staggered polar lattice in a normalised
chart: sigma_j = (j + 1/2) / (Ns + 1/2) runs over interior rings, sigma = 1
is the boundary ring (where f = 0), and the physical geodesic radius is
s = sigma * rho(alpha).  With this scaling the boundary curve is always a
lattice ring, also for star domains, so boundary-adjacent stencils use the
exact boundary zeros through plain central differences.  Stencils crossing
the centre use the antipodal continuation f(-s, alpha) = f(s, alpha + pi),
which is exact because star harmonics are restricted to even orders.

The shape operator at a node is computed from finite differences of the
Minkowski embedding of the graph patch: tangents and second derivatives of
the embedded surface give the induced metric g and second fundamental form
II directly, and A = g^(-1/2) II g^(-1/2) is a symmetric matrix similar to
g^(-1) II, hence with the same eigenvalues (the principal curvatures).
Dimensions above 2 are supported on rotationally symmetric data only, via a
radial profile reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hgeom
from .slcalc import MAX_DIM, CurvatureQuery, SymMat, sl_eigs

# Sign convention: with the upward unit normal (positive vertical component),
# II = -<d2X, N> makes constant-height slices positively curved.
ORIENTATION = -1.0

DET_G_FLOOR = 1e-12
F_MAX_DEFAULT = 10.0
EPS_ADMISSIBLE = 1e-10


class DegenerateMetricError(RuntimeError):
    """Induced metric lost rank: the sample no longer describes a graph."""


class GridError(ValueError):
    """Invalid lattice construction."""


class GraphFormatError(ValueError):
    """Malformed graph CSV file."""


class Grid:
    """Radially staggered polar lattice over a DomainSpec.

    Ns interior rings at sigma_j = (j + 1/2)/(Ns + 1/2), one boundary ring at
    sigma = 1, Nalpha equally spaced angles.  Physical radius of node (j, k)
    is s = sigma_j * rho(alpha_k).
    """

    def __init__(self, dom: hgeom.DomainSpec, Ns: int, Nalpha: int):
        if Ns < 8:
            raise GridError("need Ns >= 8")
        if Nalpha < 16 or Nalpha % 2 != 0:
            raise GridError("need Nalpha >= 16 and even")
        self.dom = dom
        self.Ns = int(Ns)
        self.Nalpha = int(Nalpha)
        self.h_sigma = 1.0 / (Ns + 0.5)
        self.h_alpha = 2.0 * math.pi / Nalpha
        # division keeps the boundary entry exactly 1.0
        self.sigmas = (np.arange(Ns + 1) + 0.5) / (Ns + 0.5)
        self.alphas = np.arange(Nalpha) * self.h_alpha
        self.rho_alpha = dom.radius(self.alphas)
        self.s = self.sigmas[:, None] * self.rho_alpha[None, :]
        self.h_phys = self.h_sigma * dom.rho_max
        if self.h_phys > dom.rho_min / 8.0:
            raise GridError(
                f"radial step {self.h_phys:.4f} exceeds rho_min/8 = "
                f"{dom.rho_min / 8.0:.4f}; refine the grid"
            )

    @property
    def n_interior(self) -> int:
        return self.Ns * self.Nalpha

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.dom == other.dom
            and self.Ns == other.Ns
            and self.Nalpha == other.Nalpha
        )

    def __hash__(self):
        return hash((self.dom, self.Ns, self.Nalpha))

    def __repr__(self):
        return f"Grid({self.dom.kind}, rho={self.dom.rho}, {self.Ns}x{self.Nalpha})"


def build_grid(dom: hgeom.DomainSpec, Ns: int, Nalpha: int) -> Grid:
    return Grid(dom, Ns, Nalpha)


class GraphFn:
    """Graph function sample: one value per node, zero on the boundary ring.

    ``values`` has shape (Ns + 1, Nalpha); row Ns is the boundary ring.
    Diagnostic fields (constant slices, solver intermediates) may disable the
    boundary/positivity checks; the magnitude guard always applies.
    """

    def __init__(self, grid: Grid, values, check_boundary=True, check_nonneg=True,
                 f_max=F_MAX_DEFAULT):
        values = np.array(values, dtype=float)
        if values.shape != (grid.Ns + 1, grid.Nalpha):
            raise ValueError(
                f"values must have shape {(grid.Ns + 1, grid.Nalpha)}, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("graph values must be finite")
        if np.max(np.abs(values)) > f_max:
            raise ValueError(f"graph values exceed the magnitude guard {f_max}")
        if check_boundary and np.any(values[-1] != 0.0):
            raise ValueError("graph values must vanish on the boundary ring")
        if check_nonneg and np.any(values < 0.0):
            raise ValueError("graph values must be nonnegative")
        self.grid = grid
        self.values = values

    def with_values(self, values, **kw) -> "GraphFn":
        return GraphFn(self.grid, values, **kw)

    def interior(self) -> np.ndarray:
        return self.values[:-1]

    def __repr__(self):
        return f"GraphFn({self.grid!r}, max={np.max(self.values):.4g})"


# ---------------------------------------------------------------------------
# batch geometry
# ---------------------------------------------------------------------------

def _mink4(x, y):
    return (
        -x[..., 0] * y[..., 0]
        + x[..., 1] * y[..., 1]
        + x[..., 2] * y[..., 2]
        + x[..., 3] * y[..., 3]
    )


def _mink3(x, y):
    return -x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] + x[..., 2] * y[..., 2]


def _mink_normal4(x, u, v):
    """Vector Minkowski-orthogonal to x, u, v (4D Levi-Civita contraction)."""

    def d3(i, j, k):
        return (
            x[..., i] * (u[..., j] * v[..., k] - u[..., k] * v[..., j])
            - x[..., j] * (u[..., i] * v[..., k] - u[..., k] * v[..., i])
            + x[..., k] * (u[..., i] * v[..., j] - u[..., j] * v[..., i])
        )

    c0 = d3(1, 2, 3)
    c1 = -d3(0, 2, 3)
    c2 = d3(0, 1, 3)
    c3 = -d3(0, 1, 2)
    return np.stack([-c0, c1, c2, c3], axis=-1)


def _mink_normal3(x, u):
    c0 = x[..., 1] * u[..., 2] - x[..., 2] * u[..., 1]
    c1 = x[..., 2] * u[..., 0] - x[..., 0] * u[..., 2]
    c2 = x[..., 0] * u[..., 1] - x[..., 1] * u[..., 0]
    return np.stack([-c0, c1, c2], axis=-1)


def _extended_values(grid: Grid, values):
    """Stack the antipodal ghost ring on top of the value array.

    Row m of the result holds ring m - 1 of the lattice; row 0 is the ghost
    ring f(-sigma_0, alpha) = f(sigma_0, alpha + pi).
    """
    ghost = np.roll(values[0], -grid.Nalpha // 2)
    return np.vstack([ghost[None, :], values])


def _extended_sigmas(grid: Grid):
    return np.concatenate([[-0.5 * grid.h_sigma], grid.sigmas])


def _eig2(a, b, c):
    """Ascending eigenvalues of symmetric [[a, b], [b, c]] fields."""
    m = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return np.stack([m - rad, m + rad], axis=-1)


def _invsqrt2(a, b, c):
    """Inverse square root of SPD [[a, b], [b, c]] fields, closed form.

    Accepts complex inputs near the real axis (complex-step derivatives);
    rank checks read the real part.
    """
    det = a * c - b * b
    if np.any(det.real <= DET_G_FLOOR):
        raise DegenerateMetricError(
            f"induced metric determinant dropped to {float(np.min(det.real)):.3e}"
        )
    sbar = np.sqrt(det)
    tbar = np.sqrt(a + c + 2.0 * sbar)
    denom = sbar * tbar
    out = np.empty(a.shape + (2, 2), dtype=a.dtype)
    out[..., 0, 0] = (c + sbar) / denom
    out[..., 0, 1] = -b / denom
    out[..., 1, 0] = -b / denom
    out[..., 1, 1] = (a + sbar) / denom
    return out


def _geometry2d(grid: Grid, values):
    """Per-interior-node embedding geometry for full 2D data (n = 2).

    Returns a dict of arrays over the (Ns, Nalpha) interior lattice: metric,
    second fundamental form, symmetrised shape operator A, its eigenvalues,
    and the raw derivative vectors needed by the intrinsic Hessian.
    """
    Ns, Na = grid.Ns, grid.Nalpha
    hs, ha = grid.h_sigma, grid.h_alpha
    fx = _extended_values(grid, values)
    sig = _extended_sigmas(grid)
    s_ext = sig[:, None] * grid.rho_alpha[None, :]
    E = hgeom.embed_batch(s_ext, grid.alphas[None, :], fx)

    Ep = np.roll(E, -1, axis=1)
    Em = np.roll(E, 1, axis=1)
    X = E[1 : Ns + 1]
    T1 = (E[2 : Ns + 2] - E[0:Ns]) / (2.0 * hs)
    T2 = (Ep[1 : Ns + 1] - Em[1 : Ns + 1]) / (2.0 * ha)
    X11 = (E[2 : Ns + 2] - 2.0 * X + E[0:Ns]) / (hs * hs)
    X22 = (Ep[1 : Ns + 1] - 2.0 * X + Em[1 : Ns + 1]) / (ha * ha)
    X12 = (Ep[2 : Ns + 2] - Ep[0:Ns] - Em[2 : Ns + 2] + Em[0:Ns]) / (4.0 * hs * ha)

    nraw = _mink_normal4(X, T1, T2)
    nn = _mink4(nraw, nraw)
    if np.any(nn.real <= 0.0):
        raise DegenerateMetricError("embedding normal is not spacelike")
    N = nraw / np.sqrt(nn)[..., None]
    f_int = values[:Ns]
    up = np.tanh(f_int)[..., None] * X
    up[..., 3] += 1.0 / np.cosh(f_int)
    sign = np.where(_mink4(N, up).real >= 0.0, 1.0, -1.0)
    N = N * sign[..., None]

    g11 = _mink4(T1, T1)
    g12 = _mink4(T1, T2)
    g22 = _mink4(T2, T2)
    ii11 = ORIENTATION * _mink4(X11, N)
    ii12 = ORIENTATION * _mink4(X12, N)
    ii22 = ORIENTATION * _mink4(X22, N)

    S = _invsqrt2(g11, g12, g22)
    II = np.empty(g11.shape + (2, 2), dtype=g11.dtype)
    II[..., 0, 0] = ii11
    II[..., 0, 1] = ii12
    II[..., 1, 0] = ii12
    II[..., 1, 1] = ii22
    A = np.einsum("...ij,...jk,...kl->...il", S, II, S)
    lam = _eig2(A[..., 0, 0], A[..., 0, 1], A[..., 1, 1])
    return {
        "A": A,
        "lam": lam,
        "g11": g11,
        "g12": g12,
        "g22": g22,
        "S": S,
        "T1": T1,
        "T2": T2,
        "X11": X11,
        "X12": X12,
        "X22": X22,
    }


def _radial_profile(grid: Grid, values, what="shape evaluation"):
    if grid.dom.kind != "disk":
        raise GridError(f"rotationally symmetric {what} needs a disk domain")
    spread = np.max(np.abs(values - values[:, :1]))
    if spread > 1e-12 * (1.0 + np.max(np.abs(values))):
        raise GridError(
            f"rotationally symmetric {what} needs alpha-independent data "
            f"(spread {spread:.3e})"
        )
    return values[:, 0]


def _geometry_radial(grid: Grid, values, n):
    """Rotational reduction: per-ring principal curvatures for radial data.

    The radial curvature comes from finite differences of the profile curve
    in the 2+1 Minkowski block.  The (n-1)-fold azimuthal curvature uses the
    first-derivative closed form; near the centre that form stays second
    order because the odd-parity radial derivative errors vanish with s.
    """
    Ns = grid.Ns
    hs = grid.h_sigma
    rho = grid.dom.rho
    prof = _radial_profile(grid, values)
    pf = np.concatenate([[prof[0]], prof])  # ghost ring: same value across centre
    sig = _extended_sigmas(grid)
    s_ext = sig * rho
    x = hgeom.embed_profile(s_ext, pf)

    xc = x[1 : Ns + 1]
    T = (x[2 : Ns + 2] - x[0:Ns]) / (2.0 * hs)
    xss = (x[2 : Ns + 2] - 2.0 * xc + x[0:Ns]) / (hs * hs)

    nraw = _mink_normal3(xc, T)
    nn = _mink3(nraw, nraw)
    if np.any(nn.real <= 0.0):
        raise DegenerateMetricError("profile normal is not spacelike")
    Nv = nraw / np.sqrt(nn)[..., None]
    f_int = prof[:Ns]
    up = np.tanh(f_int)[..., None] * xc
    up[..., 2] += 1.0 / np.cosh(f_int)
    sign = np.where(_mink3(Nv, up).real >= 0.0, 1.0, -1.0)
    Nv = Nv * sign[..., None]

    g_ss = _mink3(T, T)
    if np.any(g_ss.real <= DET_G_FLOOR):
        raise DegenerateMetricError("radial metric degenerated")
    a_rad = ORIENTATION * _mink3(xss, Nv) / g_ss

    s_int = grid.sigmas[:Ns] * rho
    fp = (pf[2 : Ns + 2] - pf[0:Ns]) / (2.0 * hs * rho)  # df/ds
    w = np.sqrt(np.cosh(f_int) ** 2 + fp**2)
    a_az = (np.sinh(f_int) * np.cosh(f_int) * np.sinh(s_int) - fp * np.cosh(s_int)) / (
        w * np.cosh(f_int) * np.sinh(s_int)
    )

    lam_ring = np.concatenate(
        [a_rad[:, None], np.repeat(a_az[:, None], n - 1, axis=1)], axis=1
    )
    return {
        "a_rad": a_rad,
        "a_az": a_az,
        "lam_ring": lam_ring,
        "g_ss": g_ss,
        "T": T,
        "xss": xss,
        "f_int": f_int,
        "fp": fp,
        "s_int": s_int,
    }


def _lam_field(grid: Grid, values, n, radial):
    """Eigenvalue field (Ns, Nalpha, n) plus the geometry bundle."""
    if radial or n > 2:
        geom = _geometry_radial(grid, values, n)
        lam = np.broadcast_to(
            geom["lam_ring"][:, None, :], (grid.Ns, grid.Nalpha, n)
        ).copy()
        return lam, geom, True
    geom = _geometry2d(grid, values)
    return geom["lam"], geom, False


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def shape_at(f: GraphFn, node, n=2, radial=False) -> SymMat:
    """Symmetrised shape operator at one interior node.

    ``node`` is a (j, k) pair with 0 <= j < Ns.  For n > 2 the data must be
    rotationally symmetric and the radial reduction is used.
    """
    j, k = node
    grid = f.grid
    if not (0 <= j < grid.Ns and 0 <= k < grid.Nalpha):
        raise ValueError("node must be interior")
    lam, geom, is_radial = _lam_field(grid, f.values, n, radial)
    if is_radial:
        diag = np.concatenate(
            [[geom["a_rad"][j]], np.full(n - 1, geom["a_az"][j])]
        )
        return SymMat.diag(diag)
    return SymMat.from_dense(geom["A"][j, k])


@dataclass
class ShapeField:
    """Pointwise shape data over the interior lattice, flattened row-major."""

    grid: Grid
    query: CurvatureQuery
    A: np.ndarray  # (N, n, n)
    lam: np.ndarray  # (N, n), ascending
    H: np.ndarray  # (N,)
    residual: np.ndarray  # (N,)
    admissible: np.ndarray  # (N,) bool
    eps_adm: float

    @property
    def lambda_min(self) -> np.ndarray:
        return self.lam[:, 0]

    @property
    def lambda_max(self) -> np.ndarray:
        return self.lam[:, -1]

    def index(self, j, k) -> int:
        return j * self.grid.Nalpha + k

    def A_at(self, j, k) -> SymMat:
        return SymMat.from_dense(self.A[self.index(j, k)])


def shape_field(f: GraphFn, q: CurvatureQuery, eps_adm=EPS_ADMISSIBLE,
                radial=None) -> ShapeField:
    """Shape operator, eigenvalues, admissibility and residual per node.

    The residual is sl(A, r) - theta with r the raw curvature level of the
    query; a node is admissible when its smallest eigenvalue clears eps_adm.
    """
    grid = f.grid
    if radial is None:
        radial = q.n > 2
    lam, geom, is_radial = _lam_field(grid, f.values, q.n, radial)
    N = grid.n_interior
    lam_flat = np.sort(lam.reshape(N, q.n), axis=1)
    if is_radial:
        ring = np.zeros((grid.Ns, q.n, q.n))
        ring[:, 0, 0] = geom["a_rad"]
        for i in range(1, q.n):
            ring[:, i, i] = geom["a_az"]
        A = np.repeat(ring[:, None, :, :], grid.Nalpha, axis=1).reshape(N, q.n, q.n)
    else:
        A = geom["A"].reshape(N, 2, 2)
    res = sl_eigs(lam_flat, q.r) - q.theta
    return ShapeField(
        grid=grid,
        query=q,
        A=A,
        lam=lam_flat,
        H=np.sum(lam_flat, axis=1),
        residual=res,
        admissible=lam_flat[:, 0] > eps_adm,
        eps_adm=eps_adm,
    )


def residual_only(grid: Grid, values, q: CurvatureQuery, radial=False):
    """Residual field alone; dtype-generic (supports complex-step inputs)."""
    lam, _, _ = _lam_field(grid, values, q.n, radial)
    return sl_eigs(lam.reshape(grid.n_interior, q.n), q.r) - q.theta


def residual_and_lambda_min(grid: Grid, values, q: CurvatureQuery, radial=False):
    """Lean residual evaluation for the solver: (residual, lambda_min) flat."""
    lam, _, _ = _lam_field(grid, values, q.n, radial)
    lam_flat = lam.reshape(grid.n_interior, q.n)
    res = sl_eigs(lam_flat, q.r) - q.theta
    return res, np.min(lam_flat, axis=1)


def _phi_derivs(grid: Grid, phi):
    """Central first/second differences of a node field in chart coordinates."""
    Ns = grid.Ns
    hs, ha = grid.h_sigma, grid.h_alpha
    px = _extended_values(grid, phi)
    pp = np.roll(px, -1, axis=1)
    pm = np.roll(px, 1, axis=1)
    pc = px[1 : Ns + 1]
    d1 = (px[2 : Ns + 2] - px[0:Ns]) / (2.0 * hs)
    d2 = (pp[1 : Ns + 1] - pm[1 : Ns + 1]) / (2.0 * ha)
    d11 = (px[2 : Ns + 2] - 2.0 * pc + px[0:Ns]) / (hs * hs)
    d22 = (pp[1 : Ns + 1] - 2.0 * pc + pm[1 : Ns + 1]) / (ha * ha)
    d12 = (pp[2 : Ns + 2] - pp[0:Ns] - pm[2 : Ns + 2] + pm[0:Ns]) / (4.0 * hs * ha)
    return d1, d2, d11, d12, d22


def delta_b(f: GraphFn, q: CurvatureQuery, phi, radial=None) -> np.ndarray:
    """Degenerate-elliptic operator B^{ij} phi_{;ij} on the graph.

    B = (Id + r^-2 A^2)^-1 in the orthonormal frame of the shape operator,
    contracted with the intrinsic Hessian of phi on the surface.  ``phi`` is
    a full node field (boundary ring included); the result covers interior
    nodes.  The operator is defined for any symmetric A; admissibility is a
    property of the curvature equation, not of this contraction.
    """
    grid = f.grid
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.Ns + 1, grid.Nalpha):
        raise ValueError("phi must be a full node field")
    if radial is None:
        radial = q.n > 2
    r = q.r
    if radial or q.n > 2:
        geom = _geometry_radial(grid, f.values, q.n)
        pphi = _radial_profile(grid, phi, what="delta_b evaluation")
        Ns = grid.Ns
        hs = grid.h_sigma
        rho = grid.dom.rho
        px = np.concatenate([[pphi[0]], pphi])
        p_s = (px[2 : Ns + 2] - px[0:Ns]) / (2.0 * hs)
        p_ss = (px[2 : Ns + 2] - 2.0 * px[1 : Ns + 1] + px[0:Ns]) / (hs * hs)
        g_ss = geom["g_ss"]
        gamma = _mink3(geom["xss"], geom["T"]) / g_ss
        hess_ss = (p_ss - gamma * p_s) / g_ss
        f_int, fp, s_int = geom["f_int"], geom["fp"], geom["s_int"]
        g_uu = (np.cosh(f_int) * np.sinh(s_int)) ** 2
        dg_uu = (
            2.0 * np.cosh(f_int) * np.sinh(f_int) * (fp * rho) * np.sinh(s_int) ** 2
            + np.cosh(f_int) ** 2 * 2.0 * np.sinh(s_int) * np.cosh(s_int) * rho
        )
        hess_uu = (0.5 * dg_uu * p_s / g_ss) / g_uu
        b_rad = 1.0 / (1.0 + (geom["a_rad"] / r) ** 2)
        b_az = 1.0 / (1.0 + (geom["a_az"] / r) ** 2)
        out_ring = b_rad * hess_ss + (q.n - 1) * b_az * hess_uu
        return np.repeat(out_ring[:, None], grid.Nalpha, axis=1)

    geom = _geometry2d(grid, f.values)
    d1, d2, d11, d12, d22 = _phi_derivs(grid, phi)
    g11, g12, g22 = geom["g11"], geom["g12"], geom["g22"]
    det = g11 * g22 - g12 * g12
    # Christoffel symbols from the embedding: Gamma^k_ij = g^{kl} <X_ij, T_l>
    b = {
        (ij): np.stack([_mink4(geom[f"X{ij}"], geom["T1"]),
                        _mink4(geom[f"X{ij}"], geom["T2"])], axis=-1)
        for ij in ("11", "12", "22")
    }
    gi = np.empty(g11.shape + (2, 2))
    gi[..., 0, 0] = g22 / det
    gi[..., 0, 1] = -g12 / det
    gi[..., 1, 0] = -g12 / det
    gi[..., 1, 1] = g11 / det
    grad = np.stack([d1, d2], axis=-1)
    hess = np.empty(g11.shape + (2, 2))
    second = {"11": d11, "12": d12, "22": d22}
    for (i, j, ij) in ((0, 0, "11"), (0, 1, "12"), (1, 1, "22")):
        gamma = np.einsum("...kl,...l->...k", gi, b[ij])
        hess[..., i, j] = second[ij] - np.sum(gamma * grad, axis=-1)
    hess[..., 1, 0] = hess[..., 0, 1]
    S = geom["S"]
    hess_on = np.einsum("...ij,...jk,...kl->...il", S, hess, S)
    A = geom["A"]
    M = np.einsum("...ij,...jk->...ik", A, A) / (r * r)
    M[..., 0, 0] += 1.0
    M[..., 1, 1] += 1.0
    detM = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    B = np.empty_like(M)
    B[..., 0, 0] = M[..., 1, 1] / detM
    B[..., 0, 1] = -M[..., 0, 1] / detM
    B[..., 1, 0] = -M[..., 1, 0] / detM
    B[..., 1, 1] = M[..., 0, 0] / detM
    return np.sum(B * hess_on, axis=(-2, -1))


# ---------------------------------------------------------------------------
# graph CSV format
# ---------------------------------------------------------------------------

_MAGIC = "# slcurv-graph v1"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def save_graph(f: GraphFn, q: CurvatureQuery, path):
    """Write the graph sample and its curvature query as CSV."""
    grid = f.grid
    dom = grid.dom
    head = (
        f"n={q.n} theta={_fmt(q.theta)} rhat={_fmt(q.rhat)} domain={dom.kind} "
        f"rho={_fmt(dom.rho)} Ns={grid.Ns} Nalpha={grid.Nalpha}"
    )
    if dom.fourier:
        head += " fourier=" + ",".join(f"{k}:{_fmt(a)}" for k, a in dom.fourier)
    lines = [_MAGIC, head, "j,k,s,alpha,f"]
    for j in range(grid.Ns + 1):
        for k in range(grid.Nalpha):
            lines.append(
                f"{j},{k},{_fmt(grid.s[j, k])},{_fmt(grid.alphas[k])},"
                f"{_fmt(f.values[j, k])}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path):
    """Read a graph CSV; returns (GraphFn, CurvatureQuery)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise GraphFormatError("line 1: expected header '# slcurv-graph v1'")
    if len(lines) < 3:
        raise GraphFormatError("line 2: missing metadata line")
    meta = {}
    for tok in lines[1].split():
        if "=" not in tok:
            raise GraphFormatError(f"line 2: bad token {tok!r}")
        key, val = tok.split("=", 1)
        meta[key] = val
    try:
        n = int(meta["n"])
        theta = float(meta["theta"])
        rhat = float(meta["rhat"])
        kind = meta["domain"]
        rho = float(meta["rho"])
        Ns = int(meta["Ns"])
        Nalpha = int(meta["Nalpha"])
    except (KeyError, ValueError) as exc:
        raise GraphFormatError(f"line 2: {exc}") from exc
    fourier = ()
    if "fourier" in meta:
        try:
            fourier = tuple(
                (int(p.split(":")[0]), float(p.split(":")[1]))
                for p in meta["fourier"].split(",")
            )
        except (ValueError, IndexError) as exc:
            raise GraphFormatError(f"line 2: bad fourier spec") from exc
    if lines[2].strip() != "j,k,s,alpha,f":
        raise GraphFormatError("line 3: expected column header 'j,k,s,alpha,f'")
    dom = hgeom.DomainSpec(kind, rho, fourier)
    grid = Grid(dom, Ns, Nalpha)
    values = np.full((Ns + 1, Nalpha), np.nan)
    for ln, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise GraphFormatError(f"line {ln}: expected 5 fields")
        try:
            j, k = int(parts[0]), int(parts[1])
            val = float(parts[4])
        except ValueError as exc:
            raise GraphFormatError(f"line {ln}: {exc}") from exc
        if not (0 <= j <= Ns and 0 <= k < Nalpha):
            raise GraphFormatError(f"line {ln}: node ({j},{k}) out of range")
        values[j, k] = val
    if np.any(np.isnan(values)):
        raise GraphFormatError("missing node rows")
    q = CurvatureQuery(n, theta, rhat)
    return GraphFn(grid, values), q
