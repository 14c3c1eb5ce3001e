"""Matrix curvature calculus on symmetric matrices.

The central object is the angle sum ``arctan_sym(A) = sum_i arctan(lambda_i)``
over the eigenvalues of a symmetric matrix A, its rescaled form
``sl(A, r) = arctan_sym(A / r)``, and the induced curvature level
``r_theta(A)``: the unique r > 0 at which sl(A, r) equals a prescribed angle
theta, defined for positive definite A.  First and second derivatives are
available in closed form, together with the constants sandwiching r_theta
between multiples of the smallest eigenvalue.

All matrices are small and dense (2 <= n <= 8).  Eigendecompositions use
cyclic Jacobi rotations with a fixed sweep order so results are reproducible
bit-for-bit across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 8
_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 64
_SPD_RELATIVE_FLOOR = 1e-14


class EigenConvergenceError(RuntimeError):
    """Jacobi sweeps failed to converge; input is numerically defective."""


class NotPositiveDefiniteError(ValueError):
    """A curvature level was requested outside the positive definite cone."""


def _tril_indices(n):
    return np.tril_indices(n)


@dataclass(frozen=True)
class SymMat:
    """Dense symmetric n x n matrix, stored as its lower triangle.

    Entries are kept in row-major lower-triangular order, so only the
    n(n+1)/2 independent values exist; symmetry is structural.
    """

    n: int
    tril: tuple

    def __post_init__(self):
        if not (2 <= self.n <= MAX_DIM):
            raise ValueError(f"dimension must be in [2, {MAX_DIM}], got {self.n}")
        if len(self.tril) != self.n * (self.n + 1) // 2:
            raise ValueError("lower triangle has wrong length")
        if not all(math.isfinite(v) for v in self.tril):
            raise ValueError("entries must be finite")

    @staticmethod
    def from_dense(M) -> "SymMat":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("expected a square matrix")
        n = M.shape[0]
        sym = 0.5 * (M + M.T)
        return SymMat(n, tuple(sym[_tril_indices(n)]))

    @staticmethod
    def diag(values) -> "SymMat":
        return SymMat.from_dense(np.diag(np.asarray(values, dtype=float)))

    @staticmethod
    def identity(n) -> "SymMat":
        return SymMat.from_dense(np.eye(n))

    def dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        M[_tril_indices(self.n)] = self.tril
        M = M + M.T - np.diag(np.diag(M))
        return M

    def eigh(self):
        """Eigenvalues (ascending) and an orthogonal frame via cyclic Jacobi."""
        return jacobi_eigh(self.dense())

    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    def scaled(self, c) -> "SymMat":
        return SymMat(self.n, tuple(c * v for v in self.tril))

    def norm(self) -> float:
        return float(np.linalg.norm(self.dense()))


def _as_dense(A) -> np.ndarray:
    if isinstance(A, SymMat):
        return A.dense()
    M = np.asarray(A, dtype=float)
    return 0.5 * (M + M.T)


def jacobi_eigh(M, tol=_JACOBI_TOL, max_sweeps=_JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigensolver for small symmetric matrices.

    Sweeps the strict upper triangle in fixed row-major order, annihilating
    one off-diagonal entry per rotation.  Converges when the off-diagonal
    Frobenius mass drops below ``tol`` times the Frobenius norm of the input.
    Returns eigenvalues in ascending order with the matching frame columns.
    """
    A = np.array(_as_dense(M), dtype=float)
    n = A.shape[0]
    if not np.all(np.isfinite(A)):
        raise EigenConvergenceError("non-finite entries in eigensolver input")
    Q = np.eye(n)
    norm_a = np.linalg.norm(A)
    if norm_a == 0.0:
        return np.zeros(n), Q
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * norm_a:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                zeta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.sqrt(zeta * zeta + 1.0))
                else:
                    t = -1.0 / (-zeta + math.sqrt(zeta * zeta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                A = rot.T @ A @ rot
                Q = Q @ rot
    else:
        raise EigenConvergenceError("Jacobi sweeps did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], Q[:, order]


@dataclass(frozen=True)
class CurvatureQuery:
    """Bundle (n, theta, rhat) fixing which curvature equation is evaluated.

    The raw level r and the rescaled level rhat = tan(theta/n) * r are kept
    mutually consistent; the rescaling normalises horospheres to level 1.
    """

    n: int
    theta: float
    rhat: float
    r: float = field(default=None)

    def __post_init__(self):
        if not (2 <= self.n <= MAX_DIM):
            raise ValueError(f"dimension must be in [2, {MAX_DIM}]")
        lo = (self.n - 1) * math.pi / 2.0
        hi = self.n * math.pi / 2.0
        if not (lo <= self.theta < hi):
            raise ValueError(
                f"theta must lie in [{lo:.6f}, {hi:.6f}) for n={self.n}"
            )
        if not (self.rhat > 0.0 and math.isfinite(self.rhat)):
            raise ValueError("rhat must be a positive real")
        r_implied = self.rhat / math.tan(self.theta / self.n)
        if self.r is None:
            object.__setattr__(self, "r", r_implied)
        elif abs(self.r - r_implied) > 1e-14 * abs(r_implied):
            raise ValueError("r and rhat are inconsistent")

    @staticmethod
    def from_r(n, theta, r) -> "CurvatureQuery":
        if not (r > 0.0 and math.isfinite(r)):
            raise ValueError("r must be a positive real")
        return CurvatureQuery(n, theta, math.tan(theta / n) * r, r)


@dataclass(frozen=True)
class SLDerivatives:
    """Gradient data of sl at (A, r): DSL_r(A)[M] = <grad, M> (Frobenius)."""

    grad: SymMat
    mu_r: SymMat
    phi_r: float


def arctan_sym(A) -> float:
    """Sum of eigenvalue arctangents; invariant under orthogonal conjugation."""
    w, _ = jacobi_eigh(A)
    return float(np.sum(np.arctan(w)))


def sl(A, r) -> float:
    """Angle sum of A / r.  Strictly decreasing in r for positive definite A."""
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError("r must be a positive real")
    return arctan_sym(_as_dense(A) / r)


def sl_eigs(lams, r):
    """Vectorised sl from precomputed eigenvalues, shape (..., n)."""
    return np.sum(np.arctan(np.asarray(lams) / r), axis=-1)


def _check_spd(w, norm_a):
    if w[0] <= _SPD_RELATIVE_FLOOR * max(norm_a, 1e-300):
        raise NotPositiveDefiniteError(
            f"curvature level needs a positive definite matrix "
            f"(lambda_min={w[0]:.3e}, norm={norm_a:.3e})"
        )


def r_theta_eigs(lams, theta, tol=1e-13, max_newton=100):
    """Solve sum_i arctan(lam_i / r) = theta for r > 0, vectorised.

    ``lams`` has shape (..., n) with all entries positive.  Brackets the root
    between lam_min/tan(theta/n) and lam_max/tan(theta/n) (monotonicity in the
    Loewner order), bisects to relative width 1e-6, then polishes with Newton.
    """
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[-1]
    if not (0.0 < theta < n * math.pi / 2.0):
        raise ValueError("theta must lie in (0, n*pi/2)")
    if np.any(lams <= 0.0):
        raise NotPositiveDefiniteError("eigenvalues must be positive")
    t = math.tan(theta / n)
    lo = np.min(lams, axis=-1) / t
    hi = np.max(lams, axis=-1) / t
    width0 = float(np.max((hi - lo) / np.maximum(lo, 1e-300)))
    n_bisect = 0 if width0 <= 1e-6 else min(80, int(math.ceil(math.log2(width0 / 1e-6))) + 1)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        val = np.sum(np.arctan(lams / mid[..., None]), axis=-1)
        high = val > theta  # sl too large -> r too small -> raise lower end
        lo = np.where(high, mid, lo)
        hi = np.where(high, hi, mid)
    r = 0.5 * (lo + hi)
    for _ in range(max_newton):
        resid = np.sum(np.arctan(lams / r[..., None]), axis=-1) - theta
        if np.all(np.abs(resid) <= tol):
            break
        slope = -np.sum(lams / (r[..., None] ** 2 + lams**2), axis=-1)
        r = np.clip(r - resid / slope, lo, hi)
    return r


def r_theta(A, theta):
    """Curvature level of a positive definite matrix.

    Returns (r, rhat) with sl(A, r) = theta and rhat = tan(theta/n) * r.
    """
    w, _ = jacobi_eigh(A)
    norm_a = float(np.linalg.norm(_as_dense(A)))
    _check_spd(w, norm_a)
    n = len(w)
    if not (0.0 < theta < n * math.pi / 2.0):
        raise ValueError("theta must lie in (0, n*pi/2)")
    r = float(r_theta_eigs(w, theta))
    return r, math.tan(theta / n) * r


def d_sl(A, r) -> SLDerivatives:
    """Gradient of sl at (A, r): grad = (1/r) (Id + r^-2 A^2)^-1."""
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError("r must be a positive real")
    M = _as_dense(A)
    n = M.shape[0]
    mu = np.eye(n) + (M @ M) / (r * r)
    mu_inv = np.linalg.inv(mu)
    grad = mu_inv / r
    phi = float(np.trace(mu_inv @ M))
    return SLDerivatives(
        grad=SymMat.from_dense(0.5 * (grad + grad.T)),
        mu_r=SymMat.from_dense(mu),
        phi_r=phi,
    )


def d2_sigma(A, M) -> float:
    """Second derivative of the angle sum along M: -2 Tr(mu^-1 A M mu^-1 M).

    Here mu = Id + A^2.  Nonpositive whenever A is positive semidefinite.
    """
    Ad = _as_dense(A)
    Md = _as_dense(M)
    n = Ad.shape[0]
    mu = np.eye(n) + Ad @ Ad
    t1 = np.linalg.solve(mu, Ad @ Md)
    t2 = np.linalg.solve(mu, Md)
    return float(-2.0 * np.trace(t1 @ t2))


def d_r(A, theta) -> SymMat:
    """Gradient of the curvature level r_theta at positive definite A.

    G = r * mu_r^-1 / Tr(mu_r^-1 A) with mu_r = Id + r^-2 A^2 evaluated at
    r = r_theta(A).  Satisfies the Euler identity <G, A> = r (degree-one
    homogeneity of r_theta).
    """
    Ad = _as_dense(A)
    r, _ = r_theta(Ad, theta)
    n = Ad.shape[0]
    mu = np.eye(n) + (Ad @ Ad) / (r * r)
    mu_inv = np.linalg.inv(mu)
    denom = float(np.trace(mu_inv @ Ad))
    G = r * mu_inv / denom
    return SymMat.from_dense(0.5 * (G + G.T))


def k_bounds(n, theta):
    """Constants (K1, K2) with K1 * lam_min <= r_theta(A) <= K2 * lam_min.

    K1 = 1/tan(theta/n) = r_theta(Id).  The upper constant is finite only for
    theta above (n-1)pi/2, where K2 = 1/(theta - (n-1)pi/2); below that the
    bound fails and +inf is returned.
    """
    if not (2 <= n <= MAX_DIM):
        raise ValueError(f"dimension must be in [2, {MAX_DIM}]")
    if not (0.0 < theta < n * math.pi / 2.0):
        raise ValueError("theta must lie in (0, n*pi/2)")
    k1 = 1.0 / math.tan(theta / n)
    gap = theta - (n - 1) * math.pi / 2.0
    k2 = math.inf if gap <= 0.0 else 1.0 / gap
    return k1, k2


def frobenius(A, B) -> float:
    """Frobenius inner product of two symmetric matrices."""
    return float(np.sum(_as_dense(A) * _as_dense(B)))
