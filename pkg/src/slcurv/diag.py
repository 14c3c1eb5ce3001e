"""Comparison diagnostics for curvature fields.

Standalone checks used to validate solver output against the structural
facts the curvature equation obeys: the boundary angle budget mu, the
symmetric threshold polynomial F controlling mean-curvature growth, the
geometric maximum principle at near-tangency nodes, and a discrete
subharmonicity probe for the mean curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .shape import GraphFn, delta_b, shape_field
from .slcalc import CurvatureQuery, r_theta_eigs


@dataclass(frozen=True)
class Verdict:
    """Outcome of a pointwise comparison: pass flag plus worst witnesses.

    Witnesses are (node, lhs, rhs, slack) tuples for the worst (smallest
    slack) nodes; the verdict passes iff every slack clears -tol.
    """

    passed: bool
    tol: float
    witnesses: tuple = field(default_factory=tuple)
    note: str = ""

    def __bool__(self):
        return self.passed


def _collect_witnesses(nodes, lhs, rhs, keep=10):
    slack = rhs - lhs
    order = np.argsort(slack, kind="stable")[:keep]
    return tuple(
        (tuple(int(v) for v in np.atleast_1d(nodes[i])), float(lhs[i]),
         float(rhs[i]), float(slack[i]))
        for i in order
    )


def mu_boundary(lams, r, theta):
    """Largest extra eigenvalue m keeping sl(lam_1..lam_{n-1}, m) below theta.

    Closed form: with S = sum_i arctan(lam_i / r), the supremum is
    r * tan(theta - S) when theta - S < pi/2 and +inf otherwise (adding one
    more arctan can never use up more than pi/2 of angle budget).
    """
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0.0):
        raise ValueError("boundary eigenvalues must be positive")
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError("r must be a positive real")
    gap = theta - float(np.sum(np.arctan(lams / r)))
    if gap >= math.pi / 2.0:
        return math.inf
    if gap <= 0.0:
        return 0.0
    return r * math.tan(gap)


def mu_boundary_bisect(lams, r, theta, rel_tol=1e-12, cap=1e12):
    """Bisection oracle for mu_boundary: independent of the closed form."""
    lams = np.asarray(lams, dtype=float)
    base = float(np.sum(np.arctan(lams / r)))

    def angle(m):
        return base + math.atan(m / r)

    if angle(cap) < theta:
        return math.inf
    lo, hi = 0.0, 1.0
    while angle(hi) < theta:
        hi *= 2.0
        if hi > cap:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if angle(mid) < theta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


def f_threshold(x, y, r):
    """Symmetric nonnegative threshold form r^2 xy (x+y)(x-y)^2 / normaliser.

    Evaluates r^2 * x * y * (x^3 + y^3 - x^2 y - y^2 x) /
    (2 (1 + x^2)(1 + y^2)); the quartic factors as (x + y)(x - y)^2, so the
    value is nonnegative for x, y >= 0 and vanishes on the diagonal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    quartic = x**3 + y**3 - x**2 * y - y**2 * x
    out = (r * r) * x * y * quartic / (2.0 * (1.0 + x * x) * (1.0 + y * y))
    if out.ndim == 0:
        return float(out)
    return out


def _rhat_field(sf, q):
    """Rescaled curvature level per admissible node; NaN where inadmissible."""
    out = np.full(sf.lam.shape[0], np.nan)
    adm = sf.admissible
    if np.any(adm):
        out[adm] = math.tan(q.theta / q.n) * r_theta_eigs(sf.lam[adm], q.theta)
    return out


def max_principle_check(f_in: GraphFn, f_out: GraphFn, q: CurvatureQuery, tol,
                        band=None) -> Verdict:
    """Interior-tangency curvature comparison between nested graphs.

    Requires f_in <= f_out + tol nodewise.  At nodes where the gap is within
    the near-tangency band (default 2 h^2), the inner graph's curvature level
    must not exceed the outer one's by more than tol.  Passes vacuously when
    no node is near tangency: discrete surfaces never touch exactly.
    """
    if f_in.grid != f_out.grid:
        raise ValueError("graphs must share a grid")
    grid = f_in.grid
    gap_all = f_out.values - f_in.values
    if np.min(gap_all) < -tol:
        raise ValueError(
            f"ordering precondition violated: min(f_out - f_in) = {np.min(gap_all):.3e}"
        )
    if band is None:
        band = 2.0 * grid.h_phys**2
    gap = gap_all[: grid.Ns].reshape(-1)
    near = gap <= band
    if not np.any(near):
        return Verdict(True, tol, note="vacuous: no near-tangency nodes")
    sf_in = shape_field(f_in, q)
    sf_out = shape_field(f_out, q)
    ok = sf_in.admissible[near] & sf_out.admissible[near]
    if not np.all(ok):
        idx = np.flatnonzero(near)[~ok][:10]
        return Verdict(
            False,
            tol,
            witnesses=tuple(((int(i // grid.Nalpha), int(i % grid.Nalpha)),
                             math.nan, math.nan, -math.inf) for i in idx),
            note="inadmissible node at near-tangency",
        )
    r_in = _rhat_field(sf_in, q)[near]
    r_out = _rhat_field(sf_out, q)[near]
    nodes = np.flatnonzero(near)
    nodes_jk = np.stack([nodes // grid.Nalpha, nodes % grid.Nalpha], axis=1)
    witnesses = _collect_witnesses(nodes_jk, r_in, r_out + tol)
    passed = bool(np.all(r_in <= r_out + tol))
    return Verdict(passed, tol, witnesses=witnesses)


def subharmonic_probe(f: GraphFn, q: CurvatureQuery, tol_probe=None,
                      radial=None) -> Verdict:
    """Mean-curvature maximum-principle consistency check.

    Computes H = tr A per node and its delta_b image; at the interior argmax
    of H a strongly positive value would contradict the discrete maximum
    principle, so the probe passes when delta_b(H) <= tol_probe there.  The
    pairwise threshold sum over F(lam_i, lam_j) at that node is reported in
    the note.  Errors on fields with inadmissible nodes.
    """
    grid = f.grid
    sf = shape_field(f, q, radial=radial)
    if not np.all(sf.admissible):
        raise ValueError("subharmonic probe needs an admissible field")
    if tol_probe is None:
        tol_probe = 5.0 * grid.h_phys**2
    Hint = sf.H.reshape(grid.Ns, grid.Nalpha)
    # H is only known at interior nodes; extrapolate one ring outward so the
    # outermost interior stencil stays second-order smooth
    Hbdry = 3.0 * Hint[-1] - 3.0 * Hint[-2] + Hint[-3]
    Hfield = np.vstack([Hint, Hbdry[None, :]])
    dbh = delta_b(f, q, Hfield, radial=radial).reshape(-1)
    imax = int(np.argmax(sf.H))
    lam = sf.lam[imax]
    pair_sum = 0.0
    for i in range(q.n):
        for j in range(q.n):
            pair_sum += float(f_threshold(lam[i], lam[j], q.r))
    node = (imax // grid.Nalpha, imax % grid.Nalpha)
    val = float(dbh[imax])
    passed = val <= tol_probe
    return Verdict(
        passed,
        tol_probe,
        witnesses=((node, val, tol_probe, tol_probe - val),),
        note=f"pairwise threshold sum at argmax H: {pair_sum:.6g}",
    )
