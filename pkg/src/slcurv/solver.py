"""Damped-Newton solve of the discrete constant-curvature equation.

The unknown is the graph function at interior nodes; the residual at a node
is sl(A(f), r) - theta for the discrete shape operator A(f).  One Newton
solve handles a fixed curvature level; a homotopy loop ascends the rescaled
level rhat from a small start value (where the exact umbilic cap is a
near-solution) to the target, warm-starting each level from the previous
one.  Levels beyond the solvable range fail cleanly and leave a partial
report: the horospheric level rhat = 1 is a genuine ceiling, not a tuning
artifact.

The Jacobian is assembled by forward differences over stencil-disjoint node
groups (graph colouring), factorised with a direct sparse LU.  All assembly
and reduction orders are fixed, so repeated runs are bit-identical.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import hgeom
from .shape import EPS_ADMISSIBLE, GraphFn, Grid, residual_and_lambda_min, residual_only
from .slcalc import CurvatureQuery


class SolverInputError(ValueError):
    """Invalid solver configuration or start data."""


@dataclass(frozen=True)
class SolveConfig:
    """Newton / homotopy tuning knobs.

    tol is a sup-norm residual target per level.  The Armijo line search
    backtracks on the residual 2-norm and additionally rejects any step that
    loses admissibility at some node.  rhat_start is the first homotopy
    level; the exact cap there replaces a nonconstructive base case.
    """

    tol: float = 1e-8
    max_newton: int = 40
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-6
    rhat_start: float = 0.05
    steps: int = 12
    schedule: str = "linear"
    seed: int = 0
    fd_step: float = None
    workers: int = 1
    jac_mode: str = "complex"

    def __post_init__(self):
        if self.schedule not in ("linear", "geometric"):
            raise SolverInputError("schedule must be 'linear' or 'geometric'")
        if not (0.0 < self.rhat_start <= 1.0):
            raise SolverInputError("rhat_start must lie in (0, 1]")
        if self.steps < 1 or self.max_newton < 1:
            raise SolverInputError("steps and max_newton must be positive")
        if self.workers < 1:
            raise SolverInputError("workers must be positive")
        if self.jac_mode not in ("complex", "forward"):
            raise SolverInputError("jac_mode must be 'complex' or 'forward'")

    def step_for(self, f_values) -> float:
        if self.fd_step is not None:
            return self.fd_step
        return 1e-6 * (1.0 + float(np.max(np.abs(f_values))))


@dataclass
class NewtonStats:
    status: str = "converged"  # converged|max_iterations|stall|singular|inadmissible
    iterations: int = 0
    residual_norms: list = field(default_factory=list)  # 2-norms, accepted iterates
    residual_inf: float = math.nan
    min_lambda1: float = math.nan
    message: str = ""


@dataclass
class LevelRecord:
    rhat: float
    iters: int
    res: list
    min_lambda1: float
    max_f: float
    ordering_ok: bool


@dataclass
class SolveReport:
    levels: list
    converged: bool
    grid_info: dict
    runtime_s: float

    def to_dict(self, include_runtime=False) -> dict:
        # wall time is excluded from serialised output by default so that
        # identical configurations produce byte-identical report files
        return {
            "levels": [
                {
                    "rhat": lv.rhat,
                    "iters": lv.iters,
                    "res": lv.res,
                    "min_lambda1": lv.min_lambda1,
                    "max_f": lv.max_f,
                    "ordering_ok": lv.ordering_ok,
                }
                for lv in self.levels
            ],
            "converged": self.converged,
            "grid": self.grid_info,
            "runtime_s": self.runtime_s if include_runtime else 0.0,
        }

    def to_json(self, include_runtime=False) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2)


# ---------------------------------------------------------------------------
# stencil bookkeeping
# ---------------------------------------------------------------------------

_STENCIL_OFFSETS = [
    (dj, dk) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
] + [(-2, 0), (2, 0), (0, -2), (0, 2)]

_coloring_cache: dict = {}


def _stencil_targets(Ns, Na, j, k):
    """Interior unknowns in the declared 13-point footprint of row (j, k)."""
    half = Na // 2
    out = []
    for dj, dk in _STENCIL_OFFSETS:
        jj, kk = j + dj, (k + dk) % Na
        if jj < 0:
            jj = -1 - jj
            kk = (kk + half) % Na
        if 0 <= jj < Ns:
            out.append(jj * Na + kk)
    return out


def _rows_of_columns(Ns, Na):
    """For each unknown u, the residual rows whose stencil contains u."""
    rows_of = [[] for _ in range(Ns * Na)]
    for j in range(Ns):
        for k in range(Na):
            i = j * Na + k
            for u in _stencil_targets(Ns, Na, j, k):
                rows_of[u].append(i)
    return rows_of


def _coloring(Ns, Na):
    """Greedy colouring of unknowns so same-colour columns share no row."""
    key = (Ns, Na)
    if key in _coloring_cache:
        return _coloring_cache[key]
    rows_of = _rows_of_columns(Ns, Na)
    row_colors = [set() for _ in range(Ns * Na)]
    color_of = np.empty(Ns * Na, dtype=int)
    ncolors = 0
    for u in range(Ns * Na):
        forbidden = set()
        for i in rows_of[u]:
            forbidden |= row_colors[i]
        c = 0
        while c in forbidden:
            c += 1
        color_of[u] = c
        ncolors = max(ncolors, c + 1)
        for i in rows_of[u]:
            row_colors[i].add(c)
    groups = [np.flatnonzero(color_of == c) for c in range(ncolors)]
    entry = []
    for g in groups:
        cols = np.concatenate([[u] * len(rows_of[u]) for u in g])
        rows = np.concatenate([rows_of[u] for u in g]).astype(int)
        entry.append((g, rows, cols))
    _coloring_cache[key] = (rows_of, entry)
    return _coloring_cache[key]


def _full_values(grid: Grid, x):
    vals = np.zeros((grid.Ns + 1, grid.Nalpha), dtype=x.dtype)
    vals[: grid.Ns] = x.reshape(grid.Ns, grid.Nalpha)
    return vals


def _residual(grid: Grid, x, q: CurvatureQuery):
    return residual_and_lambda_min(grid, _full_values(grid, x), q)


def _column_steps(grid: Grid, base: float) -> np.ndarray:
    """Per-unknown forward-difference steps, shrunk towards the pole.

    The residual's sensitivity to a nodal value grows like 1/sinh(s)^2 near
    the centre (angular second differences divide by the metric), and its
    curvature grows like the square of that.  Scaling the step by sinh(s)^2
    keeps the finite-difference increment of the residual, and hence the
    relative truncation error of every Jacobian entry, uniform across rings.
    """
    s = grid.s[: grid.Ns]
    scale = (np.sinh(s) / np.sinh(grid.rho_alpha[None, :])) ** 2
    return base * np.maximum(scale, 1e-10).reshape(-1)


_COMPLEX_STEP = 1e-100


def jacobian(f: GraphFn, q: CurvatureQuery, cfg: SolveConfig, colored=True):
    """Sparse residual Jacobian over the declared stencil footprint.

    Default assembly perturbs along the imaginary axis (complex-step
    differentiation): entries are exact to machine precision, which the
    near-cancelling rows at the pole require.  jac_mode='forward' falls back
    to one-sided real differences with pole-scaled steps.  With ``colored``
    the stencil-disjoint groups are perturbed together (one residual sweep
    per colour); otherwise columns are perturbed one at a time, which is
    exact bookkeeping for small grids and used to validate the colouring.
    """
    grid = f.grid
    Ns, Na = grid.Ns, grid.Nalpha
    x = f.values[:Ns].reshape(-1).copy()
    res0, lam0 = _residual(grid, x, q)
    if np.any(lam0 <= EPS_ADMISSIBLE):
        raise SolverInputError("jacobian needs an admissible field; damp first")
    rows_of, entry = _coloring(Ns, Na)
    n = Ns * Na
    use_complex = cfg.jac_mode == "complex"
    if use_complex:
        base = x.astype(complex)
        h_col = np.full(n, _COMPLEX_STEP)
    else:
        base = x
        h_col = _column_steps(grid, cfg.step_for(x))

    def column_block(idx):
        xp = base.copy()
        if use_complex:
            xp[idx] += 1j * h_col[idx]
            resp = residual_only(grid, _full_values(grid, xp), q)
            return resp.imag
        xp[idx] += h_col[idx]
        resp = residual_only(grid, _full_values(grid, xp), q)
        return resp - res0

    data_rows, data_cols, data_vals = [], [], []
    if colored:
        for g, rows, cols in entry:
            dres = column_block(g)
            data_rows.append(rows)
            data_cols.append(cols)
            data_vals.append(dres[rows] / h_col[cols])
    else:
        for u in range(n):
            dres = column_block(np.array([u]))
            rows = np.asarray(rows_of[u], dtype=int)
            data_rows.append(rows)
            data_cols.append(np.full(len(rows), u))
            data_vals.append(dres[rows] / h_col[u])
    J = sp.coo_matrix(
        (np.concatenate(data_vals), (np.concatenate(data_rows), np.concatenate(data_cols))),
        shape=(n, n),
    )
    return J.tocsr()


def _solve_linear(J, rhs):
    """Direct sparse solve; returns (delta, error message or None)."""
    try:
        lu = spla.splu(J.tocsc())
    except RuntimeError as exc:
        return None, f"singular Jacobian: {exc}"
    udiag = np.abs(lu.U.diagonal())
    if udiag.size and np.min(udiag) < 1e-14 * max(np.max(udiag), 1.0):
        return None, f"singular Jacobian: pivot {np.min(udiag):.3e}"
    return lu.solve(rhs), None


def newton_solve(f0: GraphFn, q: CurvatureQuery, cfg: SolveConfig = None):
    """Damped Newton iteration at a fixed curvature level (n = 2 grids).

    Returns (GraphFn, NewtonStats).  Outcomes are reported in stats.status:
    'converged', 'max_iterations', 'stall' (line search below min_step),
    'singular' (direct solve pivot collapse), or 'inadmissible' (start data
    outside the positive cone).  Accepted steps decrease the residual 2-norm
    monotonically; steps are additionally halved until every node stays
    admissible.
    """
    cfg = cfg or SolveConfig()
    if q.n != 2:
        raise SolverInputError("the Dirichlet solver runs on n = 2 lattices")
    grid = f0.grid
    x = f0.values[: grid.Ns].reshape(-1).copy()
    stats = NewtonStats()
    res, lam = _residual(grid, x, q)
    if np.any(lam <= EPS_ADMISSIBLE):
        stats.status = "inadmissible"
        stats.message = f"start field has lambda_min = {float(np.min(lam)):.3e}"
        stats.residual_inf = float(np.max(np.abs(res)))
        stats.min_lambda1 = float(np.min(lam))
        return f0, stats
    norm2 = float(np.linalg.norm(res))
    stats.residual_norms.append(norm2)
    for it in range(cfg.max_newton):
        if float(np.max(np.abs(res))) <= cfg.tol:
            break
        fcur = GraphFn(grid, _full_values(grid, x), check_boundary=False,
                       check_nonneg=False)
        J = jacobian(fcur, q, cfg)
        delta, err = _solve_linear(J, -res)
        if delta is None:
            stats.status = "singular"
            stats.message = err
            break
        t = 1.0
        accepted = False
        while t >= cfg.min_step:
            xt = x + t * delta
            rest, lamt = _residual(grid, xt, q)
            norm2t = float(np.linalg.norm(rest))
            if np.all(lamt > EPS_ADMISSIBLE) and norm2t <= (1.0 - cfg.armijo_c * t) * norm2:
                x, res, lam, norm2 = xt, rest, lamt, norm2t
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            stats.status = "stall"
            stats.message = f"line search stalled at step {t:.3e}"
            break
        stats.iterations = it + 1
        stats.residual_norms.append(norm2)
    else:
        if float(np.max(np.abs(res))) > cfg.tol:
            stats.status = "max_iterations"
            stats.message = f"residual {float(np.max(np.abs(res))):.3e} after {cfg.max_newton} iterations"
    stats.residual_inf = float(np.max(np.abs(res)))
    stats.min_lambda1 = float(np.min(lam))
    out_vals = _full_values(grid, x)
    # converged solutions are genuine graph functions up to roundoff
    tiny = (out_vals < 0.0) & (out_vals > -1e-12)
    out_vals[tiny] = 0.0
    nonneg = bool(np.all(out_vals >= 0.0))
    fout = GraphFn(grid, out_vals, check_boundary=True, check_nonneg=nonneg)
    return fout, stats


def _levels(cfg: SolveConfig, rhat_target: float):
    if abs(rhat_target - cfg.rhat_start) <= 1e-15:
        return [rhat_target]
    if cfg.schedule == "geometric":
        pts = np.geomspace(cfg.rhat_start, rhat_target, cfg.steps)
    else:
        pts = np.linspace(cfg.rhat_start, rhat_target, cfg.steps)
    pts[-1] = rhat_target
    return [float(v) for v in pts]


_THETA_EDGE_SHIFT = 1e-3


def _initial_guess(grid: Grid, rhat0: float) -> GraphFn:
    """Exact cap start on disks; cap over the circumscribed disk on stars.

    The inscribed-cap-extended-by-zero start is flat (hence inadmissible) on
    the outer annulus, so star domains start instead from the circumscribed
    cap restricted to the domain: strictly convex everywhere, lying above
    the solution, and pinned to zero on the boundary ring.
    """
    if grid.dom.kind == "disk":
        return hgeom.umbilic_cap(rhat0, grid)
    cap = hgeom.UmbilicCap(rhat0, grid.dom.rho_max)
    vals = cap.height(grid.s)
    vals[-1] = 0.0
    return GraphFn(grid, vals)


def continuity_solve(grid: Grid, q: CurvatureQuery, cfg: SolveConfig = None):
    """Homotopy in the rescaled curvature level up to q.rhat.

    Ascends levels from cfg.rhat_start with warm starts, records per-level
    Newton statistics and the nodewise ordering against the previous level,
    and aborts with a partial report when a level fails.  The angle-range
    edge theta = (n-1) pi/2 is solved at theta + 1e-3 and polished at the
    exact angle afterwards.
    """
    cfg = cfg or SolveConfig()
    t0 = time.monotonic()
    rhat_target = q.rhat
    if not (0.0 < rhat_target <= 1.0):
        raise SolverInputError("rhat target must lie in (0, 1]")
    if cfg.rhat_start > rhat_target:
        raise SolverInputError("rhat_start exceeds the target level")
    edge = (q.n - 1) * math.pi / 2.0
    at_edge = abs(q.theta - edge) <= 1e-12
    theta_path = q.theta + _THETA_EDGE_SHIFT if at_edge else q.theta
    if at_edge:
        warnings.warn(
            "theta sits at the lower angle edge; solving at theta + 1e-3 and "
            "polishing at the exact angle",
            stacklevel=2,
        )

    dom = grid.dom
    grid_info = {
        "domain": dom.kind,
        "rho": dom.rho,
        "fourier": [[k, a] for k, a in dom.fourier],
        "Ns": grid.Ns,
        "Nalpha": grid.Nalpha,
        "n": q.n,
        "theta": q.theta,
        "rhat_target": rhat_target,
        "schedule": cfg.schedule,
        "rhat_start": cfg.rhat_start,
        "steps": cfg.steps,
    }

    levels = _levels(cfg, rhat_target)
    records = []
    f = _initial_guess(grid, levels[0])
    prev_vals = None
    converged = True
    for idx, rhat in enumerate(levels):
        q_level = CurvatureQuery(q.n, theta_path, rhat)
        f_new, stats = newton_solve(f, q_level, cfg)
        final_level = idx == len(levels) - 1
        if stats.status == "converged" and final_level and at_edge:
            # polish the last level at the exact edge angle; the shifted-angle
            # solve only served as a warm start
            f_pol, stats_pol = newton_solve(f_new, CurvatureQuery(q.n, q.theta, rhat), cfg)
            stats_pol.iterations += stats.iterations
            stats_pol.residual_norms = stats.residual_norms + stats_pol.residual_norms
            f_new, stats = f_pol, stats_pol
        ordering_ok = True
        if prev_vals is not None:
            ordering_ok = bool(np.min(f_new.values - prev_vals) >= -1e-10)
        records.append(
            LevelRecord(
                rhat=rhat,
                iters=stats.iterations,
                res=stats.residual_norms,
                min_lambda1=stats.min_lambda1,
                max_f=float(np.max(f_new.values)),
                ordering_ok=ordering_ok,
            )
        )
        if stats.status != "converged":
            converged = False
            break
        f = f_new
        prev_vals = f_new.values
    report = SolveReport(
        levels=records,
        converged=converged,
        grid_info=grid_info,
        runtime_s=time.monotonic() - t0,
    )
    return f, report
