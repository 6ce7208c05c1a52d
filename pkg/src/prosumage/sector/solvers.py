"""LP backends.

A backend takes a :class:`LinearProgram` and returns a :class:`SolverResult`
with primal values, row duals and a status. Row duals follow the sensitivity
convention ``∂objective/∂rhs``: balance-row duals are prices, and duals of
``<=`` rows are non-positive at optimality.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.linalg as la
from scipy.optimize import OptimizeWarning, linprog

from .lp import LinearProgram

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ERROR = "error"


class SolveError(RuntimeError):
    def __init__(self, status: str, message: str):
        self.status = status
        super().__init__(message)


@dataclass
class SolverResult:
    status: str
    x: np.ndarray | None
    y_eq: np.ndarray | None
    y_ub: np.ndarray | None
    objective: float
    message: str = ""
    backend: str = ""


class HighsBackend:
    """scipy's HiGHS interface. ``method`` is 'highs', 'highs-ds' or 'highs-ipm'.

    ``tolerance`` sets primal/dual feasibility and IPM optimality tolerances;
    ``crossover=False`` leaves an interior-point solution unpolished.
    """

    name = "highs"

    def __init__(self, method: str = "highs-ipm", tolerance: float | None = None,
                 crossover: bool = True, time_limit: float | None = None, presolve: bool = True):
        self.method = method
        self.tolerance = tolerance
        self.crossover = crossover
        self.time_limit = time_limit
        self.presolve = presolve

    def solve(self, lp: LinearProgram) -> SolverResult:
        options = {"presolve": self.presolve}
        if self.time_limit:
            options["time_limit"] = self.time_limit
        if self.tolerance is not None:
            options.update(primal_feasibility_tolerance=self.tolerance,
                           dual_feasibility_tolerance=self.tolerance,
                           ipm_optimality_tolerance=self.tolerance)
        if not self.crossover:
            options["run_crossover"] = "off"
        bounds = np.column_stack([lp.lb, np.where(np.isinf(lp.ub), None, lp.ub)])
        with warnings.catch_warnings():
            # HiGHS-specific options are forwarded verbatim, which scipy warns about
            warnings.simplefilter("ignore", OptimizeWarning)
            res = linprog(lp.c, A_ub=lp.A_ub if lp.n_ub else None, b_ub=lp.b_ub if lp.n_ub else None,
                          A_eq=lp.A_eq if lp.n_eq else None, b_eq=lp.b_eq if lp.n_eq else None,
                          bounds=bounds, method=self.method, options=options)
        status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ERROR)
        if status != OPTIMAL:
            return SolverResult(status, None, None, None, np.nan, res.message, self.name)
        y_eq = np.asarray(res.eqlin.marginals) if lp.n_eq else np.zeros(0)
        y_ub = np.asarray(res.ineqlin.marginals) if lp.n_ub else np.zeros(0)
        return SolverResult(status, np.asarray(res.x), y_eq, y_ub, float(res.fun), res.message, self.name)


def _standard_form(lp: LinearProgram):
    """Dense ``A z = b, z >= 0`` with ``x = lb + z``; finite upper bounds and ``<=`` rows get slacks.

    Rows are sign-normalised so ``b >= 0``; ``sign`` undoes that for the duals.
    """
    A_eq = lp.A_eq.toarray() if sp.issparse(lp.A_eq) else np.asarray(lp.A_eq, dtype=float)
    A_ub = lp.A_ub.toarray() if sp.issparse(lp.A_ub) else np.asarray(lp.A_ub, dtype=float)
    n = lp.n_vars
    lb = lp.lb
    finite_ub = np.flatnonzero(np.isfinite(lp.ub))
    bound_rows = np.zeros((finite_ub.size, n))
    bound_rows[np.arange(finite_ub.size), finite_ub] = 1.0
    A_le = np.vstack([A_ub, bound_rows])
    b_le = np.concatenate([lp.b_ub, lp.ub[finite_ub]]) - A_le @ lb
    b_e = lp.b_eq - A_eq @ lb
    m_le, m_e = A_le.shape[0], A_eq.shape[0]
    A = np.zeros((m_le + m_e, n + m_le))
    A[:m_le, :n] = A_le
    A[:m_le, n:] = np.eye(m_le)
    A[m_le:, :n] = A_eq
    b = np.concatenate([b_le, b_e])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    cost = np.concatenate([lp.c, np.zeros(m_le)])
    return A, b, cost, sign, m_le


class DenseSimplexBackend:
    """Bundled two-phase primal simplex on a dense tableau.

    Meant for small instances (a few thousand variables at most). Dantzig
    pricing with a switch to Bland's rule after a run of degenerate pivots;
    duals come from solving ``Bᵀy = c_B`` on the final basis.
    """

    name = "dense"

    def __init__(self, tol: float = 1e-9, max_iter: int = 50_000, max_vars: int = 5_000):
        self.tol = tol
        self.max_iter = max_iter
        self.max_vars = max_vars

    def solve(self, lp: LinearProgram) -> SolverResult:
        if lp.n_vars > self.max_vars:
            raise ValueError(f"dense backend limited to {self.max_vars} variables, got {lp.n_vars}")
        A, b, cost, sign, m_le = _standard_form(lp)
        n, m = lp.n_vars, A.shape[0]
        status, z, basis, rows = self._two_phase(A, b, cost)
        if status != OPTIMAL:
            return SolverResult(status, None, None, None, np.nan, f"dense simplex: {status}", self.name)
        x = lp.lb + z[:n]
        y = np.zeros(m)
        B = A[np.ix_(rows, basis)]
        y[rows] = np.linalg.solve(B.T, cost[basis])
        y *= sign
        y_ub = y[: lp.n_ub]
        y_eq = y[m_le:]
        return SolverResult(OPTIMAL, x, y_eq, y_ub, float(lp.c @ x), "dense simplex: optimal", self.name)

    def _two_phase(self, A, b, cost):
        m, n = A.shape
        tol = self.tol
        # phase 1 tableau with one artificial per row
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = b
        basis = list(range(n, n + m))
        T[m, :n] = -A.sum(axis=0)
        T[m, -1] = -b.sum()
        allowed = np.ones(n + m, dtype=bool)
        if not self._iterate(T, basis, allowed):
            return UNBOUNDED, None, None, None
        if -T[m, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
            return INFEASIBLE, None, None, None
        # drive artificials out of the basis; rows where that fails are redundant
        keep = []
        for i in range(m):
            if basis[i] >= n:
                cand = np.flatnonzero(np.abs(T[i, :n]) > tol)
                if cand.size:
                    self._pivot(T, basis, i, int(cand[0]))
                    keep.append(i)
            else:
                keep.append(i)
        keep = np.array(keep, dtype=int)
        T2 = np.zeros((keep.size + 1, n + 1))
        T2[:-1, :n] = T[keep, :n]
        T2[:-1, -1] = T[keep, -1]
        basis2 = [basis[i] for i in keep]
        T2[-1, :n] = cost
        T2[-1, -1] = 0.0
        for i, j in enumerate(basis2):
            T2[-1] -= T2[-1, j] * T2[i]
        if not self._iterate(T2, basis2, np.ones(n, dtype=bool)):
            return UNBOUNDED, None, None, None
        z = np.zeros(n)
        z[basis2] = T2[:-1, -1]
        return OPTIMAL, np.maximum(z, 0.0), np.array(basis2), keep

    def _pivot(self, T, basis, r, j):
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        basis[r] = j

    def _iterate(self, T, basis, allowed) -> bool:
        m = T.shape[0] - 1
        tol = self.tol
        degenerate_run = 0
        for _ in range(self.max_iter):
            red = T[m, :-1]
            cand = np.flatnonzero((red < -tol) & allowed[: red.size])
            if cand.size == 0:
                return True
            bland = degenerate_run > 50
            j = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:m, j]
            pos = col > tol
            if not pos.any():
                return False
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol)
            r = int(ties[np.argmin([basis[i] for i in ties])]) if bland else int(ties[0])
            degenerate_run = degenerate_run + 1 if best <= tol else 0
            self._pivot(T, basis, r, j)
        raise SolveError(ERROR, "dense simplex iteration limit reached")


class DenseInteriorPointBackend:
    """Bundled Mehrotra predictor-corrector interior-point method, dense normal equations.

    Stops once relative primal and dual residuals and the relative gap fall
    below ``tol``. The iterate is returned as is, without crossover, so a loose
    ``tol`` yields a visibly imprecise solution.

    Dense normal equations lose accuracy as the barrier parameter reaches
    roundoff, so the primal residual can stall a little above ``tol``. When
    the worst relative measure has not improved for ``patience`` iterations
    the best iterate seen is accepted if it is below ``stall_tol``.
    """

    name = "ipm"

    def __init__(self, tol: float = 1e-9, max_iter: int = 200, max_vars: int = 5_000,
                 stall_tol: float = 1e-8, patience: int = 5):
        self.tol = tol
        self.max_iter = max_iter
        self.max_vars = max_vars
        self.stall_tol = max(stall_tol, tol)
        self.patience = patience

    def solve(self, lp: LinearProgram) -> SolverResult:
        if lp.n_vars > self.max_vars:
            raise ValueError(f"ipm backend limited to {self.max_vars} variables, got {lp.n_vars}")
        A, b, c, sign, m_le = _standard_form(lp)
        m, n = A.shape
        z, y, s = self._start(A, b, c)
        bnorm, cnorm = 1.0 + np.linalg.norm(b), 1.0 + np.linalg.norm(c)
        best, best_err, since_best = (z, y, s), np.inf, 0
        message = "ipm: converged"
        for _ in range(self.max_iter):
            rp = b - A @ z
            rd = c - A.T @ y - s
            pobj, dobj = c @ z, b @ y
            logger.debug("ipm pobj=%.6e dobj=%.6e rp=%.2e rd=%.2e", pobj, dobj, np.linalg.norm(rp), np.linalg.norm(rd))
            if not np.isfinite(pobj) or np.abs(z).max() > 1e15:
                return SolverResult(UNBOUNDED, None, None, None, np.nan, "ipm: diverged", self.name)
            err = max(np.linalg.norm(rp) / bnorm, np.linalg.norm(rd) / cnorm, abs(pobj - dobj) / (1.0 + abs(pobj)))
            if err < best_err:
                best, best_err, since_best = (z, y, s), err, 0
            else:
                since_best += 1
            if err < self.tol:
                break
            if since_best >= self.patience:
                z, y, s = best
                if best_err >= self.stall_tol:
                    return SolverResult(ERROR, None, None, None, np.nan, f"ipm: stalled at {best_err:.1e}", self.name)
                message = f"ipm: converged to {best_err:.1e} (stalled)"
                break
            d = z / s
            M = (A * d) @ A.T
            try:
                fac = la.cho_factor(M)
            except la.LinAlgError:
                M[np.diag_indices(m)] += 1e-10 * np.diag(M).max()
                try:
                    fac = la.cho_factor(M)
                except la.LinAlgError:
                    return SolverResult(ERROR, None, None, None, np.nan, "ipm: singular normal equations",
                                        self.name)

            def direction(rc):
                dy = la.cho_solve(fac, rp - A @ (rc / s) + A @ (d * rd))
                ds = rd - A.T @ dy
                dz = (rc - z * ds) / s
                return dz, dy, ds

            mu = z @ s / n
            dz, dy, ds = direction(-z * s)
            ap, ad = _step(z, dz), _step(s, ds)
            mu_aff = (z + ap * dz) @ (s + ad * ds) / n
            sigma = (mu_aff / mu) ** 3
            dz, dy, ds = direction(sigma * mu - z * s - dz * ds)
            ap, ad = min(1.0, 0.99 * _step(z, dz)), min(1.0, 0.99 * _step(s, ds))
            z, y, s = z + ap * dz, y + ad * dy, s + ad * ds
        else:
            if best_err >= self.stall_tol:
                return SolverResult(ERROR, None, None, None, np.nan, "ipm: iteration limit", self.name)
            z, y, s = best
            message = f"ipm: converged to {best_err:.1e} at iteration limit"
        x = lp.lb + z[: lp.n_vars]
        y = y * sign
        return SolverResult(OPTIMAL, x, y[m_le:], y[: lp.n_ub], float(lp.c @ x), message, self.name)

    @staticmethod
    def _start(A, b, c):
        # Mehrotra's heuristic starting point
        AAt = A @ A.T
        AAt[np.diag_indices(A.shape[0])] += 1e-10
        fac = la.cho_factor(AAt)
        z = A.T @ la.cho_solve(fac, b)
        y = la.cho_solve(fac, A @ c)
        s = c - A.T @ y
        z += max(-1.5 * z.min(), 0.0)
        s += max(-1.5 * s.min(), 0.0)
        zs = z @ s
        z += 0.5 * zs / max(s.sum(), 1e-12) + 1e-8
        s += 0.5 * zs / max(z.sum(), 1e-12) + 1e-8
        return z, y, s


def _step(v, dv) -> float:
    """Largest alpha in [0, inf) keeping v + alpha dv >= 0 (capped at 1 for the affine step)."""
    neg = dv < 0
    return float(min(1.0, (-v[neg] / dv[neg]).min())) if neg.any() else 1.0


BACKENDS = {"highs": HighsBackend, "highs-ds": lambda **kw: HighsBackend(method="highs-ds", **kw),
            "dense": DenseSimplexBackend, "ipm": DenseInteriorPointBackend}


def get_backend(name: str, **options):
    try:
        factory = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
    return factory(**options)


def diagnose_infeasibility(lp: LinearProgram) -> dict[str, float]:
    """Row classes that need elastic slack to become feasible, with total slack.

    Solves the phase-one problem ``min Σ slack`` with slack on every row.
    """
    n = lp.n_vars
    m_eq, m_ub = lp.n_eq, lp.n_ub
    I_eq = sp.identity(m_eq, format="csr")
    I_ub = sp.identity(m_ub, format="csr")
    A_eq = sp.hstack([lp.A_eq, I_eq, -I_eq, sp.csr_matrix((m_eq, m_ub))]).tocsr() if m_eq else None
    A_ub = sp.hstack([lp.A_ub, sp.csr_matrix((m_ub, 2 * m_eq)), -I_ub]).tocsr() if m_ub else None
    c = np.concatenate([np.zeros(n), np.ones(2 * m_eq + m_ub)])
    lb = np.concatenate([lp.lb, np.zeros(2 * m_eq + m_ub)])
    ub = np.concatenate([lp.ub, np.full(2 * m_eq + m_ub, np.inf)])
    bounds = np.column_stack([lb, np.where(np.isinf(ub), None, ub)])
    res = linprog(c, A_ub=A_ub, b_ub=lp.b_ub if m_ub else None, A_eq=A_eq,
                  b_eq=lp.b_eq if m_eq else None, bounds=bounds, method="highs")
    if res.status != 0:
        return {"bounds": np.inf}
    s = res.x[n:]
    slack_eq = s[:m_eq] + s[m_eq:2 * m_eq]
    slack_ub = s[2 * m_eq:]
    out: dict[str, float] = {}
    for blocks, slack in ((lp.eq_rows, slack_eq), (lp.ub_rows, slack_ub)):
        for name, blk in blocks.items():
            total = float(slack[blk.slice].sum())
            if total > 1e-7:
                key = name.split("[")[0]
                out[key] = out.get(key, 0.0) + total
    return out


def unbounded_candidates(lp: LinearProgram) -> list[str]:
    """Variable blocks with negative cost and no upper bound."""
    bad = (lp.c < 0) & np.isinf(lp.ub)
    return [name for name, blk in lp.variables.items() if bad[blk.slice].any()]
