"""Dense linear programming by a homogeneous self-dual interior-point method.

Problems have the form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= lower_bounds     (entries of -inf mean "free")

Internally bounds become inequality rows and the homogeneous embedding
(variables scaled by tau, with kappa as the gap slack) is driven to a
solution by Mehrotra predictor-corrector steps. A final ``tau`` near zero
yields a Farkas certificate (infeasible) or an improving ray (unbounded).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import lsq_linear

from .errors import ParameterError

__all__ = ["LinearProgram", "LpSolution", "solve_lp", "write_mps"]

REFINE_STEPS = 2
STALL_ITERS = 15
CERT_TOL = 1e-8


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower_bounds: np.ndarray | None = None
    names: list | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_ub = _as_matrix(self.A_ub, n)
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, float).reshape(-1)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, float).reshape(-1)
        if self.lower_bounds is None:
            self.lower_bounds = np.full(n, -np.inf)
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=float).reshape(-1)
        if self.A_ub.shape[0] != self.b_ub.size or self.A_eq.shape[0] != self.b_eq.size:
            raise ParameterError("constraint matrix and right-hand side sizes differ")
        if self.lower_bounds.size != n:
            raise ParameterError("lower_bounds must have one entry per variable")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ParameterError("LP data must be finite")
        if np.any(np.isposinf(self.lower_bounds)) or np.any(np.isnan(self.lower_bounds)):
            raise ParameterError("lower bounds must be finite or -inf")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def scale(self) -> float:
        """Magnitude used to make tolerances relative."""
        parts = [np.abs(a).max(initial=0.0) for a in (self.c, self.b_ub, self.b_eq)]
        finite = self.lower_bounds[np.isfinite(self.lower_bounds)]
        parts.append(np.abs(finite).max(initial=0.0))
        return 1.0 + max(parts)


def _as_matrix(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.shape[1] != n:
        raise ParameterError(f"constraint matrix has {A.shape[1]} columns, expected {n}")
    return A


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded | max_iters
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    dual_ub: np.ndarray = field(default_factory=lambda: np.empty(0))
    dual_eq: np.ndarray = field(default_factory=lambda: np.empty(0))
    dual_objective: float = np.nan
    certificate: np.ndarray | None = None

    @property
    def residuals(self) -> dict:
        return {"primal": self.primal_residual, "dual": self.dual_residual, "gap": self.gap}


def _inequality_form(lp: LinearProgram):
    bounded = np.flatnonzero(np.isfinite(lp.lower_bounds))
    B = np.zeros((bounded.size, lp.n))
    B[np.arange(bounded.size), bounded] = -1.0
    G = np.vstack([lp.A_ub, B])
    h = np.concatenate([lp.b_ub, -lp.lower_bounds[bounded]])
    return G, h


def _row_scale(M):
    norms = np.abs(M).max(axis=1, initial=0.0) if M.size else np.zeros(M.shape[0])
    return np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _least_squares_init(G, h, A, b, c):
    """Primal: argmin ||G x - h|| s.t. A x = b.  Dual: min-norm z with A'y + G'z = -c."""
    n, p = G.shape[1], A.shape[0]
    K = np.zeros((n + p, n + p))
    K[:n, :n] = G.T @ G
    K[:n, n:] = A.T
    K[n:, :n] = A
    sol = np.linalg.lstsq(K, np.concatenate([G.T @ h, b]), rcond=None)[0]
    x = sol[:n]
    K[:n, n:] = -A.T
    sol = np.linalg.lstsq(K, np.concatenate([c, np.zeros(p)]), rcond=None)[0]
    return x, sol[n:], -G @ sol[:n]


def _residuals(G, h, A, b, c, x, y, z):
    """Primal violation, dual residual and complementarity on the original scale."""
    viol = np.concatenate([np.maximum(G @ x - h, 0.0), np.abs(A @ x - b)])
    pr = float(viol.max(initial=0.0))
    dr = float(np.abs(A.T @ y + G.T @ z + c).max(initial=0.0))
    gp = float(abs(np.maximum(h - G @ x, 0.0) @ z))
    return pr, dr, gp


def _polish_duals(G, A, c, y, z, ratio):
    """Refit multipliers on the rows the iterate treats as active (s/z < 1).

    Degenerate problems can leave the interior-point duals with a residual
    that further Newton steps no longer reduce; a bounded least-squares fit
    of A'y + G_act'z_act = -c, z_act >= 0, recovers them.
    """
    active = np.flatnonzero(ratio < 1.0)
    p = A.shape[0]
    B = np.hstack([A.T, G[active].T])
    lb = np.concatenate([np.full(p, -np.inf), np.zeros(active.size)])
    fit = lsq_linear(B, -c, bounds=(lb, np.inf), method="bvls", tol=1e-15)
    z_new = np.zeros_like(z)
    z_new[active] = fit.x[p:]
    y_new = fit.x[:p]
    old = np.abs(A.T @ y + G.T @ z + c).max(initial=0.0)
    new = np.abs(A.T @ y_new + G.T @ z_new + c).max(initial=0.0)
    return (y_new, z_new) if new < old else (y, z)


def solve_lp(lp: LinearProgram, tol: float = 1e-9, max_iters: int = 100) -> LpSolution:
    """Solve ``lp``; see the module docstring for the problem form.

    On ``status == "optimal"`` the primal and dual residuals and the duality
    gap are all below ``tol * lp.scale``. The run is deterministic.
    An improving ray only proves unboundedness if the problem is feasible, so
    that case is confirmed with a zero-objective solve.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        sol = _solve(lp, tol, max_iters)
        if sol.status == "unbounded":
            phase1 = _solve(LinearProgram(np.zeros(lp.n), lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq,
                                          lp.lower_bounds, lp.names), tol, max_iters)
            if phase1.status == "infeasible":
                phase1.iterations += sol.iterations
                return phase1
    return sol


def _solve(lp: LinearProgram, tol: float, max_iters: int) -> LpSolution:
    G0, h0 = _inequality_form(lp)
    A0, b0 = lp.A_eq, lp.b_eq
    c = lp.c
    n, m, p = lp.n, G0.shape[0], A0.shape[0]

    # Row equilibration; the feasible set and optimum are unchanged.
    rg, ra = _row_scale(G0), _row_scale(A0)
    G, h = G0 * rg[:, None], h0 * rg
    A, b = A0 * ra[:, None], b0 * ra

    # Least-squares starting point, shifted into the positive orthant.
    x, y, z = _least_squares_init(G, h, A, b, c)
    s = h - G @ x
    if m and s.min() <= 0:
        s = s + 1.0 - s.min()
    if m and z.min() <= 0:
        z = z + 1.0 - z.min()
    tau, kappa = 1.0, 1.0

    nb, nh, nc = 1 + np.linalg.norm(b), 1 + np.linalg.norm(h), 1 + np.linalg.norm(c)
    status = "max_iters"
    it = 0
    best, best_merit, best_it = None, np.inf, 0
    # Certificates stop improving near 1e-10 relative; anything below this is conclusive.
    cert_tol = max(tol, CERT_TOL)
    for it in range(1, max_iters + 1):
        rx = A.T @ y + G.T @ z + c * tau
        ry = A @ x - b * tau
        rz = G @ x + s - h * tau
        rt = kappa + c @ x + b @ y + h @ z
        mu = (s @ z + tau * kappa) / (m + 1)

        cx, by_hz = c @ x, b @ y + h @ z
        pres = max(np.linalg.norm(ry) / tau / nb if p else 0.0, np.linalg.norm(rz) / tau / nh)
        dres = np.linalg.norm(rx) / tau / nc
        gap = s @ z / tau ** 2
        pobj, dobj = cx / tau, -by_hz / tau
        rel_gap = min(gap, gap / max(abs(pobj), abs(dobj), 1e-300))
        if pres < tol and dres < tol and rel_gap < tol and \
                max(_residuals(G0, h0, A0, b0, c, x / tau, y * ra / tau, z * rg / tau)) \
                <= tol * lp.scale:
            status = "optimal"
            break
        if by_hz < 0 and np.linalg.norm(A.T @ y + G.T @ z) / -by_hz < cert_tol:
            status = "infeasible"
            break
        if cx < 0 and max(np.linalg.norm(A @ x), np.linalg.norm(G @ x + s)) / -cx < cert_tol:
            status = "unbounded"
            break
        merit = max(pres, dres, rel_gap)
        if merit < best_merit:
            best, best_merit, best_it = (x, y, z, s, tau, kappa), merit, it
        elif rel_gap < tol and it - best_it >= STALL_ITERS:
            break  # complementarity converged, residuals no longer improve

        Dg = z / s
        GD = G.T * Dg
        H = GD @ G
        u = GD @ h
        Kmat = np.zeros((n + p + 1, n + p + 1))
        Kmat[:n, :n] = H
        Kmat[:n, n:n + p] = A.T
        Kmat[:n, -1] = c - u
        Kmat[n:n + p, :n] = A
        Kmat[n:n + p, -1] = -b
        Kmat[-1, :n] = c + u
        Kmat[-1, n:n + p] = b
        Kmat[-1, -1] = -kappa / tau - h @ (Dg * h)
        Kmat[np.diag_indices(n + p)] += 1e-14 * (1 + np.abs(np.diag(Kmat))[: n + p]) * \
            np.concatenate([np.ones(n), -np.ones(p)])
        try:
            factor = scipy.linalg.lu_factor(Kmat, check_finite=True)
        except (ValueError, np.linalg.LinAlgError):
            break

        def direction(eta, rs, rk):
            q = eta * rz * Dg + rs / s
            rhs = np.concatenate([-eta * rx - G.T @ q, -eta * ry,
                                  [-eta * rt - rk / tau - h @ q]])
            sol = scipy.linalg.lu_solve(factor, rhs)
            for _ in range(REFINE_STEPS):
                sol = sol + scipy.linalg.lu_solve(factor, rhs - Kmat @ sol)
            dx, dy, dt = sol[:n], sol[n:n + p], sol[-1]
            dz = Dg * (G @ dx - h * dt) + q
            ds = (rs - s * dz) / z
            dk = (rk - kappa * dt) / tau
            return dx, dy, dz, ds, dt, dk

        def step_length(dz, ds, dt, dk):
            return min(1.0, _max_step(s, ds), _max_step(z, dz),
                       _max_step(np.array([tau]), np.array([dt])),
                       _max_step(np.array([kappa]), np.array([dk])))

        aff = direction(1.0, -s * z, -tau * kappa)
        alpha = step_length(aff[2], aff[3], aff[4], aff[5])
        sigma = (1.0 - alpha) ** 3
        rs = -s * z - aff[3] * aff[2] + sigma * mu
        rk = -tau * kappa - aff[4] * aff[5] + sigma * mu
        dx, dy, dz, ds, dt, dk = direction(1.0 - sigma, rs, rk)
        alpha = min(1.0, 0.99 * step_length(dz, ds, dt, dk))
        if not np.isfinite(alpha) or alpha <= 0:
            break
        x, y, z, s = x + alpha * dx, y + alpha * dy, z + alpha * dz, s + alpha * ds
        tau, kappa = tau + alpha * dt, kappa + alpha * dk

    if status == "max_iters" and best is not None:
        x, y, z, s, tau, kappa = best
    z_orig = z * rg
    y_orig = y * ra
    n_ub = lp.A_ub.shape[0]
    if status in ("optimal", "max_iters"):
        xs = x / tau
        zs, ys = z_orig / tau, y_orig / tau
        certificate = None
    elif status == "infeasible":
        xs = np.full(n, np.nan)
        scale = -(b0 @ y_orig + h0 @ z_orig)
        zs, ys = z_orig / scale, y_orig / scale
        certificate = np.concatenate([zs, ys])
    else:
        xs = np.full(n, np.nan)
        certificate = x / -(c @ x)
        zs, ys = np.full(m, np.nan), np.full(p, np.nan)

    if status in ("optimal", "max_iters"):
        pr, dr, gp = _residuals(G0, h0, A0, b0, c, xs, ys, zs)
        if dr > tol * lp.scale and np.all(np.isfinite(xs)):
            ys, zs = _polish_duals(G0, A0, c, ys, zs, s / z)
            pr, dr, gp = _residuals(G0, h0, A0, b0, c, xs, ys, zs)
        objective = float(c @ xs)
        dual_objective = float(-(b0 @ ys + h0 @ zs))
        # The loop's relative test can stall on degenerate problems while
        # the absolute certificate already holds; the latter decides.
        certified = max(pr, dr, gp) <= tol * lp.scale and tau > 0
        status = "optimal" if certified else "max_iters"
    else:
        pr = dr = gp = np.nan
        objective = -np.inf if status == "unbounded" else np.inf
        dual_objective = np.nan

    return LpSolution(x=xs, objective=objective, status=status, primal_residual=pr,
                      dual_residual=dr, gap=gp, iterations=it, dual_ub=zs[:n_ub],
                      dual_eq=ys, dual_objective=dual_objective, certificate=certificate)


def write_mps(lp: LinearProgram, path, name: str = "LP") -> None:
    """Write ``lp`` in free-format MPS for cross-checking with external solvers."""
    names = lp.names or [f"x{i}" for i in range(lp.n)]
    lines = [f"NAME {name}", "ROWS", " N obj"]
    lines += [f" L u{i}" for i in range(lp.A_ub.shape[0])]
    lines += [f" E e{i}" for i in range(lp.A_eq.shape[0])]
    lines.append("COLUMNS")
    for j, var in enumerate(names):
        entries = [("obj", lp.c[j])]
        entries += [(f"u{i}", v) for i, v in enumerate(lp.A_ub[:, j])]
        entries += [(f"e{i}", v) for i, v in enumerate(lp.A_eq[:, j])]
        for row, v in entries:
            if v != 0.0:
                lines.append(f" {var} {row} {float(v)!r}")
    lines.append("RHS")
    for i, v in enumerate(lp.b_ub):
        if v != 0.0:
            lines.append(f" rhs u{i} {float(v)!r}")
    for i, v in enumerate(lp.b_eq):
        if v != 0.0:
            lines.append(f" rhs e{i} {float(v)!r}")
    lines.append("BOUNDS")
    for var, lo in zip(names, lp.lower_bounds):
        if np.isfinite(lo):
            lines.append(f" LO bnd {var} {float(lo)!r}")
        else:
            lines.append(f" FR bnd {var}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
