"""Dense interior-point solver for small semidefinite programs.

Solves problems of the form

    maximize    <C, G> + g . v
    subject to  <A_i, G> + h_i . v = b_i   (i = 1..m)
                G symmetric positive semidefinite,  v free scalars

via a homogeneous self-dual embedding with Nesterov-Todd scaling and a
Mehrotra predictor-corrector. Everything is dense and deterministic:
problem sizes here stay around 16x16 with a few dozen constraints, so
robustness and reproducibility beat asymptotics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import SdpError, ValidationError

Status = Literal["optimal", "infeasible", "max-iterations", "numerical-failure"]


@dataclass(frozen=True)
class SdpConstraint:
    """Affine equality <matrix, G> + scalar_coeffs . v = value."""

    matrix: np.ndarray
    value: float
    scalar_coeffs: np.ndarray | None = None


@dataclass(frozen=True)
class SdpProblem:
    dim: int
    objective: np.ndarray
    constraints: Sequence[SdpConstraint]
    n_scalars: int = 0
    scalar_objective: np.ndarray | None = None


@dataclass(frozen=True)
class SdpSettings:
    max_iters: int = 100
    gap_tol: float = 1e-8
    feas_tol: float = 1e-9
    step_fraction: float = 0.98
    presolve_tol: float = 1e-12


@dataclass
class SdpSolution:
    gamma: np.ndarray
    scalars: np.ndarray
    objective_value: float
    dual_value: float
    gap: float
    status: Status
    iterations: int
    y: np.ndarray
    message: str = ""
    # Per-iteration (objective, dual, gap, primal_residual, dual_residual).
    history: list = field(default_factory=list)


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _validate(problem: SdpProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = problem.dim
    if n < 1:
        raise ValidationError("matrix dimension must be >= 1")
    if len(problem.constraints) < 1:
        raise ValidationError("at least one equality constraint is required")
    k = problem.n_scalars
    c = _sym(np.array(problem.objective, dtype=float))
    if c.shape != (n, n):
        raise ValidationError(f"objective must be {n}x{n}")
    g = np.zeros(k)
    if problem.scalar_objective is not None:
        g = np.array(problem.scalar_objective, dtype=float)
        if g.shape != (k,):
            raise ValidationError("scalar_objective length must match n_scalars")
    mats, coeffs, rhs = [], [], []
    for con in problem.constraints:
        a = _sym(np.array(con.matrix, dtype=float))
        if a.shape != (n, n):
            raise ValidationError(f"constraint matrix must be {n}x{n}")
        h = np.zeros(k)
        if con.scalar_coeffs is not None:
            h = np.array(con.scalar_coeffs, dtype=float)
            if h.shape != (k,):
                raise ValidationError("scalar_coeffs length must match n_scalars")
        mats.append(a)
        coeffs.append(h)
        rhs.append(float(con.value))
    return c, g, np.array(mats), np.array(coeffs), np.array(rhs)


def _presolve(mats: np.ndarray, coeffs: np.ndarray, rhs: np.ndarray, tol: float):
    """Drop linearly dependent equality rows; detect inconsistent duplicates.

    Returns (keep_indices, status_message). Gram-Schmidt with a relative
    threshold; deterministic order.
    """
    m = mats.shape[0]
    rows = np.concatenate([mats.reshape(m, -1), coeffs], axis=1)
    basis: list[np.ndarray] = []
    kept: list[int] = []
    kept_rows = []
    dropped: list[int] = []
    for i in range(m):
        r = rows[i].copy()
        norm0 = np.linalg.norm(r)
        for q in basis:
            r -= (q @ rows[i]) * q
        if np.linalg.norm(r) > max(tol, tol * norm0):
            basis.append(r / np.linalg.norm(r))
            kept.append(i)
            kept_rows.append(rows[i])
        else:
            dropped.append(i)
    if dropped:
        a_kept = np.array(kept_rows)
        for i in dropped:
            # Row i is a combination of kept rows; its rhs must match.
            sol, *_ = np.linalg.lstsq(a_kept.T, rows[i], rcond=None)
            if abs(rhs[i] - sol @ rhs[kept]) > 1e-8 * max(1.0, abs(rhs[i])):
                return kept, "inconsistent"
        warnings.warn(f"presolve dropped {len(dropped)} dependent equality row(s)", stacklevel=3)
    return kept, ""


class _Workspace:
    """State of one homogeneous self-dual solve (single-use)."""

    def __init__(self, c_min, g_min, mats, coeffs, b, settings):
        self.c = c_min          # internal minimization objective
        self.g = g_min
        self.mats = mats        # (m, n, n)
        self.coeffs = coeffs    # (m, k)
        self.b = b
        self.settings = settings
        n = c_min.shape[0]
        self.n = n
        self.m = mats.shape[0]
        self.k = coeffs.shape[1]
        self.x = np.eye(n)
        self.s = np.eye(n)
        self.v = np.zeros(self.k)
        self.y = np.zeros(self.m)
        self.tau = 1.0
        self.kappa = 1.0

    # -- linear operators -----------------------------------------------
    def a_op(self, z: np.ndarray) -> np.ndarray:
        return np.tensordot(self.mats, z, axes=([1, 2], [0, 1]))

    def at_op(self, y: np.ndarray) -> np.ndarray:
        return np.tensordot(y, self.mats, axes=(0, 0))

    def residuals(self):
        hp = self.a_op(self.x) + self.coeffs @ self.v - self.b * self.tau
        hd = -self.at_op(self.y) + self.c * self.tau - self.s
        hg = -self.coeffs.T @ self.y + self.g * self.tau
        hk = self.b @ self.y - np.sum(self.c * self.x) - self.g @ self.v - self.kappa
        return hp, hd, hg, hk

    def mu(self) -> float:
        return (np.sum(self.x * self.s) + self.tau * self.kappa) / (self.n + 1)


def _nt_scaling(x: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nesterov-Todd scaling point W with W S W = X.

    Returns (W, R, R_inv) with R the symmetric square root of W.
    """
    lx, qx = np.linalg.eigh(x)
    lx = np.clip(lx, 1e-300, None)
    x_half = (qx * np.sqrt(lx)) @ qx.T
    t = _sym(x_half @ s @ x_half)
    lt, qt = np.linalg.eigh(t)
    lt = np.clip(lt, 1e-300, None)
    t_inv_half = (qt / np.sqrt(lt)) @ qt.T
    w = _sym(x_half @ t_inv_half @ x_half)
    lw, qw = np.linalg.eigh(w)
    lw = np.clip(lw, 1e-300, None)
    r = (qw * np.sqrt(lw)) @ qw.T
    r_inv = (qw / np.sqrt(lw)) @ qw.T
    return w, r, r_inv


def _max_step_psd(m_psd: np.ndarray, dm: np.ndarray) -> float:
    """Largest alpha with m_psd + alpha*dm still PSD (m_psd must be PD)."""
    try:
        l = np.linalg.cholesky(m_psd)
    except np.linalg.LinAlgError:
        return 0.0
    linv_dm = np.linalg.solve(l, dm)
    w = np.linalg.solve(l, linv_dm.T)
    lam_min = np.linalg.eigvalsh(_sym(w)).min()
    if lam_min >= -1e-16:
        return np.inf
    return -1.0 / lam_min


def _max_step_scalar(val: float, dval: float) -> float:
    return np.inf if dval >= 0 else -val / dval


def solve(problem: SdpProblem, settings: SdpSettings | None = None) -> SdpSolution:
    """Solve the SDP; deterministic given identical inputs and settings.

    The reported dual_value is the gap-corrected dual estimate
    objective_value + gap, with gap >= 0 at every iterate by construction
    of the self-dual embedding, so weak duality holds along the whole
    iteration history.
    """
    settings = settings or SdpSettings()
    c_max, g_max, mats, coeffs, b = _validate(problem)
    kept, msg = _presolve(mats, coeffs, b, settings.presolve_tol)
    if msg == "inconsistent":
        return SdpSolution(
            gamma=np.zeros((problem.dim, problem.dim)), scalars=np.zeros(problem.n_scalars),
            objective_value=np.nan, dual_value=np.nan, gap=np.nan,
            status="infeasible", iterations=0, y=np.zeros(len(problem.constraints)),
            message="inconsistent dependent equality rows",
        )
    mats, coeffs, b = mats[kept], coeffs[kept], b[kept]

    ws = _Workspace(-c_max, -g_max, mats, coeffs, b, settings)
    c_scale = 1.0 + np.max(np.abs(ws.c))
    status: Status = "max-iterations"
    message = ""
    history: list[tuple] = []
    it = 0
    for it in range(1, settings.max_iters + 1):
        hp, hd, hg, hk = ws.residuals()
        mu = ws.mu()

        # Scaled convergence quantities for the returned (divided by tau) point.
        pres = np.max(np.abs(hp)) / ws.tau
        dres = max(np.max(np.abs(hd)), np.max(np.abs(hg), initial=0.0)) / ws.tau
        obj_min = (np.sum(ws.c * ws.x) + ws.g @ ws.v) / ws.tau
        gap = ws.kappa / ws.tau + np.sum(ws.x * ws.s) / ws.tau**2
        history.append((-obj_min, -obj_min + gap, gap, pres, dres))
        if pres <= settings.feas_tol and dres <= settings.feas_tol * c_scale and gap <= settings.gap_tol:
            status = "optimal"
            break

        # Infeasibility / unboundedness: tau collapses while kappa stays away.
        if ws.tau < 1e-9 * min(1.0, ws.kappa):
            by = ws.b @ ws.y
            cx = np.sum(ws.c * ws.x) + ws.g @ ws.v
            if by > 1e-10:
                status = "infeasible"
                message = "dual improving ray certifies primal infeasibility"
            else:
                status = "numerical-failure"
                message = "homogeneous model ended with tau=0 but no clean certificate" if cx >= -1e-10 \
                    else "improving primal ray: objective unbounded above"
            break

        try:
            w, w_root, w_root_inv = _nt_scaling(ws.x, ws.s)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            message = "scaling-point factorization broke down"
            break

        # Shared Schur pieces.
        wa_w = w @ ws.mats @ w                       # (m, n, n)
        m_yy = np.tensordot(ws.mats, wa_w, axes=([1, 2], [1, 2]))
        m_yy = (m_yy + m_yy.T) / 2.0
        wcw = _sym(w @ ws.c @ w)
        a_wcw = ws.a_op(wcw)
        d33 = np.sum(ws.c * wcw) + ws.kappa / ws.tau
        mk = ws.m + ws.k
        lhs = np.zeros((mk + 1, mk + 1))
        lhs[:ws.m, :ws.m] = m_yy
        lhs[:ws.m, ws.m:mk] = ws.coeffs
        lhs[:ws.m, mk] = -(ws.b + a_wcw)
        lhs[ws.m:mk, :ws.m] = -ws.coeffs.T
        lhs[ws.m:mk, mk] = ws.g
        lhs[mk, :ws.m] = ws.b - a_wcw
        lhs[mk, ws.m:mk] = -ws.g
        lhs[mk, mk] = d33

        def newton(eta: float, rc: np.ndarray, rtk_raw: float):
            rp_t, rd_t, rg_t, rk_t = -eta * hp, -eta * hd, -eta * hg, -eta * hk
            core = rc + _sym(w @ rd_t @ w)
            rhs_vec = np.zeros(mk + 1)
            rhs_vec[:ws.m] = rp_t - ws.a_op(core)
            rhs_vec[ws.m:mk] = rg_t
            rhs_vec[mk] = rk_t + np.sum(ws.c * core) + rtk_raw / ws.tau
            try:
                sol = np.linalg.solve(lhs, rhs_vec)
            except np.linalg.LinAlgError:
                # Near-convergence the Schur system gets extremely ill
                # conditioned; a least-squares direction still progresses.
                sol = np.linalg.lstsq(lhs, rhs_vec, rcond=None)[0]
            if not np.all(np.isfinite(sol)):
                raise np.linalg.LinAlgError("non-finite Newton direction")
            dy, dv, dtau = sol[:ws.m], sol[ws.m:mk], sol[mk]
            ds = -ws.at_op(dy) + ws.c * dtau - rd_t
            dx = rc - _sym(w @ ds @ w)
            dkappa = (rtk_raw - ws.kappa * dtau) / ws.tau
            return dx, dv, dy, dtau, ds, dkappa

        def step_limit(dx, ds, dtau, dkappa):
            return min(
                _max_step_psd(ws.x, dx),
                _max_step_psd(ws.s, ds),
                _max_step_scalar(ws.tau, dtau),
                _max_step_scalar(ws.kappa, dkappa),
            )

        try:
            # Predictor: aim at full residual reduction and zero centering.
            dxa, dva, dya, dtaua, dsa, dkappaa = newton(1.0, -ws.x, -ws.tau * ws.kappa)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            message = "Newton system singular"
            break
        if not np.isfinite(dtaua):
            status = "numerical-failure"
            message = "non-finite Newton direction"
            break
        alpha_aff = min(1.0, settings.step_fraction * step_limit(dxa, dsa, dtaua, dkappaa))
        mu_aff = (
            np.sum((ws.x + alpha_aff * dxa) * (ws.s + alpha_aff * dsa))
            + (ws.tau + alpha_aff * dtaua) * (ws.kappa + alpha_aff * dkappaa)
        ) / (ws.n + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # Corrector with Mehrotra second-order terms, built consistently in
        # the scaled space: solve the Lyapunov equation V H + H V = rhs for
        # the centering target, then map back with the scaling root.
        v_scaled = _sym(w_root_inv @ ws.x @ w_root_inv)
        dxa_s = w_root_inv @ dxa @ w_root_inv
        dsa_s = w_root @ dsa @ w_root
        m_aff = (dxa_s @ dsa_s + dsa_s @ dxa_s) / 2.0
        lam_v, q_v = np.linalg.eigh(v_scaled)
        rhs2 = q_v.T @ (2.0 * (sigma * mu * np.eye(ws.n) - v_scaled @ v_scaled - m_aff)) @ q_v
        h_tilde = rhs2 / (lam_v[:, None] + lam_v[None, :])
        rc = _sym(w_root @ (q_v @ h_tilde @ q_v.T) @ w_root)
        rtk_raw = sigma * mu - ws.tau * ws.kappa - dtaua * dkappaa
        try:
            dx, dv, dy, dtau, ds, dkappa = newton(1.0 - sigma, rc, rtk_raw)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            message = "Newton system singular in corrector"
            break
        alpha = min(1.0, settings.step_fraction * step_limit(dx, ds, dtau, dkappa))
        if alpha < 1e-13:
            status = "numerical-failure"
            message = "step length collapsed"
            break
        ws.x = _sym(ws.x + alpha * dx)
        ws.s = _sym(ws.s + alpha * ds)
        ws.v = ws.v + alpha * dv
        ws.y = ws.y + alpha * dy
        ws.tau += alpha * dtau
        ws.kappa += alpha * dkappa

    gamma = _sym(ws.x / ws.tau) if ws.tau > 0 else _sym(ws.x)
    scalars = ws.v / ws.tau if ws.tau > 0 else ws.v
    obj = float(np.sum(c_max * gamma) + g_max @ scalars)
    gap_final = float(ws.kappa / ws.tau + np.sum(ws.x * ws.s) / ws.tau**2) if ws.tau > 0 else np.inf
    y_full = np.zeros(len(problem.constraints))
    y_full[np.array(kept, dtype=int)] = -ws.y / ws.tau if ws.tau > 0 else -ws.y
    return SdpSolution(
        gamma=gamma,
        scalars=scalars,
        objective_value=obj,
        dual_value=obj + gap_final,
        gap=gap_final,
        status=status,
        iterations=it,
        y=y_full,
        message=message,
        history=history,
    )


def feasibility(problem: SdpProblem, settings: SdpSettings | None = None) -> Status:
    """Feasibility check: solve with a zero objective; optimal <=> feasible."""
    zeroed = SdpProblem(
        dim=problem.dim,
        objective=np.zeros((problem.dim, problem.dim)),
        constraints=problem.constraints,
        n_scalars=problem.n_scalars,
        scalar_objective=None,
    )
    return solve(zeroed, settings).status


def solve_or_raise(problem: SdpProblem, settings: SdpSettings | None = None) -> SdpSolution:
    sol = solve(problem, settings)
    if sol.status != "optimal":
        raise SdpError(sol.status, sol.message)
    return sol


def dump_problem(problem: SdpProblem) -> str:
    """Plain-text sparse triplet dump (debugging aid, not a stable interface)."""
    lines = [f"dim {problem.dim} scalars {problem.n_scalars}"]

    def triplets(name, mat):
        for i in range(problem.dim):
            for j in range(i, problem.dim):
                if mat[i, j] != 0.0:
                    lines.append(f"{name} {i} {j} {mat[i, j]!r}")

    triplets("objective", _sym(np.asarray(problem.objective, dtype=float)))
    if problem.scalar_objective is not None:
        for t, val in enumerate(problem.scalar_objective):
            if val != 0.0:
                lines.append(f"objective_scalar {t} {float(val)!r}")
    for idx, con in enumerate(problem.constraints):
        lines.append(f"constraint {idx} rhs {float(con.value)!r}")
        triplets(f"  c{idx}", _sym(np.asarray(con.matrix, dtype=float)))
        if con.scalar_coeffs is not None:
            for t, val in enumerate(con.scalar_coeffs):
                if val != 0.0:
                    lines.append(f"  c{idx} scalar {t} {float(val)!r}")
    return "\n".join(lines)
