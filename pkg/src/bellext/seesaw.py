"""Alternating maximization of Bell expressions over two-qubit realizations.

All restarts of one run advance together as a batch: observable updates
are closed-form angle updates in the x-z plane, the state update takes the
top eigenvector of the 4x4 Bell operator. The objective never decreases
across inner updates, so the iteration is a monotone ascent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CanonicalizationError, ValidationError
from .model import BellExpression, bell_value
from .realization import SIGMA_1, SIGMA_3, TwoQubitRealization, correlation_of, correlator_arrays

_DEGENERATE_NORM = 1e-14


@dataclass(frozen=True)
class SeesawSettings:
    restarts: int = 20
    max_iters: int = 500
    conv_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.conv_tol <= 0:
            raise ValidationError("conv_tol must be positive")


@dataclass(frozen=True)
class SeesawResult:
    realization: TwoQubitRealization
    value: float
    iterations: int
    restart_index: int
    converged: bool


def _observables(theta):
    """Stack of x-z plane observables for angle array theta (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    return (np.cos(theta)[..., None, None] * SIGMA_1
            + np.sin(theta)[..., None, None] * SIGMA_3)


def update_observables(state, e: BellExpression, fixed_side: str, fixed_theta, prev_theta):
    """Closed-form update of one side's measurement angles.

    For each setting the exact argmax over x-z plane observables aligns the
    angle with the steered effective operator; a degenerate operator
    (norm < 1e-14) keeps the previous angle.

    state: (r, 4) normalized; fixed_theta, prev_theta: (r, 2).
    Returns the updated angles of the non-fixed side.
    """
    psi = np.asarray(state, dtype=float).reshape(-1, 2, 2)  # Alice index first
    fixed_ops = _observables(fixed_theta)  # (r, 2, 2, 2)
    if fixed_side == "B":
        # Update Alice: effective operator K_x = va_x * 1 + sum_y vab_xy B_y,
        # steered through the state onto Alice's side.
        k = (e.va[None, :, None, None] * np.eye(2)[None, None]
             + np.einsum("xy,rykl->rxkl", e.vab, fixed_ops))
        eff = np.einsum("raj,rxjl,rbl->rxab", psi, k, psi)
    elif fixed_side == "A":
        k = (e.vb[None, :, None, None] * np.eye(2)[None, None]
             + np.einsum("xy,rxkl->rykl", e.vab, fixed_ops))
        eff = np.einsum("rja,rxjl,rlb->rxab", psi, k, psi)
    else:
        raise ValidationError("fixed_side must be 'A' or 'B'")
    comp_1 = eff[..., 0, 1] + eff[..., 1, 0]  # twice the sigma_1 component
    comp_3 = eff[..., 0, 0] - eff[..., 1, 1]
    norm = np.hypot(comp_1, comp_3)
    new_theta = np.arctan2(comp_3, comp_1)
    return np.where(norm < _DEGENERATE_NORM, np.asarray(prev_theta, dtype=float), new_theta)


def optimal_state(e: BellExpression, theta_a, theta_b):
    """Top eigenvector(s) of the Bell operator for fixed observables.

    Returns (state (r, 4), value (r,)); the eigenvector of the largest
    eigenvalue as produced by the symmetric eigensolver, sign-normalized
    on its first nonzero component for determinism.
    """
    a_ops = _observables(theta_a)
    b_ops = _observables(theta_b)
    eye = np.eye(2)
    w = (np.einsum("x,rxab,cd->racbd", e.va, a_ops, eye)
         + np.einsum("y,ab,rycd->racbd", e.vb, eye, b_ops)
         + np.einsum("xy,rxab,rycd->racbd", e.vab, a_ops, b_ops))
    r = w.shape[0]
    w = w.reshape(r, 4, 4)
    vals, vecs = np.linalg.eigh(w)
    state = vecs[:, :, -1]
    # Deterministic sign: first component of largest magnitude made positive.
    lead = np.take_along_axis(state, np.argmax(np.abs(state), axis=1)[:, None], axis=1)[:, 0]
    state = state * np.where(lead < 0, -1.0, 1.0)[:, None]
    return state, vals[:, -1]


def _angle_of(op2: np.ndarray) -> float:
    """Angle of an x-z plane observable matrix."""
    return float(np.arctan2(op2[0, 0], op2[0, 1]))


def canonicalize(state, theta_a, theta_b) -> TwoQubitRealization:
    """Rotate local bases so the state takes Schmidt form with ordered,
    non-negative coefficients, keeping observables in the x-z plane.

    Raises CanonicalizationError if the correlation is not preserved
    within 1e-10 (an internal error).
    """
    state = np.asarray(state, dtype=float)
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    m = state.reshape(2, 2)
    u, sv, vt = np.linalg.svd(m)
    v = vt.T
    du, dv = np.linalg.det(u), np.linalg.det(v)
    # Absorb reflections so both basis changes are proper rotations.
    u2 = u @ np.diag([1.0, np.sign(du)])
    v2 = v @ np.diag([1.0, np.sign(dv)])
    coeff2 = sv[1] * du * dv
    a_ops = [u2.T @ _observables(np.array([t]))[0] @ u2 for t in theta_a]
    b_ops = [v2.T @ _observables(np.array([t]))[0] @ v2 for t in theta_b]
    if coeff2 < 0:
        # Flip the sign of Bob's second basis vector; stays in the x-z plane.
        flip = np.diag([1.0, -1.0])
        b_ops = [flip @ bo @ flip for bo in b_ops]
        coeff2 = -coeff2
    chi = float(np.arctan2(coeff2, sv[0]))
    if chi < 1e-12:
        chi = 0.0  # product-state flag; correlator change is below check tolerance
    out = TwoQubitRealization(
        theta_a=np.array([_angle_of(a) for a in a_ops]),
        theta_b=np.array([_angle_of(b) for b in b_ops]),
        chi=chi,
    )
    before_full = _full_correlation(state, theta_a, theta_b)
    after = correlation_of(out)
    err = max(
        np.max(np.abs(after.full_corr - before_full[0])),
        np.max(np.abs(after.marg_a - before_full[1])),
        np.max(np.abs(after.marg_b - before_full[2])),
    )
    if err > 1e-10:
        raise CanonicalizationError(f"correlation changed by {err:.3e} during canonicalization")
    return out


def _full_correlation(state, theta_a, theta_b):
    psi = np.asarray(state, dtype=float).reshape(2, 2)
    a_ops = _observables(theta_a)
    b_ops = _observables(theta_b)
    full = np.array([[np.sum(psi * (a @ psi @ b.T)) for b in b_ops] for a in a_ops])
    ma = np.array([np.sum(psi * (a @ psi)) for a in a_ops])
    mb = np.array([np.sum(psi * (psi @ b.T)) for b in b_ops])
    return full, ma, mb


def random_bell_expression(rng: np.random.Generator, profile: str = "uniform") -> BellExpression:
    """Random expression; draw order is (va0, va1, vb0, vb1, v00, v01, v10, v11).

    The rare-case profile shrinks the marginal coefficients to
    [-0.0125, 0.0125] and the (1,1) correlator coefficient to
    [-0.05, 0.05] so that weakly constrained maximizers show up often.
    """
    draws = rng.uniform(-1.0, 1.0, size=8)
    if profile == "uniform":
        pass
    elif profile == "rare-case":
        draws[:4] *= 0.0125
        draws[7] *= 0.05
    else:
        raise ValidationError(f"unknown profile {profile!r}")
    return BellExpression(va=draws[0:2], vb=draws[2:4],
                          vab=np.array([[draws[4], draws[5]], [draws[6], draws[7]]]))


def maximize_bell(e: BellExpression, settings: SeesawSettings | None = None) -> SeesawResult:
    """Best over random restarts of the alternating ascent.

    Non-convergence within max_iters is reported with converged=False; the
    best iterate is still returned, canonicalized.
    """
    settings = settings or SeesawSettings()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(settings.seed)))
    r = settings.restarts
    theta_a = rng.uniform(-np.pi, np.pi, size=(r, 2))
    theta_b = rng.uniform(-np.pi, np.pi, size=(r, 2))
    state = rng.standard_normal((r, 4))
    state /= np.linalg.norm(state, axis=1, keepdims=True)

    prev_obj = np.full(r, -np.inf)
    first_converged = np.full(r, 0)
    converged = np.zeros(r, dtype=bool)
    sweeps = 0
    obj = prev_obj
    for sweeps in range(1, settings.max_iters + 1):
        theta_a = update_observables(state, e, "B", theta_b, theta_a)
        theta_b = update_observables(state, e, "A", theta_a, theta_b)
        state, obj = optimal_state(e, theta_a, theta_b)
        assert np.all(obj >= prev_obj - 1e-9), "seesaw objective decreased"
        newly = (~converged) & (np.abs(obj - prev_obj) < settings.conv_tol)
        first_converged[newly] = sweeps
        converged |= newly
        prev_obj = obj
        if converged.all():
            break
    best = int(np.argmax(obj))
    realization = canonicalize(state[best], theta_a[best], theta_b[best])
    return SeesawResult(
        realization=realization,
        value=bell_value(e, correlation_of(realization)),
        iterations=int(first_converged[best]) if converged[best] else sweeps,
        restart_index=best,
        converged=bool(converged[best]),
    )
