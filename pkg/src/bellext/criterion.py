"""Analytic extremality machinery for nonlocal correlations.

The tests implemented here decide whether a correlation point sits at an
extremal position of the quantum set: saturation of the scaled quadratic
correlator bound (checked through sign products), simultaneous saturation
of the eight guessing-quantity bounds (the `delta` residual), and a
product-sign condition guaranteeing two-qubit reconstructibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import realization as rlz
from .errors import NonRealizableError, ScaleRatioError, ValidationError
from .model import Correlation, chsh_value, min_probability
from .realization import GuessVector, TwoQubitRealization

DISCRIMINANT_TOL = 1e-10
SQRT_CLAMP_TOL = 1e-12
SCALE_RATIO_TOL = 1e-10
COND3_TOL = 1e-12
DEFAULT_VERDICT_TOL = 1e-7

Verdict = Literal["extremal-candidate", "saturation-fails", "cond3-fails", "local"]

EXTREMALITY_CSV_FIELDS = (
    "chsh", "delta", "tlm_residual_b", "tlm_residual_a", "cond3_product", "min_prob", "verdict",
)


@dataclass(frozen=True)
class QuadraticRoots:
    """Roots and coefficients of the per-setting-pair quadratics tying a
    correlation to the entanglement of its two-qubit realization."""

    s_plus: np.ndarray   # (2, 2)
    s_minus: np.ndarray  # (2, 2)
    j: np.ndarray        # (2, 2)
    k: np.ndarray        # (2, 2)


@dataclass(frozen=True)
class ExtremalityReport:
    """Residuals and verdict of the combined extremality test."""

    tlm_residual_b: float
    tlm_residual_a: float
    delta: float
    cond3_product: float
    chsh: float
    min_prob: float
    verdict: Verdict

    def to_csv_row(self) -> list:
        return [self.chsh, self.delta, self.tlm_residual_b, self.tlm_residual_a,
                self.cond3_product, self.min_prob, self.verdict]


# ---------------------------------------------------------------------------
# Vectorized kernels. full (..., 2, 2), marg_a/marg_b (..., 2).
# ---------------------------------------------------------------------------

def root_arrays(full, marg_a, marg_b):
    """J, K and the root pair S+/S- for batches of correlations.

    Entries with discriminant below -DISCRIMINANT_TOL come out as NaN in
    both roots; small negative discriminants are clamped to zero.
    """
    full = np.asarray(full, dtype=float)
    ma = np.asarray(marg_a, dtype=float)[..., :, None]
    mb = np.asarray(marg_b, dtype=float)[..., None, :]
    j = full**2 - ma**2 - mb**2 + 1.0
    k = full - ma * mb
    disc = j**2 - 4.0 * k**2
    bad = disc < -DISCRIMINANT_TOL
    root = np.sqrt(np.clip(disc, 0.0, None))
    s_plus = (j + root) / 2.0
    s_minus = (j - root) / 2.0
    if np.any(bad):
        s_plus = np.where(bad, np.nan, s_plus)
        s_minus = np.where(bad, np.nan, s_minus)
    return s_plus, s_minus, j, k


def delta_arrays(theta_a, theta_b, chi):
    """Maximal slack of the eight guessing-quantity bounds, batched over realizations."""
    full, ma, mb = rlz.correlator_arrays(theta_a, theta_b, chi)
    db, da = rlz.guess_arrays(theta_a, theta_b, chi)
    s_plus, _, _, _ = root_arrays(full, ma, mb)
    slack_b = ma[..., :, None] ** 2 + s_plus - (db**2)[..., :, None]
    slack_a = mb[..., None, :] ** 2 + s_plus - (da**2)[..., None, :]
    return np.maximum(slack_b.max(axis=(-2, -1)), slack_a.max(axis=(-2, -1)))


def tlm_sides_arrays(full, db, da):
    """(lhs, rhs) of the quadratic correlator bound for both scalings, batched.

    lhs carries the absolute value; scaled correlators are clamped to
    [-1, 1] (callers validate the overshoot tolerance).
    """
    full = np.asarray(full, dtype=float)
    out = []
    for scale in (np.asarray(db, dtype=float)[..., :, None], np.asarray(da, dtype=float)[..., None, :]):
        ct = np.clip(full / scale, -1.0, 1.0)
        lhs = np.abs(ct[..., 0, 0] * ct[..., 0, 1] - ct[..., 1, 0] * ct[..., 1, 1])
        w = np.sqrt(1.0 - ct**2)
        rhs = w[..., 0, 0] * w[..., 0, 1] + w[..., 1, 0] * w[..., 1, 1]
        out.append((lhs, rhs))
    return out


# ---------------------------------------------------------------------------
# Scalar API.
# ---------------------------------------------------------------------------

def quadratic_roots(c: Correlation) -> QuadraticRoots:
    """Solve the four quadratics; raises NonRealizableError on a genuinely
    negative discriminant instead of silently clamping."""
    full, ma, mb = c.full_corr, c.marg_a, c.marg_b
    j = full**2 - ma[:, None] ** 2 - mb[None, :] ** 2 + 1.0
    k = full - np.outer(ma, mb)
    disc = j**2 - 4.0 * k**2
    if disc.min() < -DISCRIMINANT_TOL:
        xy = np.unravel_index(np.argmin(disc), disc.shape)
        raise NonRealizableError(
            f"negative discriminant {disc.min():.3e} at setting pair {xy}; "
            "no two-qubit realization matches this correlation"
        )
    root = np.sqrt(np.clip(disc, 0.0, None))
    return QuadraticRoots(s_plus=(j + root) / 2.0, s_minus=(j - root) / 2.0, j=j, k=k)


def condition2_bounds(c: Correlation) -> tuple[np.ndarray, np.ndarray]:
    """Squared upper bounds on the guessing quantities, one per setting pair.

    Returns (db2, da2), both (2, 2) and indexed [x, y]:
    db2[x, y] = <Ax>^2 + S+_xy, da2[x, y] = <By>^2 + S+_xy.
    """
    roots = quadratic_roots(c)
    db2 = c.marg_a[:, None] ** 2 + roots.s_plus
    da2 = c.marg_b[None, :] ** 2 + roots.s_plus
    return db2, da2


def delta(r: TwoQubitRealization) -> float:
    """Maximal slack of the eight guessing-quantity bounds for a realization.

    Zero iff all eight bounds are simultaneously saturated; always
    >= -1e-10 up to rounding because the bounds are valid.
    """
    c = rlz.correlation_of(r)
    g = rlz.guessing_vector(r)
    db2, da2 = condition2_bounds(c)
    slack_b = db2 - (g.db**2)[:, None]
    slack_a = da2 - (g.da**2)[None, :]
    return float(max(slack_b.max(), slack_a.max()))


def condition3(c: Correlation) -> tuple[float, bool]:
    """Product-sign test for two-qubit reconstructibility.

    Returns the product over setting pairs of
    (1 - S+_xy) <AxBy> - <Ax><By> and the predicate (product >= -1e-12).
    """
    roots = quadratic_roots(c)
    factors = (1.0 - roots.s_plus) * c.full_corr - np.outer(c.marg_a, c.marg_b)
    product = float(np.prod(factors))
    return product, product >= -COND3_TOL


def tlm_sides(c: Correlation, d: GuessVector) -> tuple[tuple[float, float], tuple[float, float]]:
    """(lhs, rhs) pairs of the scaled quadratic correlator bound.

    First pair scales by Bob's guessing quantities db[x], second by
    Alice's da[y]. Raises ScaleRatioError when a scaled correlator
    exceeds 1 beyond tolerance, and requires positive scales.
    """
    if np.min(d.db) <= 0.0 or np.min(d.da) <= 0.0:
        raise ScaleRatioError("scaling requires strictly positive guessing quantities")
    ratios_b = np.abs(c.full_corr) / d.db[:, None]
    ratios_a = np.abs(c.full_corr) / d.da[None, :]
    worst = max(ratios_b.max(), ratios_a.max())
    if worst > 1.0 + SCALE_RATIO_TOL:
        raise ScaleRatioError(f"scaled correlator magnitude {worst:.12f} exceeds 1 beyond tolerance")
    (lhs_b, rhs_b), (lhs_a, rhs_a) = tlm_sides_arrays(c.full_corr, d.db, d.da)
    return (float(lhs_b), float(rhs_b)), (float(lhs_a), float(rhs_a))


def scaled_tlm_residuals(c: Correlation, d: GuessVector) -> tuple[float, float]:
    """Slack rhs - lhs of the scaled quadratic correlator bound, per scaling."""
    (lhs_b, rhs_b), (lhs_a, rhs_a) = tlm_sides(c, d)
    return rhs_b - lhs_b, rhs_a - lhs_a


def extremality_verdict(r: TwoQubitRealization, tol: float = DEFAULT_VERDICT_TOL) -> ExtremalityReport:
    """Assemble the full extremality report for a realization.

    A point qualifies as extremal-candidate iff it is nonlocal, both sign
    products certify saturation of the scaled bound, delta < tol, and the
    reconstructibility product is non-negative. Points with CHSH value
    <= 2 are reported local: the criterion then certifies boundaryness,
    not extremality.
    """
    c = rlz.correlation_of(r)
    chsh = chsh_value(c)
    min_prob = min_probability(c)
    dlt = delta(r)
    cond3_product, cond3_ok = condition3(c)
    try:
        prod_b, prod_a = rlz.tlm_saturation_products(r)
        res_b, res_a = scaled_tlm_residuals(c, rlz.guessing_vector(r))
    except (rlz.DegenerateDirectionError, ScaleRatioError):
        # Degenerate directions only occur for local points; the residuals
        # are then undefined but the verdict does not need them.
        prod_b = prod_a = np.inf
        res_b = res_a = float("nan")
    if chsh <= 2.0:
        verdict: Verdict = "local"
    elif prod_b > COND3_TOL or prod_a > COND3_TOL or dlt >= tol:
        verdict = "saturation-fails"
    elif not cond3_ok:
        verdict = "cond3-fails"
    else:
        verdict = "extremal-candidate"
    return ExtremalityReport(
        tlm_residual_b=res_b,
        tlm_residual_a=res_a,
        delta=dlt,
        cond3_product=cond3_product,
        chsh=chsh,
        min_prob=min_prob,
        verdict=verdict,
    )


def reconstruct_two_qubit(c: Correlation, tol: float = 1e-9) -> TwoQubitRealization | None:
    """Search for a two-qubit realization reproducing a correlation exactly.

    Tries every root of the four quadratics as the candidate entanglement
    value, fixing the measurement angles from the marginals and adjusting
    cosine signs to match the correlators. Returns None when no candidate
    reproduces the correlation within tol.
    """
    try:
        roots = quadratic_roots(c)
    except NonRealizableError:
        return None
    candidates = []
    for val in np.concatenate([roots.s_plus.ravel(), roots.s_minus.ravel()]):
        v = float(np.clip(val, 0.0, 1.0))
        if not any(abs(v - w) < 1e-12 for w in candidates):
            candidates.append(v)
    for s2sq in candidates:
        r = _try_reconstruction(c, s2sq, tol)
        if r is not None:
            return r
    return None


def _try_reconstruction(c: Correlation, s2sq: float, tol: float) -> TwoQubitRealization | None:
    chi = 0.5 * np.arcsin(np.sqrt(np.clip(s2sq, 0.0, 1.0)))
    cos2chi = np.cos(2.0 * chi)
    if cos2chi < 1e-8:
        # Maximally entangled: marginals must vanish and the correlators fix
        # the angles via <AxBy> = cos(thetaA_x - thetaB_y).
        if np.max(np.abs(c.marg_a)) > tol or np.max(np.abs(c.marg_b)) > tol:
            return None
        if np.max(np.abs(c.full_corr)) > 1.0 + 1e-12:
            return None
        fc = np.clip(c.full_corr, -1.0, 1.0)
        for sign_b0 in (1.0, -1.0):
            for sign_b1 in (1.0, -1.0):
                tb = np.array([sign_b0 * np.arccos(fc[0, 0]), sign_b1 * np.arccos(fc[0, 1])])
                for sign_a1 in (1.0, -1.0):
                    ta = np.array([0.0, tb[0] + sign_a1 * np.arccos(fc[1, 0])])
                    r = TwoQubitRealization(theta_a=ta, theta_b=tb, chi=np.pi / 4)
                    if _reproduces(r, c, tol):
                        return r
        return None
    sin_ta = c.marg_a / cos2chi
    sin_tb = c.marg_b / cos2chi
    if np.max(np.abs(sin_ta)) > 1.0 + 1e-10 or np.max(np.abs(sin_tb)) > 1.0 + 1e-10:
        return None
    base_ta = np.arcsin(np.clip(sin_ta, -1.0, 1.0))
    base_tb = np.arcsin(np.clip(sin_tb, -1.0, 1.0))
    for mask in range(16):
        # theta -> pi - theta flips the cosine while preserving the sine.
        ta = np.where([mask & 1, mask & 2], np.pi - base_ta, base_ta)
        tb = np.where([mask & 4, mask & 8], np.pi - base_tb, base_tb)
        r = TwoQubitRealization(theta_a=ta, theta_b=tb, chi=chi)
        if _reproduces(r, c, tol):
            return r
    return None


def _reproduces(r: TwoQubitRealization, c: Correlation, tol: float) -> bool:
    rc = rlz.correlation_of(r)
    return (
        np.max(np.abs(rc.full_corr - c.full_corr)) <= tol
        and np.max(np.abs(rc.marg_a - c.marg_a)) <= tol
        and np.max(np.abs(rc.marg_b - c.marg_b)) <= tol
    )
