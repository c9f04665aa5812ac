"""Two-qubit realization engine.

A realization is a partially entangled pure state together with one
measurement direction per setting, all restricted to the x-z plane of the
Bloch sphere; this family suffices for maximizing any Bell expression in
the scenario. Closed-form correlators and guessing quantities live here,
next to independent matrix-algebra oracles for both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirectionError, InvalidWitnessError, ValidationError
from .model import Correlation

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]])

# Fixed CSV column order for serialized realizations (radians).
REALIZATION_CSV_FIELDS = ("theta_a0", "theta_a1", "theta_b0", "theta_b1", "chi")

_CHI_TOL = 1e-12


def wrap_angle(theta):
    """Reduce an angle to [-pi, pi), ties at -pi."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class TwoQubitRealization:
    """Measurement angles and entanglement angle of a two-qubit realization.

    chi = 0 is the product-state limit and is accepted; entangled
    realizations have chi in (0, pi/4].
    """

    theta_a: np.ndarray  # (2,)
    theta_b: np.ndarray  # (2,)
    chi: float

    def __post_init__(self):
        ta = wrap_angle(np.array(self.theta_a, dtype=float))
        tb = wrap_angle(np.array(self.theta_b, dtype=float))
        if ta.shape != (2,) or tb.shape != (2,):
            raise ValidationError("theta_a and theta_b must each hold two angles")
        chi = float(self.chi)
        if not (-_CHI_TOL <= chi <= np.pi / 4 + _CHI_TOL):
            raise ValidationError(f"chi must lie in [0, pi/4], got {chi}")
        ta.setflags(write=False)
        tb.setflags(write=False)
        object.__setattr__(self, "theta_a", ta)
        object.__setattr__(self, "theta_b", tb)
        object.__setattr__(self, "chi", min(max(chi, 0.0), np.pi / 4))

    @property
    def is_product(self) -> bool:
        return self.chi == 0.0


@dataclass(frozen=True)
class GuessVector:
    """Optimal guessing quantities: db[x] for Bob guessing Alice's outcome, da[y] vice versa."""

    db: np.ndarray  # (2,)
    da: np.ndarray  # (2,)

    def __post_init__(self):
        object.__setattr__(self, "db", np.array(self.db, dtype=float))
        object.__setattr__(self, "da", np.array(self.da, dtype=float))


@dataclass(frozen=True)
class BlochAngles:
    """Bloch-vector angles of the conditioned local states."""

    phi_b: np.ndarray  # (2,), direction of Bob's state steered by A_x
    phi_a: np.ndarray  # (2,), direction of Alice's state steered by B_y


@dataclass(frozen=True)
class WitnessParams:
    """Coefficients (s_x, u_xy) of a guessing-probability witness.

    Valid witnesses satisfy u00*u01 == u10*u11 and sum(u^2) == 1
    within 1e-12.
    """

    s: np.ndarray  # (2,)
    u: np.ndarray  # (2, 2)

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        u = np.array(self.u, dtype=float)
        if s.shape != (2,) or u.shape != (2, 2):
            raise InvalidWitnessError("witness needs s of shape (2,) and u of shape (2,2)")
        if abs(u[0, 0] * u[0, 1] - u[1, 0] * u[1, 1]) > 1e-12:
            raise InvalidWitnessError("witness violates u00*u01 == u10*u11")
        if abs(np.sum(u * u) - 1.0) > 1e-12:
            raise InvalidWitnessError("witness violates sum(u^2) == 1")
        s.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u", u)


# ---------------------------------------------------------------------------
# Vectorized kernels on raw angle arrays. theta_a, theta_b have a trailing
# axis of length 2; chi broadcasts against the leading axes.
# ---------------------------------------------------------------------------

def correlator_arrays(theta_a, theta_b, chi):
    """Closed-form correlators for batches of realizations.

    Returns (full (..., 2, 2), marg_a (..., 2), marg_b (..., 2)).
    """
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    chi = np.asarray(chi, dtype=float)
    sa, ca = np.sin(theta_a), np.cos(theta_a)
    sb, cb = np.sin(theta_b), np.cos(theta_b)
    s2 = np.sin(2.0 * chi)[..., None, None]
    c2 = np.cos(2.0 * chi)[..., None]
    full = sa[..., :, None] * sb[..., None, :] + ca[..., :, None] * cb[..., None, :] * s2
    return full, sa * c2, sb * c2


def guess_arrays(theta_a, theta_b, chi):
    """Closed-form guessing quantities (db (..., 2), da (..., 2))."""
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    s2sq = np.sin(2.0 * np.asarray(chi, dtype=float))[..., None] ** 2
    db = np.sqrt(np.sin(theta_a) ** 2 + np.cos(theta_a) ** 2 * s2sq)
    da = np.sqrt(np.sin(theta_b) ** 2 + np.cos(theta_b) ** 2 * s2sq)
    return db, da


def bloch_angle_arrays(theta_a, theta_b, chi):
    """Bloch angles (phi_b (..., 2), phi_a (..., 2)) of the steered states.

    Well-defined entries require the matching guessing quantity to be
    positive; callers guard degeneracy.
    """
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    s2 = np.sin(2.0 * np.asarray(chi, dtype=float))[..., None]
    phi_b = np.arctan2(np.sin(theta_a), np.cos(theta_a) * s2)
    phi_a = np.arctan2(np.sin(theta_b), np.cos(theta_b) * s2)
    return phi_b, phi_a


def tlm_product_arrays(theta_a, theta_b, chi):
    """Sign products of sin(phi - theta) over the four setting pairs.

    Returns (prod_b, prod_a); a non-positive product certifies saturation
    of the scaled quadratic correlator bound for that scaling.
    """
    theta_a = np.asarray(theta_a, dtype=float)
    theta_b = np.asarray(theta_b, dtype=float)
    phi_b, phi_a = bloch_angle_arrays(theta_a, theta_b, chi)
    prod_b = np.prod(np.sin(phi_b[..., :, None] - theta_b[..., None, :]), axis=(-2, -1))
    prod_a = np.prod(np.sin(phi_a[..., None, :] - theta_a[..., :, None]), axis=(-2, -1))
    return prod_b, prod_a


def sample_realization_batch(rng: np.random.Generator, n: int):
    """Draw n realizations: thetas uniform on [-pi, pi), chi uniform on (0, pi/4].

    Draw order per sample is (theta_a0, theta_a1, theta_b0, theta_b1, chi);
    the batch draws each column in that order.
    """
    thetas = rng.uniform(-np.pi, np.pi, size=(4, n))
    chi = (np.pi / 4) * (1.0 - rng.random(n))
    return thetas[:2].T.copy(), thetas[2:].T.copy(), chi


def sample_realization(rng: np.random.Generator) -> TwoQubitRealization:
    ta, tb, chi = sample_realization_batch(rng, 1)
    return TwoQubitRealization(theta_a=ta[0], theta_b=tb[0], chi=float(chi[0]))


# ---------------------------------------------------------------------------
# Scalar API on realization values.
# ---------------------------------------------------------------------------

def correlation_of(r: TwoQubitRealization) -> Correlation:
    """Correlation generated by a realization, via the closed-form trig identities."""
    full, ma, mb = correlator_arrays(r.theta_a, r.theta_b, r.chi)
    return Correlation(full_corr=full, marg_a=ma, marg_b=mb)


def observable_matrix(theta: float) -> np.ndarray:
    """Rank-1 projective +-1 observable in the x-z plane."""
    return np.cos(theta) * SIGMA_1 + np.sin(theta) * SIGMA_3


def state_vector(chi: float) -> np.ndarray:
    """The entangled state cos(chi)|00> + sin(chi)|11> as a real 4-vector."""
    psi = np.zeros(4)
    psi[0] = np.cos(chi)
    psi[3] = np.sin(chi)
    return psi


def matrix_oracle(r: TwoQubitRealization) -> Correlation:
    """Independent route to the correlators via explicit 4x4 matrix algebra."""
    psi = state_vector(r.chi)
    eye = np.eye(2)
    a_ops = [observable_matrix(t) for t in r.theta_a]
    b_ops = [observable_matrix(t) for t in r.theta_b]
    full = np.array([[psi @ np.kron(a, b) @ psi for b in b_ops] for a in a_ops])
    ma = np.array([psi @ np.kron(a, eye) @ psi for a in a_ops])
    mb = np.array([psi @ np.kron(eye, b) @ psi for b in b_ops])
    return Correlation(full_corr=full, marg_a=ma, marg_b=mb)


def guessing_vector(r: TwoQubitRealization) -> GuessVector:
    """Closed-form guessing quantities of a realization."""
    db, da = guess_arrays(r.theta_a, r.theta_b, r.chi)
    return GuessVector(db=db, da=da)


def _steering_operators(r: TwoQubitRealization):
    """tr_A[(A_x x 1) rho] and tr_B[(1 x B_y) rho] as stacked 2x2 matrices."""
    psi = state_vector(r.chi).reshape(2, 2)  # Alice index first
    mb = []
    for t in r.theta_a:
        a = observable_matrix(t)
        mb.append(psi.T @ a @ psi)  # Bob-side operator steered by A_x
    ma = []
    for t in r.theta_b:
        b = observable_matrix(t)
        ma.append(psi @ b @ psi.T)  # Alice-side operator steered by B_y
    return np.array(mb), np.array(ma)


def helstrom_oracle(r: TwoQubitRealization) -> GuessVector:
    """Trace-norm route to the guessing quantities.

    Builds the difference of the unnormalized conditional local states and
    returns the sum of absolute eigenvalues, independently of the
    closed-form expression.
    """
    steered_b, steered_a = _steering_operators(r)
    db = np.abs(np.linalg.eigvalsh(steered_b)).sum(axis=-1)
    da = np.abs(np.linalg.eigvalsh(steered_a)).sum(axis=-1)
    return GuessVector(db=db, da=da)


def bloch_angles(r: TwoQubitRealization, tol: float = 1e-12) -> BlochAngles:
    """Bloch angles of the steered local states.

    Raises DegenerateDirectionError when any guessing quantity is <= tol,
    since the direction is then undefined.
    """
    g = guessing_vector(r)
    if np.min(g.db) <= tol or np.min(g.da) <= tol:
        raise DegenerateDirectionError(
            f"guessing quantity vanishes (db={g.db}, da={g.da}); Bloch direction undefined"
        )
    phi_b, phi_a = bloch_angle_arrays(r.theta_a, r.theta_b, r.chi)
    return BlochAngles(phi_b=phi_b, phi_a=phi_a)


def tlm_saturation_products(r: TwoQubitRealization) -> tuple[float, float]:
    """Sign products certifying saturation of the scaled quadratic bound.

    Returns (prod_b, prod_a); the bound is saturated for the Bob (Alice)
    scaling iff the first (second) product is <= 0.
    """
    # Reuses the degeneracy guard of bloch_angles.
    bloch_angles(r)
    prod_b, prod_a = tlm_product_arrays(r.theta_a, r.theta_b, r.chi)
    return float(prod_b), float(prod_a)


CQB_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0]])  # (-1)^{xy}


def cqb_check(r: TwoQubitRealization, w: WitnessParams) -> tuple[float, float]:
    """Evaluate both sides of the guessing-probability witness inequality.

    Returns (lhs, rhs); every quantum realization satisfies lhs <= rhs for
    every valid witness.
    """
    c = correlation_of(r)
    g = guessing_vector(r)
    lhs = float(np.sum(w.s[:, None] * w.u * CQB_SIGNS * c.full_corr))
    rhs = float(np.sqrt(np.sum(w.s**2 * g.db**2)))
    return lhs, rhs


def sample_witness(rng: np.random.Generator) -> WitnessParams:
    """Random valid witness: free entries drawn, the last u fixed by the product rule."""
    s = rng.uniform(-1.0, 1.0, size=2)
    while True:
        u = rng.uniform(-1.0, 1.0, size=4)
        if abs(u[2]) < 1e-3:  # resampling keeps u11 = u00*u01/u10 well-conditioned
            continue
        u[3] = u[0] * u[1] / u[2]
        norm = np.sqrt(np.sum(u * u))
        if norm < 1e-6 or not np.isfinite(norm):
            continue
        u = u / norm
        return WitnessParams(s=s, u=u.reshape(2, 2))


def realization_to_row(r: TwoQubitRealization) -> list[float]:
    """Flatten to the fixed CSV order (theta_a0, theta_a1, theta_b0, theta_b1, chi)."""
    return [float(r.theta_a[0]), float(r.theta_a[1]), float(r.theta_b[0]), float(r.theta_b[1]), float(r.chi)]


def realization_from_row(row) -> TwoQubitRealization:
    vals = [float(v) for v in row]
    if len(vals) != 5:
        raise ValidationError(f"need 5 values in CSV order {REALIZATION_CSV_FIELDS}, got {len(vals)}")
    return TwoQubitRealization(theta_a=np.array(vals[:2]), theta_b=np.array(vals[2:4]), chi=vals[4])
