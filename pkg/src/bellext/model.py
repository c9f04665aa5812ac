"""Correlation-space primitives for the two-party, two-setting, binary-outcome scenario.

Outcomes are encoded as +/-1 throughout; 0/1 indexing appears only inside
probability tables (index 0 <-> outcome +1, index 1 <-> outcome -1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoSignalingError, ProbabilityError, ValidationError

# Outcome value for table index 0 and 1.
OUTCOME_VALUES = np.array([1.0, -1.0])

# Fixed CSV column order for serialized correlations.
CORRELATION_CSV_FIELDS = ("A0B0", "A0B1", "A1B0", "A1B1", "A0", "A1", "B0", "B1")


def _as_fixed(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        raise ValidationError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Correlation:
    """A behavior point: full correlators <AxBy> and marginals <Ax>, <By>.

    No-signaling holds by construction since the marginals carry no
    dependence on the other party's setting.
    """

    full_corr: np.ndarray  # (2, 2), indexed [x, y]
    marg_a: np.ndarray     # (2,)
    marg_b: np.ndarray     # (2,)

    def __post_init__(self):
        object.__setattr__(self, "full_corr", _as_fixed(self.full_corr, (2, 2)))
        object.__setattr__(self, "marg_a", _as_fixed(self.marg_a, (2,)))
        object.__setattr__(self, "marg_b", _as_fixed(self.marg_b, (2,)))


@dataclass(frozen=True)
class ProbabilityTable:
    """Conditional probabilities p[a, b, x, y] with outcome indices 0 -> +1, 1 -> -1."""

    p: np.ndarray  # (2, 2, 2, 2)

    def __post_init__(self):
        object.__setattr__(self, "p", _as_fixed(self.p, (2, 2, 2, 2)))


@dataclass(frozen=True)
class BellExpression:
    """Coefficients of a linear functional on correlations."""

    va: np.ndarray   # (2,)
    vb: np.ndarray   # (2,)
    vab: np.ndarray  # (2, 2), indexed [x, y]

    def __post_init__(self):
        object.__setattr__(self, "va", _as_fixed(self.va, (2,)))
        object.__setattr__(self, "vb", _as_fixed(self.vb, (2,)))
        object.__setattr__(self, "vab", _as_fixed(self.vab, (2, 2)))


# CHSH expression with the minus sign on the (1, 1) correlator.
CHSH_EXPRESSION = BellExpression(va=np.zeros(2), vb=np.zeros(2), vab=np.array([[1.0, 1.0], [1.0, -1.0]]))

# Named reference points.
PR = Correlation(full_corr=np.array([[1.0, 1.0], [1.0, -1.0]]), marg_a=np.zeros(2), marg_b=np.zeros(2))
P_L = Correlation(full_corr=np.ones((2, 2)), marg_a=np.ones(2), marg_b=np.ones(2))
I = Correlation(full_corr=np.zeros((2, 2)), marg_a=np.zeros(2), marg_b=np.zeros(2))
T = Correlation(
    full_corr=PR.full_corr / np.sqrt(2.0),
    marg_a=np.zeros(2),
    marg_b=np.zeros(2),
)


def probability_array(c: Correlation) -> np.ndarray:
    """Raw (2,2,2,2) table of p(ab|xy) derived from a correlation, unvalidated."""
    a = OUTCOME_VALUES[:, None, None, None]
    b = OUTCOME_VALUES[None, :, None, None]
    fc = c.full_corr[None, None, :, :]
    ma = c.marg_a[None, None, :, None]
    mb = c.marg_b[None, None, None, :]
    return (1.0 + a * ma + b * mb + a * b * fc) / 4.0


def correlators_to_probabilities(c: Correlation, tol: float = 1e-12) -> ProbabilityTable:
    """Expand correlators into the conditional-probability table.

    Raises ProbabilityError if any entry falls outside [-tol, 1 + tol];
    all producers are closed-form, so a violation indicates a bug upstream,
    not numerical noise.
    """
    p = probability_array(c)
    if p.min() < -tol or p.max() > 1.0 + tol:
        raise ProbabilityError(
            f"probability outside [0,1]: min={p.min():.3e}, max={p.max():.3e}"
        )
    return ProbabilityTable(p=np.clip(p, 0.0, 1.0))


def probabilities_to_correlators(table: ProbabilityTable, tol: float = 1e-10) -> Correlation:
    """Exact inverse of correlators_to_probabilities.

    Raises NoSignalingError when normalization or no-signaling fails beyond tol.
    """
    p = table.p
    norms = p.sum(axis=(0, 1))
    if np.max(np.abs(norms - 1.0)) > tol:
        raise NoSignalingError(f"normalization off by {np.max(np.abs(norms - 1.0)):.3e}")
    # Marginals of Alice per (x, y) must not depend on y; symmetric for Bob.
    pa = np.einsum("a,abxy->xy", OUTCOME_VALUES, p)
    pb = np.einsum("b,abxy->xy", OUTCOME_VALUES, p)
    if np.max(np.abs(pa[:, 0] - pa[:, 1])) > tol or np.max(np.abs(pb[0, :] - pb[1, :])) > tol:
        raise NoSignalingError("marginals depend on the remote setting")
    fc = np.einsum("a,b,abxy->xy", OUTCOME_VALUES, OUTCOME_VALUES, p)
    return Correlation(full_corr=fc, marg_a=pa.mean(axis=1), marg_b=pb.mean(axis=0))


def chsh_value(c: Correlation) -> float:
    """Maximum of |sum of correlators with exactly one minus sign| over the 4 placements."""
    s = c.full_corr
    total = float(s.sum())
    return max(abs(total - 2.0 * float(s[x, y])) for x in range(2) for y in range(2))


def is_nonlocal(c: Correlation, tol: float = 0.0) -> bool:
    return chsh_value(c) > 2.0 + tol


def bell_value(e: BellExpression, c: Correlation) -> float:
    return float(e.va @ c.marg_a + e.vb @ c.marg_b + np.sum(e.vab * c.full_corr))


def mix(c0: Correlation, c1: Correlation, lam: float) -> Correlation:
    """Entrywise affine combination lam*c0 + (1-lam)*c1; extrapolation allowed."""
    w = float(lam)
    return Correlation(
        full_corr=w * c0.full_corr + (1.0 - w) * c1.full_corr,
        marg_a=w * c0.marg_a + (1.0 - w) * c1.marg_a,
        marg_b=w * c0.marg_b + (1.0 - w) * c1.marg_b,
    )


def min_probability(c: Correlation) -> float:
    """Smallest derived p(ab|xy); negative values flag an invalid point."""
    return float(probability_array(c).min())


def correlation_to_row(c: Correlation) -> list[float]:
    """Flatten to the fixed CSV order (A0B0, A0B1, A1B0, A1B1, A0, A1, B0, B1)."""
    fc = c.full_corr
    return [
        float(fc[0, 0]), float(fc[0, 1]), float(fc[1, 0]), float(fc[1, 1]),
        float(c.marg_a[0]), float(c.marg_a[1]), float(c.marg_b[0]), float(c.marg_b[1]),
    ]


def correlation_from_row(row) -> Correlation:
    vals = [float(v) for v in row]
    if len(vals) != 8:
        raise ValidationError(f"need 8 values in CSV order {CORRELATION_CSV_FIELDS}, got {len(vals)}")
    return Correlation(
        full_corr=np.array([[vals[0], vals[1]], [vals[2], vals[3]]]),
        marg_a=np.array(vals[4:6]),
        marg_b=np.array(vals[6:8]),
    )
