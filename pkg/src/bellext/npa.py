"""Moment-matrix relaxations at the 1+AB level.

Builds Gram matrices of operator words over {A0, A1, B0, B1, X}, where X
is an auxiliary normalized Hermitian operator on one party's side used to
bound the guessing quantities device-independently, plus the plain 1+AB
structure used for the mixing-weight boundary scan and for upper bounds on
Bell expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import sdp
from .errors import SdpError, ValidationError
from .model import BellExpression, Correlation

Target = Literal["DB0", "DB1", "DA0", "DA1"]

LETTERS = ("A0", "A1", "B0", "B1", "X")

# Default ceiling for the mixing-weight scan; keeps the scan bounded for
# near-trivial correlations whose moment constraints barely constrain it.
LAMBDA_CAP = 10.0


def _side(letter: str, x_side: str) -> str:
    if letter == "X":
        return x_side
    return "A" if letter[0] == "A" else "B"


def reduce_word(letters: tuple[str, ...], x_side: str) -> tuple[str, ...]:
    """Canonical form: Alice block first (sides commute), squares of the
    dichotomic letters cancel, X*X survives."""
    block_a = [l for l in letters if _side(l, x_side) == "A"]
    block_b = [l for l in letters if _side(l, x_side) == "B"]
    out = []
    for block in (block_a, block_b):
        stack: list[str] = []
        for l in block:
            if stack and stack[-1] == l and l != "X":
                stack.pop()
            else:
                stack.append(l)
        out.extend(stack)
    return tuple(out)


def class_key(letters: tuple[str, ...], x_side: str) -> tuple[str, ...]:
    """Moment-class key: a word and its adjoint share one real moment."""
    w = reduce_word(letters, x_side)
    w_adj = reduce_word(tuple(reversed(w)), x_side)
    return min(w, w_adj)


@dataclass(frozen=True)
class MomentStructure:
    """Index words, entry equality classes and fixed entries of one relaxation."""

    words: tuple[tuple[str, ...], ...]
    x_side: str
    classes: dict  # key -> list of (i, j) upper-triangular entries
    fixed: dict    # key -> float
    objective_key: tuple[str, ...] | None
    label: str

    @property
    def dim(self) -> int:
        return len(self.words)

    def dump(self) -> str:
        """Debug listing: word indices, then classes with their entries."""
        lines = [f"structure {self.label} (dim {self.dim}, x on side {self.x_side!r})"]
        for i, w in enumerate(self.words):
            lines.append(f"word {i}: {'.'.join(w) or '1'}")
        for key in sorted(self.classes):
            tag = "fixed=%r" % (self.fixed[key],) if key in self.fixed else "free"
            if key == self.objective_key:
                tag += " objective"
            entries = " ".join(f"({i},{j})" for i, j in self.classes[key])
            lines.append(f"class {'.'.join(key) or '1'}: {tag} {entries}")
        return "\n".join(lines)


def _basis_entry(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n))
    if i == j:
        m[i, i] = 1.0
    else:
        m[i, j] = m[j, i] = 0.5
    return m


def _fixed_values(c: Correlation) -> dict:
    vals = {(): 1.0, ("X", "X"): 1.0}
    for x in range(2):
        vals[(f"A{x}",)] = float(c.marg_a[x])
        for y in range(2):
            vals[(f"A{x}", f"B{y}")] = float(c.full_corr[x, y])
    for y in range(2):
        vals[(f"B{y}",)] = float(c.marg_b[y])
    return vals


def _build_structure(words, x_side: str, c: Correlation | None, objective_word, label: str) -> MomentStructure:
    classes: dict = {}
    for i in range(len(words)):
        for j in range(i, len(words)):
            key = class_key(tuple(reversed(words[i])) + words[j], x_side)
            classes.setdefault(key, []).append((i, j))
    fixed = {}
    if c is not None:
        values = _fixed_values(c)
        fixed = {key: values[key] for key in classes if key in values}
    else:
        fixed = {key: 1.0 for key in classes if key in {(), ("X", "X")}}
    objective_key = class_key(objective_word, x_side) if objective_word is not None else None
    return MomentStructure(
        words=tuple(words), x_side=x_side, classes=classes, fixed=fixed,
        objective_key=objective_key, label=label,
    )


def build_guess_structure(c: Correlation, target: Target, level: str = "1+AB") -> MomentStructure:
    """Moment structure whose objective is the cross moment of X with the
    guessed party's observable.

    For DB targets X lives on Bob's side and the bound concerns Bob
    guessing Alice's outcome for setting x; DA targets mirror the roles.
    """
    if target not in ("DB0", "DB1", "DA0", "DA1"):
        raise ValidationError(f"unknown target {target!r}")
    guess_bob = target.startswith("DB")
    setting = int(target[2])
    x_side = "B" if guess_bob else "A"
    base = [(), ("A0",), ("A1",), ("B0",), ("B1",), ("X",)]
    if level == "1":
        words = base
    elif level == "1+AB":
        ab = [("A0", "B0"), ("A0", "B1"), ("A1", "B0"), ("A1", "B1")]
        if guess_bob:
            extra = [("A0", "X"), ("A1", "X")]
        else:
            extra = [("B0", "X"), ("B1", "X")]
        words = base + ab + extra
    else:
        raise ValidationError(f"unknown level {level!r}")
    objective_word = (f"A{setting}", "X") if guess_bob else (f"B{setting}", "X")
    return _build_structure(words, x_side, c, objective_word, f"guess-{target}-{level}")


def build_lambda_structure(c: Correlation) -> MomentStructure:
    """Plain 1+AB structure (no X); fixed entries scale with the mixing weight."""
    words = [(), ("A0",), ("A1",), ("B0",), ("B1",),
             ("A0", "B0"), ("A0", "B1"), ("A1", "B0"), ("A1", "B1")]
    return _build_structure(words, "B", c, None, "lambda-1AB")


def structure_to_problem(struct: MomentStructure) -> sdp.SdpProblem:
    """Equality-constrained SDP: class ties, fixed values, objective entry."""
    n = struct.dim
    constraints = []
    for key, entries in struct.classes.items():
        rep = entries[0]
        for other in entries[1:]:
            constraints.append(sdp.SdpConstraint(
                _basis_entry(n, *rep) - _basis_entry(n, *other), 0.0))
        if key in struct.fixed:
            constraints.append(sdp.SdpConstraint(_basis_entry(n, *rep), struct.fixed[key]))
    objective = np.zeros((n, n))
    if struct.objective_key is not None:
        rep = struct.classes[struct.objective_key][0]
        objective = _basis_entry(n, *rep)
    return sdp.SdpProblem(dim=n, objective=objective, constraints=constraints)


def di_upper_bound(c: Correlation, target: Target, level: str = "1+AB",
                   settings: sdp.SdpSettings | None = None) -> float:
    """Device-independent upper bound on one guessing quantity.

    The value is clamped to [0, 1]; the 6x6 level-1 variant always returns
    1 because X can mimic the guessed observable itself.
    """
    struct = build_guess_structure(c, target, level)
    sol = sdp.solve_or_raise(structure_to_problem(struct), settings)
    return float(np.clip(sol.objective_value, 0.0, 1.0))


@dataclass(frozen=True)
class LambdaScan:
    """Result of the mixing-weight boundary scan."""

    lambda_max: float
    status: str
    iterations: int
    gap: float
    cap_hit: bool
    method: str = "single-sdp"


def _lambda_problem(c: Correlation, cap: float) -> sdp.SdpProblem:
    """Single SDP: maximize the mixing weight with moment entries scaling
    affinely, plus a diagonal slack block implementing weight <= cap."""
    struct = build_lambda_structure(c)
    base_values = _fixed_values(c)
    n = struct.dim + 1
    slack = struct.dim
    constraints = []
    for key, entries in struct.classes.items():
        rep = entries[0]
        for other in entries[1:]:
            constraints.append(sdp.SdpConstraint(
                _basis_entry(n, *rep) - _basis_entry(n, *other), 0.0, np.zeros(1)))
        if key == ():
            constraints.append(sdp.SdpConstraint(_basis_entry(n, *rep), 1.0, np.zeros(1)))
        elif key in base_values:
            constraints.append(sdp.SdpConstraint(
                _basis_entry(n, *rep), 0.0, np.array([-base_values[key]])))
    for j in range(slack):
        constraints.append(sdp.SdpConstraint(_basis_entry(n, j, slack), 0.0, np.zeros(1)))
    constraints.append(sdp.SdpConstraint(_basis_entry(n, slack, slack), cap, np.array([1.0])))
    return sdp.SdpProblem(
        dim=n, objective=np.zeros((n, n)), constraints=constraints,
        n_scalars=1, scalar_objective=np.array([1.0]),
    )


def lambda_max(c: Correlation, cap: float = LAMBDA_CAP,
               settings: sdp.SdpSettings | None = None) -> LambdaScan:
    """Largest weight lambda such that lambda*c mixed with the uniform point
    stays inside the 1+AB relaxation; 1 means c sits on its boundary."""
    sol = sdp.solve(_lambda_problem(c, cap), settings)
    if sol.status != "optimal":
        raise SdpError(sol.status, sol.message or "mixing-weight scan failed")
    lam = float(sol.scalars[0])
    return LambdaScan(
        lambda_max=lam, status=sol.status, iterations=sol.iterations,
        gap=sol.gap, cap_hit=lam > cap - 1e-6,
    )


def lambda_max_bisection(c: Correlation, lo: float = 0.0, hi: float = LAMBDA_CAP,
                         width: float = 1e-9,
                         settings: sdp.SdpSettings | None = None) -> LambdaScan:
    """Feasibility-bisection fallback for the mixing-weight scan."""
    struct = build_lambda_structure(c)
    base_values = _fixed_values(c)
    n = struct.dim

    def feasible(lam: float) -> bool:
        constraints = []
        for key, entries in struct.classes.items():
            rep = entries[0]
            for other in entries[1:]:
                constraints.append(sdp.SdpConstraint(
                    _basis_entry(n, *rep) - _basis_entry(n, *other), 0.0))
            if key == ():
                constraints.append(sdp.SdpConstraint(_basis_entry(n, *rep), 1.0))
            elif key in base_values:
                constraints.append(sdp.SdpConstraint(_basis_entry(n, *rep), lam * base_values[key]))
        problem = sdp.SdpProblem(dim=n, objective=np.zeros((n, n)), constraints=constraints)
        return sdp.feasibility(problem, settings) == "optimal"

    if not feasible(lo):
        raise SdpError("infeasible", f"mixing weight {lo} already infeasible")
    iterations = 0
    if feasible(hi):
        lo = hi
    else:
        while hi - lo > width:
            mid = (lo + hi) / 2.0
            iterations += 1
            if feasible(mid):
                lo = mid
            else:
                hi = mid
    return LambdaScan(lambda_max=lo, status="optimal", iterations=iterations,
                      gap=hi - lo, cap_hit=lo >= LAMBDA_CAP - 1e-6, method="bisection")


def bell_upper_bound(e: BellExpression, settings: sdp.SdpSettings | None = None) -> float:
    """1+AB upper bound on a Bell expression over the relaxed quantum set."""
    struct = build_lambda_structure(
        Correlation(full_corr=np.zeros((2, 2)), marg_a=np.zeros(2), marg_b=np.zeros(2)))
    n = struct.dim
    constraints = []
    coefficient_of = {}
    for x in range(2):
        coefficient_of[(f"A{x}",)] = float(e.va[x])
        for y in range(2):
            coefficient_of[(f"A{x}", f"B{y}")] = float(e.vab[x, y])
    for y in range(2):
        coefficient_of[(f"B{y}",)] = float(e.vb[y])
    objective = np.zeros((n, n))
    for key, entries in struct.classes.items():
        rep = entries[0]
        for other in entries[1:]:
            constraints.append(sdp.SdpConstraint(
                _basis_entry(n, *rep) - _basis_entry(n, *other), 0.0))
        if key == ():
            constraints.append(sdp.SdpConstraint(_basis_entry(n, *rep), 1.0))
        elif key in coefficient_of:
            objective += coefficient_of[key] * _basis_entry(n, *rep)
    problem = sdp.SdpProblem(dim=n, objective=objective, constraints=constraints)
    return float(sdp.solve_or_raise(problem, settings).objective_value)
