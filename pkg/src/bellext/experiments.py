"""Batch experiment drivers emitting seeded, schema-stable CSV.

Every sample is keyed by (seed, sample_index) through a counter-based
generator, so output is byte-identical for a given RunConfig regardless
of worker count or scheduling.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import criterion, model, npa, realization as rlz, seesaw
from .errors import SdpError, ValidationError
from .model import Correlation, P_L, T, chsh_value, min_probability, mix
from .realization import TwoQubitRealization
from .sdp import SdpSettings

SCHEMA_VERSION = "v1"


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, *path); stable across workers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))))


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    n_samples: int
    seed: int = 0
    profile: str = "uniform"
    out: Path | None = None
    workers: int = 1
    seesaw_restarts: int = 20
    seesaw_max_iters: int = 500
    seesaw_conv_tol: float = 1e-12
    verdict_tol: float = 1e-7
    sdp_gap_tol: float = 1e-8
    sdp_feas_tol: float = 1e-9
    grid_points: int = 101

    def sdp_settings(self) -> SdpSettings:
        return SdpSettings(gap_tol=self.sdp_gap_tol, feas_tol=self.sdp_feas_tol)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _write_csv(out: Path | None, schema: str, header: list[str], rows: list[list],
               trailer_comments: list[str] = ()) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={schema}-{SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    for comment in trailer_comments:
        buf.write(f"# {comment}\n")
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def _map_samples(fn, args_list, workers: int, chunksize: int = 8):
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=chunksize))


# ---------------------------------------------------------------------------
# Fig-1 style sweep: random Bell expressions -> seesaw maximizers ->
# saturation of the scaled quadratic bound on the nonlocal ones.
# ---------------------------------------------------------------------------

FIG1_HEADER = [
    "index", "chsh", "lhs_unscaled", "rhs_unscaled", "lhs_db", "rhs_db",
    "lhs_da", "rhs_da", "prod_b", "prod_a", "converged",
    "theta_a0", "theta_a1", "theta_b0", "theta_b1", "chi",
]


def _fig1_sample(args):
    cfg, idx = args
    rng = rng_for(cfg.seed, 0, idx)
    e = seesaw.random_bell_expression(rng, cfg.profile)
    sub_seed = int(rng.integers(0, 2**63 - 1))
    try:
        res = seesaw.maximize_bell(e, seesaw.SeesawSettings(
            restarts=cfg.seesaw_restarts, max_iters=cfg.seesaw_max_iters,
            conv_tol=cfg.seesaw_conv_tol, seed=sub_seed))
    except Exception as exc:  # recorded, not fatal
        return ("error", idx, repr(exc))
    r = res.realization
    c = rlz.correlation_of(r)
    ch = chsh_value(c)
    if ch <= 2.0:
        return ("local", idx, None)
    g = rlz.guessing_vector(r)
    ones = rlz.GuessVector(db=np.ones(2), da=np.ones(2))
    (lhs_u, rhs_u), _ = criterion.tlm_sides(c, ones)
    (lhs_b, rhs_b), (lhs_a, rhs_a) = criterion.tlm_sides(c, g)
    prod_b, prod_a = rlz.tlm_saturation_products(r)
    row = [idx, ch, lhs_u, rhs_u, lhs_b, rhs_b, lhs_a, rhs_a, prod_b, prod_a,
           int(res.converged)] + rlz.realization_to_row(r)
    return ("kept", idx, row)


def run_fig1(cfg: RunConfig) -> dict:
    """Random-expression sweep; emits one row per nonlocal maximizer."""
    outcomes = _map_samples(_fig1_sample, [(cfg, i) for i in range(cfg.n_samples)], cfg.workers)
    rows = [o[2] for o in outcomes if o[0] == "kept"]
    errors = [(o[1], o[2]) for o in outcomes if o[0] == "error"]
    fraction = len(rows) / max(1, cfg.n_samples)
    trailer = [f"nonlocal_fraction={_fmt(fraction)}", f"errors={len(errors)}"]
    text = _write_csv(cfg.out, "fig1", FIG1_HEADER, rows, trailer)
    return {"csv": text, "rows": rows, "nonlocal_fraction": fraction, "errors": errors}


# ---------------------------------------------------------------------------
# Fig-2 style sweep: random realizations filtered to saturate the scaled
# bound; emit the bound slack, the mixing-weight scan and edge diagnostics.
# ---------------------------------------------------------------------------

FIG2_HEADER = [
    "index", "delta", "lambda_max", "chsh", "min_prob",
    "theta_a0", "theta_a1", "theta_b0", "theta_b1", "chi",
]


def _fig2_sample(args):
    cfg, idx = args
    rng = rng_for(cfg.seed, 0, idx)
    ta, tb, chi = rlz.sample_realization_batch(rng, 1)
    prod_b, prod_a = rlz.tlm_product_arrays(ta, tb, chi)
    if prod_b[0] > 0.0 or prod_a[0] > 0.0:
        return ("discarded", idx, None)
    r = TwoQubitRealization(theta_a=ta[0], theta_b=tb[0], chi=float(chi[0]))
    c = rlz.correlation_of(r)
    dlt = criterion.delta(r)
    try:
        scan = npa.lambda_max(c, settings=cfg.sdp_settings())
    except SdpError as exc:
        return ("error", idx, repr(exc))
    row = [idx, dlt, scan.lambda_max, chsh_value(c), min_probability(c)] + rlz.realization_to_row(r)
    return ("kept", idx, row)


def run_fig2(cfg: RunConfig) -> dict:
    """Saturating-realization sweep; n_samples counts kept rows."""
    rows: list[list] = []
    errors = []
    raw = 0
    chunk = 64  # fixed so the trailer is identical for any worker count
    while len(rows) < cfg.n_samples and raw < 1000 * max(1, cfg.n_samples):
        outcomes = _map_samples(_fig2_sample, [(cfg, i) for i in range(raw, raw + chunk)], cfg.workers)
        raw += chunk
        for o in outcomes:
            if o[0] == "kept":
                rows.append(o[2])
            elif o[0] == "error":
                errors.append((o[1], o[2]))
            if len(rows) >= cfg.n_samples:
                break
    rows = rows[: cfg.n_samples]
    trailer = [f"raw_samples={raw}", f"errors={len(errors)}"]
    text = _write_csv(cfg.out, "fig2", FIG2_HEADER, rows, trailer)
    return {"csv": text, "rows": rows, "raw_samples": raw, "errors": errors}


# ---------------------------------------------------------------------------
# Fig-3 style slice: bounds along the straight quantum boundary from the
# Tsirelson point to the deterministic corner.
# ---------------------------------------------------------------------------

FIG3_HEADER = [
    "mu", "alpha", "beta", "chsh",
    "db2_00", "db2_01", "db2_10", "db2_11",
    "da2_00", "da2_01", "da2_10", "da2_11",
    "splus_00", "splus_01", "splus_10", "splus_11", "error",
]


def run_fig3(cfg: RunConfig) -> dict:
    """Grid along c(mu) = mu*T + (1-mu)*P_L; endpoints mu=0 and mu=1."""
    if cfg.grid_points < 2:
        raise ValidationError("grid needs at least 2 points")
    rows = []
    for i in range(cfg.grid_points):
        mu = i / (cfg.grid_points - 1)
        c = mix(T, P_L, mu)
        alpha = mu / np.sqrt(2.0)
        beta = 1.0 - mu
        base = [mu, alpha, beta, chsh_value(c)]
        try:
            db2, da2 = criterion.condition2_bounds(c)
            roots = criterion.quadratic_roots(c)
            row = base + list(db2.ravel()) + list(da2.ravel()) + list(roots.s_plus.ravel()) + [""]
        except Exception as exc:
            row = base + [""] * 12 + [type(exc).__name__]
        rows.append(row)
    text = _write_csv(cfg.out, "fig3", FIG3_HEADER, rows)
    return {"csv": text, "rows": rows}


# ---------------------------------------------------------------------------
# Root-matching sweep.
# ---------------------------------------------------------------------------

ROOT_MATCH_HEADER = [
    "index", "delta", "pattern", "residual_00", "residual_01", "residual_10", "residual_11",
    "theta_a0", "theta_a1", "theta_b0", "theta_b1", "chi",
]


def run_root_match(cfg: RunConfig) -> dict:
    """Which quadratic root matches the realized entanglement, per setting pair."""
    rng = rng_for(cfg.seed, 0)
    ta, tb, chi = rlz.sample_realization_batch(rng, cfg.n_samples)
    full, ma, mb = rlz.correlator_arrays(ta, tb, chi)
    s_plus, s_minus, _, _ = criterion.root_arrays(full, ma, mb)
    s2 = (np.sin(2 * chi) ** 2)[:, None, None]
    res_plus = np.abs(s_plus - s2)
    res_minus = np.abs(s_minus - s2)
    plus_wins = res_plus <= res_minus
    best = np.where(plus_wins, res_plus, res_minus)
    deltas = criterion.delta_arrays(ta, tb, chi)
    rows = []
    pattern_counts: dict[str, int] = {}
    for i in range(cfg.n_samples):
        pattern = "".join("+" if plus_wins[i, x, y] else "-" for x in range(2) for y in range(2))
        pattern_counts[pattern] = pattern_counts.get(pattern, 0) + 1
        rows.append([i, deltas[i], pattern] + list(best[i].ravel())
                    + [ta[i, 0], ta[i, 1], tb[i, 0], tb[i, 1], chi[i]])
    mixed = sum(v for k, v in pattern_counts.items() if k != "++++")
    trailer = [f"max_best_residual={_fmt(best.max())}", f"mixed_pattern_fraction={_fmt(mixed / max(1, cfg.n_samples))}"]
    for k in sorted(pattern_counts):
        trailer.append(f"pattern_{k}={pattern_counts[k]}")
    text = _write_csv(cfg.out, "root-match", ROOT_MATCH_HEADER, rows, trailer)
    return {"csv": text, "rows": rows, "patterns": pattern_counts, "max_best_residual": float(best.max())}


# ---------------------------------------------------------------------------
# Single-point check.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    """Everything the single-point verdict surfaces."""

    report: criterion.ExtremalityReport | None
    realization: TwoQubitRealization | None
    correlation: Correlation
    condition2_db2: np.ndarray
    condition2_da2: np.ndarray
    di_bounds: dict
    lambda_scan: npa.LambdaScan
    reconstructed: bool

    def lines(self) -> list[str]:
        out = []
        c = self.correlation
        out.append("correlators " + " ".join(_fmt(v) for v in model.correlation_to_row(c)))
        if self.realization is not None:
            out.append("realization " + " ".join(_fmt(v) for v in rlz.realization_to_row(self.realization))
                       + ("  (reconstructed)" if self.reconstructed else ""))
        if self.report is not None:
            rep = self.report
            out.append(f"chsh {_fmt(rep.chsh)}  min_prob {_fmt(rep.min_prob)}")
            out.append(f"delta {_fmt(rep.delta)}  tlm_residual_b {_fmt(rep.tlm_residual_b)}  "
                       f"tlm_residual_a {_fmt(rep.tlm_residual_a)}  cond3 {_fmt(rep.cond3_product)}")
            out.append(f"verdict {rep.verdict}")
        else:
            out.append(f"chsh {_fmt(chsh_value(c))}  min_prob {_fmt(min_probability(c))}")
            out.append("verdict no-two-qubit-reconstruction (correlation-only view)")
        out.append("condition2_db2 " + " ".join(_fmt(v) for v in self.condition2_db2.ravel()))
        out.append("condition2_da2 " + " ".join(_fmt(v) for v in self.condition2_da2.ravel()))
        for key in ("DB0", "DB1", "DA0", "DA1"):
            out.append(f"di_bound_{key} {_fmt(self.di_bounds[key])}")
        out.append(f"lambda_max {_fmt(self.lambda_scan.lambda_max)}")
        return out


def check_point(data: TwoQubitRealization | Correlation, cfg: RunConfig | None = None) -> CheckReport:
    """Full verdict for one realization or correlation.

    Correlation inputs are first run through the two-qubit reconstruction;
    if none reproduces them, the realization-based residuals are omitted
    and the correlation-only quantities are still reported.
    """
    cfg = cfg or RunConfig(subcommand="check", n_samples=1)
    reconstructed = False
    if isinstance(data, TwoQubitRealization):
        r: TwoQubitRealization | None = data
        c = rlz.correlation_of(data)
    else:
        c = data
        r = criterion.reconstruct_two_qubit(c)
        reconstructed = r is not None
    report = criterion.extremality_verdict(r, tol=cfg.verdict_tol) if r is not None else None
    db2, da2 = criterion.condition2_bounds(c)
    di = {t: npa.di_upper_bound(c, t, settings=cfg.sdp_settings()) for t in ("DB0", "DB1", "DA0", "DA1")}
    scan = npa.lambda_max(c, settings=cfg.sdp_settings())
    return CheckReport(
        report=report, realization=r, correlation=c,
        condition2_db2=db2, condition2_da2=da2,
        di_bounds=di, lambda_scan=scan, reconstructed=reconstructed,
    )


def parse_point_file(path: Path) -> TwoQubitRealization | Correlation:
    """Input schema: whitespace/comma separated floats, '#' comments; 5
    values are realization angles, 8 values are correlators in CSV order."""
    tokens: list[str] = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].replace(",", " ")
        tokens.extend(line.split())
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"non-numeric token in {path}: {exc}") from exc
    if len(values) == 5:
        return rlz.realization_from_row(values)
    if len(values) == 8:
        return model.correlation_from_row(values)
    raise ValidationError(f"{path} holds {len(values)} values; expected 5 (realization) or 8 (correlators)")
