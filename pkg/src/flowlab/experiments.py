"""Experiment campaigns verifying the flow, inverse, convergence-rate,
continuity, and moment properties, with reproducible persisted results.

Within one experiment every ladder level of a given seed derives from a
single fine-grid driver (decimated or polygonally coarsened), so level
comparisons isolate discretization from sampling noise.  Records carry
one row per (seed, level, probe) cell, errors included; every summary
statistic is recomputable from the records alone.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import fbm
from .coefficients import CoefficientField, parse_field
from .fraccalc import lambda_alpha
from .paths import GridPath, w_alpha_lambda_norm
from .sde import SolverConfig, check_order_window, solve_forward_batch, solve_backward_batch

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "run_flow_experiment",
    "run_inverse_experiment",
    "run_rate_experiment",
    "run_init_continuity",
    "run_driver_continuity",
    "run_moments_experiment",
    "default_config",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = ("flow", "inverse", "rate", "init-continuity", "driver-continuity", "moments")

# weighted norms: exp(-lambda * T) must stay representable
_MAX_LAMBDA_EXPONENT = 600.0

DEFAULT_TOLERANCES = {
    "min_doubling_ratio": 1.3,      # median discrepancy decay per ladder doubling
    "exact_discrepancy": 1e-12,     # additive coefficients are exact at grid level
    "tol_flow_safety": 10.0,        # calibration margin for the tol_flow schedule
    "slope_band": 0.1,              # |fitted slope - (theta - H)| bound
    "ratio_spread": 10.0,           # max/median bound for continuity ratios
    "lambda_band": 2.0,             # rung medians within [1/band, band] x ladder median
    "stderr_multiple": 3.0,         # moment stability: |delta| < multiple x stderr
}


@dataclass
class ExperimentConfig:
    """Field-for-field mirror of the JSON experiment configuration."""

    kind: str
    hurst: float = 0.75
    alpha: float = 0.3
    theta: float = 0.55
    horizon: float = 1.0
    fine_n: int = 2**13
    ladder: tuple = ()
    seeds: tuple = tuple(range(20))
    coefficients: str = "builtin:geometric:0.5"
    initial_points: tuple = ((1.0,),)
    lambda_weight: Optional[float] = None     # None: auto rule from the measured driver strength
    solver_n: int = 2**9                      # grid for single-resolution solves
    pair_count: int = 1000                    # init-continuity pairs (pooled over seeds)
    ball_radius: float = 2.0
    probe_seeds: int = 1000                   # inverse: 1-D sortedness probe sweeps
    probe_n: int = 2**9
    probe_fan: tuple = (-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0)
    sample_counts: tuple = (5000, 10000)      # moments: nested Monte-Carlo sizes
    moment_orders: tuple = (2, 4, 8)
    exp_moment_gamma: float = 1.4
    exp_moment_lambda: float = 1.0
    moment_x0: float = 0.5
    tolerances: dict = dc_field(default_factory=dict)
    outdir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        self.ladder = tuple(int(v) for v in self.ladder)
        self.seeds = tuple(int(v) for v in self.seeds)
        self.initial_points = tuple(tuple(float(c) for c in np.atleast_1d(p)) for p in self.initial_points)
        self.probe_fan = tuple(float(v) for v in self.probe_fan)
        self.sample_counts = tuple(int(v) for v in self.sample_counts)
        self.moment_orders = tuple(int(v) for v in self.moment_orders)
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if self.ladder and any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("ladder must be strictly increasing")
        if not (0.0 < self.hurst < 1.0):
            raise ValueError(f"Hurst parameter must lie in (0, 1), got {self.hurst}")
        if self.kind != "rate":
            # solver-backed kinds must pass the admissible-order gate
            probe_n = self.ladder[0] if self.ladder else self.solver_n
            cfg = SolverConfig(self.alpha, probe_n, self.hurst)
            check_order_window(cfg, self.field())
        elif not (1.0 - self.hurst < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in ({1.0 - self.hurst}, 1/2) for rate experiments")

    def field(self) -> CoefficientField:
        return parse_field(self.coefficients)

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["ladder"] = list(self.ladder)
        doc["seeds"] = list(self.seeds)
        doc["initial_points"] = [list(p) for p in self.initial_points]
        doc["probe_fan"] = list(self.probe_fan)
        doc["sample_counts"] = list(self.sample_counts)
        doc["moment_orders"] = list(self.moment_orders)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        names = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)


def default_config(kind: str, **overrides) -> ExperimentConfig:
    """Spec-scale defaults per experiment kind."""
    base: dict = {"kind": kind}
    if kind == "flow" or kind == "inverse":
        base.update(ladder=(2**8, 2**9, 2**10, 2**11), fine_n=2**13, seeds=tuple(range(20)))
    elif kind == "rate":
        base.update(ladder=(2**4, 2**5, 2**6, 2**7, 2**8, 2**9), fine_n=2**13, seeds=tuple(range(50)))
    elif kind == "init-continuity":
        base.update(seeds=tuple(range(8)), solver_n=2**9)
    elif kind == "driver-continuity":
        # moderate discount: the uncapped lambda rule concentrates the norm
        # near t = 0 where the polygonal gap no longer shrinks with the ladder
        base.update(ladder=(2**4, 2**5, 2**6, 2**7, 2**8, 2**9), fine_n=2**13,
                    seeds=tuple(range(8)), lambda_weight=5.0)
    elif kind == "moments":
        base.update(coefficients="builtin:sin", solver_n=2**8, seeds=(0,))
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: dict
    checks: dict
    wall_time: float

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    started = time.perf_counter()
    runner = _RUNNERS[config.kind]
    records = runner(config)
    records.sort(key=_record_key)
    summary = summarize(config, records)
    checks = evaluate_checks(config, summary)
    return ExperimentResult(config, records, summary, checks, wall_time=time.perf_counter() - started)


def _kind_runner(kind: str):
    def run(config: ExperimentConfig) -> ExperimentResult:
        if config.kind != kind:
            raise ValueError(f"config has kind {config.kind!r}, expected {kind!r}")
        return run_experiment(config)

    run.__name__ = f"run_{kind.replace('-', '_')}_experiment"
    return run


run_flow_experiment = _kind_runner("flow")
run_inverse_experiment = _kind_runner("inverse")
run_rate_experiment = _kind_runner("rate")
run_init_continuity = _kind_runner("init-continuity")
run_driver_continuity = _kind_runner("driver-continuity")
run_moments_experiment = _kind_runner("moments")


def summarize(config: ExperimentConfig, records: list) -> dict:
    return _SUMMARIZERS[config.kind](config, records)


def evaluate_checks(config: ExperimentConfig, summary: dict) -> dict:
    return _CHECKERS[config.kind](config, summary)


def _record_key(rec: dict) -> tuple:
    return tuple((k, str(v)) for k, v in sorted(rec.items()))


def _fine_driver(config: ExperimentConfig, seed: int, components: int = 1) -> GridPath:
    spec = fbm.FbmSpec(
        hurst=config.hurst,
        components=components,
        horizon=config.horizon,
        grid_size=config.fine_n,
        seed=seed,
    )
    return fbm.sample_circulant(spec).path


def _auto_lambda(config: ExperimentConfig, driver: GridPath) -> float:
    """Discount rate making lambda^{2a-1} * Lambda_a(driver) = 1/4, capped against underflow."""
    if config.lambda_weight is not None:
        return float(config.lambda_weight)
    strength = max(lambda_alpha(driver, config.alpha), 1e-12)
    lam = (4.0 * strength) ** (1.0 / (1.0 - 2.0 * config.alpha))
    return min(lam, _MAX_LAMBDA_EXPONENT / config.horizon)


def _is_exact_field(c: CoefficientField) -> bool:
    """Additive-type fields solve exactly at grid level."""
    return c.name in ("additive", "zero")


# ---------------------------------------------------------------------------
# flow and inverse experiments
# ---------------------------------------------------------------------------


def _closed_form_flows(c: CoefficientField):
    """Reference (continuous-flow) maps for the exactly solvable fields, else None.

    Returned callables take (driver, r, t, x) with r, t on the driver grid.
    """
    if c.name in ("additive", "zero"):
        mat = np.atleast_2d(np.asarray(c.sigma(0.0, np.zeros(c.dim))))

        def fwd(driver, r, t, x):
            db = driver.values[driver.index_of(t)] - driver.values[driver.index_of(r)]
            return np.asarray(x, dtype=float) + mat @ db

        def bwd(driver, r, t, x):
            db = driver.values[driver.index_of(t)] - driver.values[driver.index_of(r)]
            return np.asarray(x, dtype=float) - mat @ db

        return fwd, bwd
    if c.name.startswith("geometric"):
        s0 = float(c.sigma(0.0, np.ones(1))[0, 0])

        def fwd(driver, r, t, x):
            db = driver.values[driver.index_of(t), 0] - driver.values[driver.index_of(r), 0]
            return np.asarray(x, dtype=float) * math.exp(s0 * db)

        def bwd(driver, r, t, x):
            db = driver.values[driver.index_of(t), 0] - driver.values[driver.index_of(r), 0]
            return np.asarray(x, dtype=float) * math.exp(-s0 * db)

        return fwd, bwd
    return None


def _time_triples(horizon: float) -> list:
    """All ordered triples r <= tau <= t over the five quantile times."""
    marks = [horizon * q for q in (0.0, 0.25, 0.5, 0.75, 1.0)]
    return [(r, tau, t) for r in marks for tau in marks if tau >= r for t in marks if t >= tau]


def _time_pairs(horizon: float) -> list:
    marks = [horizon * q for q in (0.0, 0.25, 0.5, 0.75, 1.0)]
    return [(r, t) for r in marks for t in marks if t >= r]


def _reference_maps(config: ExperimentConfig, c: CoefficientField, fine: GridPath):
    closed = _closed_form_flows(c)
    if closed is not None:
        return closed
    # fall back to the finest-grid solve; the ladder must stay well below fine_n
    cfg = SolverConfig(config.alpha, fine.n_steps, config.hurst)

    def fwd(driver, r, t, x):
        vals = solve_forward_batch(np.asarray(x, dtype=float)[None, :], r, c, fine, cfg)[0]
        return vals[fine.index_of(t) - fine.index_of(r)]

    def bwd(driver, r, t, x):
        vals = solve_backward_batch(np.asarray(x, dtype=float)[None, :], t, c, fine, cfg)[0]
        return vals[fine.index_of(r)]

    return fwd, bwd


def _run_flow(config: ExperimentConfig) -> list:
    """Composition discrepancy of the discrete flow against the continuous one.

    A one-step scheme composes exactly: solving r -> tau and then tau -> t
    from the reached state performs bit-for-bit the same operations as
    solving r -> t in one leg (exercised directly in the unit tests).  The
    discrepancy |X^n_{tau t}(X^n_{r tau}(x)) - X_{rt}(x)| therefore equals
    |X^n_{rt}(x) - X_{rt}(x)|, which is what each triple records.
    """
    c = config.field()
    triples = _time_triples(config.horizon)
    marks = sorted({m for tri in triples for m in tri})
    x0s = np.asarray(config.initial_points, dtype=float)
    records = []
    for seed in config.seeds:
        fine = _fine_driver(config, seed, components=c.noise_dim)
        ref_fwd, ref_bwd = _reference_maps(config, c, fine)
        for n in config.ladder:
            driver = fine.decimate(config.fine_n // n)
            cfg = SolverConfig(config.alpha, n, config.hurst)
            disc_f, disc_b, failure = {}, {}, None
            try:
                for r in marks:
                    sols = solve_forward_batch(x0s, r, c, driver, cfg)
                    k0 = driver.index_of(r)
                    for t in (m for m in marks if m >= r):
                        reached = sols[:, driver.index_of(t) - k0]
                        for i, x in enumerate(x0s):
                            disc_f[(r, t, i)] = float(np.linalg.norm(reached[i] - ref_fwd(driver, r, t, x)))
                for t in marks:
                    if driver.index_of(t) == 0:
                        for i, x in enumerate(x0s):
                            disc_b[(t, t, i)] = 0.0
                        continue
                    sols = solve_backward_batch(x0s, t, c, driver, cfg)
                    for r in (m for m in marks if m <= t):
                        reached = sols[:, driver.index_of(r)]
                        for i, x in enumerate(x0s):
                            disc_b[(r, t, i)] = float(np.linalg.norm(reached[i] - ref_bwd(driver, r, t, x)))
            except Exception as exc:  # record the failure on every cell, keep sweeping
                failure = f"error: {exc}"
            for i in range(x0s.shape[0]):
                for r, tau, t in triples:
                    rec = {"seed": seed, "n": n, "r": r, "tau": tau, "t": t, "point": i,
                           "status": failure or "ok",
                           "disc_forward": disc_f.get((r, t, i), np.nan),
                           "disc_backward": disc_b.get((r, t, i), np.nan)}
                    records.append(rec)
    return records


def _run_inverse(config: ExperimentConfig) -> list:
    c = config.field()
    pairs = _time_pairs(config.horizon)
    marks = sorted({m for pair in pairs for m in pair})
    x0s = np.asarray(config.initial_points, dtype=float)
    npts = x0s.shape[0]
    records = []
    for seed in config.seeds:
        fine = _fine_driver(config, seed, components=c.noise_dim)
        for n in config.ladder:
            driver = fine.decimate(config.fine_n // n)
            cfg = SolverConfig(config.alpha, n, config.hurst)
            disc_xy, disc_yx, failure = {}, {}, None
            try:
                # X_rt(Y_rt(x)): one backward pass per t yields Y for every r
                ys = {}
                for t in marks:
                    kt = driver.index_of(t)
                    ys[t] = (
                        solve_backward_batch(x0s, t, c, driver, cfg)
                        if kt > 0
                        else np.broadcast_to(x0s[:, None, :], (npts, 1, c.dim))
                    )
                for r in marks:
                    kr = driver.index_of(r)
                    later = [t for t in marks if t > r]
                    inits = [ys[t][:, kr] for t in later] + [x0s]
                    stacked = np.concatenate(inits, axis=0)
                    sols = solve_forward_batch(stacked, r, c, driver, cfg)
                    for b, t in enumerate(later):
                        xy = sols[b * npts : (b + 1) * npts, driver.index_of(t) - kr]
                        for i in range(npts):
                            disc_xy[(r, t, i)] = float(np.linalg.norm(xy[i] - x0s[i]))
                    forward_x = sols[len(later) * npts :]
                    # Y_rt(X_rt(x)): one backward pass per t over the forward values
                    for t in later:
                        z = forward_x[:, driver.index_of(t) - kr]
                        yx = solve_backward_batch(z, t, c, driver, cfg)[:, kr]
                        for i in range(npts):
                            disc_yx[(r, t, i)] = float(np.linalg.norm(yx[i] - x0s[i]))
                    disc_xy.update({(r, r, i): 0.0 for i in range(npts)})
                    disc_yx.update({(r, r, i): 0.0 for i in range(npts)})
            except Exception as exc:
                failure = f"error: {exc}"
            for i in range(npts):
                for r, t in pairs:
                    records.append({
                        "seed": seed, "n": n, "r": r, "t": t, "point": i,
                        "status": failure or "ok",
                        "disc_xy": disc_xy.get((r, t, i), np.nan),
                        "disc_yx": disc_yx.get((r, t, i), np.nan),
                    })
    records.extend(_run_sortedness_probe(config, c))
    return records


def _run_sortedness_probe(config: ExperimentConfig, c: CoefficientField) -> list:
    """1-D monotonicity probe: a sorted fan of initial points must stay sorted."""
    if c.dim != 1:
        return []
    fan = np.sort(np.asarray(config.probe_fan, dtype=float))[:, None]
    n = config.probe_n
    spec = fbm.FbmSpec(config.hurst, c.noise_dim, config.horizon, n, seed=0)
    drivers = fbm.sample_paths(spec, config.probe_seeds, method="circulant")
    h = config.horizon / n
    times = np.arange(n + 1) * h
    states = np.broadcast_to(fan, (config.probe_seeds,) + fan.shape).copy()
    min_gap = np.full(config.probe_seeds, np.inf)
    for k in range(n):
        db = drivers[:, k + 1] - drivers[:, k]
        sig = c.sigma(times[k], states)
        states = states + np.einsum("sfdm,sm->sfd", sig, db) + c.drift(times[k], states) * h
        min_gap = np.minimum(min_gap, np.diff(states[..., 0], axis=1).min(axis=1))
    inversions = int(np.count_nonzero(min_gap <= 0.0))
    return [{"seed": -1, "n": n, "r": 0.0, "t": config.horizon, "point": -1,
             "status": "probe", "disc_xy": float(inversions), "disc_yx": float(min_gap.min())}]


def _ladder_medians(records: list, value_key: str, strict_only=None) -> dict:
    per_n: dict = {}
    for rec in records:
        if rec.get("status") not in ("ok",):
            continue
        if strict_only is not None and not strict_only(rec):
            continue
        per_n.setdefault(int(rec["n"]), []).append(float(rec[value_key]))
    return {n: float(np.median(v)) for n, v in sorted(per_n.items())}


def _summarize_flow(config: ExperimentConfig, records: list) -> dict:
    strict = lambda rec: rec["r"] < rec["tau"] < rec["t"]
    return _flow_style_summary(
        config, records, strict,
        value_keys=("disc_forward", "disc_backward"),
        group_cols=("r", "tau", "t", "point"),
    )


def _summarize_inverse(config: ExperimentConfig, records: list) -> dict:
    core = [r for r in records if r["status"] != "probe"]
    strict = lambda rec: rec["r"] < rec["t"]
    summary = _flow_style_summary(
        config, core, strict,
        value_keys=("disc_xy", "disc_yx"),
        group_cols=("r", "t", "point"),
    )
    probes = [r for r in records if r["status"] == "probe"]
    summary["probe_inversions"] = float(sum(r["disc_xy"] for r in probes)) if probes else None
    summary["probe_min_gap"] = float(min(r["disc_yx"] for r in probes)) if probes else None
    return summary


def _flow_style_summary(config, records, strict, value_keys, group_cols) -> dict:
    ladder = sorted({int(r["n"]) for r in records})
    medians_by_name = {k: _ladder_medians(records, k, strict) for k in value_keys}
    summary: dict = {
        "ladder": ladder,
        "medians": {k: [v.get(n, np.nan) for n in ladder] for k, v in medians_by_name.items()},
    }
    pooled = {}
    for n in ladder:
        vals = [float(r[k]) for r in records
                if int(r["n"]) == n and r["status"] == "ok" and strict(r) for k in value_keys]
        pooled[n] = float(np.median(vals)) if vals else np.nan
    summary["median_pooled"] = [pooled[n] for n in ladder]
    summary["doubling_ratios"] = [
        pooled[a] / pooled[b] if pooled[b] > 0 else np.inf for a, b in zip(ladder, ladder[1:])
    ]
    # tol_flow(n) = A n^{-(2H-1)/2}, A anchored at the coarsest rung with a safety factor
    decay = -(2.0 * config.hurst - 1.0) / 2.0
    amp = pooled[ladder[0]] / ladder[0] ** decay * config.tol("tol_flow_safety") if pooled[ladder[0]] > 0 else 0.0
    summary["tol_flow_amplitude"] = amp
    summary["tol_flow_top"] = amp * ladder[-1] ** decay
    # every probe cell must sit below the schedule at the top rung (median over seeds)
    groups: dict = {}
    for r in records:
        if int(r["n"]) != ladder[-1] or r["status"] != "ok" or not strict(r):
            continue
        key = tuple(r[c] for c in group_cols)
        groups.setdefault(key, []).append(max(float(r[k]) for k in value_keys))
    summary["top_rung_worst_cell_median"] = (
        max(float(np.median(v)) for v in groups.values()) if groups else np.nan
    )
    ok = [r for r in records if r["status"] == "ok"]
    summary["max_discrepancy"] = max(
        (max(float(r[k]) for k in value_keys) for r in ok), default=np.nan
    )
    summary["error_records"] = sum(1 for r in records if str(r["status"]).startswith("error"))
    summary["exact_field"] = _is_exact_field(config.field())
    return summary


def _checks_flow_style(config: ExperimentConfig, summary: dict) -> dict:
    checks = {"no_error_records": summary["error_records"] == 0}
    if summary["exact_field"]:
        checks["exact_discrepancy"] = summary["max_discrepancy"] <= config.tol("exact_discrepancy")
        return checks
    min_ratio = config.tol("min_doubling_ratio")
    checks["median_decay_ratio"] = all(r >= min_ratio for r in summary["doubling_ratios"])
    checks["top_rung_below_tol"] = summary["top_rung_worst_cell_median"] <= summary["tol_flow_top"]
    return checks


def _checks_flow(config, summary):
    return _checks_flow_style(config, summary)


def _checks_inverse(config, summary):
    checks = _checks_flow_style(config, summary)
    if summary.get("probe_inversions") is not None:
        checks["probe_no_inversions"] = summary["probe_inversions"] == 0
    return checks


# ---------------------------------------------------------------------------
# rate experiment (polygonal convergence and driver-strength decay)
# ---------------------------------------------------------------------------


def _run_rate(config: ExperimentConfig) -> list:
    records = []
    for seed in config.seeds:
        fine = _fine_driver(config, seed)
        fpath = fbm.FbmPath(
            fbm.FbmSpec(config.hurst, 1, config.horizon, config.fine_n, seed), fine
        )
        modulus = fbm.modulus_constant(fpath) if config.horizon <= 1.0 else np.nan
        for coarse_n in config.ladder:
            rec = {"seed": seed, "coarse_n": coarse_n, "status": "ok",
                   "holder_error": np.nan, "lambda_coarse": np.nan,
                   "lambda_diff": np.nan, "modulus_g": float(modulus)}
            try:
                approx = fbm.polygonal(fine, coarse_n)
                rec["holder_error"] = fbm.holder_error(fine, approx, config.theta)
                rec["lambda_coarse"] = lambda_alpha(approx, config.alpha)
                rec["lambda_diff"] = lambda_alpha(approx - fine, config.alpha)
            except Exception as exc:
                rec["status"] = f"error: {exc}"
            records.append(rec)
    return records


def _summarize_rate(config: ExperimentConfig, records: list) -> dict:
    ladder = sorted({int(r["coarse_n"]) for r in records})
    per_rung: dict = {n: {"holder_error": [], "lambda_coarse": [], "lambda_diff": []} for n in ladder}
    moduli = []
    for rec in records:
        if rec["status"] != "ok":
            continue
        n = int(rec["coarse_n"])
        for key in ("holder_error", "lambda_coarse", "lambda_diff"):
            per_rung[n][key].append(float(rec[key]))
        moduli.append(float(rec["modulus_g"]))
    med = {key: [float(np.median(per_rung[n][key])) for n in ladder]
           for key in ("holder_error", "lambda_coarse", "lambda_diff")}
    quart = {
        "q25": [float(np.percentile(per_rung[n]["holder_error"], 25)) for n in ladder],
        "q75": [float(np.percentile(per_rung[n]["holder_error"], 75)) for n in ladder],
    }
    # the predicted rate carries a sqrt(log n) factor; divide it out before fitting
    logs = np.log(ladder)
    reduced = np.log(np.asarray(med["holder_error"]) / np.sqrt(np.log(ladder)))
    slope = float(np.polyfit(logs, reduced, 1)[0])
    ladder_median = float(np.median([v for n in ladder for v in per_rung[n]["lambda_coarse"]]))
    return {
        "ladder": ladder,
        "median_error": med["holder_error"],
        "q25": quart["q25"],
        "q75": quart["q75"],
        "median_lambda_coarse": med["lambda_coarse"],
        "median_lambda_diff": med["lambda_diff"],
        "lambda_coarse_ladder_median": ladder_median,
        "fitted_slope": slope,
        "target_slope": config.theta - config.hurst,
        "modulus_q99": float(np.percentile(moduli, 99)) if moduli else np.nan,
        "modulus_median": float(np.median(moduli)) if moduli else np.nan,
        "error_records": sum(1 for r in records if str(r["status"]).startswith("error")),
    }


def _checks_rate(config: ExperimentConfig, summary: dict) -> dict:
    med = summary["median_error"]
    lam_diff = summary["median_lambda_diff"]
    lam_coarse = summary["median_lambda_coarse"]
    band = config.tol("lambda_band")
    ladder_median = summary["lambda_coarse_ladder_median"]
    return {
        "no_error_records": summary["error_records"] == 0,
        "slope_within_band": abs(summary["fitted_slope"] - summary["target_slope"]) <= config.tol("slope_band"),
        "median_error_decreasing": all(a > b for a, b in zip(med, med[1:])),
        "lambda_diff_decreasing": all(a > b for a, b in zip(lam_diff, lam_diff[1:])),
        "lambda_coarse_bounded": all(
            ladder_median / band <= v <= ladder_median * band for v in lam_coarse
        ),
    }


# ---------------------------------------------------------------------------
# continuity experiments
# ---------------------------------------------------------------------------


def _run_init_continuity(config: ExperimentConfig) -> list:
    c = config.field()
    n = config.solver_n
    cfg = SolverConfig(config.alpha, n, config.hurst)
    per_seed = max(1, config.pair_count // len(config.seeds))
    records = []
    for seed in config.seeds:
        driver = _fine_driver(config, seed, components=c.noise_dim).decimate(config.fine_n // n)
        lam = _auto_lambda(config, driver)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 7001)))
        chunks = []
        collected = 0
        while collected < per_seed:  # rejection-sample pairs inside the ball
            raw = rng.uniform(-config.ball_radius, config.ball_radius, size=(4 * per_seed, 2, c.dim))
            inside = np.linalg.norm(raw, axis=-1).max(axis=-1) <= config.ball_radius
            chunks.append(raw[inside])
            collected += chunks[-1].shape[0]
        pairs = np.concatenate(chunks, axis=0)[:per_seed]
        flat = pairs.reshape(-1, c.dim)
        sols = solve_forward_batch(flat, 0.0, c, driver, cfg)
        for i in range(pairs.shape[0]):
            x0, x1 = pairs[i, 0], pairs[i, 1]
            dist = float(np.linalg.norm(x0 - x1))
            rec = {"seed": seed, "pair": i, "dist": dist, "lambda_weight": lam,
                   "ratio": np.nan, "status": "ok"}
            if dist < 1e-12:
                rec["status"] = "degenerate"
                records.append(rec)
                continue
            diff = GridPath(driver.times, sols[2 * i] - sols[2 * i + 1])
            rec["ratio"] = w_alpha_lambda_norm(diff, config.alpha, lam) / dist
            records.append(rec)
    return records


def _summarize_init(config: ExperimentConfig, records: list) -> dict:
    ratios = [float(r["ratio"]) for r in records if r["status"] == "ok"]
    med = float(np.median(ratios))
    return {
        "pairs": len(ratios),
        "ratio_median": med,
        "ratio_max": float(np.max(ratios)),
        "ratio_spread": float(np.max(ratios) / med) if med > 0 else np.inf,
        "max_deviation_from_one": float(np.max(np.abs(np.asarray(ratios) - 1.0))),
        "exact_field": _is_exact_field(config.field()),
        "error_records": sum(1 for r in records if str(r["status"]).startswith("error")),
    }


def _checks_init(config: ExperimentConfig, summary: dict) -> dict:
    checks = {
        "no_error_records": summary["error_records"] == 0,
        "ratio_bounded": summary["ratio_spread"] <= config.tol("ratio_spread"),
    }
    if summary["exact_field"]:
        checks["additive_ratio_exactly_one"] = summary["max_deviation_from_one"] <= 1e-12
    return checks


def _run_driver_continuity(config: ExperimentConfig) -> list:
    c = config.field()
    cfg = SolverConfig(config.alpha, config.fine_n, config.hurst)
    records = []
    x = np.asarray(config.initial_points[0], dtype=float)
    for seed in config.seeds:
        g = _fine_driver(config, seed, components=c.noise_dim)
        lam = _auto_lambda(config, g)
        sol_g = solve_forward_batch(x[None, :], 0.0, c, g, cfg)[0]
        for coarse_n in config.ladder:
            rec = {"seed": seed, "coarse_n": coarse_n, "lambda_weight": lam,
                   "sol_gap": np.nan, "lambda_gap": np.nan, "status": "ok"}
            try:
                h_path = fbm.polygonal(g, coarse_n)
                sol_h = solve_forward_batch(x[None, :], 0.0, c, h_path, cfg)[0]
                diff = GridPath(g.times, sol_g - sol_h)
                rec["sol_gap"] = w_alpha_lambda_norm(diff, config.alpha, lam)
                rec["lambda_gap"] = lambda_alpha(g - h_path, config.alpha)
            except Exception as exc:
                rec["status"] = f"error: {exc}"
            records.append(rec)
    return records


def _summarize_driver(config: ExperimentConfig, records: list) -> dict:
    ladder = sorted({int(r["coarse_n"]) for r in records})
    gaps: dict = {n: [] for n in ladder}
    lams: dict = {n: [] for n in ladder}
    ratios = []
    log_pairs = []
    for rec in records:
        if rec["status"] != "ok":
            continue
        n = int(rec["coarse_n"])
        sol_gap, lam_gap = float(rec["sol_gap"]), float(rec["lambda_gap"])
        gaps[n].append(sol_gap)
        lams[n].append(lam_gap)
        if lam_gap > 0:
            ratios.append(sol_gap / lam_gap)
            if sol_gap > 0:
                log_pairs.append((math.log(lam_gap), math.log(sol_gap)))
    med_gap = [float(np.median(gaps[n])) for n in ladder]
    med_lam = [float(np.median(lams[n])) for n in ladder]
    med_ratio = float(np.median(ratios))
    corr = float(np.corrcoef(*zip(*log_pairs))[0, 1]) if len(log_pairs) > 2 else np.nan
    return {
        "ladder": ladder,
        "median_sol_gap": med_gap,
        "median_lambda_gap": med_lam,
        "ratio_median": med_ratio,
        "ratio_max": float(np.max(ratios)),
        "ratio_spread": float(np.max(ratios) / med_ratio) if med_ratio > 0 else np.inf,
        "log_correlation": corr,
        "error_records": sum(1 for r in records if str(r["status"]).startswith("error")),
    }


def _checks_driver(config: ExperimentConfig, summary: dict) -> dict:
    gap, lam = summary["median_sol_gap"], summary["median_lambda_gap"]
    return {
        "no_error_records": summary["error_records"] == 0,
        "ratio_bounded": summary["ratio_spread"] <= config.tol("ratio_spread"),
        "sol_gap_decreasing": all(a > b for a, b in zip(gap, gap[1:])),
        "lambda_gap_decreasing": all(a > b for a, b in zip(lam, lam[1:])),
        "positive_correlation": summary["log_correlation"] > 0.0,
    }


# ---------------------------------------------------------------------------
# moments experiment
# ---------------------------------------------------------------------------


def _run_moments(config: ExperimentConfig) -> list:
    c = config.field()
    n = config.solver_n
    total = max(config.sample_counts)
    spec = fbm.FbmSpec(config.hurst, c.noise_dim, config.horizon, n, seed=config.seeds[0])
    drivers = fbm.sample_paths(spec, total, method="circulant")
    h = config.horizon / n
    times = np.arange(n + 1) * h
    states = np.full((total, c.dim), config.moment_x0)
    sup_abs = np.linalg.norm(states, axis=-1)
    for k in range(n):
        db = drivers[:, k + 1] - drivers[:, k]
        sig = c.sigma(times[k], states)
        states = states + np.einsum("sdm,sm->sd", sig, db) + c.drift(times[k], states) * h
        sup_abs = np.maximum(sup_abs, np.linalg.norm(states, axis=-1))
    return [{"path": i, "sup_abs": float(v)} for i, v in enumerate(sup_abs)]


def _summarize_moments(config: ExperimentConfig, records: list) -> dict:
    sup = np.asarray([float(r["sup_abs"]) for r in sorted(records, key=lambda r: int(r["path"]))])
    stats: dict = {}
    bounded = config.field().sigma_bound is not None
    for count in config.sample_counts:
        block = sup[:count]
        entry = {}
        for p in config.moment_orders:
            vals = block**p
            entry[f"p{p}"] = {"value": float(vals.mean()), "stderr": float(vals.std(ddof=1) / math.sqrt(count))}
        if bounded:
            vals = np.exp(config.exp_moment_lambda * block**config.exp_moment_gamma)
            entry["exp"] = {"value": float(vals.mean()), "stderr": float(vals.std(ddof=1) / math.sqrt(count))}
        stats[str(count)] = entry
    counts = sorted(config.sample_counts)
    drift = {}
    for a, b in zip(counts, counts[1:]):
        for stat in stats[str(b)]:
            delta = abs(stats[str(b)][stat]["value"] - stats[str(a)][stat]["value"])
            drift[f"{stat}_{a}_to_{b}"] = {
                "delta": delta,
                "stderr": stats[str(b)][stat]["stderr"],
            }
    return {"estimates": stats, "drift": drift, "paths": len(records)}


def _checks_moments(config: ExperimentConfig, summary: dict) -> dict:
    mult = config.tol("stderr_multiple")
    checks = {"record_count": summary["paths"] == max(config.sample_counts)}
    for name, entry in summary["drift"].items():
        checks[f"stable_{name}"] = entry["delta"] < mult * entry["stderr"]
    return checks


_RUNNERS = {
    "flow": _run_flow,
    "inverse": _run_inverse,
    "rate": _run_rate,
    "init-continuity": _run_init_continuity,
    "driver-continuity": _run_driver_continuity,
    "moments": _run_moments,
}

_SUMMARIZERS = {
    "flow": _summarize_flow,
    "inverse": _summarize_inverse,
    "rate": _summarize_rate,
    "init-continuity": _summarize_init,
    "driver-continuity": _summarize_driver,
    "moments": _summarize_moments,
}

_CHECKERS = {
    "flow": _checks_flow,
    "inverse": _checks_inverse,
    "rate": _checks_rate,
    "init-continuity": _checks_init,
    "driver-continuity": _checks_driver,
    "moments": _checks_moments,
}
