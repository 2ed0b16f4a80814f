"""Experiment orchestration: deterministic Monte Carlo runs and reports.

Each (epsilon, replication) work item derives its own counter-based
stream, samples one Poisson path, and evaluates all components on the
shared grid. Workers return per-replication value arrays which the
coordinator gathers in replication order; every statistic is then
reduced with exact compensated summation. The report bytes therefore do
not depend on the worker count or on execution order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .angles import ThetaConfig, validate_hypothesis_h
from .poisson import sample_poisson_path
from .process import EvaluationGrid, ProcessSample, build_sample, map_to_path_time
from .report import RunReport
from .runconfig import (
    CHECK_COVARIANCE,
    CHECK_CROSS_MOMENTS,
    CHECK_FOURTH_MOMENT,
    CHECK_MARTINGALE,
    CHECK_NORMALITY,
    CHECK_QV,
    CHECK_STROOCK,
    ConfigError,
    RunConfig,
)
from .rng import derive_stream
from .stats import (
    DegeneratePairError,
    Estimate,
    TestFunctionSpec,
    correlation_matrix,
    cross_moment,
    empirical_increment_covariance,
    fourth_moment_ratio,
    martingale_residual,
    normality_check,
    quadratic_variation,
    rate_fit,
    stroock_variance_check,
    structural_bound_eval,
)
from .version import TOOL_NAME, VERSION

# Monte Carlo acceptance band, in standard errors. One-in-16000 false
# alarms per scalar check under Gaussian error.
BAND_SIGMAS = 4.0

# |correlation| threshold flagging a pathwise-degenerate component pair.
DEGENERACY_TOL = 1e-12

# Moment bands for the normality check at the reference replication
# count; they widen as 1/sqrt(M) below it.
SKEW_BAND_REF = 0.10
KURT_BAND_REF = 0.15
REF_REPLICATIONS = 5000

# Asymptotic 1% critical point of the Kolmogorov statistic, scaled by
# 1/sqrt(n). Conservative here because parameters are estimated.
KS_CRIT_1PCT = 1.63

HIST_BINS = 50
HIST_SPAN_SD = 5.0

# fourth-moment sweep: dyadic subintervals of [0, T] down to level 2
DYADIC_LEVELS = 2

RATE_MIN_EPS_COUNT = 3
RATE_MIN_SPREAD = 2.0
SLOPE_FLOOR = 1.0
ANCHOR_EPSILON = 0.05
ANCHOR_TARGET = 3.0
ANCHOR_HALF_WIDTH = 0.5
SWEEP_MAX_OVER_MIN = 10.0


class InvalidThetaError(ConfigError):
    """Raised when an inadmissible angle vector is run without the override."""

    def __init__(self, message: str, hypothesis: dict):
        super().__init__(message)
        self.hypothesis = hypothesis


# ----------------------------------------------------------------------
# sample generation (serial and pooled)

_WORKER: dict = {}


def _init_worker(theta: ThetaConfig, grid_times: np.ndarray, horizon_T: float,
                 epsilon: float, master_seed: int, eps_index: int) -> None:
    _WORKER["theta"] = theta
    _WORKER["grid"] = EvaluationGrid(times=grid_times, horizon_T=horizon_T)
    _WORKER["epsilon"] = epsilon
    _WORKER["master_seed"] = master_seed
    _WORKER["eps_index"] = eps_index
    _WORKER["horizon"] = map_to_path_time(horizon_T, epsilon)


def _chunk_values(start_stop: tuple[int, int]) -> np.ndarray:
    start, stop = start_stop
    theta: ThetaConfig = _WORKER["theta"]
    grid: EvaluationGrid = _WORKER["grid"]
    eps: float = _WORKER["epsilon"]
    out = np.empty((stop - start, theta.dimension, len(grid)))
    for r in range(start, stop):
        stream = derive_stream(_WORKER["master_seed"], _WORKER["eps_index"], r)
        path = sample_poisson_path(_WORKER["horizon"], stream)
        out[r - start] = build_sample(path, eps, theta, grid).values
    return out


def generate_samples(
    config: RunConfig, grid: EvaluationGrid, eps_index: int
) -> list[ProcessSample]:
    """All replications for one epsilon, gathered in replication order."""
    epsilon = config.epsilons[eps_index]
    M = config.replications_M
    initargs = (config.theta, grid.times, grid.horizon_T, epsilon,
                config.master_seed, eps_index)
    if config.workers <= 1:
        _init_worker(*initargs)
        values = _chunk_values((0, M))
    else:
        chunk = max(1, -(-M // (config.workers * 8)))
        ranges = [(lo, min(lo + chunk, M)) for lo in range(0, M, chunk)]
        with ProcessPoolExecutor(
            max_workers=config.workers, initializer=_init_worker, initargs=initargs
        ) as pool:
            blocks = list(pool.map(_chunk_values, ranges))
        values = np.concatenate(blocks, axis=0)
    return [
        ProcessSample(epsilon=epsilon, config=config.theta, grid=grid, values=values[r])
        for r in range(M)
    ]


# ----------------------------------------------------------------------
# individual checks


def _assertion(name: str, value: float, std_error: float | None,
               target: float | None, band: float | None, ok: bool) -> dict:
    return {
        "name": name,
        "value": float(value),
        "std_error": None if std_error is None else float(std_error),
        "target": None if target is None else float(target),
        "band": None if band is None else float(band),
        "pass": bool(ok),
    }


def _band_assertion(name: str, est: Estimate, target: float) -> dict:
    band = BAND_SIGMAS * est.std_error
    ok = abs(est.value - target) <= band
    return _assertion(name, est.value, est.std_error, target, band, ok)


def _check_covariance(samples: list[ProcessSample], T: float) -> dict:
    d = samples[0].dimension
    cov = empirical_increment_covariance(samples, 0.0, T)
    corr = correlation_matrix(cov)
    assertions = []
    for i in range(d):
        for j in range(i, d):
            target = T if i == j else 0.0
            assertions.append(_band_assertion(f"cov[{i + 1},{j + 1}]", cov[i][j], target))
    degenerate = []
    for i in range(d):
        for j in range(i + 1, d):
            if abs(abs(corr[i, j]) - 1.0) <= DEGENERACY_TOL:
                degenerate.append(
                    {"i": i + 1, "j": j + 1, "correlation": float(corr[i, j])}
                )
    return {
        "name": CHECK_COVARIANCE,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {
            "matrix": [[cov[i][j].to_dict() for j in range(d)] for i in range(d)],
            "correlation": [[float(c) for c in row] for row in corr],
            "degenerate_pairs": degenerate,
        },
    }


def _check_qv(samples: list[ProcessSample], T: float) -> dict:
    d = samples[0].dimension
    partition = samples[0].grid.times
    assertions = []
    for c in range(d):
        qvs = np.array([quadratic_variation(s, c, partition) for s in samples])
        est = Estimate.from_observations(qvs)
        assertions.append(_band_assertion(f"qv[{c + 1}]", est, T))
    return {
        "name": CHECK_QV,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {},
    }


def _pair_kind(theta: ThetaConfig, i: int, j: int) -> str:
    ki, kj = theta.component_kind(i), theta.component_kind(j)
    if ki == "cos" and kj == "cos":
        return "coscos"
    if ki == "sin" and kj == "sin":
        return "sinsin"
    return "cossin"


def _check_cross_moments(
    samples: list[ProcessSample], theta: ThetaConfig, T: float, epsilon: float
) -> dict:
    d = theta.dimension
    phi = TestFunctionSpec.one()
    assertions = []
    pairs = []
    for i in range(d):
        for j in range(i + 1, d):
            est = cross_moment(samples, i, j, 0.0, T, phi)
            band = BAND_SIGMAS * est.std_error
            ok = abs(est.value) <= band
            assertions.append(
                _assertion(f"cross[{i + 1},{j + 1}]", est.value, est.std_error, 0.0, band, ok)
            )
            kind = _pair_kind(theta, i, j)
            try:
                bound = structural_bound_eval(theta.angles[i], theta.angles[j], epsilon, kind)
                bound_total = float(bound.total)
            except DegeneratePairError:
                bound_total = None
            pairs.append(
                {
                    "i": i + 1,
                    "j": j + 1,
                    "kind": kind,
                    "estimate": float(est.value),
                    "std_error": float(est.std_error),
                    "bound_total": bound_total,
                }
            )
    return {
        "name": CHECK_CROSS_MOMENTS,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {"pairs": pairs},
    }


def _dyadic_pairs(T: float) -> list[tuple[float, float]]:
    out = []
    for level in range(DYADIC_LEVELS + 1):
        pieces = 2**level
        for k in range(pieces):
            out.append((k * T / pieces, (k + 1) * T / pieces))
    return out


def _check_fourth_moment(samples: list[ProcessSample], T: float) -> dict:
    d = samples[0].dimension
    grid = samples[0].grid
    ratios = []
    assertions = []
    for c in range(d):
        per_pair = []
        for s, t in _dyadic_pairs(T):
            # skip pairs that do not land on the grid (coarse grids)
            try:
                grid.index_of(s), grid.index_of(t)
            except ValueError:
                continue
            est = fourth_moment_ratio(samples, c, s, t)
            per_pair.append(est.value)
            ratios.append(
                {
                    "component": c + 1,
                    "s": float(s),
                    "t": float(t),
                    "value": float(est.value),
                    "std_error": float(est.std_error),
                }
            )
        spread = max(per_pair) / min(per_pair)
        assertions.append(
            _assertion(f"r4_spread[{c + 1}]", spread, None, None, SWEEP_MAX_OVER_MIN,
                       spread <= SWEEP_MAX_OVER_MIN)
        )
    return {
        "name": CHECK_FOURTH_MOMENT,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {"ratios": ratios},
    }


def _histogram(increments: np.ndarray) -> dict:
    mean = float(np.mean(increments))
    sd = float(np.std(increments))
    lo, hi = mean - HIST_SPAN_SD * sd, mean + HIST_SPAN_SD * sd
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    clipped = np.clip(increments, lo, np.nextafter(hi, -np.inf))  # conserve the count
    counts, _ = np.histogram(clipped, bins=edges)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def _check_normality(samples: list[ProcessSample], T: float, M: int) -> dict:
    d = samples[0].dimension
    scale = max(1.0, math.sqrt(REF_REPLICATIONS / M))
    skew_band = SKEW_BAND_REF * scale
    kurt_band = KURT_BAND_REF * scale
    deltas = np.stack([s.at_time(T) - s.at_time(0.0) for s in samples])
    assertions = []
    histograms = {}
    for c in range(d):
        rep = normality_check(deltas[:, c])
        crit = KS_CRIT_1PCT / math.sqrt(rep.count)
        assertions.append(
            _assertion(f"skew[{c + 1}]", rep.skewness, None, 0.0, skew_band,
                       abs(rep.skewness) <= skew_band)
        )
        assertions.append(
            _assertion(f"kurt[{c + 1}]", rep.excess_kurtosis, None, 0.0, kurt_band,
                       abs(rep.excess_kurtosis) <= kurt_band)
        )
        assertions.append(
            _assertion(f"ks[{c + 1}]", rep.ks_statistic, None, None, crit,
                       rep.ks_statistic < crit)
        )
        histograms[f"comp_{c + 1}"] = _histogram(deltas[:, c])
    return {
        "name": CHECK_NORMALITY,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {"histograms": histograms},
    }


def _check_martingale(samples: list[ProcessSample], T: float) -> dict:
    grid = samples[0].grid
    times = grid.times
    if len(times) < 3:
        raise ConfigError("martingale check needs at least 2 grid steps")
    h = len(times) // 2
    q = len(times) // 4
    s, t = float(times[h]), float(times[-1])
    conditioning = [float(times[q]), float(times[h])] if q >= 1 else [float(times[h])]
    specs = [
        ("one", TestFunctionSpec.one()),
        ("tanh", TestFunctionSpec.tanh_product(conditioning)),
    ]
    d = samples[0].dimension
    assertions = []
    for label, phi in specs:
        for c in range(d):
            est = martingale_residual(samples, c, phi, s, t)
            band = BAND_SIGMAS * est.std_error
            assertions.append(
                _assertion(f"residual[{label}][{c + 1}]", est.value, est.std_error,
                           0.0, band, abs(est.value) <= band)
            )
    return {
        "name": CHECK_MARTINGALE,
        "pass": all(a["pass"] for a in assertions),
        "assertions": assertions,
        "data": {"increment": [s, t], "conditioning_times": conditioning},
    }


def _check_stroock(samples: list[ProcessSample], theta: ThetaConfig, T: float) -> dict:
    est = stroock_variance_check(samples, T)
    rescaled = bool(theta.pi_rescaled_indices)
    target = T if rescaled else 2.0 * T
    a = _band_assertion("variance", est, target)
    return {
        "name": CHECK_STROOCK,
        "pass": a["pass"],
        "assertions": [a],
        "data": {"rescaled": rescaled},
    }


# ----------------------------------------------------------------------
# cross-epsilon summary


def _rate_summary(results: list[dict], config: RunConfig) -> list[dict] | None:
    eps = list(config.epsilons)
    if len(eps) < RATE_MIN_EPS_COUNT or eps[0] / eps[-1] < RATE_MIN_SPREAD:
        return None
    per_eps_pairs = []
    for block in results:
        check = next((c for c in block["checks"] if c["name"] == CHECK_CROSS_MOMENTS), None)
        if check is None:
            return None
        per_eps_pairs.append(check["data"]["pairs"])

    fits = []
    n_pairs = len(per_eps_pairs[0])
    for p in range(n_pairs):
        entries = [per_eps_pairs[k][p] for k in range(len(eps))]
        if any(e["bound_total"] is None for e in entries):
            continue  # degenerate pair: no envelope to compare against
        values = np.array([e["estimate"] for e in entries])
        ses = np.array([e["std_error"] for e in entries])
        floored = np.maximum(np.abs(values), ses)
        slope = rate_fit(eps, values, ses)
        # normalize both curves at the largest epsilon, then require the
        # envelope shape to dominate up to the Monte Carlo band
        anchor = floored[0]
        est_n = floored / anchor
        env_n = (np.asarray(eps) / eps[0]) ** 2
        se_n = ses / anchor
        dom_ok = bool(np.all(est_n[1:] < env_n[1:] + BAND_SIGMAS * se_n[1:]))
        fits.append(
            {
                "i": entries[0]["i"],
                "j": entries[0]["j"],
                "kind": entries[0]["kind"],
                "slope": float(slope),
                "pass_slope": bool(slope >= SLOPE_FLOOR),
                "pass_domination": dom_ok,
                "pass": bool(slope >= SLOPE_FLOOR and dom_ok),
                "points": [
                    {
                        "epsilon": float(eps[k]),
                        "estimate": float(values[k]),
                        "std_error": float(ses[k]),
                        "floored_abs_estimate": float(floored[k]),
                        "bound_total": float(entries[k]["bound_total"]),
                    }
                    for k in range(len(eps))
                ],
            }
        )
    return fits or None


def _fourth_moment_summary(results: list[dict], config: RunConfig) -> dict | None:
    all_ratios = []
    anchor_ratios = []
    smallest = config.epsilons[-1]
    for block, eps in zip(results, config.epsilons):
        check = next((c for c in block["checks"] if c["name"] == CHECK_FOURTH_MOMENT), None)
        if check is None:
            return None
        for r in check["data"]["ratios"]:
            all_ratios.append(r["value"])
            if eps == smallest and r["s"] == 0.0 and r["t"] == config.horizon_T:
                anchor_ratios.append(r["value"])
    if not all_ratios:
        return None
    max_r, min_r = max(all_ratios), min(all_ratios)
    out = {
        "max": float(max_r),
        "min": float(min_r),
        "max_over_min": float(max_r / min_r),
        "pass": bool(max_r / min_r <= SWEEP_MAX_OVER_MIN),
    }
    # Gaussian-limit anchor is only meaningful close to the limit
    if smallest <= ANCHOR_EPSILON and anchor_ratios:
        ok = all(abs(r - ANCHOR_TARGET) <= ANCHOR_HALF_WIDTH for r in anchor_ratios)
        out["anchor"] = {
            "epsilon": float(smallest),
            "ratios": [float(r) for r in anchor_ratios],
            "target": ANCHOR_TARGET,
            "half_width": ANCHOR_HALF_WIDTH,
            "pass": bool(ok),
        }
    return out


# ----------------------------------------------------------------------
# top level


def run_experiment(config: RunConfig) -> RunReport:
    """Run every requested check at every epsilon and build the report.

    Refuses inadmissible angle vectors unless ``allow_invalid_theta`` is
    set (the counterexample mode); the refusal carries the full
    validation report.
    """
    hypothesis = validate_hypothesis_h(config.theta)
    if not hypothesis.valid and not config.allow_invalid_theta:
        raise InvalidThetaError(
            "angle vector fails the admissibility conditions "
            "(set allow_invalid_theta = true to run it as a counterexample): "
            + "; ".join(
                f"{v.rule}{v.indices}" for v in hypothesis.violations
            ),
            hypothesis.to_dict(),
        )

    grid = EvaluationGrid.uniform(config.horizon_T, config.grid_points)
    checks = config.resolved_checks
    T = config.horizon_T

    results = []
    timings: dict[str, float] = {}
    t_start = time.perf_counter()
    for eps_index, epsilon in enumerate(config.epsilons):
        t0 = time.perf_counter()
        samples = generate_samples(config, grid, eps_index)
        block_checks = []
        for name in checks:
            if name == CHECK_COVARIANCE:
                block_checks.append(_check_covariance(samples, T))
            elif name == CHECK_QV:
                block_checks.append(_check_qv(samples, T))
            elif name == CHECK_CROSS_MOMENTS:
                block_checks.append(_check_cross_moments(samples, config.theta, T, epsilon))
            elif name == CHECK_FOURTH_MOMENT:
                block_checks.append(_check_fourth_moment(samples, T))
            elif name == CHECK_NORMALITY:
                block_checks.append(_check_normality(samples, T, config.replications_M))
            elif name == CHECK_MARTINGALE:
                block_checks.append(_check_martingale(samples, T))
            elif name == CHECK_STROOCK:
                block_checks.append(_check_stroock(samples, config.theta, T))
        results.append({"epsilon": float(epsilon), "checks": block_checks})
        timings[f"epsilon={epsilon:g}"] = time.perf_counter() - t0

    summary: dict = {}
    if CHECK_CROSS_MOMENTS in checks:
        fits = _rate_summary(results, config)
        if fits is not None:
            summary["rate_fits"] = fits
    if CHECK_FOURTH_MOMENT in checks:
        sweep = _fourth_moment_summary(results, config)
        if sweep is not None:
            summary["fourth_moment_sweep"] = sweep

    ok = all(c["pass"] for block in results for c in block["checks"])
    for fit in summary.get("rate_fits", []):
        ok = ok and fit["pass"]
    sweep = summary.get("fourth_moment_sweep")
    if sweep is not None:
        ok = ok and sweep["pass"]
        if "anchor" in sweep:
            ok = ok and sweep["anchor"]["pass"]
    summary["all_pass"] = bool(ok)

    timings["total"] = time.perf_counter() - t_start
    return RunReport(
        tool={"name": TOOL_NAME, "version": VERSION},
        config=config.echo(),
        hypothesis=hypothesis.to_dict(),
        results=results,
        summary=summary,
        timings=timings,
    )
