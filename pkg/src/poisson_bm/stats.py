"""Monte Carlo estimators and analytic envelope evaluators.

Every estimator consumes a collection of immutable process samples and
returns point estimates with standard errors (sample standard deviation
over sqrt(replications)). Reductions use exact compensated summation
(math.fsum), so results are independent of accumulation order and
bit-identical between sequential and gathered-parallel execution.

The envelope evaluator assembles the epsilon^2 decay bounds governing
increment cross-moments; its factors are 1/(1 - cos(.)) terms in the
difference and sum of the two angles. The unknown multiplicative
constant in front of the analytic bound is deliberately not modeled:
totals are only meaningful for relative-rate comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .angles import Angle, TAU_THETA, parse_angle
from .poisson import decay_factor
from .process import ProcessSample

TWO_PI = 2.0 * math.pi

PHI_CONSTANT_ONE = "constant_one"
PHI_BOUNDED_PRODUCT = "bounded_product"

KIND_COSCOS = "coscos"
KIND_SINSIN = "sinsin"
KIND_COSSIN = "cossin"

LABEL_DIFF = "DIFF"
LABEL_SUM = "SUM"


class DegeneratePairError(ValueError):
    """An envelope factor 1/(1 - cos(.)) is evaluated at a vanishing argument."""


def compensated_sum(values: Iterable[float]) -> float:
    """Exactly rounded sum (Shewchuk compensation via math.fsum).

    Order-independent up to the final rounding, which is what makes the
    parallel-gather reduction bit-identical to the sequential one.
    """
    return math.fsum(values)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with its standard error."""

    value: float
    std_error: float
    replications: int

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be positive")
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")

    @classmethod
    def from_observations(cls, xs: np.ndarray) -> "Estimate":
        xs = np.asarray(xs, dtype=np.float64)
        n = xs.size
        if n < 2:
            raise ValueError("need at least 2 observations")
        mean = compensated_sum(xs) / n
        var = compensated_sum((xs - mean) ** 2) / (n - 1)
        return cls(value=mean, std_error=math.sqrt(var / n), replications=n)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "replications": self.replications,
        }


@dataclass(frozen=True)
class TestFunctionSpec:
    """A bounded continuous weight applied to the pre-increment history.

    ``constant_one`` is the trivial weight. ``bounded_product`` is the
    product over the conditioning times of tanh(sum of coordinates),
    one bounded continuous representative of the full class.
    """

    __test__ = False  # not a pytest class, despite the name

    kind: str
    conditioning_times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (PHI_CONSTANT_ONE, PHI_BOUNDED_PRODUCT):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        ts = tuple(float(t) for t in self.conditioning_times)
        object.__setattr__(self, "conditioning_times", ts)
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("conditioning times must be nondecreasing")

    @classmethod
    def one(cls) -> "TestFunctionSpec":
        return cls(kind=PHI_CONSTANT_ONE)

    @classmethod
    def tanh_product(cls, times: Sequence[float]) -> "TestFunctionSpec":
        return cls(kind=PHI_BOUNDED_PRODUCT, conditioning_times=tuple(times))


@dataclass(frozen=True)
class BoundTerm:
    label: str  # DIFF or SUM, by which trig combination the inner factor decays
    factor: float


@dataclass(frozen=True)
class StructuralBound:
    """Assembled epsilon^2 envelope for one angle pair.

    total = eps^2 * sum(term factors); the unknown constant prefactor of
    the analytic bound is not included.
    """

    theta_pair: tuple[float, float]
    epsilon: float
    kind: str
    terms: tuple[BoundTerm, ...]
    total: float

    def to_dict(self) -> dict:
        return {
            "theta_pair": list(self.theta_pair),
            "epsilon": self.epsilon,
            "kind": self.kind,
            "terms": [{"label": t.label, "factor": t.factor} for t in self.terms],
            "total": self.total,
        }


def _stack_values(samples: Sequence[ProcessSample]) -> np.ndarray:
    """(replications, dimension, grid) array from a sample collection."""
    if len(samples) == 0:
        raise ValueError("empty sample collection")
    first = samples[0]
    for s in samples[1:]:
        if s.config is not first.config and s.config.to_dict() != first.config.to_dict():
            raise ValueError("samples mix different configurations")
    return np.stack([s.values for s in samples])


def _increments_at(
    samples: Sequence[ProcessSample], s: float, t: float
) -> np.ndarray:
    grid = samples[0].grid
    i, j = grid.index_of(s), grid.index_of(t)
    vals = _stack_values(samples)
    return vals[:, :, j] - vals[:, :, i]


def _phi_values(samples: Sequence[ProcessSample], phi: TestFunctionSpec) -> np.ndarray:
    """phi evaluated per replication; the bounded product multiplies
    tanh of the coordinate sum at each conditioning time."""
    M = len(samples)
    if phi.kind == PHI_CONSTANT_ONE:
        return np.ones(M)
    grid = samples[0].grid
    idx = [grid.index_of(t) for t in phi.conditioning_times]
    vals = _stack_values(samples)
    out = np.ones(M)
    for i in idx:
        out *= np.tanh(vals[:, :, i].sum(axis=1))
    return out


def _column_estimate(xs: np.ndarray) -> Estimate:
    return Estimate.from_observations(xs)


def empirical_increment_covariance(
    samples: Sequence[ProcessSample], s: float, t: float
) -> list[list[Estimate]]:
    """Sample covariance matrix of the increments over (s, t).

    Entry (i, j) estimates Cov(Delta_i, Delta_j) with a standard error
    from the per-replication centered products. In the small-epsilon
    limit the diagonal targets t - s and the off-diagonal targets 0.
    """
    if len(samples) < 2:
        raise ValueError("need at least 2 samples for a covariance estimate")
    if not s < t:
        raise ValueError(f"need s < t, got ({s}, {t})")
    deltas = _increments_at(samples, s, t)  # (M, d)
    M, d = deltas.shape
    means = np.array([compensated_sum(deltas[:, c]) / M for c in range(d)])
    centered = deltas - means
    out: list[list[Estimate]] = [[None] * d for _ in range(d)]  # type: ignore[list-item]
    for i in range(d):
        for j in range(i, d):
            w = centered[:, i] * centered[:, j]
            value = compensated_sum(w) / (M - 1)
            mw = compensated_sum(w) / M
            se = math.sqrt(compensated_sum((w - mw) ** 2) / (M - 1) / M)
            e = Estimate(value=value, std_error=se, replications=M)
            out[i][j] = e
            out[j][i] = e
    return out


def correlation_matrix(cov: Sequence[Sequence[Estimate]]) -> np.ndarray:
    d = len(cov)
    corr = np.eye(d)
    for i in range(d):
        for j in range(d):
            denom = math.sqrt(cov[i][i].value * cov[j][j].value)
            corr[i, j] = cov[i][j].value / denom if denom > 0 else math.nan
    return corr


def cross_moment(
    samples: Sequence[ProcessSample],
    i: int,
    j: int,
    s: float,
    t: float,
    phi: TestFunctionSpec,
) -> Estimate:
    """Estimate E[phi(history) * Delta_i * Delta_j] over the increment (s, t).

    Components are 0-based. The diagonal with the constant weight is the
    quadratic-variation route, not a cross-moment; it is rejected here.
    """
    if i == j and phi.kind == PHI_CONSTANT_ONE:
        raise ValueError("i == j with the constant weight is the quadratic-variation path")
    if not s < t:
        raise ValueError(f"need s < t, got ({s}, {t})")
    if phi.conditioning_times and phi.conditioning_times[-1] > s:
        raise ValueError("conditioning times must not exceed the increment start")
    deltas = _increments_at(samples, s, t)
    w = _phi_values(samples, phi)
    return _column_estimate(w * deltas[:, i] * deltas[:, j])


def martingale_residual(
    samples: Sequence[ProcessSample],
    component: int,
    phi: TestFunctionSpec,
    s: float,
    t: float,
) -> Estimate:
    """Estimate E[phi(history) * Delta] for one component's increment over (s, t)."""
    if not s < t:
        raise ValueError(f"need s < t, got ({s}, {t})")
    if phi.conditioning_times and phi.conditioning_times[-1] > s:
        raise ValueError("conditioning times must not exceed the increment start")
    deltas = _increments_at(samples, s, t)
    w = _phi_values(samples, phi)
    return _column_estimate(w * deltas[:, component])


def quadratic_variation(
    sample: ProcessSample, component: int, partition: Sequence[float]
) -> float:
    """Sum of squared increments of one component over a grid partition."""
    ts = list(partition)
    if len(ts) < 2:
        raise ValueError("partition needs at least 2 points")
    if ts[0] != 0.0:
        raise ValueError("partition must start at 0")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("partition must be strictly increasing")
    idx = [sample.grid.index_of(t) for t in ts]
    x = sample.values[component, idx]
    return float(compensated_sum(np.diff(x) ** 2))


def fourth_moment_ratio(
    samples: Sequence[ProcessSample], component: int, s: float, t: float
) -> Estimate:
    """Estimate E[Delta^4] / (t - s)^2 for one component's increment.

    The tightness bound asserts this is bounded uniformly in epsilon;
    the Gaussian limit pins it near 3.
    """
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    if not s < t:
        raise ValueError(f"need s < t, got ({s}, {t})")
    deltas = _increments_at(samples, s, t)
    return _column_estimate(deltas[:, component] ** 4 / (t - s) ** 2)


@dataclass(frozen=True)
class NormalityReport:
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    count: int

    def to_dict(self) -> dict:
        return {
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_statistic": self.ks_statistic,
            "count": self.count,
        }


def normality_check(increments: np.ndarray) -> NormalityReport:
    """Sample skewness, excess kurtosis, and the Kolmogorov-Smirnov distance.

    The data are standardized internally (sample mean and standard
    deviation) and the KS statistic is taken against the standard normal
    CDF; at the sizes used here the estimated-parameter effect only makes
    the classical critical values conservative.
    """
    xs = np.asarray(increments, dtype=np.float64)
    if xs.size < 100:
        raise ValueError(f"need at least 100 values, got {xs.size}")
    n = xs.size
    mean = compensated_sum(xs) / n
    var = compensated_sum((xs - mean) ** 2) / n
    if var <= 0.0:
        raise ValueError("degenerate input: zero variance")
    z = (xs - mean) / math.sqrt(var)
    m3 = compensated_sum(z**3) / n
    m4 = compensated_sum(z**4) / n

    zs = np.sort(z)
    cdf = ndtr(zs)
    hi = np.arange(1, n + 1) / n - cdf
    lo = cdf - np.arange(0, n) / n
    d = float(max(hi.max(), lo.max()))
    return NormalityReport(
        skewness=float(m3), excess_kurtosis=float(m4 - 3.0), ks_statistic=d, count=n
    )


def stroock_variance_check(samples: Sequence[ProcessSample], t: float) -> Estimate:
    """Empirical variance at time t of the angle-pi cosine component.

    The unrescaled component targets 2t; with the 1/sqrt(2) rescale the
    target is t. Errors out when the configuration has no angle-pi
    cosine component.
    """
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    config = samples[0].config
    pi_components = [i for i, a in enumerate(config.cos_block) if a.is_pi]
    if not pi_components:
        raise ValueError("no angle-pi cosine component in this configuration")
    c = pi_components[0]
    vals = _stack_values(samples)
    x = vals[:, c, samples[0].grid.index_of(t)]
    M = x.size
    mean = compensated_sum(x) / M
    w = (x - mean) ** 2
    var = compensated_sum(w) / (M - 1)
    mw = compensated_sum(w) / M
    se = math.sqrt(compensated_sum((w - mw) ** 2) / (M - 1) / M)
    return Estimate(value=var, std_error=se, replications=M)


def _angle_mod_2pi_distance(x: float) -> float:
    """Distance from x to the nearest multiple of 2*pi."""
    r = math.remainder(x, TWO_PI)
    return abs(r)


def _check_nondegenerate(label: str, angle_value: float) -> None:
    if _angle_mod_2pi_distance(angle_value) <= TAU_THETA:
        raise DegeneratePairError(
            f"envelope factor for {label} is degenerate: "
            f"angle {angle_value!r} is within {TAU_THETA} of a multiple of 2*pi"
        )


def structural_bound_eval(
    theta_i: float | Angle,
    theta_j: float | Angle,
    epsilon: float,
    kind: str,
) -> StructuralBound:
    """Assemble the epsilon^2 decay envelope for one angle pair.

    total = eps^2 * [ (1/d(th_j)) * (1/d(th_i - th_j) + 1/d(th_i + th_j))
                    + (1/d(th_i)) * (1/d(th_j - th_i) + 1/d(th_i + th_j)) ]

    with d(.) = 1 - cos(.). The cosine/cosine, sine/sine and cosine/sine
    pairings share these moduli (the mixed case is the imaginary part of
    the same complex integrals), so ``kind`` only labels the record.
    Raises :class:`DegeneratePairError` when any factor vanishes, which
    is exactly what the admissibility conditions rule out.
    """
    if kind not in (KIND_COSCOS, KIND_SINSIN, KIND_COSSIN):
        raise ValueError(f"kind must be one of coscos/sinsin/cossin, got {kind!r}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    ti = parse_angle(theta_i).radians
    tj = parse_angle(theta_j).radians

    _check_nondegenerate("theta_i", ti)
    _check_nondegenerate("theta_j", tj)
    _check_nondegenerate("theta_i - theta_j", ti - tj)
    _check_nondegenerate("theta_i + theta_j", ti + tj)

    d_i = decay_factor(ti)
    d_j = decay_factor(tj)
    d_diff = decay_factor(ti - tj)
    d_sum = decay_factor(ti + tj)

    terms = (
        BoundTerm(LABEL_DIFF, (1.0 / d_j) * (1.0 / d_diff)),
        BoundTerm(LABEL_SUM, (1.0 / d_j) * (1.0 / d_sum)),
        BoundTerm(LABEL_DIFF, (1.0 / d_i) * (1.0 / d_diff)),
        BoundTerm(LABEL_SUM, (1.0 / d_i) * (1.0 / d_sum)),
    )
    total = (epsilon * epsilon) * compensated_sum(t.factor for t in terms)
    return StructuralBound(
        theta_pair=(ti, tj), epsilon=float(epsilon), kind=kind, terms=terms, total=total
    )


def rate_fit(
    epsilons: Sequence[float],
    estimates: Sequence[float],
    std_errors: Sequence[float] | None = None,
) -> float:
    """Least-squares slope of log|estimate| against log(epsilon).

    Estimates are floored at their standard errors before taking logs:
    once the true moment falls below Monte Carlo resolution the raw
    magnitude is pure noise and would corrupt the fit.
    """
    eps = np.asarray(epsilons, dtype=np.float64)
    vals = np.abs(np.asarray(estimates, dtype=np.float64))
    if eps.size < 3:
        raise ValueError("need at least 3 epsilon values")
    if eps.size != vals.size:
        raise ValueError("epsilons and estimates must have equal length")
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be strictly decreasing")
    # the fit needs a real spread of scales; a factor of 2 end to end at
    # minimum (the acceptance sweeps span a factor of 4)
    if eps[0] / eps[-1] < 2.0:
        raise ValueError("epsilon range too narrow for a rate fit (need a factor >= 2)")
    if std_errors is not None:
        ses = np.asarray(std_errors, dtype=np.float64)
        if ses.size != vals.size:
            raise ValueError("std_errors length mismatch")
        vals = np.maximum(vals, ses)
    if np.any(vals <= 0):
        raise ValueError("estimates must be positive after flooring")
    slope, _ = np.polyfit(np.log(eps), np.log(vals), 1)
    return float(slope)
