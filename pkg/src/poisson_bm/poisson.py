"""Unit-rate Poisson paths and exact integrals of cos/sin of the count.

A path is the sorted sequence of jump times on [0, horizon]; the count
N_x is piecewise constant between jumps, so integrals of cos(theta*N_x)
and sin(theta*N_x) over any interval reduce to finite sums of
level-value times segment-length terms. No quadrature is involved; the
only error is floating-point rounding.

Phase arguments theta*k reach ~1e7 over the supported horizon range, so
they are reduced mod 2*pi in extended precision before the trig call.
For angles given as exact rational multiples of pi the reduction is done
in integer arithmetic instead, which additionally makes the values for
theta and 2*pi - theta bitwise equal (cos) or bitwise opposite (sin);
the degenerate-pair identities then hold exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .angles import Angle, parse_angle

# 2*pi to long-double precision (parsed from the digit string, not widened
# from the float64 value).
_TWO_PI_LD = np.longdouble("6.283185307179586476925286766559005768394")

_TINY = float(np.finfo(np.float64).tiny)

KIND_COS = "cos"
KIND_SIN = "sin"


@dataclass(frozen=True)
class PoissonPath:
    """One realization of a unit-rate Poisson process on [0, horizon]."""

    horizon: float
    jump_times: np.ndarray

    def __post_init__(self) -> None:
        if self.horizon < 0 or not math.isfinite(self.horizon):
            raise ValueError(f"horizon must be finite and >= 0, got {self.horizon}")
        jt = np.asarray(self.jump_times, dtype=np.float64)
        object.__setattr__(self, "jump_times", jt)
        if jt.ndim != 1:
            raise ValueError("jump_times must be one-dimensional")
        if jt.size:
            if jt[0] <= 0.0 or jt[-1] > self.horizon:
                raise ValueError("jump times must lie in (0, horizon]")
            if np.any(np.diff(jt) <= 0.0):
                raise ValueError("jump times must be strictly increasing")

    def count(self, x: float | np.ndarray) -> int | np.ndarray:
        """N_x: number of jumps at or before time x (N_0 = 0)."""
        c = np.searchsorted(self.jump_times, x, side="right")
        return int(c) if np.isscalar(x) else c


def sample_poisson_path(horizon: float, stream: np.random.Generator) -> PoissonPath:
    """Draw a path by accumulating unit-mean exponential interarrivals.

    Interarrivals are -log(U) with U uniform (inverse CDF), so the path
    is a pure function of the stream's uniform output. The same stream
    state and horizon always reproduce the same path.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if horizon == 0:
        return PoissonPath(horizon=0.0, jump_times=np.empty(0))

    parts: list[np.ndarray] = []
    t = 0.0
    # one block covers the expected count plus a generous tail most of the time
    block = max(16, int(horizon + 4.0 * math.sqrt(horizon) + 16.0))
    while True:
        u = stream.random(block)
        gaps = -np.log(np.maximum(u, _TINY))  # guard U == 0.0
        times = t + np.cumsum(gaps)
        if times[-1] > horizon:
            parts.append(times[times <= horizon])
            break
        parts.append(times)
        t = float(times[-1])
        block = max(16, block // 4)

    jumps = parts[0] if len(parts) == 1 else np.concatenate(parts)
    # cumsum rounding can in principle produce a tied pair once gaps fall
    # below one ulp of the running time; bump such ties by one ulp
    while jumps.size > 1 and np.any(np.diff(jumps) <= 0.0):
        for k in np.flatnonzero(np.diff(jumps) <= 0.0):
            jumps[k + 1] = np.nextafter(jumps[k], np.inf)
        jumps = jumps[jumps <= horizon]
    return PoissonPath(horizon=float(horizon), jump_times=jumps)


def _level_values(theta: Angle | float, n_levels: int, kind: str) -> np.ndarray:
    """trig(theta * k) for k = 0 .. n_levels-1, with careful phase reduction."""
    if kind not in (KIND_COS, KIND_SIN):
        raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
    ang = parse_angle(theta)

    if ang.pi_fraction is not None:
        # phase = (p*k mod 2q) * pi/q, reduced exactly in integers, then
        # folded onto [0, q] so theta and 2*pi - theta share trig values
        p = ang.pi_fraction.numerator
        q = ang.pi_fraction.denominator
        m = (p * np.arange(n_levels, dtype=np.int64)) % (2 * q)
        folded = np.minimum(m, 2 * q - m)
        phases = folded * (math.pi / q)
        if kind == KIND_COS:
            return np.cos(phases)
        vals = np.sin(phases)
        vals[(m == 0) | (m == q)] = 0.0  # sin of an exact multiple of pi
        vals[m > q] = -vals[m > q]
        return vals

    k = np.arange(n_levels, dtype=np.float64)
    ph_ld = np.mod(np.longdouble(ang.radians) * k.astype(np.longdouble), _TWO_PI_LD)
    phases = np.asarray(ph_ld, dtype=np.float64)
    return np.cos(phases) if kind == KIND_COS else np.sin(phases)


def integral_from_zero(
    path: PoissonPath, theta: Angle | float, kind: str, xs: np.ndarray
) -> np.ndarray:
    """Integral of trig(theta * N) over [0, x] for each x in ``xs``.

    Accumulates segment areas with a running prefix sum over the path's
    jump segments; every caller that evaluates from zero (including the
    general-interval entry point below) goes through this routine, so
    results agree bit for bit.
    """
    xs = np.asarray(xs, dtype=np.float64)
    jumps = path.jump_times
    vals = _level_values(theta, jumps.size + 1, kind)
    if jumps.size == 0:
        return vals[0] * xs
    widths = np.diff(np.concatenate((np.zeros(1), jumps)))
    prefix = np.concatenate((np.zeros(1), np.cumsum(vals[:-1] * widths)))
    j = np.searchsorted(jumps, xs, side="right")
    base = np.where(j > 0, jumps[np.maximum(j - 1, 0)], 0.0)
    return prefix[j] + vals[j] * (xs - base)


def trig_integral(
    path: PoissonPath, theta: Angle | float, a: float, b: float, kind: str
) -> float:
    """Exact integral of trig(theta * N_x) dx over [a, b].

    The value is sum_k trig(theta*k) * |[a,b] inter {N = k}|, computed
    from the jump times directly. Requires 0 <= a <= b <= horizon.
    """
    if not (0.0 <= a <= b <= path.horizon):
        raise ValueError(
            f"need 0 <= a <= b <= horizon, got a={a}, b={b}, horizon={path.horizon}"
        )
    pa, pb = integral_from_zero(path, theta, kind, np.array([a, b]))
    return float(pb - pa)


def char_fn(theta: float | Angle, s: float) -> complex:
    """E[exp(i*theta*N_s)] = exp(-s*(1 - e^{i*theta})) for a unit-rate count.

    Returned as a complex number; the real part is E[cos(theta*N_s)] and
    the imaginary part E[sin(theta*N_s)].
    """
    th = parse_angle(theta).radians
    if not math.isfinite(s) or s < 0:
        raise ValueError(f"s must be finite and >= 0, got {s}")
    return cmath.exp(-s * (1.0 - cmath.exp(1j * th)))


def decay_factor(theta: float | Angle) -> float:
    """1 - cos(theta), the exponential decay rate behind every envelope factor.

    Zero exactly when theta is a multiple of 2*pi; callers must treat a
    zero (or near-zero) factor as a degenerate pair.
    """
    return 1.0 - math.cos(parse_angle(theta).radians)
