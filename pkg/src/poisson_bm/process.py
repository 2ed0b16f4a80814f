"""Assembly of the multidimensional approximant on an evaluation grid.

Component i of the process at time t is

    eps * integral over [0, 2t/eps^2] of trig(theta_i * N_x) dx,

with trig = cos for the cosine block and sin for the sine block, all
components sharing one Poisson path. That sharing is the whole point of
the construction and must not be "fixed" by sampling per-component
paths. Cosine components flagged for the angle-pi case are additionally
scaled by 1/sqrt(2).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .angles import ThetaConfig
from .poisson import PoissonPath, integral_from_zero

# Upper bound on the rescaled horizon 2T/eps^2; runs above it would need
# gigabyte-scale paths and are refused.
HORIZON_CAP = 1.0e9

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def map_to_path_time(t: float, epsilon: float) -> float:
    """Map process time t to path time 2t/eps^2, computed in extended precision."""
    num = np.longdouble(2.0) * np.longdouble(t)
    den = np.longdouble(epsilon) * np.longdouble(epsilon)
    return float(num / den)


@dataclass(frozen=True)
class EvaluationGrid:
    """Strictly increasing evaluation times starting at 0, within [0, T]."""

    times: np.ndarray
    horizon_T: float

    def __post_init__(self) -> None:
        ts = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", ts)
        if ts.ndim != 1 or ts.size < 1:
            raise ValueError("grid needs at least one time")
        if ts[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if ts.size > 1 and np.any(np.diff(ts) <= 0.0):
            raise ValueError("grid times must be strictly increasing")
        if ts[-1] > self.horizon_T:
            raise ValueError(f"grid exceeds horizon T = {self.horizon_T}")

    @classmethod
    def uniform(cls, horizon_T: float, steps: int = 64) -> "EvaluationGrid":
        """0 to T in ``steps`` uniform steps (steps+1 grid times)."""
        if steps < 1:
            raise ValueError("need at least one step")
        return cls(times=np.linspace(0.0, horizon_T, steps + 1), horizon_T=float(horizon_T))

    def index_of(self, t: float) -> int:
        """Index of an exact grid time; raises for off-grid values."""
        i = int(np.searchsorted(self.times, t))
        if i < self.times.size and self.times[i] == t:
            return i
        raise ValueError(f"time {t!r} is not on the evaluation grid")

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class ProcessSample:
    """One evaluated path of the approximant: values[(component, grid index)]."""

    epsilon: float
    config: ThetaConfig
    grid: EvaluationGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.shape != (self.config.dimension, len(self.grid)):
            raise ValueError(
                f"values shape {v.shape} does not match "
                f"({self.config.dimension}, {len(self.grid)})"
            )

    @property
    def dimension(self) -> int:
        return self.config.dimension

    def component(self, index: int) -> np.ndarray:
        return self.values[index]

    def at_time(self, t: float) -> np.ndarray:
        return self.values[:, self.grid.index_of(t)]

    def to_csv(self) -> str:
        """CSV export: header t,comp_1,...,comp_d; 17 significant digits; LF."""
        buf = io.StringIO()
        d = self.dimension
        buf.write("t," + ",".join(f"comp_{i}" for i in range(1, d + 1)) + "\n")
        for g, t in enumerate(self.grid.times):
            row = [f"{t:.17g}"] + [f"{self.values[c, g]:.17g}" for c in range(d)]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class IncrementTable:
    """Increments x(t) - x(s) per component for a list of (s, t) grid pairs."""

    pairs: tuple[tuple[float, float], ...]
    deltas: np.ndarray  # shape (dimension, len(pairs))


def build_sample(
    path: PoissonPath,
    epsilon: float,
    config: ThetaConfig,
    grid: EvaluationGrid,
) -> ProcessSample:
    """Evaluate every component on the grid from one shared Poisson path.

    Cost is O(jumps + dimension * grid size): each component reuses one
    prefix-sum pass over the path. Values at a grid time t agree bit for
    bit with eps * trig_integral(path, theta, 0, 2t/eps^2, kind), with
    the 1/sqrt(2) factor applied afterwards for pi-rescaled components.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    needed = map_to_path_time(grid.horizon_T, epsilon)
    if needed > HORIZON_CAP:
        raise ValueError(
            f"rescaled horizon 2T/eps^2 = {needed:.6g} exceeds the cap {HORIZON_CAP:.0e}"
        )
    if path.horizon < needed:
        raise ValueError(
            f"path horizon {path.horizon:.6g} is too short; "
            f"need 2T/eps^2 = {needed:.6g}"
        )

    xs = np.array([map_to_path_time(t, epsilon) for t in grid.times])
    rescale = {i - 1 for i in config.pi_rescaled_indices}

    rows = []
    for c, angle in enumerate(config.angles):
        kind = config.component_kind(c)
        row = epsilon * integral_from_zero(path, angle, kind, xs)
        if c in rescale:
            row = row * INV_SQRT2
        rows.append(row)
    return ProcessSample(
        epsilon=float(epsilon), config=config, grid=grid, values=np.vstack(rows)
    )


def increments(
    sample: ProcessSample, pairs: Sequence[tuple[float, float]]
) -> IncrementTable:
    """x(t) - x(s) for each requested (s, t); both must be grid times with s < t."""
    cols = []
    norm_pairs = []
    for s, t in pairs:
        if not s < t:
            raise ValueError(f"need s < t, got ({s}, {t})")
        i, j = sample.grid.index_of(s), sample.grid.index_of(t)
        cols.append(sample.values[:, j] - sample.values[:, i])
        norm_pairs.append((float(s), float(t)))
    if not cols:
        raise ValueError("no increment pairs given")
    return IncrementTable(pairs=tuple(norm_pairs), deltas=np.column_stack(cols))
