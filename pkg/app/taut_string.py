"""Taut string through a tube around cumulative sums, and its k-sample fit.

The string is found with a funnel sweep: the upper chain is the convex path
hugging the upper bounds, the lower chain the concave path hugging the lower
bounds, both anchored at the current apex. When a new bound crosses the
opposite chain the apex advances along that chain and each point passed is
emitted as a knot.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from .config import DEFAULT_MAX_ROUNDS, DEFAULT_SQUEEZE
from .data_model import MergedGrid, Sample, merge_samples
from .errors import InfeasibleTube, InvalidRequest, LengthMismatch, MaxRoundsExceeded, NoJointApproximation
from .regions import MembershipReport, RegionSpec, check_region

logger = logging.getLogger(__name__)


class Touch(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    ENDPOINT = "endpoint"


@dataclass(frozen=True)
class Tube:
    """Bounds lower[m] <= s(x[m]) <= upper[m]; the string is pinned at both ends."""

    x: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    start: float
    end: float

    @classmethod
    def around(cls, x: np.ndarray, center: np.ndarray, half_width: np.ndarray) -> "Tube":
        center = np.asarray(center, dtype=float)
        h = np.asarray(half_width, dtype=float)
        return cls(
            x=np.asarray(x, dtype=float),
            lower=center - h,
            upper=center + h,
            start=float(center[0]),
            end=float(center[-1]),
        )

    def constrained(self) -> Tuple[np.ndarray, np.ndarray]:
        """Bounds with the endpoint constraints applied."""
        x = np.asarray(self.x, dtype=float)
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if x.ndim != 1 or lower.shape != x.shape or upper.shape != x.shape or x.size < 2:
            raise LengthMismatch("tube arrays must be one-dimensional of equal length >= 2")
        if np.any(np.diff(x) <= 0.0):
            raise InvalidRequest("tube abscissae must be strictly increasing")
        if not (lower[0] <= self.start <= upper[0]) or not (lower[-1] <= self.end <= upper[-1]):
            raise InfeasibleTube("string endpoints lie outside the tube")
        lower[0] = upper[0] = self.start
        lower[-1] = upper[-1] = self.end
        bad = np.flatnonzero(lower > upper)
        if bad.size:
            raise InfeasibleTube(f"lower bound exceeds upper bound at index {int(bad[0])}")
        return lower, upper


@dataclass(frozen=True)
class TautString:
    x: np.ndarray
    knot_index: np.ndarray
    knot_value: np.ndarray
    touch: Tuple[Touch, ...]

    def slopes(self) -> np.ndarray:
        """Slope on each cell (x[m-1], x[m]], m = 1..n; constant between knots."""
        out = np.empty(self.x.size - 1)
        for a, b, va, vb in zip(self.knot_index[:-1], self.knot_index[1:], self.knot_value[:-1], self.knot_value[1:]):
            out[a:b] = (vb - va) / (self.x[b] - self.x[a])
        return out

    def values(self) -> np.ndarray:
        """String height at every abscissa; exact at knots."""
        out = np.empty(self.x.size)
        for a, b, va, vb in zip(self.knot_index[:-1], self.knot_index[1:], self.knot_value[:-1], self.knot_value[1:]):
            s = (vb - va) / (self.x[b] - self.x[a])
            out[a:b] = va + s * (self.x[a:b] - self.x[a])
        out[self.knot_index[-1]] = self.knot_value[-1]
        return out

    def length(self) -> float:
        dx = np.diff(self.x[self.knot_index])
        dv = np.diff(self.knot_value)
        return float(np.sum(np.hypot(dx, dv)))


def taut_string_solve(tube: Tube) -> TautString:
    lower, upper = tube.constrained()
    x = tube.x.tolist() if isinstance(tube.x, np.ndarray) else list(tube.x)
    lo = lower.tolist()
    up = upper.tolist()
    n = len(x) - 1

    def slope(a: Tuple[int, float], b: Tuple[int, float]) -> float:
        return (b[1] - a[1]) / (x[b[0]] - x[a[0]])

    origin = (0, lo[0])
    knots: List[Tuple[int, float, Touch]] = [(0, lo[0], Touch.ENDPOINT)]
    upper_chain: Deque[Tuple[int, float]] = deque([origin])
    lower_chain: Deque[Tuple[int, float]] = deque([origin])

    for j in range(1, n + 1):
        q = (j, up[j])
        while len(upper_chain) >= 2 and slope(upper_chain[-2], upper_chain[-1]) >= slope(upper_chain[-1], q):
            upper_chain.pop()
        if len(upper_chain) == 1:
            while len(lower_chain) >= 2 and slope(lower_chain[0], q) < slope(lower_chain[0], lower_chain[1]):
                lower_chain.popleft()
                knots.append((lower_chain[0][0], lower_chain[0][1], Touch.LOWER))
            upper_chain = deque([lower_chain[0]])
        upper_chain.append(q)

        q = (j, lo[j])
        while len(lower_chain) >= 2 and slope(lower_chain[-2], lower_chain[-1]) <= slope(lower_chain[-1], q):
            lower_chain.pop()
        if len(lower_chain) == 1:
            while len(upper_chain) >= 2 and slope(upper_chain[0], q) > slope(upper_chain[0], upper_chain[1]):
                upper_chain.popleft()
                knots.append((upper_chain[0][0], upper_chain[0][1], Touch.UPPER))
            lower_chain = deque([upper_chain[0]])
        lower_chain.append(q)

    rest, tag = (upper_chain, Touch.UPPER) if len(lower_chain) <= 2 else (lower_chain, Touch.LOWER)
    tail = list(rest)[1:]
    for idx, value in tail[:-1]:
        knots.append((idx, value, tag))
    knots.append((n, tail[-1][1] if tail else up[n], Touch.ENDPOINT))

    logger.debug("taut string: %d knots over %d cells", len(knots), n)
    return TautString(
        x=np.asarray(x, dtype=float),
        knot_index=np.array([k[0] for k in knots], dtype=np.int64),
        knot_value=np.array([k[1] for k in knots], dtype=float),
        touch=tuple(k[2] for k in knots),
    )


def count_local_extremes(values: Sequence[float]) -> int:
    """Strict interior extremes; a run of equal values counts once."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return 0
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    runs = v[keep]
    if runs.size < 3:
        return 0
    d = np.sign(np.diff(runs))
    return int(np.count_nonzero(d[1:] != d[:-1]))


class RoundRecord(BaseModel):
    round: int
    violations: List[int]
    squeezed: int
    n_local_extremes: int


@dataclass(frozen=True)
class TautStringFit:
    t: np.ndarray
    values: np.ndarray
    n_local_extremes: int
    squeeze_rounds: int
    final_tube: Tube
    string: TautString
    reports: Tuple[MembershipReport, ...]
    history: Tuple[RoundRecord, ...] = field(default=())


def _check_samples(
    values: np.ndarray, grid: MergedGrid, samples: Sequence[Sample], specs: Sequence[RegionSpec]
) -> List[MembershipReport]:
    return [
        check_region(values[grid.sample_positions[i]], s, spec)
        for i, (s, spec) in enumerate(zip(samples, specs))
    ]


def initial_half_width(grid: MergedGrid) -> float:
    """Smallest radius putting the chord inside the tube, plus a little slack."""
    chord = grid.cum_y[-1] * grid.cum_w / grid.cum_w[-1]
    radius = float(np.max(np.abs(grid.cum_y - chord)))
    scale = max(radius, float(np.max(np.abs(grid.cum_y))), 1.0)
    return radius + 1e-9 * scale


def joint_taut_fit(
    samples: Sequence[Sample],
    specs: Sequence[RegionSpec],
    squeeze: float = DEFAULT_SQUEEZE,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> TautStringFit:
    """Fewest-extremes fit on the merged grid lying in every sample's region.

    The tube is halved (by ``squeeze``) around every grid cell whose point
    falls in a violating interval until all samples accept the slopes.
    """
    if len(samples) != len(specs) or not samples:
        raise LengthMismatch(f"{len(samples)} samples but {len(specs)} region specs")
    if len({type(s.threshold) for s in specs}) != 1:
        raise InvalidRequest("all region specs must share the threshold kind")
    if not 0.0 < squeeze < 1.0:
        raise InvalidRequest(f"squeeze factor must lie in (0, 1), got {squeeze!r}")

    grid = merge_samples(samples, [spec.sigma for spec in specs])
    pre = _check_samples(np.asarray(grid.y), grid, samples, specs)
    failing = [r.label or str(i) for i, r in enumerate(pre) if not r.is_member]
    if failing:
        raise NoJointApproximation(
            f"merged interpolant lies outside the region of sample(s) {', '.join(failing)}",
            failing_samples=failing,
        )

    n = grid.n
    half = np.full(n + 1, initial_half_width(grid))
    half[0] = half[-1] = 0.0
    history: List[RoundRecord] = []

    for rnd in range(max_rounds + 1):
        tube = Tube.around(grid.cum_w, grid.cum_y, half)
        string = taut_string_solve(tube)
        values = string.slopes()
        reports = _check_samples(values, grid, samples, specs)
        extremes = count_local_extremes(values)

        if all(r.is_member for r in reports):
            history.append(RoundRecord(round=rnd, violations=[0] * len(reports), squeezed=0, n_local_extremes=extremes))
            logger.info("joint fit accepted after %d squeeze rounds, %d extremes", rnd, extremes)
            return TautStringFit(
                t=grid.t,
                values=values,
                n_local_extremes=extremes,
                squeeze_rounds=rnd,
                final_tube=tube,
                string=string,
                reports=tuple(reports),
                history=tuple(history),
            )

        mark = np.zeros(n + 1, dtype=bool)
        for i, report in enumerate(reports):
            positions = grid.sample_positions[i]
            for v in report.violations:
                first = int(positions[v.lo - 1])
                last = int(positions[v.hi - 1])
                # grid point p sits on cell (p, p+1]; squeeze both ends of the cell
                mark[first : last + 2] = True
        half[mark] *= squeeze
        half[0] = half[-1] = 0.0

        record = RoundRecord(
            round=rnd,
            violations=[len(r.violations) for r in reports],
            squeezed=int(np.count_nonzero(mark)),
            n_local_extremes=extremes,
        )
        history.append(record)
        logger.info("squeeze round %d: violations %s, %d tube points squeezed", rnd, record.violations, record.squeezed)

    raise MaxRoundsExceeded(
        f"no admissible fit after {max_rounds} squeeze rounds",
        diagnostics=[r.model_dump() for r in history],
    )


def fit_single(sample: Sample, spec: RegionSpec, squeeze: float = DEFAULT_SQUEEZE, max_rounds: int = DEFAULT_MAX_ROUNDS) -> TautStringFit:
    return joint_taut_fit([sample], [spec], squeeze=squeeze, max_rounds=max_rounds)


class ModalityCost(BaseModel):
    individual_extremes: List[int]
    joint_extremes: int
    cost: int
    joint_rounds: int


def modality_cost(
    samples: Sequence[Sample],
    specs: Sequence[RegionSpec],
    squeeze: float = DEFAULT_SQUEEZE,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> ModalityCost:
    """Extra local extremes needed to fit all samples with one function."""
    singles = [fit_single(s, spec, squeeze, max_rounds).n_local_extremes for s, spec in zip(samples, specs)]
    joint = joint_taut_fit(samples, specs, squeeze, max_rounds)
    return ModalityCost(
        individual_extremes=singles,
        joint_extremes=joint.n_local_extremes,
        cost=joint.n_local_extremes - max(singles),
        joint_rounds=joint.squeeze_rounds,
    )
