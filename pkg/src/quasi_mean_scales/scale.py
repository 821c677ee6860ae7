"""Numerical evidence that a family is a scale, and inversion of scales.

A family {k_t} is an increasing scale on U when t -> A(k_t)(x) is
increasing, one-to-one and onto R (or onto (A(l)(x), A(h)(x)) between two
bound generators) for every x in U. Then every non-constant sample has
exactly one t whose mean hits any value strictly between the bound means.
"""
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from loguru import logger
import numpy as np
import pandas as pd

from quasi_mean_scales import core
from quasi_mean_scales.core import INCREASING, Sample, Weights
from quasi_mean_scales.errors import (ConstantSampleError, DomainViolationError, NonMonotoneError,
                                      NumericalError, QuasiMeanError, TargetOutOfRangeError, ValidationError)
from quasi_mean_scales.families import ParametricFamily, bound_a, bound_mean, check_closed_form, increasing_view
from quasi_mean_scales.roots import bisect_increasing, expand_bracket
from quasi_mean_scales.utils import (DIVERGENCE_THRESHOLD, LIMIT_TOL, MAX_EXPANSIONS, MAX_SOLVE_ITER,
                                     MIN_GRID_SIZE, SOLVE_TOL, parallel_map)

INCREASING_SCALE = 'increasing-scale'
DECREASING_SCALE = 'decreasing-scale'
INCONCLUSIVE = 'inconclusive'

CLOSED_FORM_TOL = 1e-8
CONTINUITY_RATIO = .75
CONTINUITY_FLOOR = 1e-9
EDGE_TOL = 1e-4
MAX_PULLS = 40


@dataclass(frozen=True, eq=False)
class ScaleReport:
    family: str
    orientation: str
    bounds: Tuple[str, str]
    scale_guaranteed: bool
    x_points: np.ndarray
    t_points: np.ndarray
    a_values: np.ndarray
    a_refined: np.ndarray
    lower_edge_t: np.ndarray
    lower_edge_a: np.ndarray
    lower_target: np.ndarray
    upper_edge_t: np.ndarray
    upper_edge_a: np.ndarray
    upper_target: np.ndarray
    failures: Tuple[Tuple[float, float, str], ...]
    closed_form_error: Optional[float]
    divergence_threshold: float
    limit_tol: float
    monotone_in_t: bool
    monotone_witness: Tuple[float, float, float]
    continuity_gap: float
    refined_gap: float
    continuity_ok: bool
    lower_limit_ok: bool
    upper_limit_ok: bool
    onto_range_ok: bool
    verdict: str

    def recompute_verdict(self) -> Dict:
        """Every verdict field, rederived from the stored evidence arrays."""
        return _verdict(self.orientation, self.x_points, self.t_points, self.a_values, self.a_refined,
                        self.lower_edge_a, self.lower_target, self.upper_edge_a, self.upper_target,
                        self.divergence_threshold, self.limit_tol, len(self.failures), self.closed_form_error)

    @property
    def is_scale(self) -> bool:
        return self.verdict != INCONCLUSIVE


class SolveResult(NamedTuple):
    """`iterations` counts bisection steps only, not the means spent on bracketing."""
    t_star: float
    mean_at_t: float
    iterations: int
    bracket_final: Tuple[float, float]


class LimitCheck(NamedTuple):
    """Means at the two ends of the parameter range and the bound means they approach.

    ``low_*`` refers to the end whose mean approaches M_l and ``high_*`` to
    the one approaching M_h; for decreasing families the low end is the
    upper parameter edge.
    """
    low_t: float
    low_mean: float
    high_t: float
    high_mean: float
    lower_bound_mean: float
    upper_bound_mean: float
    pulled_in: bool

    @property
    def low_distance(self) -> float:
        return abs(self.low_mean - self.lower_bound_mean)

    @property
    def high_distance(self) -> float:
        return abs(self.high_mean - self.upper_bound_mean)

    def edges(self) -> Tuple[float, float]:
        """(mean at the lower parameter edge, mean at the upper parameter edge)."""
        if self.low_t <= self.high_t:
            return self.low_mean, self.high_mean
        return self.high_mean, self.low_mean


class ReverseEvidence(NamedTuple):
    fraction: float
    x_points: np.ndarray
    monotone: np.ndarray
    spans: np.ndarray


def _prepare(fam: ParametricFamily, a: core.SampleLike, w: core.WeightsLike) -> Tuple[Sample, Weights]:
    a = core.as_sample(a)
    w = core.as_weights(w, len(a))
    if len(a) != len(w):
        raise DomainViolationError(f'Sample has {len(a)} values but there are {len(w)} weights.')
    outside = [v for v in a.values if not fam.domain.contains(v)]
    if outside:
        raise DomainViolationError(f'Sample values {outside} lie outside the domain {fam.domain} of {fam.name}.')
    return a, w


def _check_grid(n: int, label: str):
    if n < MIN_GRID_SIZE:
        raise ValidationError(f'{label} must be at least {MIN_GRID_SIZE}, got {n}.')


# A-limit evidence


def _reached(a: float, target: float, side: int, threshold: float, tol: float) -> bool:
    if np.isinf(target):
        return bool(side * a >= threshold)
    return bool(np.isfinite(a) and abs(a - target) <= tol * (1. + abs(target)))


def _approach(view: ParametricFamily, phi, x: float, side: int, target: float,
              threshold: float, tol: float, max_expansions: int) -> Tuple[float, float]:
    """Push the parameter of an increasing view outwards until A(k)(x) reaches `target`.

    Returns the parameter (in the family's own coordinate) and A there.
    """
    lo, hi = view.window
    center, half = lo + (hi - lo) / 2., (hi - lo) / 2.
    limit_lo, limit_hi = view.param_interval.inset_bounds()
    u, a = center, np.nan
    for k in range(max_expansions + 1):
        u = float(np.clip(center + side * half * 2. ** k, limit_lo, limit_hi))
        a = view.a_value(u, x)
        if np.isnan(a):
            raise NumericalError(f'A is nan at x={x}, coordinate {u}.')
        if _reached(a, target, side, threshold, tol) or u in (limit_lo, limit_hi) or np.isinf(a):
            break
    with np.errstate(over='ignore'):
        return float(phi(u)), a


def _limit_hits(edge_a: np.ndarray, target: np.ndarray, side: int, threshold: float, tol: float) -> np.ndarray:
    return np.array([_reached(a, t, side, threshold, tol) for a, t in zip(edge_a, target)], dtype=bool)


def _verdict(orientation: str, x_points: np.ndarray, t_points: np.ndarray, a_values: np.ndarray,
             a_refined: np.ndarray, lower_edge_a: np.ndarray, lower_target: np.ndarray,
             upper_edge_a: np.ndarray, upper_target: np.ndarray, threshold: float, limit_tol: float,
             n_failures: int, closed_form_error: Optional[float]) -> Dict:
    sign = 1. if orientation == INCREASING else -1.
    steps = sign * np.diff(a_values, axis=1)
    steps = np.where(np.isnan(steps), -np.inf, steps)
    i, j = np.unravel_index(np.argmin(steps), steps.shape)
    monotone_rows = (steps > 0).all(axis=1)

    finite = np.isfinite(a_values)
    coarse = np.abs(np.diff(a_values, axis=1))
    refined = np.abs(np.diff(a_refined, axis=1))
    continuity_gap = float(np.nanmax(coarse)) if finite.any() else np.nan
    refined_gap = float(np.nanmax(refined)) if finite.any() else np.nan
    floor = CONTINUITY_FLOOR * (1. + float(np.nanmax(np.abs(a_values)))) if finite.any() else 0.
    continuity_ok = bool(refined_gap <= CONTINUITY_RATIO * continuity_gap or refined_gap <= floor)

    lower_hits = _limit_hits(lower_edge_a, lower_target, -1, threshold, limit_tol)
    upper_hits = _limit_hits(upper_edge_a, upper_target, 1, threshold, limit_tol)
    onto = monotone_rows & lower_hits & upper_hits

    fields = {
        'monotone_in_t': bool(monotone_rows.all()),
        'monotone_witness': (float(x_points[i]), float(t_points[j]), float(t_points[j + 1])),
        'continuity_gap': continuity_gap,
        'refined_gap': refined_gap,
        'continuity_ok': continuity_ok,
        'lower_limit_ok': bool(lower_hits.all()),
        'upper_limit_ok': bool(upper_hits.all()),
        'onto_range_ok': bool(onto.all()),
    }
    closed_form_ok = closed_form_error is None or closed_form_error <= CLOSED_FORM_TOL
    if all(fields[k] for k in ('monotone_in_t', 'continuity_ok', 'lower_limit_ok', 'upper_limit_ok',
                               'onto_range_ok')) and closed_form_ok and n_failures == 0:
        fields['verdict'] = INCREASING_SCALE if orientation == INCREASING else DECREASING_SCALE
    else:
        fields['verdict'] = INCONCLUSIVE
    return fields


def _refine(fam: ParametricFamily, t_points: np.ndarray) -> np.ndarray:
    u = np.array([fam.to_coordinate(t) for t in t_points])
    mids = u[:-1] + np.diff(u) / 2.
    refined = np.empty(2 * u.size - 1)
    refined[0::2] = u
    refined[1::2] = mids
    return np.array([fam.from_coordinate(v) for v in refined])


def verify_scale(fam: ParametricFamily, x_grid: int = 32, t_grid: int = 32,
                 threshold: float = DIVERGENCE_THRESHOLD, limit_tol: float = LIMIT_TOL,
                 max_expansions: int = MAX_EXPANSIONS, n_workers: int = 1, progress: bool = False,
                 seed: int = None) -> ScaleReport:
    """Grid evidence for the scale conditions of `fam`.

    On an x-grid over the family's sampling window and a t-grid over its
    parameter window this records whether t -> A(k_t)(x) is strictly
    monotone with the declared orientation, whether midpoint refinement
    shrinks its jumps, and whether pushing t past the window makes A reach
    the A of the declared bounds (infinite for min and max). Failed
    evaluations are recorded with their location and make the verdict
    inconclusive.
    """
    _check_grid(x_grid, 'x_grid')
    _check_grid(t_grid, 't_grid')
    logger.info(f'Verifying {fam.name} on a {x_grid} x {t_grid} grid.')
    view, phi = increasing_view(fam)
    x_points = fam.x_grid(x_grid)
    t_points = fam.t_grid(t_grid)
    t_refined = _refine(fam, t_points)

    def _scan(x: float):
        failures = []

        def _a(t: float) -> float:
            try:
                a = fam.a_value(t, x)
            except QuasiMeanError as e:
                failures.append((float(x), float(t), str(e)))
                return np.nan
            if not np.isfinite(a):
                failures.append((float(x), float(t), f'A is {a}'))
                return np.nan
            return a

        row = [_a(t) for t in t_points]
        refined = [_a(t) for t in t_refined]
        edges = []
        for side, bound in ((-1, fam.lower_bound), (1, fam.upper_bound)):
            target = bound_a(bound, x)
            try:
                edge_t, edge_a = _approach(view, phi, x, side, target, threshold, limit_tol, max_expansions)
            except QuasiMeanError as e:
                failures.append((float(x), np.nan, f'limit towards {"lower" if side < 0 else "upper"} bound: {e}'))
                edge_t, edge_a = np.nan, np.nan
            edges.append((edge_t, edge_a, target))
        return row, refined, edges, failures

    scans = parallel_map(_scan, x_points, n_workers=n_workers, progress=progress, desc=f'verify {fam.name}')
    a_values = np.array([s[0] for s in scans])
    a_refined = np.array([s[1] for s in scans])
    lower = np.array([s[2][0] for s in scans])
    upper = np.array([s[2][1] for s in scans])
    failures = tuple(f for s in scans for f in s[3])
    for x, t, message in failures[:5]:
        logger.warning(f'{fam.name}: evaluation failed at x={x}, t={t}: {message}')

    closed_form_error = check_closed_form(fam, seed=seed)
    fields = _verdict(fam.orientation, x_points, t_points, a_values, a_refined,
                      lower[:, 1], lower[:, 2], upper[:, 1], upper[:, 2],
                      threshold, limit_tol, len(failures), closed_form_error)
    if not fam.scale_guaranteed:
        logger.warning(f'{fam.name} carries no bounded-scale guarantee; the verdict is grid evidence only.')
    logger.info(f'{fam.name}: {fields["verdict"]}.')

    return ScaleReport(family=fam.name,
                       orientation=fam.orientation,
                       bounds=fam.bounds,
                       scale_guaranteed=fam.scale_guaranteed,
                       x_points=x_points,
                       t_points=t_points,
                       a_values=a_values,
                       a_refined=a_refined,
                       lower_edge_t=lower[:, 0],
                       lower_edge_a=lower[:, 1],
                       lower_target=lower[:, 2],
                       upper_edge_t=upper[:, 0],
                       upper_edge_a=upper[:, 1],
                       upper_target=upper[:, 2],
                       failures=failures,
                       closed_form_error=closed_form_error,
                       divergence_threshold=threshold,
                       limit_tol=limit_tol,
                       **fields)


def solve_scale(fam: ParametricFamily, a: core.SampleLike, w: core.WeightsLike, target: float,
                tol: float = SOLVE_TOL, max_iter: int = MAX_SOLVE_ITER, **tolerances) -> SolveResult:
    """The parameter t whose mean of (a, w) equals `target`.

    Works on the increasing linear view of the family: the bracket grows by
    doubling from a unit bracket at the window centre (past the window if
    needed), the means met on the way must be monotone, and bisection then
    stops once the mean is within ``tol * (max a - min a)`` of the target.
    """
    a, w = _prepare(fam, a, w)
    if a.is_constant():
        raise ConstantSampleError(f'Sample is constant at {a.values[0]}; every parameter solves it.')
    m_lo = bound_mean(fam.lower_bound, a, w)
    m_hi = bound_mean(fam.upper_bound, a, w)
    if not m_lo < target < m_hi:
        raise TargetOutOfRangeError(f'Target {target} is not strictly between the bound means '
                                    f'{m_lo} ({fam.bounds[0]}) and {m_hi} ({fam.bounds[1]}).')
    view, phi = increasing_view(fam)
    spread = a.spread
    ftol = tol * spread

    def _gap(u: float) -> float:
        return view.mean(u, a, w, **tolerances) - target

    lo, hi = view.window
    bracket, evaluated = expand_bracket(_gap, lo + (hi - lo) / 2., view.param_interval.inset_bounds())
    values = np.array([fx for _, fx in evaluated])
    if (np.diff(values) < -ftol).any():
        k = int(np.argmin(np.diff(values)))
        raise NonMonotoneError(f'Means of {fam.name} are not monotone in t: '
                               f'{values[k] + target} at {phi(evaluated[k][0])}, '
                               f'{values[k + 1] + target} at {phi(evaluated[k + 1][0])}.')
    logger.debug(f'{fam.name}: bracket [{phi(bracket.lo)}, {phi(bracket.hi)}] after {len(evaluated)} means.')

    if bracket.f_lo == 0. or bracket.f_hi == 0.:
        u = bracket.lo if bracket.f_lo == 0. else bracket.hi
        root_x, root_fx, iterations, final = u, 0., 0, (u, u)
    else:
        root = bisect_increasing(_gap, bracket,
                                 xtol=lambda x_lo, x_hi: 1e-12 * (1. + max(abs(x_lo), abs(x_hi))),
                                 ftol=ftol, max_iter=max_iter, slack=ftol, violation=NonMonotoneError)
        root_x, root_fx, iterations, final = root
    if abs(root_fx) > ftol:
        raise NumericalError(f'Bisection stalled at t={phi(root_x)} with mean {root_fx + target} '
                             f'for target {target}.')

    t_star = float(phi(root_x))
    bracket_final = tuple(sorted((float(phi(final[0])), float(phi(final[1])))))
    logger.info(f'{fam.name}: t*={t_star} after {iterations} bisections.')

    return SolveResult(t_star, root_fx + target, iterations, bracket_final)


def mean_curve(fam: ParametricFamily, a: core.SampleLike, w: core.WeightsLike, t_points: Sequence[float],
               n_workers: int = 1, progress: bool = False, **tolerances) -> pd.DataFrame:
    """Table of t, the mean of (a, w) under k_t, and the error message of failed points."""
    a, w = _prepare(fam, a, w)

    def _point(t: float) -> Tuple[float, float, str]:
        try:
            return float(t), fam.mean(t, a, w, **tolerances), ''
        except QuasiMeanError as e:
            return float(t), np.nan, f'{e.code}: {e}'

    rows = parallel_map(_point, t_points, n_workers=n_workers, progress=progress, desc=f'curve {fam.name}')
    curve = pd.DataFrame(rows, columns=['t', 'mean', 'error'])
    n_failed = int((curve['error'] != '').sum())
    if n_failed:
        logger.warning(f'{fam.name}: {n_failed} of {len(curve)} curve points failed.')

    return curve


def limit_check(fam: ParametricFamily, a: core.SampleLike, w: core.WeightsLike = None, expand: bool = True,
                max_expansions: int = MAX_EXPANSIONS, **tolerances) -> LimitCheck:
    """Means at the window edges next to the bound means they should approach.

    With `expand` the edges keep doubling outwards (in the window coordinate)
    while the means still move towards the bounds and can be evaluated. An
    edge where the mean cannot be evaluated at all is pulled towards the
    window centre with a warning.
    """
    a, w = _prepare(fam, a, w)
    if a.is_constant():
        raise ConstantSampleError(f'Sample is constant at {a.values[0]}; every mean equals it.')
    view, phi = increasing_view(fam)
    lo, hi = view.window
    center, half = lo + (hi - lo) / 2., (hi - lo) / 2.
    limit_lo, limit_hi = view.param_interval.inset_bounds()
    bound_means = bound_mean(fam.lower_bound, a, w), bound_mean(fam.upper_bound, a, w)
    pulled_in = False

    def _mean(u: float) -> float:
        return view.mean(u, a, w, **tolerances)

    def _edge(side: int, target: float) -> Tuple[float, float]:
        nonlocal pulled_in
        u = center + side * half
        for _ in range(MAX_PULLS):
            try:
                best = u, _mean(u)
                break
            except QuasiMeanError as e:
                logger.warning(f'{fam.name}: mean not computable at t={phi(u)} ({e}); pulling the edge in.')
                pulled_in = True
                u = center + (u - center) / 2.
        else:
            raise NumericalError(f'{fam.name}: no computable mean between the window centre and its edge.')
        if not expand or pulled_in:
            return best
        for k in range(1, max_expansions + 1):
            u = float(np.clip(center + side * half * 2. ** k, limit_lo, limit_hi))
            try:
                m = _mean(u)
            except QuasiMeanError:
                break
            if abs(m - target) >= abs(best[1] - target):
                break
            best = u, m
            if abs(m - target) <= EDGE_TOL * a.spread or u in (limit_lo, limit_hi):
                break
        return best

    low_u, low_mean = _edge(-1, bound_means[0])
    high_u, high_mean = _edge(1, bound_means[1])
    with np.errstate(over='ignore'):
        check = LimitCheck(float(phi(low_u)), low_mean, float(phi(high_u)), high_mean,
                           bound_means[0], bound_means[1], pulled_in)
    logger.debug(f'{fam.name}: edge means {check.low_mean}, {check.high_mean}; bounds {bound_means}.')

    return check


def reverse_evidence(fam: ParametricFamily, x_grid: int = 64, t_grid: int = 32,
                     threshold: float = DIVERGENCE_THRESHOLD, limit_tol: float = LIMIT_TOL,
                     max_expansions: int = MAX_EXPANSIONS, report: ScaleReport = None,
                     n_workers: int = 1, progress: bool = False) -> ReverseEvidence:
    """Fraction of grid x where t -> A(k_t)(x) is monotone and reaches both bounds.

    For a genuine scale this holds on a dense open set of x, so the fraction
    should be 1 up to the reach of the finite divergence threshold.
    """
    _check_grid(x_grid, 'x_grid')
    if report is not None and not report.is_scale:
        logger.warning(f'{fam.name} was not verified as a scale ({report.verdict}).')
    view, phi = increasing_view(fam)
    sign = 1. if fam.orientation == INCREASING else -1.
    x_points = fam.x_grid(x_grid)
    t_points = fam.t_grid(t_grid)

    def _evidence(x: float) -> Tuple[bool, bool]:
        try:
            row = np.array([fam.a_value(t, x) for t in t_points])
            monotone = bool((sign * np.diff(row) > 0).all())
            spans = all(_reached(_approach(view, phi, x, side, bound_a(bound, x), threshold, limit_tol,
                                           max_expansions)[1], bound_a(bound, x), side, threshold, limit_tol)
                        for side, bound in ((-1, fam.lower_bound), (1, fam.upper_bound)))
        except QuasiMeanError as e:
            logger.debug(f'{fam.name}: no evidence at x={x}: {e}')
            return False, False
        return monotone, spans

    evidence = parallel_map(_evidence, x_points, n_workers=n_workers, progress=progress,
                            desc=f'reverse {fam.name}')
    monotone = np.array([e[0] for e in evidence], dtype=bool)
    spans = np.array([e[1] for e in evidence], dtype=bool)
    fraction = float((monotone & spans).mean())
    logger.info(f'{fam.name}: monotone and onto evidence at {fraction:.0%} of {x_grid} points.')

    return ReverseEvidence(fraction, x_points, monotone, spans)


def scale_summary(report: ScaleReport) -> List[Tuple[str, object]]:
    """Scalar fields of a report in a fixed order."""
    return [(name, getattr(report, name)) for name in
            ('family', 'verdict', 'orientation', 'bounds', 'scale_guaranteed', 'monotone_in_t',
             'monotone_witness', 'continuity_ok', 'continuity_gap', 'refined_gap', 'lower_limit_ok',
             'upper_limit_ok', 'onto_range_ok', 'closed_form_error', 'divergence_threshold')]
