"""The operator A(f) = f''/f' and what it says about means.

``A(f) > A(g)`` on a dense set is equivalent to ``M_f >= M_g`` for every
sample, with equality only on constant samples; ``A(f) == A(g)``
everywhere is equivalent to ``f = alpha * g + beta``. The closeness of
two generators in the L1 norm of their A's bounds the distance between
their means uniformly in the sample and the weights.
"""
from typing import NamedTuple, Optional, Sequence

from loguru import logger
import numpy as np

from quasi_mean_scales import core
from quasi_mean_scales.core import Generator, Interval
from quasi_mean_scales.errors import (DomainViolationError, GeneratorError, NumericalError,
                                      QuadratureError, UnreliableEstimateError)
from quasi_mean_scales.quadrature import adaptive_simpson, integration_bounds
from quasi_mean_scales.roots import Bracket, bisect_increasing
from quasi_mean_scales.utils import (A_TOL, AFFINE_TOL, ATOL, RTOL, DF_FLOOR, MIN_GRID_SIZE, NOISE_FLOOR,
                                     N_RANDOM_POINTS, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_DEPTH,
                                     random_generator, sign_changes)

GREATER = 'greater'
SMALLER = 'smaller'
EQUIVALENT = 'equivalent'
INCOMPARABLE = 'incomparable'


class BoundCertificate(NamedTuple):
    interval_length: float
    l1_norm_Af: float
    l1_norm_diff: float
    bound: float

    def recompute(self) -> float:
        return uniform_bound(self.interval_length, self.l1_norm_Af, self.l1_norm_diff)


class ComparisonVerdict(NamedTuple):
    relation: str
    witness: Optional[float]
    grid_size: int
    positive_at: Optional[float] = None
    negative_at: Optional[float] = None
    ties: int = 0
    max_difference: float = 0.
    seed: Optional[int] = None


class AffineFit(NamedTuple):
    equivalent: bool
    alpha: float
    beta: float
    max_residual: float


def a_operator(g: Generator, x: float) -> float:
    """A(g)(x) = g''(x) / g'(x)."""
    if not g.domain.contains(x):
        raise DomainViolationError(f'{x} is outside the domain {g.domain} of {g.name}.')
    with np.errstate(all='ignore'):
        slope = float(g.df(x))
        curvature = float(g.d2f(x))
    if not np.isfinite(slope) or abs(slope) < DF_FLOOR:
        raise GeneratorError(f'First derivative of {g.name} is {slope} at {x}; g is not C2 with '
                             f'non-vanishing derivative there.')
    if not np.isfinite(curvature):
        raise NumericalError(f'Second derivative of {g.name} is {curvature} at {x}.')
    return curvature / slope


def a_operator_numeric(g: Generator, x: float, eps: float = 1e-3, literal: bool = False,
                       atol: float = ATOL, rtol: float = RTOL) -> float:
    """Finite-eps estimate of A(g)(x) from the two-point mean of x - eps and x + eps.

    The default form ``2 / eps**2 * (M - x)`` converges to A(g)(x) with error
    O(eps**2). ``literal=True`` drops the ``- x``, which diverges as eps -> 0
    and is only kept to document the uncorrected formula.
    """
    if eps <= 0:
        raise DomainViolationError(f'eps must be positive, got {eps}.')
    points = (x - eps, x + eps)
    if not all(g.domain.contains(p) for p in points):
        raise DomainViolationError(f'[{points[0]}, {points[1]}] is not inside the domain {g.domain} of {g.name}.')
    if eps ** 2 / 2. <= NOISE_FLOOR * max(abs(x), 1.):
        raise UnreliableEstimateError(f'eps={eps} is too small at x={x}: the mean moves less than the '
                                      f'noise floor {NOISE_FLOOR * max(abs(x), 1.)}.')
    m = core.evaluate_mean(g, points, (.5, .5), atol=atol, rtol=rtol)
    if literal:
        return 2. / eps ** 2 * m
    return 2. / eps ** 2 * (m - x)


def _common_interval(f: Generator, g: Generator, interval: Interval = None) -> Interval:
    if interval is None:
        if f.domain != g.domain:
            raise DomainViolationError(f'Domains differ: {f.name} on {f.domain}, {g.name} on {g.domain}.')
        return f.domain
    for h in (f, g):
        if not h.domain.contains_interval(interval):
            raise DomainViolationError(f'{interval} is not inside the domain {h.domain} of {h.name}.')
    return interval


def _a_differences(f: Generator, g: Generator, points: Sequence[float], tol: float):
    """A(f) - A(g) at `points` and the per-point tie tolerance."""
    a_f = np.array([a_operator(f, x) for x in points])
    a_g = np.array([a_operator(g, x) for x in points])
    scale = np.maximum(1., np.maximum(np.abs(a_f), np.abs(a_g)))
    return a_f - a_g, tol * scale


def _locate_crossing(f: Generator, g: Generator, lo: float, hi: float, sign_lo: float) -> float:
    def _diff(x: float) -> float:
        return sign_lo * -(a_operator(f, x) - a_operator(g, x))

    root = bisect_increasing(_diff, Bracket(lo, hi, _diff(lo), _diff(hi)),
                             xtol=lambda x_lo, x_hi: 1e-12 * max(1., abs(x_lo), abs(x_hi)),
                             slack=np.inf)
    return root.x


def compare_means(f: Generator, g: Generator, grid_size: int = 64, tol: float = A_TOL,
                  interval: Interval = None, n_random: int = N_RANDOM_POINTS,
                  seed: int = None) -> ComparisonVerdict:
    """Order M_f against M_g through the sign of A(f) - A(g).

    The dense set of the criterion is represented by a uniform grid plus
    `n_random` seeded random points: this is evidence, not proof. Points
    where the difference is within `tol` (scaled by the size of A when that
    exceeds one) count as ties. An isolated tie does not spoil a strict
    relation, but two neighbouring tied points mean A(f) = A(g) on a whole
    stretch, where samples have equal means: with signed points elsewhere
    the relation is then `incomparable`, witnessed at the start of the
    stretch.
    """
    if grid_size < MIN_GRID_SIZE:
        raise DomainViolationError(f'grid_size must be at least {MIN_GRID_SIZE}, got {grid_size}.')
    interval = _common_interval(f, g, interval)
    rng = random_generator(seed)
    points = np.sort(np.concatenate([interval.grid(grid_size), interval.random_points(n_random, rng)]))
    diffs, point_tol = _a_differences(f, g, points, tol)
    positive = diffs > point_tol
    negative = diffs < -point_tol
    tied = ~(positive | negative)
    tied_runs = np.flatnonzero(tied[:-1] & tied[1:])
    logger.debug(f'{f.name} vs {g.name}: {positive.sum()} above, {negative.sum()} below, {tied.sum()} tied '
                 f'({tied_runs.size} tied neighbours).')

    positive_at = float(points[positive][0]) if positive.any() else None
    negative_at = float(points[negative][0]) if negative.any() else None
    witness = float(points[tied][0]) if tied.any() else None
    if positive.any() and negative.any():
        relation = INCOMPARABLE
        signed = np.flatnonzero(positive | negative)
        i, j = (signed[k] for k in sign_changes(np.sign(diffs[signed]))[0])
        witness = _locate_crossing(f, g, points[i], points[j], np.sign(diffs[i]))
    elif not (positive.any() or negative.any()):
        relation = EQUIVALENT
        witness = None
    elif tied_runs.size:
        relation = INCOMPARABLE
        witness = float(points[tied_runs[0]])
        logger.debug(f'A({f.name}) = A({g.name}) on a stretch from {witness}; the order is not strict.')
    else:
        relation = GREATER if positive.any() else SMALLER

    return ComparisonVerdict(relation, witness, grid_size, positive_at, negative_at,
                             int(tied.sum()), float(np.abs(diffs).max()), seed)


def fit_affine(f: Generator, g: Generator, grid_size: int = 64, tol: float = A_TOL,
               interval: Interval = None) -> AffineFit:
    """Test f = alpha * g + beta through A(f) == A(g), then recover alpha and beta.

    alpha and beta come from the two extreme grid points; the fit must then
    reproduce f to `AFFINE_TOL` (relative to max(1, |f|)) on the whole grid.
    """
    interval = _common_interval(f, g, interval)
    points = interval.grid(grid_size)
    diffs, point_tol = _a_differences(f, g, points, tol)
    same_a = bool((np.abs(diffs) <= point_tol).all())

    with np.errstate(all='ignore'):
        f_values = np.array([float(f.f(x)) for x in points])
        g_values = np.array([float(g.f(x)) for x in points])
    alpha = (f_values[-1] - f_values[0]) / (g_values[-1] - g_values[0])
    beta = f_values[0] - alpha * g_values[0]
    residual = np.abs(f_values - (alpha * g_values + beta)) / np.maximum(1., np.abs(f_values))
    max_residual = float(residual.max())
    if same_a and max_residual > AFFINE_TOL:
        logger.warning(f'A({f.name}) matches A({g.name}) on the grid but the affine fit misses by {max_residual}.')

    return AffineFit(same_a and max_residual <= AFFINE_TOL, float(alpha), float(beta), max_residual)


def affine_equivalent(f: Generator, g: Generator, grid_size: int = 64, tol: float = A_TOL,
                      interval: Interval = None) -> bool:
    return fit_affine(f, g, grid_size, tol, interval).equivalent


def _l1(integrand, U: Interval, label: str, abs_tol: float, rel_tol: float, max_depth: int) -> float:
    lo, hi = integration_bounds(*U.inset_bounds())
    result = adaptive_simpson(integrand, lo, hi, abs_tol, rel_tol, max_depth)
    logger.debug(f'{label} on {U}: {result.value} ({result.evaluations} evaluations).')
    if not result.converged:
        raise QuadratureError(f'{label} on {U} did not converge at depth {max_depth} '
                              f'(partial value {result.value}); A is nearly singular there.',
                              partial_value=result.value)
    return result.value


def _check_subinterval(U: Interval, *generators: Generator):
    for g in generators:
        if not g.domain.contains_interval(U):
            raise DomainViolationError(f'{U} is not inside the domain {g.domain} of {g.name}.')


def l1_norm_A(g: Generator, U: Interval = None, abs_tol: float = QUAD_ABS_TOL,
              rel_tol: float = QUAD_REL_TOL, max_depth: int = QUAD_MAX_DEPTH) -> float:
    """L1 norm of A(g) over U (the domain of g when omitted)."""
    U = U or g.domain
    _check_subinterval(U, g)
    return _l1(lambda x: abs(a_operator(g, x)), U, f'||A({g.name})||_1', abs_tol, rel_tol, max_depth)


def l1_norm_diff(f: Generator, k: Generator, U: Interval, abs_tol: float = QUAD_ABS_TOL,
                 rel_tol: float = QUAD_REL_TOL, max_depth: int = QUAD_MAX_DEPTH) -> float:
    """L1 norm of A(k) - A(f) over U."""
    _check_subinterval(U, f, k)
    return _l1(lambda x: abs(a_operator(k, x) - a_operator(f, x)), U,
               f'||A({k.name}) - A({f.name})||_1', abs_tol, rel_tol, max_depth)


def uniform_bound(interval_length: float, l1_norm_Af: float, l1_norm_diff: float) -> float:
    if l1_norm_diff == 0.:
        return 0.
    with np.errstate(over='ignore'):
        return float(interval_length * np.exp(2. * l1_norm_Af) * np.sinh(2. * l1_norm_diff))


def error_bound(f: Generator, k: Generator, U: Interval, **quad_options) -> BoundCertificate:
    """Bound on |M_f - M_k| valid for every sample and weights with values in the compact U."""
    if not U.is_bounded:
        raise DomainViolationError(f'The uniform bound needs a bounded interval, got {U}.')
    l1_f = l1_norm_A(f, U, **quad_options)
    l1_diff = l1_norm_diff(f, k, U, **quad_options)
    bound = uniform_bound(U.length, l1_f, l1_diff)
    logger.info(f'Uniform bound for {f.name} vs {k.name} on {U}: {bound}.')

    return BoundCertificate(U.length, l1_f, l1_diff, bound)


def empirical_mean_gap(f: Generator, k: Generator, U: Interval, n_samples: int = 1000,
                       max_size: int = 6, seed: int = None) -> float:
    """Largest |M_f - M_k| over random samples and weights with values in U."""
    rng = random_generator(seed)
    lo, hi = integration_bounds(*U.inset_bounds())
    gap = 0.
    for _ in range(n_samples):
        n = int(rng.integers(2, max_size + 1))
        a = rng.uniform(lo, hi, n)
        w = rng.uniform(.05, 1., n)
        w /= w.sum()
        gap = max(gap, abs(core.evaluate_mean(f, a, w) - core.evaluate_mean(k, a, w)))

    return gap
