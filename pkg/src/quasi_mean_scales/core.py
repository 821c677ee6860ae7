"""Generators and quasi-arithmetic means.

A quasi-arithmetic mean of a sample ``a`` with weights ``w`` is the point
``M`` with ``f(M) = sum(w_i * f(a_i))`` for a strictly monotone generator
``f``. Everything here is immutable and free of global state.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

from loguru import logger
import numpy as np

from quasi_mean_scales.errors import (DomainViolationError, FlatGeneratorError, GeneratorError,
                                      InversionError, NumericalError, WeightsError)
from quasi_mean_scales.roots import Bracket, bisect_increasing
from quasi_mean_scales.utils import (ATOL, RTOL, BISECT_WIDTH, NEWTON_STEPS, SAMPLING_SPAN,
                                     WEIGHT_NORMALIZE_TOL, inset_width, kahan_sum)

INCREASING = 'increasing'
DECREASING = 'decreasing'
DIRECTIONS = (INCREASING, DECREASING)

RealFunction = Callable[[float], float]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    open_lo: bool = True
    open_hi: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'lo', float(self.lo))
        object.__setattr__(self, 'hi', float(self.hi))
        if np.isnan(self.lo) or np.isnan(self.hi) or not self.lo < self.hi:
            raise DomainViolationError(f'Interval needs lo < hi, got ({self.lo}, {self.hi}).')

    @classmethod
    def open(cls, lo: float, hi: float) -> 'Interval':
        return cls(lo, hi, True, True)

    @classmethod
    def closed(cls, lo: float, hi: float) -> 'Interval':
        return cls(lo, hi, False, False)

    @classmethod
    def real_line(cls) -> 'Interval':
        return cls(-np.inf, np.inf)

    @classmethod
    def positive(cls) -> 'Interval':
        return cls(0., np.inf)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_bounded(self) -> bool:
        return bool(np.isfinite(self.lo) and np.isfinite(self.hi))

    def contains(self, x: float) -> bool:
        above = x > self.lo if self.open_lo else x >= self.lo
        below = x < self.hi if self.open_hi else x <= self.hi
        return bool(above and below)

    def contains_interval(self, other: 'Interval') -> bool:
        lo, hi = other.inset_bounds()
        return self.contains(lo) and self.contains(hi)

    def inset_bounds(self) -> Tuple[float, float]:
        """Endpoints pulled in from open finite ends; closed and infinite ends are kept."""
        eps = inset_width(self.lo, self.hi)
        lo = self.lo + eps if self.open_lo and np.isfinite(self.lo) else self.lo
        hi = self.hi - eps if self.open_hi and np.isfinite(self.hi) else self.hi
        return lo, hi

    def sampling_bounds(self, span: float = SAMPLING_SPAN) -> Tuple[float, float]:
        """Finite window for grids: infinite ends are replaced by the finite end +/- `span`."""
        lo, hi = self.inset_bounds()
        if np.isinf(lo) and np.isinf(hi):
            return -span, span
        if np.isinf(lo):
            return hi - span, hi
        if np.isinf(hi):
            return lo, lo + span
        return lo, hi

    def grid(self, n: int, span: float = SAMPLING_SPAN) -> np.ndarray:
        lo, hi = self.sampling_bounds(span)
        return np.linspace(lo, hi, n)

    def random_points(self, n: int, rng: np.random.Generator, span: float = SAMPLING_SPAN) -> np.ndarray:
        lo, hi = self.sampling_bounds(span)
        return rng.uniform(lo, hi, n)

    def __str__(self):
        left = '(' if self.open_lo else '['
        right = ')' if self.open_hi else ']'
        return f'{left}{self.lo:g}, {self.hi:g}{right}'


@dataclass(frozen=True)
class Generator:
    """A C2 strictly monotone function with derivative oracles."""
    f: RealFunction
    df: RealFunction
    d2f: RealFunction
    domain: Interval
    direction: str
    name: str = field(default='generator', compare=False)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise GeneratorError(f'Unknown direction {self.direction!r}; expected one of {DIRECTIONS}.')

    @classmethod
    def from_callables(cls, f: RealFunction, df: RealFunction, d2f: RealFunction,
                       domain: Interval, name: str = 'generator') -> 'Generator':
        """Build a generator, reading its direction off the first derivative."""
        lo, hi = domain.sampling_bounds()
        mid = lo + (hi - lo) / 2.
        with np.errstate(all='ignore'):
            slope = float(df(mid))
        if not np.isfinite(slope) or slope == 0.:
            raise GeneratorError(f'First derivative of {name} is {slope} at {mid}.')
        direction = INCREASING if slope > 0 else DECREASING
        return cls(f, df, d2f, domain, direction, name)

    @property
    def sign(self) -> int:
        return 1 if self.direction == INCREASING else -1

    def __call__(self, x):
        return self.f(x)

    def affine(self, alpha: float, beta: float = 0.) -> 'Generator':
        """The generator ``alpha * g + beta``; it induces the same means as ``g``."""
        if alpha == 0. or not np.isfinite(alpha):
            raise GeneratorError(f'Affine factor must be finite and non-zero, got {alpha}.')
        f, df, d2f = self.f, self.df, self.d2f
        direction = self.direction if alpha > 0 else _flip(self.direction)
        return Generator(lambda x: alpha * f(x) + beta,
                         lambda x: alpha * df(x),
                         lambda x: alpha * d2f(x),
                         self.domain, direction, f'{alpha:g}*{self.name}{beta:+g}')

    def restrict(self, domain: Interval) -> 'Generator':
        if not self.domain.contains_interval(domain):
            raise DomainViolationError(f'{domain} is not inside the domain {self.domain} of {self.name}.')
        return Generator(self.f, self.df, self.d2f, domain, self.direction, self.name)

    def check(self, points: Sequence[float]):
        """Raise unless the first derivative is non-zero with the declared sign at `points`."""
        with np.errstate(all='ignore'):
            slopes = np.array([float(self.df(x)) for x in points])
        bad = ~np.isfinite(slopes) | (self.sign * slopes <= 0)
        if bad.any():
            x = np.asarray(points)[bad][0]
            raise GeneratorError(f'{self.name} is not {self.direction} with non-vanishing derivative '
                                 f'at x={x} (derivative {slopes[bad][0]}).')


def _flip(direction: str) -> str:
    return DECREASING if direction == INCREASING else INCREASING


@dataclass(frozen=True)
class Sample:
    values: Tuple[float, ...]
    domain: Optional[Interval] = None

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if not values:
            raise DomainViolationError('A sample needs at least one value.')
        if not all(np.isfinite(values)):
            raise DomainViolationError(f'Sample values must be finite, got {values}.')
        if self.domain is not None:
            outside = [v for v in values if not self.domain.contains(v)]
            if outside:
                raise DomainViolationError(f'Sample values {outside} lie outside {self.domain}.')
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return len(self.values)

    @property
    def minimum(self) -> float:
        return min(self.values)

    @property
    def maximum(self) -> float:
        return max(self.values)

    @property
    def spread(self) -> float:
        return self.maximum - self.minimum

    def is_constant(self) -> bool:
        return self.minimum == self.maximum


@dataclass(frozen=True)
class Weights:
    """Positive weights summing to one.

    Sums within `WEIGHT_NORMALIZE_TOL` of one are normalized; anything
    further away is rejected.
    """
    values: Tuple[float, ...]

    def __post_init__(self):
        values = np.array(np.atleast_1d(self.values), dtype=float)
        if values.size == 0:
            raise WeightsError('Weights must not be empty.')
        if not np.isfinite(values).all() or (values <= 0).any():
            raise WeightsError(f'Weights must be finite and positive, got {tuple(values)}.')
        total = kahan_sum(np.sort(values))
        if abs(total - 1.) > WEIGHT_NORMALIZE_TOL:
            raise WeightsError(f'Weights sum to {total}, which deviates from 1 by more than '
                               f'{WEIGHT_NORMALIZE_TOL}.')
        object.__setattr__(self, 'values', tuple(float(v) for v in values / total))

    @classmethod
    def uniform(cls, n: int) -> 'Weights':
        return cls(tuple([1. / n] * n))

    def __len__(self):
        return len(self.values)


SampleLike = Union[Sample, Sequence[float]]
WeightsLike = Union[Weights, Sequence[float]]


def as_sample(a: SampleLike) -> Sample:
    return a if isinstance(a, Sample) else Sample(tuple(a))


def as_weights(w: WeightsLike, n: int = None) -> Weights:
    if w is None:
        return Weights.uniform(n)
    return w if isinstance(w, Weights) else Weights(tuple(w))


def check_inputs(g: Generator, a: Sample, w: Weights):
    if len(a) != len(w):
        raise DomainViolationError(f'Sample has {len(a)} values but there are {len(w)} weights.')
    outside = [v for v in a.values if not g.domain.contains(v)]
    if outside:
        raise DomainViolationError(f'Sample values {outside} lie outside the domain {g.domain} of {g.name}.')


def weighted_push(g: Generator, a: SampleLike, w: WeightsLike = None) -> float:
    """Compensated sum of ``w_i * g(a_i)``, taken in order of generator value."""
    a = as_sample(a)
    w = as_weights(w, len(a))
    check_inputs(g, a, w)
    with np.errstate(all='ignore'):
        pushed = [float(g.f(v)) for v in a.values]
    if not all(np.isfinite(pushed)):
        raise NumericalError(f'{g.name} is not finite on the sample: {pushed}.')
    terms = sorted(zip(pushed, w.values))

    return kahan_sum(value * weight for value, weight in terms)


def invert_generator(g: Generator, y: float, bracket: Interval,
                     atol: float = ATOL, rtol: float = RTOL) -> float:
    """Point x in `bracket` with g(x) = y.

    Bisection narrows the bracket to `BISECT_WIDTH` (relative), then at most
    `NEWTON_STEPS` Newton steps polish the result; a Newton iterate is kept
    only when it improves the residual.
    """
    lo, hi = bracket.inset_bounds()
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainViolationError(f'Inversion needs a bounded bracket, got {bracket}.')
    if not (g.domain.contains(lo) and g.domain.contains(hi)):
        raise DomainViolationError(f'Bracket {bracket} is not inside the domain {g.domain} of {g.name}.')
    tol = atol + rtol * abs(y)
    s = g.sign

    with np.errstate(all='ignore'):
        def _value(x: float) -> float:
            return float(g.f(x))

        def _slope(x: float) -> float:
            return float(g.df(x))

        f_lo, f_hi = _value(lo), _value(hi)
        if not (np.isfinite(f_lo) and np.isfinite(f_hi)):
            raise NumericalError(f'{g.name} is not finite on {bracket}: ({f_lo}, {f_hi}).')
        if s * (f_hi - f_lo) < 0:
            raise GeneratorError(f'{g.name} is declared {g.direction} but g({lo})={f_lo}, g({hi})={f_hi}.')
        if f_lo == f_hi:
            raise FlatGeneratorError(f'{g.name} is numerically constant on {bracket}.')
        if not min(f_lo, f_hi) - tol <= y <= max(f_lo, f_hi) + tol:
            raise DomainViolationError(f'{y} is outside the image [{min(f_lo, f_hi)}, {max(f_lo, f_hi)}] '
                                       f'of {bracket} under {g.name}.')
        r_lo, r_hi = s * (f_lo - y), s * (f_hi - y)
        if r_lo >= 0:
            return lo
        if r_hi <= 0:
            return hi

        def _xtol(x_lo: float, x_hi: float) -> float:
            scale = max(abs(x_lo), abs(x_hi))
            return BISECT_WIDTH * scale if scale > 0 else BISECT_WIDTH

        root = bisect_increasing(lambda x: s * (_value(x) - y), Bracket(lo, hi, r_lo, r_hi),
                                 xtol=_xtol, slack=tol, violation=GeneratorError)
        x = root.x
        r = _value(x) - y
        best_x, best_r = x, abs(r)
        for _ in range(NEWTON_STEPS):
            slope = _slope(x)
            if s * slope < 0:
                raise GeneratorError(f'Derivative of {g.name} changes sign: {slope} at {x}.')
            if slope == 0. or not np.isfinite(slope) or r == 0.:
                break
            x_new = x - r / slope
            if not lo <= x_new <= hi or x_new == x:
                break
            r = _value(x_new) - y
            x = x_new
            if not np.isfinite(r):
                break
            if abs(r) < best_r:
                best_x, best_r = x, abs(r)

    if best_r > tol:
        raise InversionError(f'Could not invert {g.name} at {y}: residual {best_r} exceeds {tol}.')

    return best_x


def evaluate_mean(g: Generator, a: SampleLike, w: WeightsLike = None,
                  atol: float = ATOL, rtol: float = RTOL) -> float:
    """Quasi-arithmetic mean ``g^-1(sum(w_i * g(a_i)))``; uniform weights when `w` is None."""
    a = as_sample(a)
    w = as_weights(w, len(a))
    check_inputs(g, a, w)
    if a.is_constant():
        return a.values[0]

    lo, hi = a.minimum, a.maximum
    with np.errstate(all='ignore'):
        if float(g.f(lo)) == float(g.f(hi)):
            raise FlatGeneratorError(f'{g.name} cannot separate {lo} from {hi} in double precision.')
    y = weighted_push(g, a, w)
    m = invert_generator(g, y, Interval.closed(lo, hi), atol=atol, rtol=rtol)

    return min(max(m, lo), hi)


# Built-in generators


def identity(domain: Interval = None) -> Generator:
    return Generator(lambda x: x,
                     lambda x: np.ones_like(x, dtype=float),
                     lambda x: np.zeros_like(x, dtype=float),
                     domain or Interval.real_line(), INCREASING, 'x')


def exponential(domain: Interval = None) -> Generator:
    return Generator(np.exp, np.exp, np.exp, domain or Interval.real_line(), INCREASING, 'exp')


def logarithm(domain: Interval = None) -> Generator:
    return Generator(np.log,
                     lambda x: 1. / x,
                     lambda x: -1. / x ** 2,
                     domain or Interval.positive(), INCREASING, 'ln')


def power(r: float, domain: Interval = None) -> Generator:
    """The literal power function x**r; r == 0 gives ln."""
    if r == 0:
        return logarithm(domain)
    return Generator(lambda x: x ** r,
                     lambda x: r * x ** (r - 1.),
                     lambda x: r * (r - 1.) * x ** (r - 2.),
                     domain or Interval.positive(), INCREASING if r > 0 else DECREASING, f'x^{r:g}')


def reciprocal(domain: Interval = None) -> Generator:
    return Generator(lambda x: 1. / x,
                     lambda x: -1. / x ** 2,
                     lambda x: 2. / x ** 3,
                     domain or Interval.positive(), DECREASING, '1/x')


def x_log_x(domain: Interval = None) -> Generator:
    """x ln x, increasing on (1/e, inf) and decreasing on (0, 1/e)."""
    domain = domain or Interval(np.exp(-1.), np.inf)
    if domain.lo < np.exp(-1.) < domain.hi:
        raise GeneratorError(f'x ln x is not monotone on {domain}: its derivative vanishes at 1/e.')
    direction = INCREASING if domain.lo >= np.exp(-1.) else DECREASING
    logger.debug(f'x ln x on {domain} is {direction}.')
    return Generator(lambda x: x * np.log(x),
                     lambda x: np.log(x) + 1.,
                     lambda x: 1. / x,
                     domain, direction, 'x ln x')
