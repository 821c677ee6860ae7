"""Parametric families of generators t -> k_t.

Members differ from the textbook generator only by an affine change, so A
and every mean are unchanged. Below `LITERAL_SWITCH` in |t| they are
normalized, e.g. ``(x**t - 1) / t``, which stays accurate near the zero
parameter; above it they are ``x**t / t``, which keeps full relative
precision where ``x**t`` underflows towards 0.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Optional, Tuple, Union

from loguru import logger
import numpy as np

from quasi_mean_scales import aop, core
from quasi_mean_scales.core import DECREASING, DIRECTIONS, INCREASING, Generator, Interval
from quasi_mean_scales.errors import FamilyError, GeneratorError, NumericalError, QuasiMeanError
from quasi_mean_scales.utils import A_TOL, LINEAR_WINDOW, LOG_WINDOW, kahan_sum, random_generator

LINEAR = 'linear'
LOG = 'log'
SPACINGS = (LINEAR, LOG)

TAYLOR_SWITCH = 1e-5
LITERAL_SWITCH = 1e-2


class Extreme(Enum):
    """The bounds min and max of a bounded scale, with A = -inf and A = +inf."""
    BOTTOM = 'min'
    TOP = 'max'

    @property
    def a_value(self) -> float:
        return -np.inf if self is Extreme.BOTTOM else np.inf

    def mean(self, a: core.SampleLike) -> float:
        a = core.as_sample(a)
        return a.minimum if self is Extreme.BOTTOM else a.maximum


Bound = Union[Generator, Extreme]


def bound_name(bound: Bound) -> str:
    return bound.value if isinstance(bound, Extreme) else bound.name


def bound_mean(bound: Bound, a: core.SampleLike, w: core.WeightsLike = None) -> float:
    if isinstance(bound, Extreme):
        return bound.mean(a)
    return core.evaluate_mean(bound, a, w)


def bound_a(bound: Bound, x: float) -> float:
    if isinstance(bound, Extreme):
        return bound.a_value
    return aop.a_operator(bound, x)


@dataclass(frozen=True)
class ParametricFamily:
    name: str
    domain: Interval
    param_interval: Interval
    make: Callable[[float], Generator] = field(compare=False)
    a_closed_form: Optional[Callable[[float, float], float]] = field(compare=False)
    orientation: str
    window: Tuple[float, float]
    spacing: str = LINEAR
    lower_bound: Bound = Extreme.BOTTOM
    upper_bound: Bound = Extreme.TOP
    x_window: Tuple[float, float] = None
    scale_guaranteed: bool = True
    closed_mean: Optional[Callable[[float, core.Sample, core.Weights], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.orientation not in DIRECTIONS:
            raise FamilyError(f'Unknown orientation {self.orientation!r}; expected one of {DIRECTIONS}.')
        if self.spacing not in SPACINGS:
            raise FamilyError(f'Unknown spacing {self.spacing!r}; expected one of {SPACINGS}.')
        lo, hi = (float(v) for v in self.window)
        if not lo < hi or not (self.param_interval.contains(lo) and self.param_interval.contains(hi)):
            raise FamilyError(f'Parameter window [{lo}, {hi}] is not inside {self.param_interval}.')
        if self.spacing == LOG and lo <= 0:
            raise FamilyError(f'A log-spaced window needs positive ends, got [{lo}, {hi}].')
        object.__setattr__(self, 'window', (lo, hi))
        x_window = self.x_window or self.domain.sampling_bounds()
        x_lo, x_hi = (float(v) for v in x_window)
        if not x_lo < x_hi or not (self.domain.contains(x_lo) and self.domain.contains(x_hi)):
            raise FamilyError(f'Sampling window [{x_lo}, {x_hi}] is not inside {self.domain}.')
        object.__setattr__(self, 'x_window', (x_lo, x_hi))

    @property
    def has_closed_form(self) -> bool:
        return self.a_closed_form is not None

    @property
    def is_bounded(self) -> bool:
        return not (self.lower_bound is Extreme.BOTTOM and self.upper_bound is Extreme.TOP)

    @property
    def bounds(self) -> Tuple[str, str]:
        return bound_name(self.lower_bound), bound_name(self.upper_bound)

    def a_value(self, t: float, x: float) -> float:
        """A(k_t)(x), from the closed form when there is one."""
        if self.a_closed_form is not None:
            with np.errstate(all='ignore'):
                return float(self.a_closed_form(t, x))
        return aop.a_operator(self.make(t), x)

    def mean(self, t: float, a: core.SampleLike, w: core.WeightsLike = None, **tolerances) -> float:
        """Mean of (a, w) under k_t; families with a closed-form mean skip the inversion."""
        if self.closed_mean is None:
            return core.evaluate_mean(self.make(t), a, w, **tolerances)
        a = core.as_sample(a)
        w = core.as_weights(w, len(a))
        with np.errstate(all='ignore'):
            core.check_inputs(self.make(t), a, w)
            if a.is_constant():
                return a.values[0]
            m = float(self.closed_mean(t, a, w))
        if not np.isfinite(m):
            raise NumericalError(f'Mean of {self.name} at t={t} is {m}.')
        return min(max(m, a.minimum), a.maximum)

    def to_coordinate(self, t: float) -> float:
        return float(np.log(t)) if self.spacing == LOG else float(t)

    def from_coordinate(self, u: float) -> float:
        return float(np.exp(u)) if self.spacing == LOG else float(u)

    def t_grid(self, n: int) -> np.ndarray:
        if self.spacing == LOG:
            return np.geomspace(*self.window, n)
        return np.linspace(*self.window, n)

    def x_grid(self, n: int) -> np.ndarray:
        return np.linspace(*self.x_window, n)

    def with_window(self, lo: float, hi: float) -> 'ParametricFamily':
        return replace(self, window=(lo, hi))

    def with_x_window(self, lo: float, hi: float) -> 'ParametricFamily':
        return replace(self, x_window=(lo, hi))


def _default_window(param_interval: Interval, spacing: str) -> Tuple[float, float]:
    if spacing == LOG:
        lo, hi = param_interval.inset_bounds()
        lo = max(lo, float(np.exp(-LOG_WINDOW)))
        hi = min(hi, float(np.exp(LOG_WINDOW)))
        return lo, hi
    return param_interval.sampling_bounds(LINEAR_WINDOW)


def log_mean_exp(t: float, z: np.ndarray, w: core.Weights) -> float:
    """(1 / t) * ln(sum(w_i * exp(t * z_i))), which is sum(w_i * z_i) at t = 0.

    Values are centred on their weighted average first; near t = 0 the sum
    goes through expm1/log1p so that the result has an absolute error of a
    few ulps of the spread of z for every t. Pairs are summed in ascending
    order of (z, w), so the result does not depend on the sample order.
    """
    z = np.asarray(z, dtype=float)
    weights = np.asarray(w.values, dtype=float)
    order = np.lexsort((weights, z))
    z, weights = z[order], weights[order]
    center = kahan_sum(weights * z)
    if t == 0:
        return center
    d = z - center
    if abs(t) * np.abs(d).max() <= 1.:
        return center + float(np.log1p(kahan_sum(weights * np.expm1(t * d)))) / t
    return center + float(np.logaddexp.reduce(t * d + np.log(weights))) / t


def exp_over(t: float, z):
    """exp(z) / t, shifted by -1 / t when |t| < `LITERAL_SWITCH`."""
    if abs(t) < LITERAL_SWITCH:
        return np.expm1(z) / t
    return np.exp(z) / t


# Power means


def _power_mean(t: float, a: core.Sample, w: core.Weights) -> float:
    return float(np.exp(log_mean_exp(t, np.log(a.values), w)))


def _power_member(t: float) -> Generator:
    if t == 0:
        return core.logarithm()
    return Generator(lambda x: exp_over(t, t * np.log(x)),
                     lambda x: np.exp((t - 1.) * np.log(x)),
                     lambda x: (t - 1.) * np.exp((t - 2.) * np.log(x)),
                     Interval.positive(), INCREASING, f'x^{t:g}')


def power_family() -> ParametricFamily:
    """x**t (t != 0) and ln x (t = 0): the increasing scale of power means on (0, inf)."""
    return ParametricFamily(name='power',
                            domain=Interval.positive(),
                            param_interval=Interval.real_line(),
                            make=_power_member,
                            a_closed_form=lambda t, x: (t - 1.) / x,
                            orientation=INCREASING,
                            window=(-LINEAR_WINDOW, LINEAR_WINDOW),
                            x_window=(1e-2, 1e2),
                            closed_mean=_power_mean)


# Radical means


def _radical_mean(alpha: float, a: core.Sample, w: core.Weights) -> float:
    return 1. / log_mean_exp(float(np.log(alpha)), 1. / np.array(a.values), w)


def _radical_member(alpha: float) -> Generator:
    s = float(np.log(alpha))
    if s == 0:
        return core.reciprocal()
    return Generator(lambda x: exp_over(s, s / x),
                     lambda x: -np.exp(s / x) / x ** 2,
                     lambda x: np.exp(s / x) * (2. * x + s) / x ** 4,
                     Interval.positive(), DECREASING, f'{alpha:g}^(1/x)')


def radical_family() -> ParametricFamily:
    """alpha**(1/x) for alpha in (0, inf): a decreasing scale on (0, inf).

    A depends on alpha only through ln(alpha), which is what the members are
    built from.
    """
    return ParametricFamily(name='radical',
                            domain=Interval.positive(),
                            param_interval=Interval.positive(),
                            make=_radical_member,
                            a_closed_form=lambda alpha, x: -(2. * x + np.log(alpha)) / x ** 2,
                            orientation=DECREASING,
                            window=(float(np.exp(-LOG_WINDOW)), float(np.exp(LOG_WINDOW))),
                            spacing=LOG,
                            x_window=(.1, 10.),
                            closed_mean=_radical_mean)


# x**(alpha * x)

INV_E = float(np.exp(-1.))


def x_pow_alpha_x_family(domain: Interval = None) -> ParametricFamily:
    """x**(alpha * x), completed by x ln x at alpha = 0.

    Increasing scale on (1/e, inf); on a domain inside (0, 1/e) the same
    formulas give a decreasing scale.
    """
    domain = domain or Interval(INV_E, np.inf)
    if domain.lo < INV_E < domain.hi:
        raise FamilyError(f'x^(ax) needs a domain on one side of 1/e, got {domain}.')
    upper = domain.lo >= INV_E
    direction = INCREASING if upper else DECREASING

    def _member(alpha: float) -> Generator:
        if alpha == 0:
            return core.x_log_x(domain)

        def _h(x):
            return x * np.log(x)

        return Generator(lambda x: exp_over(alpha, alpha * _h(x)),
                         lambda x: np.exp(alpha * _h(x)) * (np.log(x) + 1.),
                         lambda x: np.exp(alpha * _h(x)) * (alpha * (np.log(x) + 1.) ** 2 + 1. / x),
                         domain, direction, f'x^({alpha:g}x)')

    def _mean(alpha: float, a: core.Sample, w: core.Weights) -> float:
        # Mean of h = x ln x under exp(alpha * h), mapped back through h.
        h = np.array(a.values) * np.log(a.values)
        y = min(max(log_mean_exp(alpha, h, w), h.min()), h.max())
        return core.invert_generator(core.x_log_x(domain), y, Interval.closed(a.minimum, a.maximum))

    x_window = (INV_E + .01, 10.) if upper else (.01, INV_E - .01)
    x_window = (max(x_window[0], domain.inset_bounds()[0]), min(x_window[1], domain.inset_bounds()[1]))
    return ParametricFamily(name='x-pow-x' if upper else 'x-pow-x-low',
                            domain=domain,
                            param_interval=Interval.real_line(),
                            make=_member,
                            a_closed_form=lambda alpha, x: 1. / (x * (np.log(x) + 1.)) + alpha * (np.log(x) + 1.),
                            orientation=direction,
                            window=(-LINEAR_WINDOW, LINEAR_WINDOW),
                            x_window=x_window,
                            closed_mean=_mean)


def x_pow_alpha_x_low_family() -> ParametricFamily:
    return x_pow_alpha_x_family(Interval(0., INV_E))


# g(x**alpha)


def g_alpha_family(g: Generator, endpoint_data: Tuple[float, float, float] = None,
                   window: Tuple[float, float] = (1e-3, 1e3)) -> ParametricFamily:
    """g(x**alpha) on (0, 1) for alpha in (0, inf).

    `g` must be increasing on [0, 1]; `endpoint_data` holds the one-sided
    values (g(0), g'(0), g''(0)) and is read off `g` when omitted. For a
    convex `g` the family is a scale between the geometric mean and max;
    otherwise it is still built but `scale_guaranteed` is False.
    """
    if g.direction != INCREASING:
        raise FamilyError(f'{g.name} must be increasing on [0, 1].')
    if endpoint_data is None:
        if not g.domain.contains(0.):
            raise FamilyError(f'{g.name} is not defined at 0; pass its one-sided endpoint data.')
        with np.errstate(all='ignore'):
            endpoint_data = (float(g.f(0.)), float(g.df(0.)), float(g.d2f(0.)))
    g0, dg0, d2g0 = endpoint_data
    if not np.isfinite(endpoint_data).all() or dg0 <= 0:
        raise FamilyError(f'Endpoint data {endpoint_data} of {g.name} must be finite with g\'(0) > 0.')

    u_points = np.linspace(0., 1., 66)[1:-1]
    try:
        g.check(u_points)
    except GeneratorError as e:
        raise FamilyError(f'{g.name} is not a C2 increasing generator on (0, 1): {e}')
    convex = all(aop.a_operator(g, u) >= -A_TOL for u in u_points) and d2g0 >= -A_TOL
    if not convex:
        logger.warning(f'{g.name} is not convex on [0, 1]; the family is not guaranteed to be a scale '
                       f'between the geometric mean and max.')

    def _a_g(u: float) -> float:
        return d2g0 / dg0 if u == 0 else aop.a_operator(g, u)

    def _member(alpha: float) -> Generator:
        def _f(x):
            u = x ** alpha
            if u <= TAYLOR_SWITCH:
                return dg0 * u + .5 * d2g0 * u ** 2
            return g.f(u) - g0

        def _df(x):
            u = x ** alpha
            slope = dg0 if u == 0 else g.df(u)
            return slope * alpha * u / x

        def _d2f(x):
            u = x ** alpha
            slope, curvature = (dg0, d2g0) if u == 0 else (g.df(u), g.d2f(u))
            return curvature * (alpha * u / x) ** 2 + slope * alpha * (alpha - 1.) * u / x ** 2

        return Generator(_f, _df, _d2f, Interval.open(0., 1.), INCREASING, f'{g.name}(x^{alpha:g})')

    def _a_closed_form(alpha: float, x: float) -> float:
        u = x ** alpha
        return alpha * u / x * _a_g(u) + (alpha - 1.) / x

    return ParametricFamily(name=f'g-alpha-{g.name}',
                            domain=Interval.open(0., 1.),
                            param_interval=Interval.positive(),
                            make=_member,
                            a_closed_form=_a_closed_form,
                            orientation=INCREASING,
                            window=window,
                            spacing=LOG,
                            lower_bound=core.logarithm(Interval.open(0., 1.)),
                            upper_bound=Extreme.TOP,
                            x_window=(.01, .99),
                            scale_guaranteed=convex)


# exp(t * x)


def _exp_tx_member(t: float) -> Generator:
    if t == 0:
        return core.identity()
    return Generator(lambda x: exp_over(t, t * x),
                     lambda x: np.exp(t * x),
                     lambda x: t * np.exp(t * x),
                     Interval.real_line(), INCREASING, f'exp({t:g}x)')


def exp_tx_family() -> ParametricFamily:
    """exp(t * x) (t != 0) and x (t = 0): an increasing scale on the real line with A = t."""
    return ParametricFamily(name='exp-tx',
                            domain=Interval.real_line(),
                            param_interval=Interval.real_line(),
                            make=_exp_tx_member,
                            a_closed_form=lambda t, x: t + 0. * x,
                            orientation=INCREASING,
                            window=(-LINEAR_WINDOW, LINEAR_WINDOW),
                            x_window=(-10., 10.),
                            closed_mean=lambda t, a, w: log_mean_exp(t, a.values, w))


# Reparametrization and plug-ins


def _mapped_interval(interval: Interval, phi: Callable[[float], float], increasing: bool) -> Interval:
    with np.errstate(all='ignore'):
        ends = float(phi(interval.lo)), float(phi(interval.hi))
    lo, hi = ends if increasing else ends[::-1]
    return Interval(lo, hi, interval.open_lo, interval.open_hi)


def reparametrize(fam: ParametricFamily, phi: Callable[[float], float], window: Tuple[float, float],
                  param_interval: Interval = None, spacing: str = LINEAR, name: str = None,
                  n_check: int = 64) -> ParametricFamily:
    """The family s -> k_phi(s) over `window`; its orientation flips iff `phi` decreases."""
    param_interval = param_interval or Interval.real_line()
    if spacing == LOG:
        s_points = np.geomspace(*window, n_check)
    else:
        s_points = np.linspace(*window, n_check)
    with np.errstate(all='ignore'):
        t_points = np.array([float(phi(s)) for s in s_points])
    steps = np.diff(t_points)
    if not np.isfinite(t_points).all() or not ((steps > 0).all() or (steps < 0).all()):
        raise FamilyError(f'phi is not strictly monotone on [{window[0]}, {window[1]}].')
    outside = [t for t in t_points if not fam.param_interval.contains(t)]
    if outside:
        raise FamilyError(f'phi leaves the parameter interval {fam.param_interval} of {fam.name}, e.g. {outside[0]}.')

    increasing = bool(steps[0] > 0)
    orientation = fam.orientation if increasing else (INCREASING if fam.orientation == DECREASING else DECREASING)
    make = fam.make
    closed = fam.a_closed_form
    a_closed_form = None if closed is None else (lambda s, x: closed(phi(s), x))
    mean = fam.closed_mean
    closed_mean = None if mean is None else (lambda s, a, w: mean(phi(s), a, w))

    return replace(fam,
                   name=name or f'{fam.name}/reparametrized',
                   param_interval=param_interval,
                   make=lambda s: make(phi(s)),
                   a_closed_form=a_closed_form,
                   closed_mean=closed_mean,
                   orientation=orientation,
                   window=tuple(window),
                   spacing=spacing)


def increasing_view(fam: ParametricFamily) -> Tuple[ParametricFamily, Callable[[float], float]]:
    """The family in a linear coordinate u in which it is increasing, and the map u -> t."""
    decreasing = fam.orientation == DECREASING
    if fam.spacing == LINEAR and not decreasing:
        return fam, float
    lo, hi = fam.window
    if fam.spacing == LINEAR:
        def phi(u):
            return -u
        window = (-hi, -lo)
    elif not decreasing:
        phi = np.exp
        window = (float(np.log(lo)), float(np.log(hi)))
    else:
        def phi(u):
            return np.exp(-u)
        window = (-float(np.log(hi)), -float(np.log(lo)))

    def inverse(t):
        u = np.log(t) if fam.spacing == LOG else t
        return -u if decreasing else u

    with np.errstate(divide='ignore'):
        param_interval = _mapped_interval(fam.param_interval, inverse, not decreasing)
    view = reparametrize(fam, phi, window, param_interval=param_interval, name=fam.name)
    return view, lambda u: float(phi(u))


def custom_family(name: str, make: Callable[[float], Generator], domain: Interval,
                  param_interval: Interval, a_closed_form: Callable[[float, float], float] = None,
                  orientation: str = None, window: Tuple[float, float] = None, spacing: str = LINEAR,
                  lower_bound: Bound = Extreme.BOTTOM, upper_bound: Bound = Extreme.TOP,
                  x_window: Tuple[float, float] = None) -> ParametricFamily:
    """A user family. Without `a_closed_form`, A is computed from the derivative oracles."""
    window = window or _default_window(param_interval, spacing)
    if orientation is None:
        trial = ParametricFamily(name, domain, param_interval, make, a_closed_form, INCREASING,
                                 window, spacing, x_window=x_window)
        x = float(np.mean(trial.x_window))
        values = np.array([trial.a_value(t, x) for t in trial.t_grid(16)])
        steps = np.diff(values)
        if (steps > 0).all():
            orientation = INCREASING
        elif (steps < 0).all():
            orientation = DECREASING
        else:
            raise FamilyError(f'A of {name} is not monotone in t at x={x}; pass an orientation.')
        logger.debug(f'{name} is {orientation} in t.')

    return ParametricFamily(name, domain, param_interval, make, a_closed_form, orientation, window,
                            spacing, lower_bound, upper_bound, x_window)


def check_closed_form(fam: ParametricFamily, n_points: int = 200, seed: int = None,
                      window: Tuple[float, float] = None) -> Optional[float]:
    """Largest |closed form - f''/f'| / (1 + |closed form|) over random (t, x).

    Points where the derivative oracles overflow are skipped. Returns None
    when the family has no closed form.
    """
    if not fam.has_closed_form:
        return None
    rng = random_generator(seed)
    lo, hi = window or fam.window
    if fam.spacing == LOG:
        ts = np.exp(rng.uniform(np.log(lo), np.log(hi), n_points))
    else:
        ts = rng.uniform(lo, hi, n_points)
    xs = rng.uniform(*fam.x_window, n_points)

    worst = 0.
    skipped = 0
    for t, x in zip(ts, xs):
        closed = fam.a_value(t, x)
        try:
            oracle = aop.a_operator(fam.make(t), x)
        except QuasiMeanError:
            skipped += 1
            continue
        worst = max(worst, abs(closed - oracle) / (1. + abs(closed)))
    if skipped:
        logger.debug(f'{fam.name}: {skipped} of {n_points} closed-form checks skipped (oracle overflow).')

    return worst


FAMILIES: Dict[str, Callable[[], ParametricFamily]] = {
    'power': power_family,
    'radical': radical_family,
    'x-pow-x': x_pow_alpha_x_family,
    'x-pow-x-low': x_pow_alpha_x_low_family,
    'exp-tx': exp_tx_family,
    'g-alpha-exp': lambda: g_alpha_family(core.exponential()),
}


def get_family(name: str) -> ParametricFamily:
    if name not in FAMILIES:
        raise FamilyError(f'Unknown family {name!r}; built-ins are {", ".join(FAMILIES)}.')
    return FAMILIES[name]()
