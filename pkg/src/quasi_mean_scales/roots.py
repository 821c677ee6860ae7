"""Bracketed root finding for monotone scalar functions."""
from typing import Callable, List, NamedTuple, Tuple, Type

from loguru import logger
import numpy as np

from quasi_mean_scales.errors import BracketExhaustedError, NonMonotoneError, NumericalError
from quasi_mean_scales.utils import MAX_BISECTIONS, MAX_EXPANSIONS


class Bracket(NamedTuple):
    lo: float
    hi: float
    f_lo: float
    f_hi: float


class RootResult(NamedTuple):
    x: float
    fx: float
    iterations: int
    bracket: Tuple[float, float]


def bisect_increasing(func: Callable[[float], float], bracket: Bracket,
                      xtol: Callable[[float, float], float],
                      ftol: float = np.inf,
                      max_iter: int = MAX_BISECTIONS,
                      slack: float = 0.,
                      violation: Type[Exception] = NonMonotoneError) -> RootResult:
    """Bisect a nondecreasing `func` on a bracket with f(lo) <= 0 <= f(hi).

    Stops once the bracket is narrower than ``xtol(lo, hi)`` and the midpoint
    residual is within `ftol`, on an exact zero, or when the bracket can no
    longer be split in double precision. A midpoint value outside
    ``[f(lo) - slack, f(hi) + slack]`` means `func` is not monotone and raises
    `violation`.
    """
    lo, hi, f_lo, f_hi = bracket
    x, fx = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    iterations = 0
    while iterations < max_iter:
        mid = lo + (hi - lo) / 2.
        if mid <= lo or mid >= hi:
            x, fx = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
            break
        x = mid
        fx = func(x)
        iterations += 1
        if not np.isfinite(fx):
            raise NumericalError(f'Non-finite value {fx} at {x} during bisection.')
        if fx < f_lo - slack or fx > f_hi + slack:
            raise violation(f'Function is not monotone on [{lo}, {hi}]: value {fx} at {x} '
                            f'leaves [{f_lo}, {f_hi}].')
        if fx == 0.:
            lo = hi = x
            break
        if fx < 0.:
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        if hi - lo <= xtol(lo, hi) and abs(fx) <= ftol:
            break

    return RootResult(x, fx, iterations, (lo, hi))


def expand_bracket(func: Callable[[float], float], center: float,
                   limits: Tuple[float, float], step: float = 1.,
                   max_expansions: int = MAX_EXPANSIONS) -> Tuple[Bracket, List[Tuple[float, float]]]:
    """Grow a bracket around `center` until a nondecreasing `func` changes sign.

    The bracket doubles outwards from a width of ``2 * step`` and is clipped to
    `limits`. Returns the bracket and every (x, f(x)) evaluated on the way.
    """
    lo_limit, hi_limit = limits
    evaluated = []

    def _evaluate(x: float) -> float:
        fx = func(x)
        if not np.isfinite(fx):
            raise NumericalError(f'Non-finite value {fx} at {x}.')
        evaluated.append((x, fx))
        return fx

    def _walk(side: int) -> Tuple[float, float]:
        limit = hi_limit if side > 0 else lo_limit
        width = step
        x = float(np.clip(center + side * width, lo_limit, hi_limit))
        for _ in range(max_expansions):
            try:
                fx = _evaluate(x)
            except NumericalError as e:
                raise BracketExhaustedError(f'Evaluation failed at {x} while expanding bracket: {e}')
            if side * fx >= 0.:
                return x, fx
            if x == limit:
                break
            width *= 2.
            x = float(np.clip(center + side * width, lo_limit, hi_limit))
        raise BracketExhaustedError(f'No sign change found up to {x}.')

    lo, f_lo = _walk(-1)
    hi, f_hi = _walk(1)
    logger.debug(f'Bracket [{lo}, {hi}] after {len(evaluated)} evaluations.')

    return Bracket(lo, hi, f_lo, f_hi), sorted(evaluated)
