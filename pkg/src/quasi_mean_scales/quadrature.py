from typing import Callable, NamedTuple, Tuple

import numpy as np

from quasi_mean_scales.errors import NumericalError
from quasi_mean_scales.utils import QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_DEPTH, kahan_sum

N_PANELS = 16


class QuadratureResult(NamedTuple):
    value: float
    error: float
    converged: bool
    evaluations: int


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6. * (fa + 4. * fm + fb)


def adaptive_simpson(func: Callable[[float], float], a: float, b: float,
                     abs_tol: float = QUAD_ABS_TOL, rel_tol: float = QUAD_REL_TOL,
                     max_depth: int = QUAD_MAX_DEPTH) -> QuadratureResult:
    """Adaptive Simpson integration of `func` over [a, b].

    The interval is first split into `N_PANELS` panels, which also gives the
    rough integral that the relative tolerance refers to; each panel is then
    bisected until the Richardson error estimate is below its share of the
    tolerance or `max_depth` is reached, in which case the result is
    flagged as not converged.
    """
    if not a < b:
        raise NumericalError(f'Quadrature needs a < b, got [{a}, {b}].')
    evaluations = 0

    def _f(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        value = float(func(x))
        if not np.isfinite(value):
            raise NumericalError(f'Integrand is {value} at {x}.')
        return value

    nodes = np.linspace(a, b, 2 * N_PANELS + 1)
    values = [_f(x) for x in nodes]
    panels = [(nodes[2 * i], nodes[2 * i + 2], values[2 * i], values[2 * i + 1], values[2 * i + 2])
              for i in range(N_PANELS)]
    rough = kahan_sum(_simpson(fa, fm, fb, hi - lo) for lo, hi, fa, fm, fb in panels)
    tol = max(abs_tol, rel_tol * abs(rough))

    converged = True
    pieces = []
    errors = []

    def _adapt(lo: float, hi: float, fa: float, fm: float, fb: float,
               whole: float, panel_tol: float, depth: int) -> None:
        nonlocal converged
        mid = lo + (hi - lo) / 2.
        flm = _f(lo + (mid - lo) / 2.)
        frm = _f(mid + (hi - mid) / 2.)
        left = _simpson(fa, flm, fm, mid - lo)
        right = _simpson(fm, frm, fb, hi - mid)
        delta = (left + right - whole) / 15.
        if abs(delta) <= panel_tol:
            pieces.append(left + right + delta)
            errors.append(abs(delta))
            return
        if depth >= max_depth:
            converged = False
            pieces.append(left + right + delta)
            errors.append(abs(delta))
            return
        _adapt(lo, mid, fa, flm, fm, left, panel_tol / 2., depth + 1)
        _adapt(mid, hi, fm, frm, fb, right, panel_tol / 2., depth + 1)

    for lo, hi, fa, fm, fb in panels:
        _adapt(lo, hi, fa, fm, fb, _simpson(fa, fm, fb, hi - lo), tol / N_PANELS, 1)

    return QuadratureResult(kahan_sum(pieces), kahan_sum(errors), converged, evaluations)


def integration_bounds(lo: float, hi: float) -> Tuple[float, float]:
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise NumericalError(f'Quadrature needs a bounded interval, got [{lo}, {hi}].')
    return lo, hi
