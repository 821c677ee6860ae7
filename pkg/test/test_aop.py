import numpy as np
import pytest

from quasi_mean_scales import aop, core
from quasi_mean_scales.core import INCREASING, Generator, Interval
from quasi_mean_scales.errors import (DomainViolationError, GeneratorError, QuadratureError,
                                      UnreliableEstimateError)
from quasi_mean_scales.families import radical_family
from quasi_mean_scales.utils import random_generator

# (generator, sampling range) pairs kept away from the generators' singular points
BUILT_INS = [
    (core.exponential(), (-2., 2.)),
    (core.power(2), (.5, 3.)),
    (core.logarithm(), (.5, 3.)),
    (core.x_log_x(), (2., 3.)),
]


def _random_samples(rng, n_samples, lo=.5, hi=10., max_size=6):
    for _ in range(n_samples):
        n = int(rng.integers(2, max_size + 1))
        w = rng.uniform(.05, 1., n)
        yield rng.uniform(lo, hi, n), w / w.sum()


def test_a_operator_examples():
    assert aop.a_operator(core.power(3), 2.) == pytest.approx(1., abs=1e-15)
    for x in (-3., 0., 7.5):
        assert aop.a_operator(core.exponential(), x) == 1.
    assert aop.a_operator(radical_family().make(np.e), 1.) == pytest.approx(-3., rel=1e-12)


def test_a_operator_errors():
    with pytest.raises(DomainViolationError):
        aop.a_operator(core.logarithm(), -1.)
    cube = Generator(lambda x: x ** 3, lambda x: 3 * x ** 2, lambda x: 6 * x, Interval.real_line(), INCREASING)
    with pytest.raises(GeneratorError):
        aop.a_operator(cube, 0.)


@pytest.mark.parametrize('g, bounds', BUILT_INS + [(core.reciprocal(), (.5, 3.))])
def test_derivative_oracles_match_finite_differences(g, bounds):
    for x in np.linspace(*bounds, 11):
        h = 1e-5 * max(1., abs(x))
        df = (g.f(x + h) - g.f(x - h)) / (2 * h)
        d2f = (g.df(x + h) - g.df(x - h)) / (2 * h)
        assert df == pytest.approx(float(g.df(x)), rel=1e-5)
        assert d2f == pytest.approx(float(g.d2f(x)), rel=1e-5, abs=1e-8)


def test_a_operator_numeric_examples():
    assert aop.a_operator_numeric(core.exponential(), 0., eps=1e-3) == pytest.approx(1., abs=1e-5)
    for x in (.25, .5, 1.):
        assert aop.a_operator_numeric(core.identity(), x) == pytest.approx(0., abs=1e-9)
    coarse = abs(aop.a_operator_numeric(core.power(2), 1., eps=1e-2) - 1.)
    fine = abs(aop.a_operator_numeric(core.power(2), 1., eps=5e-3) - 1.)
    assert coarse / fine == pytest.approx(4., rel=1e-2)


def test_a_operator_numeric_literal_form_diverges():
    assert aop.a_operator_numeric(core.identity(), 1., eps=1e-3, literal=True) > 1e5


def test_a_operator_numeric_errors():
    with pytest.raises(UnreliableEstimateError):
        aop.a_operator_numeric(core.exponential(), 0., eps=1e-7)
    with pytest.raises(DomainViolationError):
        aop.a_operator_numeric(core.exponential(), 0., eps=0.)
    with pytest.raises(DomainViolationError):
        aop.a_operator_numeric(core.logarithm(), .5e-3, eps=1e-3)


@pytest.mark.parametrize('g, bounds', BUILT_INS)
def test_a_operator_numeric_is_second_order(g, bounds):
    rng = random_generator(7)
    epsilons = np.array([1e-2, 5e-3, 2.5e-3])
    for x in rng.uniform(*bounds, 20):
        exact = aop.a_operator(g, x)
        errors = [abs(aop.a_operator_numeric(g, x, eps) - exact) for eps in epsilons]
        order = np.polyfit(np.log(epsilons), np.log(errors), 1)[0]
        assert order >= 1.8


def test_compare_means_power():
    verdict = aop.compare_means(core.power(3), core.power(2))
    assert verdict.relation == aop.GREATER
    assert verdict.witness is None
    assert verdict.negative_at is None
    assert aop.compare_means(core.power(2), core.power(3)).relation == aop.SMALLER


def test_compare_means_affine_pair_is_equivalent():
    verdict = aop.compare_means(core.logarithm().affine(2., 5.), core.logarithm(), grid_size=32, n_random=8)
    assert verdict.relation == aop.EQUIVALENT
    assert verdict.ties == 40
    assert verdict.witness is None


def test_compare_means_incomparable_witness():
    verdict = aop.compare_means(core.exponential(), core.power(2), interval=Interval.open(0., 3.))
    assert verdict.relation == aop.INCOMPARABLE
    assert verdict.witness == pytest.approx(1., abs=1e-9)
    assert verdict.negative_at < 1. < verdict.positive_at


def test_compare_means_isolated_tie_keeps_strict_order():
    # A = 3 (x - 1)**2 / (1 + (x - 1)**3) vanishes only at x = 1, which is a grid point
    domain = Interval.open(.5, 2.)
    f = Generator(lambda x: x + (x - 1.) ** 4 / 4., lambda x: 1. + (x - 1.) ** 3, lambda x: 3. * (x - 1.) ** 2,
                  domain, INCREASING, 'x + (x - 1)^4 / 4')
    verdict = aop.compare_means(f, core.identity(domain))
    assert verdict.relation == aop.GREATER
    assert verdict.ties >= 1


def test_compare_means_tie_on_a_stretch_is_not_strict():
    # A(f) = 0 on (0, 1] and positive on (1, 2)
    domain = Interval.open(0., 2.)
    f = Generator(lambda x: x + np.maximum(x - 1., 0.) ** 4,
                  lambda x: 1. + 4. * np.maximum(x - 1., 0.) ** 3,
                  lambda x: 12. * np.maximum(x - 1., 0.) ** 2,
                  domain, INCREASING, 'x + (x - 1)_+^4')
    g = core.identity(domain)
    verdict = aop.compare_means(f, g)
    assert verdict.relation not in (aop.GREATER, aop.SMALLER)
    assert verdict.relation == aop.INCOMPARABLE
    assert verdict.witness <= 1.
    assert verdict.negative_at is None and verdict.positive_at > 1.
    a, w = (.2, .8), (.5, .5)
    assert core.evaluate_mean(f, a, w) == pytest.approx(core.evaluate_mean(g, a, w), abs=1e-12)


def test_compare_means_is_seeded():
    first = aop.compare_means(core.exponential(), core.power(2), interval=Interval.open(0., 3.), seed=11)
    second = aop.compare_means(core.exponential(), core.power(2), interval=Interval.open(0., 3.), seed=11)
    assert first == second
    assert first.seed == 11


def test_compare_means_errors():
    with pytest.raises(DomainViolationError):
        aop.compare_means(core.power(3), core.power(2), grid_size=8)
    with pytest.raises(DomainViolationError):
        aop.compare_means(core.exponential(), core.power(2))
    with pytest.raises(DomainViolationError):
        aop.compare_means(core.exponential(), core.power(2), interval=Interval.open(-1., 1.))


ORDERED_PAIRS = [
    (core.power(3), core.power(2)),
    (core.power(2), core.identity()),
    (core.identity(), core.logarithm()),
    (core.logarithm(), core.reciprocal()),
    (core.reciprocal(), core.power(-1.5)),
    (core.exponential(), core.identity()),
    (core.power(2), core.logarithm()),
    (core.x_log_x(), core.logarithm()),
    (core.exponential(), core.power(.5)),
    (core.power(.5), core.logarithm()),
]


@pytest.mark.parametrize('f, g', ORDERED_PAIRS)
def test_ordering_holds_on_samples(f, g):
    interval = Interval.closed(.5, 10.)
    assert aop.compare_means(f, g, interval=interval).relation == aop.GREATER
    rng = random_generator(3)
    for a, w in _random_samples(rng, 500):
        assert core.evaluate_mean(f, a, w) > core.evaluate_mean(g, a, w)
    for c in rng.uniform(.5, 10., 10):
        a, w = (c, c, c), (.2, .3, .5)
        assert core.evaluate_mean(f, a, w) == core.evaluate_mean(g, a, w) == c


def test_affine_equivalent_examples():
    assert aop.affine_equivalent(core.power(2).affine(2., 3.), core.power(2))
    assert not aop.affine_equivalent(core.power(2), core.power(3))
    fit = aop.fit_affine(core.logarithm().affine(5., -7.), core.logarithm())
    assert fit.equivalent
    assert fit.alpha == pytest.approx(5., rel=1e-6)
    assert fit.beta == pytest.approx(-7., rel=1e-6)


def test_affine_fit_recovers_random_coefficients():
    rng = random_generator(5)
    for _ in range(20):
        alpha = rng.uniform(.1, 10.) * rng.choice([-1., 1.])
        beta = rng.uniform(-10., 10.)
        for g in (core.logarithm(), core.power(2), core.exponential()):
            fit = aop.fit_affine(g.affine(alpha, beta), g, interval=Interval.closed(.5, 5.))
            assert fit.equivalent
            assert fit.alpha == pytest.approx(alpha, rel=1e-6)
            assert fit.beta == pytest.approx(beta, rel=1e-6, abs=1e-9)


def test_l1_norm_A_examples():
    assert aop.l1_norm_A(core.exponential(), Interval.closed(0., 1.)) == pytest.approx(1., abs=1e-10)
    assert aop.l1_norm_A(core.identity(), Interval.closed(-3., 5.)) == 0.
    assert aop.l1_norm_A(core.power(2), Interval.closed(1., 2.)) == pytest.approx(np.log(2.), abs=1e-8)


def test_l1_norm_diff():
    diff = aop.l1_norm_diff(core.power(2), core.power(2.5), Interval.closed(1., 2.))
    assert diff == pytest.approx(.5 * np.log(2.), abs=1e-8)


def test_l1_norm_near_singularity():
    with pytest.raises(QuadratureError) as info:
        aop.l1_norm_A(core.logarithm(), Interval.open(0., 1.), max_depth=3)
    assert info.value.partial_value is not None
    with pytest.raises(DomainViolationError):
        aop.l1_norm_A(core.logarithm(), Interval.closed(-1., 1.))


def test_error_bound_identical_generators():
    certificate = aop.error_bound(core.power(2), core.power(2), Interval.closed(1., 2.))
    assert certificate.l1_norm_diff == 0.
    assert certificate.bound == 0.
    assert aop.empirical_mean_gap(core.power(2), core.power(2), Interval.closed(1., 2.), n_samples=50) == 0.


def test_error_bound_needs_bounded_interval():
    with pytest.raises(DomainViolationError):
        aop.error_bound(core.power(2), core.power(3), Interval.positive())


def test_error_bound_dominates_measured_gaps():
    U = Interval.closed(1., 2.)
    f = core.power(2)
    bounds = []
    for delta in (.1, .01, .001):
        k = core.power(2 + delta)
        certificate = aop.error_bound(f, k, U)
        assert certificate.recompute() == pytest.approx(certificate.bound, abs=1e-12)
        assert certificate.interval_length == 1.
        assert certificate.l1_norm_Af == pytest.approx(np.log(2.), abs=1e-8)
        assert certificate.bound >= aop.empirical_mean_gap(f, k, U, n_samples=1000, seed=1)
        bounds.append(certificate.bound)
    assert bounds[0] > bounds[1] > bounds[2] > 0.
    assert bounds[2] < 1e-2


def test_uniform_bound():
    assert aop.uniform_bound(2., 1., 0.) == 0.
    assert aop.uniform_bound(1., 0., 1.) == pytest.approx(np.sinh(2.))
    assert aop.uniform_bound(1., 400., 1.) == np.inf
