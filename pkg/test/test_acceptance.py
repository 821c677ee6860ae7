"""End-to-end checks with fixed seeds and the tolerances the library promises.

Comparison-criterion, epsilon-order and bound-dominance checks live in
test_aop.py.
"""
import json

import numpy as np
import pytest

from quasi_mean_scales import aop, core, scale
from quasi_mean_scales.cli import qmeans
from quasi_mean_scales.errors import QuasiMeanError
from quasi_mean_scales.families import (FAMILIES, INV_E, LOG, check_closed_form, g_alpha_family, get_family,
                                        power_family, radical_family, x_pow_alpha_x_family)
from quasi_mean_scales.utils import DEFAULT_SEED, random_generator


def _random_sample(rng, lo, hi, max_size=6):
    n = int(rng.integers(2, max_size + 1))
    w = rng.uniform(.05, 1., n)
    return rng.uniform(lo, hi, n), w / w.sum()


def test_power_means_solve_every_target():
    fam = power_family()
    rng = random_generator(101)
    for _ in range(100):
        a, w = _random_sample(rng, .1, 10.)
        spread = a.max() - a.min()
        for target in np.linspace(a.min(), a.max(), 13)[1:-1]:
            result = scale.solve_scale(fam, a, w, target)
            assert abs(fam.mean(result.t_star, a, w) - target) <= 1e-9 * spread


ROUNDTRIP_CASES = [
    ('power', (.1, 10.), (-10., 10.)),
    ('radical', (.5, 5.), (-10., 10.)),
    ('x-pow-x', (.5, 10.), (-10., 10.)),
    ('exp-tx', (-2., 2.), (-10., 10.)),
]


@pytest.mark.parametrize('name, bounds, coordinates', ROUNDTRIP_CASES)
def test_solve_recovers_planted_parameters(name, bounds, coordinates):
    fam = get_family(name)
    rng = random_generator(102)
    for _ in range(100):
        a, w = _random_sample(rng, *bounds)
        spread = a.max() - a.min()
        for u in rng.uniform(*coordinates, 10):
            target = fam.mean(fam.from_coordinate(u), a, w)
            result = scale.solve_scale(fam, a, w, target)
            assert abs(fam.mean(result.t_star, a, w) - target) <= 1e-9 * spread
            assert abs(fam.to_coordinate(result.t_star) - u) <= 1e-6 * (1. + abs(u))

            order = rng.permutation(a.size)
            assert fam.mean(result.t_star, a[order], w[order]) == fam.mean(result.t_star, a, w)


def _finite_difference_a(g, x):
    h = 1e-7 * max(abs(x), 1e-3)
    with np.errstate(all='ignore'):
        df = float(g.df(x))
        d2f = (float(g.df(x + h)) - float(g.df(x - h))) / (2 * h)
    return d2f / df, df


@pytest.mark.parametrize('name', list(FAMILIES))
def test_closed_form_matches_finite_differences(name):
    fam = get_family(name)
    assert check_closed_form(fam, n_points=200, seed=8) <= 1e-8

    rng = random_generator(9)
    lo, hi = fam.window
    ts = np.exp(rng.uniform(np.log(lo), np.log(hi), 200)) if fam.spacing == LOG else rng.uniform(lo, hi, 200)
    checked = 0
    for t, x in zip(ts, rng.uniform(*fam.x_window, 200)):
        try:
            estimate, df = _finite_difference_a(fam.make(t), x)
        except QuasiMeanError:
            continue
        if not (np.isfinite(estimate) and 1e-290 < abs(df) < 1e290):
            continue
        closed = fam.a_value(t, x)
        assert abs(estimate - closed) <= 1e-5 * (1. + abs(closed))
        checked += 1
    assert checked >= 100


def test_bounded_family_limits():
    fam = g_alpha_family(core.exponential())
    a, w = (.2, .8), (.5, .5)
    assert fam.mean(1e-3, a, w) == pytest.approx(.4, abs=1e-2)
    assert fam.mean(1e3, a, w) == pytest.approx(.8, abs=1e-2)


def test_radical_means_are_a_decreasing_scale():
    fam = radical_family().with_window(np.exp(-5.), np.exp(5.))
    rng = random_generator(7)
    for _ in range(20):
        a, w = _random_sample(rng, .5, 5.)
        curve = scale.mean_curve(fam, a, w, fam.t_grid(50))
        assert (curve['error'] == '').all()
        assert (np.diff(curve['mean']) < 0).all()

        s = rng.uniform(-4., 4.)
        target = fam.mean(np.exp(s), a, w)
        assert abs(np.log(scale.solve_scale(fam, a, w, target).t_star) - s) <= 1e-6


def test_x_pow_alpha_x_verdicts():
    upper = x_pow_alpha_x_family().with_x_window(INV_E + .01, 10.)
    lower = x_pow_alpha_x_family(core.Interval(0., INV_E)).with_x_window(.01, INV_E - .01)
    assert scale.verify_scale(upper).verdict == scale.INCREASING_SCALE
    assert scale.verify_scale(lower).verdict == scale.DECREASING_SCALE

    g = upper.make(0.)
    for x in random_generator(12).uniform(INV_E + .01, 10., 200):
        expected = 1. / (x * (np.log(x) + 1.))
        assert aop.a_operator(g, x) == pytest.approx(expected, rel=1e-8)


def test_affine_invariance():
    rng = random_generator(13)
    samples = [_random_sample(rng, .5, 5.) for _ in range(20)]
    for _ in range(20):
        alpha = rng.uniform(.1, 10.) * rng.choice([-1., 1.])
        beta = rng.uniform(-10., 10.)
        for g in (core.logarithm(), core.power(2), core.exponential()):
            shifted = g.affine(alpha, beta)
            for a, w in samples:
                assert abs(core.evaluate_mean(shifted, a, w) - core.evaluate_mean(g, a, w)) <= 1e-10
            fit = aop.fit_affine(shifted, g, interval=core.Interval.closed(.5, 5.))
            assert fit.equivalent
            assert fit.alpha == pytest.approx(alpha, rel=1e-6)
            assert fit.beta == pytest.approx(beta, rel=1e-6, abs=1e-9)


def _run_twice(runner, args):
    first = runner.invoke(qmeans, args)
    second = runner.invoke(qmeans, args)
    assert first.exit_code == 0, first.stderr
    assert first.stdout == second.stdout
    return json.loads(first.stdout)


def test_cli_matches_library(runner, sample_csv):
    a, w = (1., 4.), (.5, .5)

    report = _run_twice(runner, ['eval', '--family', 'power:2', '--data', sample_csv])
    assert report['mean'] == core.evaluate_mean(power_family().make(2.), a, w)

    report = _run_twice(runner, ['solve', '--family', 'radical', '--data', sample_csv, '--target', '2'])
    assert report['t_star'] == scale.solve_scale(radical_family(), a, w, 2.).t_star

    report = _run_twice(runner, ['compare', '--f', 'power:3', '--g', 'power:2'])
    verdict = aop.compare_means(power_family().make(3.), power_family().make(2.), grid_size=64, seed=DEFAULT_SEED)
    assert report['relation'] == verdict.relation
    assert report['max_difference'] == verdict.max_difference

    report = _run_twice(runner, ['verify', '--family', 'power', '--x-grid', '16', '--t-grid', '16'])
    expected = scale.verify_scale(power_family(), x_grid=16, t_grid=16, seed=DEFAULT_SEED)
    assert report['verdict'] == expected.verdict
    assert report['continuity_gap'] == expected.continuity_gap

    report = _run_twice(runner, ['curve', '--family', 'power', '--data', sample_csv, '--points', '7'])
    table = scale.mean_curve(power_family(), a, w, power_family().t_grid(7))
    assert [row['mean'] for row in report['points']] == table['mean'].tolist()

    report = _run_twice(runner, ['bound', '--f', 'power:2', '--k', 'power:2.1', '--interval', '1,2',
                                 '--samples', '200'])
    U = core.Interval.closed(1., 2.)
    f, k = power_family().make(2.), power_family().make(2.1)
    assert report['bound'] == aop.error_bound(f, k, U).bound
    assert report['empirical_gap'] == aop.empirical_mean_gap(f, k, U, n_samples=200, seed=DEFAULT_SEED)
    assert report['bound'] >= report['empirical_gap']
