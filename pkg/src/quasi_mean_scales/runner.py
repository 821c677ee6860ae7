import json
import sys
from typing import Dict, TextIO

from loguru import logger

from quasi_mean_scales import aop, core, data, scale, summarize
from quasi_mean_scales.core import Interval
from quasi_mean_scales.errors import QuasiMeanError
from quasi_mean_scales.settings import RunConfig


def _tolerances(config: RunConfig) -> Dict[str, float]:
    return {'atol': config.atol, 'rtol': config.rtol}


def evaluate(config: RunConfig) -> Dict:
    a, w = data.ingest_sample(config.data_path)
    g = config.family.generator()
    return {
        'command': 'eval',
        'family': str(config.family),
        'n': len(a),
        'push': core.weighted_push(g, a, w),
        'mean': core.evaluate_mean(g, a, w, **_tolerances(config)),
        'min': a.minimum,
        'max': a.maximum,
    }


def solve(config: RunConfig) -> Dict:
    a, w = data.ingest_sample(config.data_path)
    fam = config.family.family(config.window)
    result = scale.solve_scale(fam, a, w, config.target, **_tolerances(config))
    return {
        'command': 'solve',
        'family': str(config.family),
        'target': config.target,
        'bounds': fam.bounds,
        **result._asdict(),
    }


def compare(config: RunConfig) -> Dict:
    interval = Interval.closed(*config.interval) if config.interval else None
    verdict = aop.compare_means(config.f.generator(), config.g.generator(), grid_size=config.grid_size,
                                interval=interval, seed=config.seed)
    return {
        'command': 'compare',
        'f': str(config.f),
        'g': str(config.g),
        'interval': config.interval,
        **verdict._asdict(),
    }


def verify(config: RunConfig) -> Dict:
    fam = config.family.family(config.window)
    report = scale.verify_scale(fam, x_grid=config.x_grid, t_grid=config.t_grid,
                                n_workers=config.n_workers, progress=config.progress, seed=config.seed)
    evidence = scale.reverse_evidence(fam, x_grid=config.x_grid, t_grid=config.t_grid, report=report,
                                      n_workers=config.n_workers, progress=config.progress)
    return {
        'command': 'verify',
        **dict(scale.scale_summary(report)),
        'n_failures': len(report.failures),
        'reverse_fraction': evidence.fraction,
        'x_grid': config.x_grid,
        't_grid': config.t_grid,
        'seed': config.seed,
    }


def curve(config: RunConfig) -> Dict:
    a, w = data.ingest_sample(config.data_path)
    fam = config.family.family(config.window)
    table = scale.mean_curve(fam, a, w, fam.t_grid(config.n_points), n_workers=config.n_workers,
                             progress=config.progress, **_tolerances(config))
    return {
        'command': 'curve',
        'family': str(config.family),
        'points': table,
    }


def bound(config: RunConfig) -> Dict:
    U = Interval.closed(*config.interval)
    f, k = config.f.generator(), config.k.generator()
    certificate = aop.error_bound(f, k, U)
    return {
        'command': 'bound',
        'f': str(config.f),
        'k': str(config.k),
        'interval': config.interval,
        **certificate._asdict(),
        'empirical_gap': aop.empirical_mean_gap(f, k, U, n_samples=config.n_samples, seed=config.seed),
        'n_samples': config.n_samples,
        'seed': config.seed,
    }


COMMANDS = {
    'eval': evaluate,
    'solve': solve,
    'compare': compare,
    'verify': verify,
    'curve': curve,
    'bound': bound,
}


def render(config: RunConfig, report: Dict) -> str:
    if config.output_format == 'csv':
        return summarize.to_csv(report, table_key='points' if config.command == 'curve' else None)
    return summarize.to_json(report)


def run(config: RunConfig, out: TextIO = None, err: TextIO = None) -> int:
    """Execute `config`, write the report to `out` and return the exit code.

    Library errors are written to `err` as ``{"code": ..., "message": ...}``
    and mapped to their exit code.
    """
    out = out or sys.stdout
    err = err or sys.stderr
    logger.debug(f'Running {config.command}.')
    try:
        report = COMMANDS[config.command](config)
    except QuasiMeanError as e:
        logger.debug(f'{config.command} failed: {e!r}')
        err.write(json.dumps({'code': e.code, 'message': str(e)}, sort_keys=True) + '\n')
        return e.exit_code
    out.write(render(config, report))
    return 0
