"""Entry points for quasi-arithmetic means and their scales."""
import json
import sys

import click
from loguru import logger

from quasi_mean_scales import runner
from quasi_mean_scales.errors import QuasiMeanError, ValidationError
from quasi_mean_scales.families import FAMILIES
from quasi_mean_scales.settings import FamilySpec, build_config
from quasi_mean_scales.utils import MIN_GRID_SIZE

LOG_FORMAT = '<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>'


def configure_logging_to_terminal(verbose: int):
    """Single stderr sink: warnings by default, info with -v, debug with -vv."""
    logger.remove()
    level = {0: 'WARNING', 1: 'INFO'}.get(verbose, 'DEBUG')
    logger.add(sys.stderr, level=level, format=LOG_FORMAT, colorize=False)


class FamilyType(click.ParamType):
    name = 'family'

    def convert(self, value, param, ctx):
        if isinstance(value, FamilySpec):
            return value
        try:
            return FamilySpec.parse(value)
        except ValidationError as e:
            self.fail(f'{e} Built-ins: {", ".join(FAMILIES)}.', param, ctx)


class PairType(click.ParamType):
    name = 'lo,hi'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            lo, hi = (float(v) for v in value.split(','))
        except ValueError:
            self.fail(f'{value!r} is not of the form lo,hi.', param, ctx)
        if not lo < hi:
            self.fail(f'{value!r} needs lo < hi.', param, ctx)
        return lo, hi


FAMILY = FamilyType()
PAIR = PairType()
POSITIVE = click.FloatRange(min=0., min_open=True)
GRID = click.IntRange(min=MIN_GRID_SIZE)

family_option = click.option('--family', type=FAMILY, help=f'Family as name[:param]; one of {", ".join(FAMILIES)}.')
data_option = click.option('--data', 'data_path', type=click.Path(dir_okay=False),
                           help='CSV with a value column and an optional weight column.')
window_option = click.option('--window', type=PAIR, help='Parameter window lo,hi.')
tolerance_options = [
    click.option('--atol', type=POSITIVE, help='Absolute inversion tolerance.'),
    click.option('--rtol', type=POSITIVE, help='Relative inversion tolerance.'),
]


def _apply(options):
    def decorator(func):
        for option in reversed(options):
            func = option(func)
        return func
    return decorator


def _execute(ctx: click.Context, command: str, **options):
    shared = ctx.obj
    try:
        config = build_config(command, shared['settings'],
                              output_format=shared['output_format'], seed=shared['seed'],
                              n_workers=shared['n_workers'], progress=shared['progress'] or None,
                              **options)
    except QuasiMeanError as e:
        click.echo(json.dumps({'code': e.code, 'message': str(e)}, sort_keys=True), err=True)
        ctx.exit(e.exit_code)
    ctx.exit(runner.run(config))


@click.group()
@click.option('-v', '--verbose', count=True, help='Log more (-v info, -vv debug).')
@click.option('--settings', type=click.Path(exists=True, dir_okay=False), help='YAML file of run settings.')
@click.option('--format', 'output_format', type=click.Choice(['json', 'csv']), help='Report format.')
@click.option('--seed', type=click.INT, help='Seed for random comparison points and Monte-Carlo samples.')
@click.option('--workers', 'n_workers', type=click.IntRange(min=1), help='Threads for grid evaluation.')
@click.option('--progress', is_flag=True, help='Show progress bars on stderr.')
@click.pass_context
def qmeans(ctx, verbose, settings, output_format, seed, n_workers, progress):
    """Quasi-arithmetic means, their comparison and their scales."""
    configure_logging_to_terminal(verbose)
    ctx.obj = {'settings': settings, 'output_format': output_format, 'seed': seed,
               'n_workers': n_workers, 'progress': progress}


@qmeans.command(name='eval')
@family_option
@data_option
@_apply(tolerance_options)
@click.pass_context
def eval_mean(ctx, family, data_path, atol, rtol):
    """Mean of the data under one family member (e.g. --family power:2)."""
    _execute(ctx, 'eval', family=family, data_path=data_path, atol=atol, rtol=rtol)


@qmeans.command()
@family_option
@data_option
@click.option('--target', type=click.FLOAT, help='Mean value to hit.')
@window_option
@_apply(tolerance_options)
@click.pass_context
def solve(ctx, family, data_path, target, window, atol, rtol):
    """Parameter of the family whose mean of the data equals the target."""
    _execute(ctx, 'solve', family=family, data_path=data_path, target=target, window=window,
             atol=atol, rtol=rtol)


@qmeans.command()
@click.option('--f', 'f', type=FAMILY, help='First generator as name:param.')
@click.option('--g', 'g', type=FAMILY, help='Second generator as name:param.')
@click.option('--interval', type=PAIR, help='Common interval lo,hi when the domains differ.')
@click.option('--grid-size', type=GRID, help='Uniform grid points (random points are added).')
@click.pass_context
def compare(ctx, f, g, interval, grid_size):
    """Order the means of two generators through A = f''/f'."""
    _execute(ctx, 'compare', f=f, g=g, interval=interval, grid_size=grid_size)


@qmeans.command()
@family_option
@window_option
@click.option('--x-grid', type=GRID, help='Points in the sampling window.')
@click.option('--t-grid', type=GRID, help='Points in the parameter window.')
@click.pass_context
def verify(ctx, family, window, x_grid, t_grid):
    """Grid evidence that a family generates a scale."""
    _execute(ctx, 'verify', family=family, window=window, x_grid=x_grid, t_grid=t_grid)


@qmeans.command()
@family_option
@data_option
@window_option
@click.option('--points', 'n_points', type=click.IntRange(min=2), help='Parameter points across the window.')
@_apply(tolerance_options)
@click.pass_context
def curve(ctx, family, data_path, window, n_points, atol, rtol):
    """Mean of the data across the parameter window."""
    _execute(ctx, 'curve', family=family, data_path=data_path, window=window, n_points=n_points,
             atol=atol, rtol=rtol)


@qmeans.command()
@click.option('--f', 'f', type=FAMILY, help='Reference generator as name:param.')
@click.option('--k', 'k', type=FAMILY, help='Approximating generator as name:param.')
@click.option('--interval', type=PAIR, help='Compact interval lo,hi.')
@click.option('--samples', 'n_samples', type=click.IntRange(min=1), help='Monte-Carlo samples for the empirical gap.')
@click.pass_context
def bound(ctx, f, k, interval, n_samples):
    """Uniform bound on the distance between the means of two generators."""
    _execute(ctx, 'bound', f=f, k=k, interval=interval, n_samples=n_samples)
