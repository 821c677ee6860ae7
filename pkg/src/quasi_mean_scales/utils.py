from multiprocessing.pool import ThreadPool
import sys
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np
import tqdm

# inversion
ATOL = 1e-12
RTOL = 1e-10
BISECT_WIDTH = 1e-8
NEWTON_STEPS = 5
MAX_BISECTIONS = 200

# open endpoints and unbounded intervals
INSET = 1e-9
SAMPLING_SPAN = 100.

# weights
WEIGHT_NORMALIZE_TOL = 1e-6

# A operator
DF_FLOOR = 1e-300
A_TOL = 1e-9
NOISE_FLOOR = 1e-13
AFFINE_TOL = 1e-8
N_RANDOM_POINTS = 64
MIN_GRID_SIZE = 16

# quadrature
QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-8
QUAD_MAX_DEPTH = 40

# scales
DIVERGENCE_THRESHOLD = 1e6
LIMIT_TOL = 1e-6
MAX_EXPANSIONS = 60
SOLVE_TOL = 1e-9
MAX_SOLVE_ITER = 200
LOG_WINDOW = 50.
LINEAR_WINDOW = 50.

DEFAULT_SEED = 20110531


class KahanSum:
    """Running compensated sum of a sequence of floats."""

    def __init__(self):
        self.total = 0.
        self.carry = 0.

    def add(self, value: float):
        value -= self.carry
        previous = self.total
        self.total = previous + value
        self.carry = (self.total - previous) - value

    def extend(self, values: Iterable[float]):
        for value in values:
            self.add(value)
        return self


def kahan_sum(values: Iterable[float]) -> float:
    return KahanSum().extend(values).total


def inset_width(lo: float, hi: float) -> float:
    """Distance kept from an open endpoint."""
    width = hi - lo
    if not np.isfinite(width):
        return INSET
    return max(INSET, INSET * width)


def random_generator(seed: int = None) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def sign_changes(values: Sequence[float]) -> List[Tuple[int, int]]:
    """Index pairs of consecutive entries with strictly opposite signs."""
    values = np.asarray(values)
    return [(i, i + 1) for i in range(values.size - 1) if values[i] * values[i + 1] < 0]


def parallel_map(func: Callable, items: Sequence, n_workers: int = 1,
                 progress: bool = False, desc: str = None) -> List:
    """Map `func` over `items`, keeping input order.

    Threads are used so that closures over generators need no pickling;
    ``imap`` returns results in submission order, which keeps the assembly
    deterministic for any worker count.
    """
    items = list(items)
    if n_workers is None or n_workers <= 1:
        iterator = map(func, items)
        return list(tqdm.tqdm(iterator, total=len(items), file=sys.stderr, desc=desc, disable=not progress))
    with ThreadPool(n_workers) as p:
        return list(tqdm.tqdm(p.imap(func, items), total=len(items), file=sys.stderr,
                              desc=desc, disable=not progress))
