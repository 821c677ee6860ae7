__all__ = [
    "__title__", "__summary__", "__uri__", "__version__", "__author__",
    "__email__", "__license__", "__copyright__",
]

__title__ = "quasi-mean-scales"
__summary__ = "Quasi-arithmetic means, the A = f''/f' operator, and scales of means."
__uri__ = ""

__version__ = "0.1.0"

__author__ = "quasi-mean-scales developers"
__email__ = ""

__license__ = "GNU GPLv3"
__copyright__ = f"Copyright 2026 {__author__}"
