"""High-accuracy reductions for energy bookkeeping.

Energy-inequality residuals are the primary acceptance signal, so spatial
sums run in 80-bit extended precision (pairwise under the hood) and time
accumulations go through math.fsum, which is exact.
"""

import math

import numpy as np

# np.longdouble is 80-bit extended on x86 Linux; on platforms where it
# aliases float64 this degrades to pairwise float64 summation, which is
# still far below the tolerances used anywhere in the code.
_ACC = np.longdouble


def esum(a) -> float:
    """Sum of all entries of `a` in extended precision."""
    return float(np.sum(np.asarray(a, dtype=_ACC)))


def fsum(values) -> float:
    """Exact sum of a (small) iterable of floats."""
    return math.fsum(values)
