"""Cross-source metrics: Jain's fairness index, sum-AoI and the rate split rule."""

import math
from typing import List, Sequence

from .errors import ParameterError

# Share of the non-interest load given to source 2 when N >= 3.
SECOND_SOURCE_SHARE = 0.1


def _check_means(means: Sequence[float]) -> None:
  if len(means) == 0:
    raise ParameterError('at least one average AoI is required')
  if any(not math.isfinite(m) or m <= 0 for m in means):
    raise ParameterError(f'average AoI values must be finite and positive, got {list(means)}')


def jfi(means: Sequence[float]) -> float:
  """Jain's fairness index (sum)^2 / (N * sum of squares); lies in [1/N, 1]."""
  _check_means(means)
  total = math.fsum(means)
  squares = math.fsum(m * m for m in means)
  return total * total / (len(means) * squares)


def sum_aoi(means: Sequence[float]) -> float:
  """Sum of the per-source average AoI values."""
  _check_means(means)
  return math.fsum(means)


def split_rates(rho: float, rho_1: float, n_sources: int, mu: float = 1.0) -> List[float]:
  """Per-source arrival rates for a total load rho with source 1 carrying rho_1.

  Source 2 takes SECOND_SOURCE_SHARE of the remaining load when N >= 3 and the
  rest is spread evenly over sources 3..N.
  """
  if n_sources < 1:
    raise ParameterError(f'n_sources must be >= 1, got {n_sources}')
  if rho <= 0 or mu <= 0:
    raise ParameterError('rho and mu must be positive')
  if n_sources == 1:
    return [rho * mu]
  if not 0 < rho_1 < rho:
    raise ParameterError(f'rho_1 must lie in (0, rho={rho}), got {rho_1}')
  rest = rho - rho_1
  if n_sources == 2:
    loads = [rho_1, rest]
  else:
    each = (1 - SECOND_SOURCE_SHARE) * rest / (n_sources - 2)
    loads = [rho_1, SECOND_SOURCE_SHARE * rest] + [each] * (n_sources - 2)
  return [load * mu for load in loads]
