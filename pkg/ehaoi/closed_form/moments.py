"""First and second AoI moments.

`moments_b2` evaluates the explicit polynomial expressions that exist for a
two-packet battery. `moments_from_mgf` differentiates the closed-form MGF
numerically and works for any battery size.
"""

import logging
from typing import Tuple

import numpy as np

from ..chains import Discipline, equal_load
from ..errors import PreconditionError
from ..params import SystemParams, derive
from ..shs import moment_from_mgf
from .mgf import mgf_closed, mgf_domain_bound_closed

logger = logging.getLogger(__name__)

# Largest initial Ridders step, as a fraction of the domain bound.
_STEP_FRACTION = 0.5
_MAX_STEP = 0.1


def _wp(rho, rho1, rho_o, beta, mu, as_printed):
  if equal_load(rho, beta):
    # The printed first-moment expression carries 4 rho^4 where 4 rho^2 belongs.
    quartic = 4 * rho**4 if as_printed else 4 * rho**2
    first = (
      rho1**2 + 4 * rho1 * rho**3 + 2 * rho_o * rho + rho**2 * (quartic + 12 * rho + 7)
    ) / (2 * mu * rho1 * rho**2 * (3 + 2 * rho))
    zeta0 = rho**3 * (8 * rho**3 + 36 * rho**2 + 28 * rho + 15)
    second = (
      2 * rho1**3 * (1 + rho)
      + rho1**2 * rho * (8 * rho**3 + 2 * rho + 3)
      + 8 * rho1 * rho**5
      + 2 * rho_o * rho**2 * (6 + 13 * rho)
      + zeta0
    ) / (2 * mu**2 * rho1**2 * rho**3 * (3 + 2 * rho))
    return first, second

  gamma = [
    rho1 * rho + (1 + rho) ** 2,
    3 * rho1 * rho**2 + 3 * rho * (1 + rho) ** 2,
    rho1**2 + rho1 * rho * (3 * rho**2 - 2) + rho**2 * (1 + rho) * (5 + 3 * rho),
    rho1**2 * rho + rho1 * rho**2 * (rho**2 - 2) + rho**3 * (1 + rho) * (5 + rho),
    rho**4 * (3 + 2 * rho),
    rho**5,
  ]
  psi = [
    rho1**2 * rho + rho1 * (rho**2 - 1) + (1 + rho) ** 3,
    4 * rho1**2 * rho**2 + 4 * rho1 * rho * (rho**2 - 1) + 4 * rho * (1 + rho) ** 3,
    rho1**3
    + rho1**2 * (6 * rho**3 + rho + 2)
    + 2 * rho1 * rho * (3 * rho**3 - 6 * rho - 2)
    + 3 * rho**2 * (1 + rho) ** 2 * (3 + 2 * rho),
    2 * rho1**3 * (1 + rho)
    + rho1**2 * rho * (4 * rho**3 + 2 * rho + 1)
    + 2 * rho1 * rho**2 * (2 * rho**3 - 9 * rho - 4)
    + rho**3 * (1 + rho) ** 2 * (13 + 4 * rho),
    rho1**3 * rho * (2 + rho)
    + rho1**2 * rho**2 * (rho**3 + rho + 1)
    + rho1 * rho**3 * (rho**3 - 12 * rho - 8)
    + rho**4 * (rho**3 + 12 * rho**2 + 24 * rho + 13),
    2 * rho1**2 * rho**3 - 4 * rho1 * rho**4 * (1 + rho) + 3 * rho**5 * (1 + rho) * (3 + rho),
    rho**6 * (4 + 3 * rho) - rho1 * rho**6,
    rho**7,
  ]
  shared = rho**2 + beta * (1 + rho) * (beta + rho)
  first = np.polyval(gamma, beta) / (mu * rho1 * beta * (beta + rho) ** 2 * shared)
  second = 2 * np.polyval(psi, beta) / (mu**2 * rho1**2 * beta**2 * (beta + rho) ** 3 * shared)
  return first, second


def _ps(rho, rho1, rho_o, beta, mu, as_printed):
  if equal_load(rho, beta):
    first = (
      rho1**2 * (1 + rho)
      + 2 * rho_o * rho * (rho**2 + rho + 1)
      + rho**2 * (4 * rho**3 + 14 * rho**2 + 19 * rho + 7)
    ) / (2 * mu * rho1 * rho**2 * (1 + rho) * (3 + 2 * rho))
    zeta1 = 2 * rho**2 * (1 + rho) * (8 * rho**3 + 22 * rho**2 + 19 * rho + 6)
    zeta0 = rho**3 * (1 + rho) * (3 + 2 * rho) * (4 * rho**3 + 8 * rho**2 + 11 * rho + 5)
    second = (
      2 * rho1**3 * (1 + rho) * (1 + 2 * rho)
      + rho1**2 * rho * (2 * rho**3 + 11 * rho**2 + 8 * rho + 3)
      + rho_o * zeta1
      + zeta0
    ) / (2 * mu**2 * rho1**2 * rho**3 * (1 + rho) ** 2 * (3 + 2 * rho))
    return first, second

  gamma = [
    (1 + rho) ** 3,
    3 * rho * (1 + rho) ** 3,
    rho1**2 * (1 + rho)
    - rho1 * rho * (rho**2 + 2 * rho + 2)
    + rho**2 * (1 + rho) ** 2 * (5 + 3 * rho),
    rho1**2 * rho * (1 + rho)
    - 2 * rho1 * rho**2 * (rho**2 + rho + 1)
    + rho**3 * (1 + rho) ** 2 * (5 + rho),
    rho**4 * (1 + rho) * (3 + 2 * rho) - rho1 * rho**5,
    rho**5 * (1 + rho),
  ]
  psi = [
    (1 + rho) ** 5 - rho1 * (1 + rho) ** 3,
    4 * rho * (1 + rho) ** 5 - 4 * rho1 * rho * (1 + rho) ** 3,
    rho1**3 * (1 + rho)
    + rho1**2 * (2 * rho**3 + 6 * rho**2 + 5 * rho + 2)
    - 4 * rho1 * rho * (1 + rho) * (2 * rho**3 + 5 * rho**2 + 4 * rho + 1)
    + 3 * rho**2 * (1 + rho) ** 4 * (3 + 2 * rho),
    2 * rho1**3 * (1 + rho) * (1 + 2 * rho)
    + rho1**2 * rho * (3 * rho**3 + 9 * rho**2 + 4 * rho + 1)
    - 2 * rho1 * rho**2 * (1 + rho) * (5 * rho**3 + 14 * rho**2 + 13 * rho + 4)
    + rho**3 * (1 + rho) ** 2 * (4 * rho**3 + 21 * rho**2 + 30 * rho + 13),
    rho1**3 * rho * (1 + rho) * (2 + 3 * rho)
    + rho1**2 * rho**2 * (5 * rho**2 + 3 * rho + 1)
    - rho1 * rho**3 * (1 + rho) * (7 * rho**3 + 20 * rho**2 + 20 * rho + 8)
    + rho**4 * (1 + rho) ** 2 * (rho**3 + 12 * rho**2 + 24 * rho + 13),
    rho1**2 * rho**3 * (-(rho**3) + 2 * rho**2 + 4 * rho + 2)
    - 2 * rho1 * rho**4 * (1 + rho) * (rho**3 + 4 * rho**2 + 4 * rho + 2)
    + 3 * rho**5 * (1 + rho) ** 3 * (3 + rho),
    rho**6 * (1 + rho) ** 2 * (4 + 3 * rho) - rho1 * rho**6 * (1 + rho) * (1 + 2 * rho),
    rho**7 * (1 + rho) ** 2,
  ]
  shared = rho**2 + beta * (1 + rho) * (beta + rho)
  first = np.polyval(gamma, beta) / (mu * rho1 * beta * (1 + rho) * (beta + rho) ** 2 * shared)
  second = (
    2
    * np.polyval(psi, beta)
    / (mu**2 * rho1**2 * beta**2 * (beta + rho) ** 3 * (1 + rho) ** 2 * shared)
  )
  return first, second


def _sa(rho, rho1, rho_o, beta, mu, as_printed):
  if equal_load(rho, beta):
    # The printed first-moment numerator omits the 2 rho_1 rho term.
    missing = 0.0 if as_printed else 2 * rho1 * rho
    first = (
      rho1**3
      + rho1**2
      + rho1 * rho**2 * (4 * rho**2 + 10 * rho + 7)
      + rho**2 * (4 * rho**2 + 12 * rho + 5)
      + 2 * rho_o * rho * (rho1 * (3 * rho + 1) + 2)
      + missing
    ) / (2 * mu * rho1 * rho**2 * (1 + rho1) * (3 + 2 * rho))
    zeta = [
      rho**3 * (8 * rho**3 + 36 * rho**2 + 54 * rho + 15),
      rho**3 * (16 * rho**3 + 62 * rho**2 + 61 * rho + 6),
      rho * (8 * rho**5 + 20 * rho**4 + 3),
      2 * (4 * rho + 1),
      6 * rho**2 + 5 * rho + 4,
      2.0,
    ]
    numerator = (
      sum(rho1**n * z for n, z in enumerate(zeta))
      + rho_o * rho1**2 * rho**2 * (24 * rho**2 + 74 * rho + 8)
      + rho_o**2 * rho1 * rho**2 * (18 * rho + 4)
      + rho_o * rho1 * rho**2 * (43 * rho + 22)
      + rho_o * 12 * rho**2
    )
    second = numerator / (2 * mu**2 * rho1**2 * rho**3 * (1 + rho1) ** 2 * (3 + 2 * rho))
    return first, second

  gamma = [
    -(rho1**2) + rho1 * (rho**2 + 3 * rho + 1) + (1 + rho) ** 2,
    -3 * rho1**2 * rho + 3 * rho1 * rho * (rho**2 + 3 * rho + 1) + 3 * rho * (1 + rho) ** 2,
    rho1**3
    + rho1**2 * (-4 * rho**2 - 2 * rho + 1)
    + rho1 * rho * (3 * rho**3 + 11 * rho**2 + 5 * rho - 2)
    + rho**2 * (1 + rho) * (5 + 3 * rho),
    rho1**3 * rho
    - rho1**2 * rho * (1 + rho) * (3 * rho - 1)
    + rho1 * rho**2 * (rho**3 + 7 * rho**2 + 5 * rho - 2)
    + rho**3 * (1 + rho) * (5 + rho),
    -(rho1**2) * rho**4 + rho**4 * (2 * rho + 3) * (1 + rho1),
    rho**5 * (1 + rho1),
  ]
  psi7 = (
    -(rho1**3) * (3 + 2 * rho)
    + rho1**2 * (rho**3 + 4 * rho**2 + 2 * rho - 2)
    + rho1 * (1 + rho) * (2 * rho**2 + 5 * rho + 1)
    + (1 + rho) ** 3
  )
  psi = [
    psi7,
    4 * rho * psi7,
    3 * rho1**4 * (1 + rho)
    - rho1**3 * (14 * rho**3 + 27 * rho**2 - 5)
    + rho1**2 * (6 * rho**5 + 27 * rho**4 + 16 * rho**3 - 23 * rho**2 - 7 * rho + 2)
    + 2 * rho1 * rho * (6 * rho**4 + 24 * rho**3 + 24 * rho**2 + 3 * rho - 2)
    + 3 * rho**2 * (3 + 2 * rho) * (1 + rho) ** 2,
    2 * rho1**5
    + rho1**4 * (6 * rho**2 + 3 * rho + 4)
    - rho1**3 * (14 * rho**4 + 35 * rho**3 - 4 * rho - 2)
    + rho1**2 * rho * (4 * rho**5 + 25 * rho**4 + 20 * rho**3 - 33 * rho**2 - 14 * rho + 1)
    + 2 * rho1 * rho**2 * (4 * rho**4 + 23 * rho**3 + 30 * rho**2 + 4 * rho - 4)
    + rho**3 * (13 + 4 * rho) * (1 + rho) ** 2,
    2 * rho1**5 * rho
    + rho1**4 * rho * (3 * rho**2 + 2 * rho + 4)
    - rho1**3 * rho * (8 * rho**4 + 24 * rho**3 + 4 * rho**2 - 3 * rho - 2)
    + rho1**2 * rho**2 * (rho**5 + 13 * rho**4 + 17 * rho**3 - 19 * rho**2 - 15 * rho + 1)
    + rho1 * rho**3 * (2 * rho**4 + 25 * rho**3 + 48 * rho**2 + 14 * rho - 8)
    + rho**4 * (1 + rho) * (rho**2 + 11 * rho + 13),
    2 * rho1**4 * rho**3
    - rho1**3 * rho**3 * (2 * rho**3 + 9 * rho**2 + 4 * rho - 4)
    + rho1**2 * rho**3 * (3 * rho**4 + 10 * rho**3 - 3 * rho**2 - 8 * rho + 2)
    + 2 * rho1 * rho**4 * (3 * rho**3 + 12 * rho**2 + 7 * rho - 2)
    + 3 * rho**5 * (1 + rho) * (3 + rho),
    -2 * rho1**3 * rho**6
    + rho1**2 * rho**6 * (1 + 3 * rho)
    + rho1 * rho**6 * (7 + 6 * rho)
    + rho**6 * (4 + 3 * rho),
    rho**7 * (1 + rho1) ** 2,
  ]
  shared = rho**2 + beta * (1 + rho) * (beta + rho)
  first = np.polyval(gamma, beta) / (mu * rho1 * beta * (1 + rho1) * (beta + rho) ** 2 * shared)
  second = (
    2
    * np.polyval(psi, beta)
    / (mu**2 * rho1**2 * beta**2 * (beta + rho) ** 3 * (1 + rho1) ** 2 * shared)
  )
  return first, second


def moments_b2(
  discipline: Discipline, params: SystemParams, source: int = 1, as_printed: bool = False
) -> Tuple[float, float]:
  """First and second AoI moments from the explicit two-packet-battery formulas.

  Args:
    discipline: Queueing discipline.
    params: System parameters; battery_capacity must be 2.
    source: 1-based source of interest.
    as_printed: Use the first-moment rho == beta expressions exactly as
      printed. Two of them (WP and SA) disagree with the chain solution; the
      default evaluates the corrected forms.

  Raises:
    PreconditionError: the battery capacity is not 2.
  """
  discipline = Discipline(discipline)
  if params.battery_capacity != 2:
    raise PreconditionError(
      f'explicit moment formulas need battery_capacity=2, got {params.battery_capacity}'
    )
  rates = derive(params, source)
  evaluators = {Discipline.WP: _wp, Discipline.PS: _ps, Discipline.SA: _sa}
  first, second = evaluators[discipline](
    rates.server_utilization,
    rates.source_utilization,
    rates.other_utilization,
    rates.energy_utilization,
    rates.service_rate,
    as_printed,
  )
  return float(first), float(second)


def moments_from_mgf(
  discipline: Discipline, params: SystemParams, source: int = 1
) -> Tuple[float, float]:
  """First and second AoI moments by differentiating the closed-form MGF at 0."""
  discipline = Discipline(discipline)
  bound = mgf_domain_bound_closed(discipline, params, source)
  step = min(_MAX_STEP, _STEP_FRACTION * bound)

  def fn(s_bar: float) -> float:
    return mgf_closed(discipline, params, source, s_bar, bound=bound)

  mu = params.service_rate
  first = moment_from_mgf(fn, 1, mu, step)
  second = moment_from_mgf(fn, 2, mu, step)
  logger.debug(f'{discipline.value} moments from MGF: ({first:.10g}, {second:.10g})')
  return first, second
