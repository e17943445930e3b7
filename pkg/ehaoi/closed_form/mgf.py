"""Closed-form MGF of the AoI and its domain of convergence.

The public argument is the normalized exponent sbar = s / mu.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ..chains import Discipline, equal_load
from ..errors import ConvergenceRegionError, SingularSystemError
from ..params import DerivedRates, SystemParams, derive
from .average import stationary_weights
from .recursions import CVariant, c_constants

logger = logging.getLogger(__name__)

# Grid resolution of the sign-loss scan over the c^s recursion.
_SCAN_POINTS = 200


def theta(params: SystemParams) -> float:
  """Sum of (beta / rho)^k over k = 1..B, in closed form."""
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  b = params.battery_capacity
  if equal_load(rho, beta):
    return float(b)
  return beta * (beta**b - rho**b) / (rho**b * (beta - rho))


def _single_numerator(params: SystemParams, s_bar: float) -> float:
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  t = theta(params)
  return t * s_bar**2 - t * (1 + rho + beta) * s_bar + beta * (1 + t + t * rho)


def _mgf_single(discipline: Discipline, params: SystemParams, s_bar: float) -> float:
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  pi1 = stationary_weights(params)[0]
  numerator = rho * pi1 * _single_numerator(params, s_bar)
  if discipline is Discipline.WP:
    return numerator / ((1 - s_bar) ** 2 * (rho - s_bar) * (beta - s_bar))
  return (1 + rho) * numerator / ((1 - s_bar) * (rho - s_bar) * (1 + rho - s_bar) * (beta - s_bar))


def _min_constant(params: SystemParams, source: int, s_bar: float) -> float:
  constants = c_constants(CVariant.C_S, params, source, s=s_bar * params.service_rate)
  return min(constants.values)


def _quadratic_root(rates: DerivedRates) -> float:
  # Smaller root of (1 - x)(rho - x) - rho_o; it always lies in (0, 1).
  rho, rho1 = rates.server_utilization, rates.source_utilization
  return ((1 + rho) - math.sqrt((1 + rho) ** 2 - 4 * rho1)) / 2


def mgf_domain_bound_closed(discipline: Discipline, params: SystemParams, source: int = 1) -> float:
  """Normalized exponent at which the closed-form MGF first loses validity.

  The bound is the smaller root of the common denominator factor, lowered to
  the first sign loss of the c^s recursion if that comes earlier.
  """
  discipline = Discipline(discipline)
  rates = derive(params, source)
  if rates.single_source:
    return min(1.0, rates.server_utilization, rates.energy_utilization)

  root = _quadratic_root(rates)

  def smallest(x: float) -> float:
    return _min_constant(params, source, x)

  previous = 0.0
  for x in np.linspace(0.0, root, _SCAN_POINTS + 1)[1:]:
    try:
      value = smallest(float(x))
    except SingularSystemError:
      return float(x)
    if value <= 0.0:
      if value == 0.0:
        return float(x)
      bound = brentq(smallest, previous, float(x), xtol=1e-12)
      logger.debug(f'c^s sign loss at sbar={bound:.9g} before the quadratic root {root:.9g}')
      return float(bound)
    previous = float(x)
  return root


def _mgf_multi(discipline: Discipline, params: SystemParams, rates: DerivedRates, s_bar: float):
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  rho_o = rates.other_utilization
  b = params.battery_capacity
  weights = stationary_weights(params)
  variant = CVariant.C_BAR_S if discipline is Discipline.SA else CVariant.C_S
  products = c_constants(variant, params, rates.source, s=s_bar * mu).products()
  x = mu * rho_o / (1 - s_bar)
  denominator = (1 - s_bar) * (rho - s_bar) - rho_o
  charged = math.fsum(weights[1:])

  if discipline is Discipline.WP:
    v10 = rho1 / rho_o * math.fsum(weights[j + 1] / products[j] * x**j for j in range(b))
    numerator = rho1 * (1 + rho - s_bar) * charged + v10 * rho1 * (1 - s_bar)
    return numerator / ((1 - s_bar) * denominator)

  if discipline is Discipline.PS:
    # Idle plus busy mass at level j + 1.
    mass = weights[1:] * (1 + rho)
    v10 = (
      mu
      * rho1
      / (1 + rho - s_bar)
      * math.fsum(mass[j] / products[j] * x ** (j - 1) for j in range(b))
    )
    return rho1 * (1 - weights[0] + v10) / denominator

  # Idle plus source-of-interest busy mass at level j + 1.
  mass = weights[1:] * (1 + rho1)
  v10 = (
    mu
    * rho1
    / (1 + rho1 - s_bar)
    * math.fsum(mass[j] / products[j] * x ** (j - 1) for j in range(b))
  )
  numerator = rho1 * ((1 + rho - s_bar) * math.fsum(mass) + (1 + rho1 - s_bar) * v10)
  return numerator / ((1 + rho1 - s_bar) * denominator)


def mgf_closed(
  discipline: Discipline,
  params: SystemParams,
  source: int = 1,
  s_bar: float = 0.0,
  bound: Optional[float] = None,
) -> float:
  """E[exp(s * AoI)] at s = mu * s_bar from the closed-form expressions.

  Args:
    discipline: Queueing discipline.
    params: System parameters.
    source: 1-based source of interest.
    s_bar: Normalized exponent s / mu.
    bound: Precomputed mgf_domain_bound_closed, to skip recomputing it.

  Raises:
    ConvergenceRegionError: s_bar is at or beyond the domain bound.
  """
  discipline = Discipline(discipline)
  rates = derive(params, source)
  if s_bar > 0:
    if bound is None:
      bound = mgf_domain_bound_closed(discipline, params, source)
    if s_bar >= bound:
      raise ConvergenceRegionError(
        f'sbar={s_bar:.6g} is outside the MGF convergence region (bound {bound:.6g})',
        (bound, bound),
      )
  if rates.single_source:
    return _mgf_single(discipline, params, s_bar)
  return float(_mgf_multi(discipline, params, rates, s_bar))
