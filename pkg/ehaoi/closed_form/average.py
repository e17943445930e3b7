"""Closed-form average AoI, its non-EH limits and the pairwise gaps."""

import logging
import math
from enum import Enum

import numpy as np

from ..chains import Discipline, empty_battery_probability, equal_load, level_weights
from ..params import DerivedRates, SystemParams, derive
from .recursions import CVariant, c_constants

logger = logging.getLogger(__name__)


class Limit(str, Enum):
  """Asymptotic regimes with closed-form averages."""

  BETA_INF = 'beta_inf'


class GapPair(str, Enum):
  """Ordered discipline pairs whose average-AoI gap has a direct expression."""

  WP_PS = 'wp-ps'
  WP_SA = 'wp-sa'
  SA_PS = 'sa-ps'


def avg_aoi_single_wp(params: SystemParams) -> float:
  """Average AoI of a lone source under LCFS-WP."""
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  b = params.battery_capacity
  if equal_load(rho, beta):
    return (2 * b * rho**2 + 2 * (1 + b) * rho + b + 2) / (mu * (b * rho**2 + (1 + b) * rho))
  bb, rb = beta ** (b + 2), rho ** (b + 2)
  numerator = bb * (2 * rho**2 + 2 * rho + 1) - rb * (2 * beta**2 + 2 * beta + 1)
  return numerator / (mu * (bb * (rho**2 + rho) - rb * (beta**2 + beta)))


def avg_aoi_single_ps(params: SystemParams) -> float:
  """Average AoI of a lone source under LCFS-PS (and LCFS-SA, which coincides)."""
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  b = params.battery_capacity
  if equal_load(rho, beta):
    numerator = b * rho**3 + (3 * b + 1) * rho**2 + (3 * b + 4) * rho + b + 2
    return numerator / (mu * rho * (1 + rho) * (rho * b + b + 1))
  bb, rb = beta ** (b + 2), rho ** (b + 2)
  numerator = bb * (1 + rho) ** 3 - rb * ((beta**2 + beta) * (rho + 2) + 1 + rho)
  return numerator / (mu * (1 + rho) * (bb * (rho**2 + rho) - rb * (beta**2 + beta)))


class _Series:
  """Stationary weights and the c-constant series shared by the means and gaps."""

  def __init__(self, params: SystemParams, rates: DerivedRates, variant: CVariant):
    self.pi1 = empty_battery_probability(params)
    self.ratios = level_weights(params)
    # weights[k] = (beta / rho)^k * pi_1: idle mass at battery level k.
    self.weights = self.ratios * self.pi1
    self.constants = c_constants(variant, params, rates.source)
    self.products = self.constants.products()
    self.lam_o = rates.other_rate
    self.battery = params.battery_capacity

  def lowest_term(self) -> float:
    """pi_1 / (c_0 * lam_o)."""
    return self.pi1 / (self.constants.values[0] * self.lam_o)

  def scaled(self, terms) -> float:
    """Sum over j = 0..B-1 of terms[j] * lam_o^(j - 1) / P_j."""
    return math.fsum(
      terms[j] * self.lam_o ** (j - 1) / self.products[j] for j in range(self.battery)
    )

  def idle(self) -> float:
    """Sum over j = 1..B of weights[j] * lam_o^(j - 1) / P_j."""
    return math.fsum(
      self.weights[j] * self.lam_o ** (j - 1) / self.products[j]
      for j in range(1, self.battery + 1)
    )


def _avg_wp(params: SystemParams, rates: DerivedRates) -> float:
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  series = _Series(params, rates, CVariant.C)
  busy = rho * math.fsum(series.weights[1:])
  upper = series.weights[1:] * rho
  return math.fsum(
    [
      (1 + rho) / (mu * rho1),
      busy / mu,
      series.lowest_term(),
      series.idle(),
      series.scaled(upper),
    ]
  )


def _avg_ps(params: SystemParams, rates: DerivedRates) -> float:
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  rho_o = rates.other_utilization
  series = _Series(params, rates, CVariant.C)
  upper = series.weights[1:] * rho
  return math.fsum(
    [
      (1 + rho) / (mu * rho1),
      series.lowest_term(),
      series.idle(),
      (1 + rho_o) / (1 + rho) * series.scaled(upper),
    ]
  )


def _avg_sa(params: SystemParams, rates: DerivedRates) -> float:
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  rho_o = rates.other_utilization
  series = _Series(params, rates, CVariant.C_BAR)
  charged = math.fsum(series.weights[1:])
  not_serving_source = 1.0 - rho1 * charged
  busy = rho * charged
  # Busy mass at level j + 1, with the source-of-interest share scaled by 1 / (1 + rho1).
  upper = series.weights[1:] * (rho1 / (1 + rho1) + rho_o)
  v10 = series.lowest_term() + series.idle() + series.scaled(upper)
  return math.fsum(
    [
      (1 + rho) / (mu * rho1 * (1 + rho1)),
      (1 + rho) * not_serving_source / (mu * (1 + rho1)),
      busy / mu,
      v10,
    ]
  )


def avg_aoi_closed(discipline: Discipline, params: SystemParams, source: int = 1) -> float:
  """Average AoI of `source` from the closed-form expressions.

  Falls back to the single-source expressions when the other sources carry no
  load (below SINGLE_SOURCE_THRESHOLD), where the multi-source series would
  evaluate 0 * inf forms.
  """
  discipline = Discipline(discipline)
  rates = derive(params, source)
  if rates.single_source:
    if discipline is Discipline.WP:
      return avg_aoi_single_wp(params)
    return avg_aoi_single_ps(params)
  evaluators = {Discipline.WP: _avg_wp, Discipline.PS: _avg_ps, Discipline.SA: _avg_sa}
  value = evaluators[discipline](params, rates)
  logger.debug(f'closed-form {discipline.value} average for source {source}: {value:.12g}')
  return value


def avg_aoi_limit(
  discipline: Discipline, params: SystemParams, source: int = 1, limit: Limit = Limit.BETA_INF
) -> float:
  """Average AoI as the energy rate grows without bound (the energy rate is ignored)."""
  discipline = Discipline(discipline)
  Limit(limit)
  rates = derive(params, source)
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  base = (1 + rho) / (mu * rho1)
  if discipline is Discipline.WP:
    return base + rho / (mu * (1 + rho))
  if discipline is Discipline.PS:
    return base
  return base + rates.other_utilization / (mu * (1 + rho) * (1 + rho1))


def _gap_wp_ps(params: SystemParams, rates: DerivedRates) -> float:
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  pi1 = empty_battery_probability(params)
  weights = level_weights(params) * pi1
  busy = rho * math.fsum(weights[1:])
  if rates.single_source:
    return busy / mu + rho1 / (1 + rho) * rho * weights[1] / params.energy_rate
  series = _Series(params, rates, CVariant.C)
  return busy / mu + rho1 / (1 + rho) * series.scaled(weights[1:] * rho)


def _sa_gap_parts(params: SystemParams, rates: DerivedRates):
  """Common factor 1 + (1 + rho) S and the c-bar series of the SA gaps."""
  rho = rates.server_utilization
  series = _Series(params, rates, CVariant.C_BAR)
  total = math.fsum(series.ratios[1:])
  return total, 1.0 + (1.0 + rho) * total, series.pi1, series.scaled(series.ratios[1:])


def _gap_wp_sa(params: SystemParams, rates: DerivedRates) -> float:
  if rates.single_source:
    return _gap_wp_ps(params, rates)
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  total, factor, pi1, tail = _sa_gap_parts(params, rates)
  return math.fsum(
    [
      rho1 * (1 + rho) * total / (mu * (1 + rho1) * factor),
      pi1 * rho1**2 / (1 + rho1) * tail,
    ]
  )


def _gap_sa_ps(params: SystemParams, rates: DerivedRates) -> float:
  if rates.single_source:
    return 0.0
  mu, rho, rho1 = rates.service_rate, rates.server_utilization, rates.source_utilization
  rho_o = rates.other_utilization
  total, factor, pi1, tail = _sa_gap_parts(params, rates)
  return math.fsum(
    [
      rho_o * total / (mu * (1 + rho1) * factor),
      pi1 * rho1 * rho_o / ((1 + rho1) * (1 + rho)) * tail,
    ]
  )


def avg_gap(pair: GapPair, params: SystemParams, source: int = 1) -> float:
  """Difference of two disciplines' average AoI from its direct non-negative expression."""
  pair = GapPair(pair)
  rates = derive(params, source)
  evaluators = {GapPair.WP_PS: _gap_wp_ps, GapPair.WP_SA: _gap_wp_sa, GapPair.SA_PS: _gap_sa_ps}
  return evaluators[pair](params, rates)


def stationary_weights(params: SystemParams) -> np.ndarray:
  """pi_1 * (beta / rho)^k for k = 0..B."""
  return level_weights(params) * empty_battery_probability(params)
