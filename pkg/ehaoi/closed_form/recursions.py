"""Backward recursions for the c-constants of the closed-form evaluators."""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import ParameterError, SingleSourceError, SingularSystemError
from ..params import SystemParams, derive

logger = logging.getLogger(__name__)


class CVariant(str, Enum):
  """Which constant set to build.

  `C` and `C_S` are indexed c_0, c_2, ..., c_2B; `C_BAR` and `C_BAR_S` are
  indexed c_-1, c_0, ..., c_{B-1}. The barred sets hold the same numbers under
  shifted labels.
  """

  C = 'c'
  C_BAR = 'c_bar'
  C_S = 'c_s'
  C_BAR_S = 'c_bar_s'

  @property
  def needs_s(self) -> bool:
    """True for the exponent-dependent sets."""
    return self in (CVariant.C_S, CVariant.C_BAR_S)


class CConstants(BaseModel):
  """B + 1 recursion constants, stored from the special lowest term upwards."""

  model_config = ConfigDict(frozen=True)

  variant: CVariant
  values: Tuple[float, ...] = Field(description='values[0] is c_0 (or c_-1); values[B] is c_2B.')
  s_value: Optional[float] = Field(default=None, description='Raw exponent s for s-variants.')

  def products(self) -> np.ndarray:
    """Cumulative products: entry j is the product of values[0..j]."""
    return np.cumprod(np.asarray(self.values))

  def labels(self) -> Tuple[str, ...]:
    """Symbolic names of the entries, lowest first."""
    n = len(self.values)
    if self.variant in (CVariant.C, CVariant.C_S):
      return tuple(f'c_{2 * h}' for h in range(n))
    return tuple(f'c_bar_{h - 1}' for h in range(n))


def _divide(numerator: float, denominator: float, what: str) -> float:
  if denominator == 0.0:
    raise SingularSystemError(f'{what} recursion hit a zero denominator')
  return numerator / denominator


def c_constants(
  variant: CVariant, params: SystemParams, source: int = 1, s: Optional[float] = None
) -> CConstants:
  """Evaluates a c-constant set by backward recursion from the full-battery term.

  Args:
    variant: Which set to build.
    params: System parameters.
    source: 1-based source of interest.
    s: Raw MGF exponent (time^-1); required for the s-variants, ignored otherwise.

  Raises:
    SingleSourceError: no other source generates traffic, so the lowest term
      (which divides by the other-source rate) is undefined.
    SingularSystemError: a denominator vanished, which only happens at or
      beyond the MGF domain bound.
  """
  variant = CVariant(variant)
  rates = derive(params, source)
  if rates.single_source:
    raise SingleSourceError(
      f'single-source: recursion undefined for source {source}; use the single-source branch'
    )
  if variant.needs_s and s is None:
    raise ParameterError(f'variant {variant.value} needs an exponent s')

  lam, lam_o, eta, mu = rates.total_rate, rates.other_rate, rates.energy_rate, rates.service_rate
  battery = params.battery_capacity
  values = np.zeros(battery + 1)
  if variant.needs_s:
    values[battery] = lam - s
    for h in range(battery - 1, 0, -1):
      values[h] = eta + lam - s - _divide(mu * eta * lam_o, values[h + 1] * (mu - s), variant.value)
    values[0] = (mu - s) * (eta - s) / (mu * lam_o) - _divide(eta, values[1], variant.value)
  else:
    values[battery] = lam
    for h in range(battery - 1, 0, -1):
      values[h] = eta * (1.0 - lam_o / values[h + 1]) + lam
    values[0] = eta * (1.0 / lam_o - 1.0 / values[1])

  if not np.all(np.isfinite(values)):
    raise SingularSystemError(f'{variant.value} recursion overflowed')
  return CConstants(
    variant=variant,
    values=tuple(float(v) for v in values),
    s_value=s if variant.needs_s else None,
  )
