"""System parameters and the derived rates every evaluator works from."""

import math
from typing import Annotated, List

from pydantic import BaseModel, ConfigDict, Field, computed_field

from .errors import ParameterError

PositiveRate = Annotated[float, Field(gt=0, allow_inf_nan=False)]


class SystemParams(BaseModel):
  """Rates and battery size of the energy-harvesting transmitter."""

  model_config = ConfigDict(frozen=True)

  arrival_rates: List[PositiveRate] = Field(
    min_length=1, description='Per-source update generation rates (updates/time).'
  )
  energy_rate: PositiveRate = Field(description='Energy packet arrival rate eta.')
  service_rate: PositiveRate = Field(description='Service rate mu (updates/time).')
  battery_capacity: int = Field(ge=1, description='Battery capacity B (energy packets).')

  @computed_field
  @property
  def n_sources(self) -> int:
    """Number of sources N."""
    return len(self.arrival_rates)

  def scaled(self, factor: float) -> 'SystemParams':
    """Returns the same system with every rate multiplied by `factor`."""
    return SystemParams(
      arrival_rates=[rate * factor for rate in self.arrival_rates],
      energy_rate=self.energy_rate * factor,
      service_rate=self.service_rate * factor,
      battery_capacity=self.battery_capacity,
    )

  def with_updates(self, **changes) -> 'SystemParams':
    """Returns a validated copy with some fields replaced."""
    fields = self.model_dump(exclude={'n_sources'})
    fields.update(changes)
    return SystemParams(**fields)


class DerivedRates(BaseModel):
  """Aggregate and utilization quantities seen from one source of interest."""

  model_config = ConfigDict(frozen=True)

  source: int
  total_rate: float
  source_rate: float
  other_rate: float
  energy_rate: float
  service_rate: float
  server_utilization: float
  source_utilization: float
  other_utilization: float
  energy_utilization: float
  battery_capacity: int

  @property
  def single_source(self) -> bool:
    """True when no other source generates traffic."""
    return self.other_utilization < SINGLE_SOURCE_THRESHOLD


# Other-source utilization below this dispatches to the single-source formulas.
SINGLE_SOURCE_THRESHOLD = 1e-12


def check_source(params: SystemParams, source: int) -> None:
  """Raises ParameterError unless `source` is a valid 1-based source index."""
  if isinstance(source, bool) or not isinstance(source, int):
    raise ParameterError(f'source index must be an integer, got {source!r}')
  if not 1 <= source <= params.n_sources:
    raise ParameterError(f'source index {source} outside 1..{params.n_sources}')


def derive(params: SystemParams, source_index: int = 1) -> DerivedRates:
  """Derives the rates and utilizations for the chosen source of interest.

  Args:
    params: Validated system parameters.
    source_index: 1-based index of the source whose AoI is analyzed.

  Returns:
    The derived quantities, with `other_*` aggregating every other source.
  """
  check_source(params, source_index)
  mu = params.service_rate
  rates = params.arrival_rates
  source_rate = rates[source_index - 1]
  other_rate = math.fsum(rate for i, rate in enumerate(rates) if i != source_index - 1)
  total_rate = math.fsum(rates)
  return DerivedRates(
    source=source_index,
    total_rate=total_rate,
    source_rate=source_rate,
    other_rate=other_rate,
    energy_rate=params.energy_rate,
    service_rate=mu,
    server_utilization=total_rate / mu,
    source_utilization=source_rate / mu,
    other_utilization=other_rate / mu,
    energy_utilization=params.energy_rate / mu,
    battery_capacity=params.battery_capacity,
  )
