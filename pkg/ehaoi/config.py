"""Run configuration: environment defaults, the JSON config document and flag merging."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import Method
from .chains import Discipline
from .errors import ParameterError
from .params import SystemParams
from .simulator import SimConfig

load_dotenv(dotenv_path='.env.local')

logger = logging.getLogger(__name__)

LOG_LEVEL = os.getenv('EHAOI_LOG_LEVEL', 'INFO')
DEFAULT_METHOD = os.getenv('EHAOI_METHOD', Method.CLOSED.value)
SIM_HORIZON = float(os.getenv('EHAOI_SIM_HORIZON', '1e6'))
SIM_SEED = int(os.getenv('EHAOI_SIM_SEED', '42'))
SIM_REPLICATIONS = int(os.getenv('EHAOI_SIM_REPLICATIONS', '8'))
SIM_WARMUP = float(os.getenv('EHAOI_SIM_WARMUP', '0.01'))
SIM_BATCHES = int(os.getenv('EHAOI_SIM_BATCHES', '30'))
WORKERS = int(os.getenv('EHAOI_WORKERS', '1'))


class SimSettings(BaseModel):
  """The `sim` section of the config document."""

  model_config = ConfigDict(extra='forbid')

  horizon: float = Field(default=SIM_HORIZON, gt=0, allow_inf_nan=False)
  seed: int = Field(default=SIM_SEED, ge=0)
  replications: int = Field(default=SIM_REPLICATIONS, ge=1)
  warmup_fraction: float = Field(default=SIM_WARMUP, ge=0, lt=1)
  batches: int = Field(default=SIM_BATCHES, ge=2)


class RunConfig(BaseModel):
  """The JSON config document; CLI flags mirror its keys."""

  model_config = ConfigDict(extra='forbid', populate_by_name=True)

  n_sources: Optional[int] = Field(default=None, ge=1)
  arrival_rates: List[float] = Field(alias='lambda', min_length=1)
  eta: float
  mu: float = 1.0
  battery: int
  discipline: Discipline = Discipline.WP
  source: int = Field(default=1, ge=1)
  method: Method = Method(DEFAULT_METHOD)
  mgf_at: List[float] = Field(default_factory=list)
  sim: SimSettings = Field(default_factory=SimSettings)

  @model_validator(mode='after')
  def _check_sources(self) -> 'RunConfig':
    if self.n_sources is not None and self.n_sources != len(self.arrival_rates):
      raise ValueError(
        f'n_sources={self.n_sources} does not match {len(self.arrival_rates)} arrival rates'
      )
    if self.source > len(self.arrival_rates):
      raise ValueError(f'source {self.source} outside 1..{len(self.arrival_rates)}')
    return self

  def to_params(self) -> SystemParams:
    """System parameters of the run."""
    return SystemParams(
      arrival_rates=self.arrival_rates,
      energy_rate=self.eta,
      service_rate=self.mu,
      battery_capacity=self.battery,
    )

  def to_sim_config(self, workers: int = WORKERS, max_events: Optional[int] = None) -> SimConfig:
    """Simulation settings with the run's MGF arguments."""
    return SimConfig(
      horizon=self.sim.horizon,
      warmup_fraction=self.sim.warmup_fraction,
      seed=self.sim.seed,
      replications=self.sim.replications,
      batches=self.sim.batches,
      mgf_s_values=self.mgf_at,
      workers=workers,
      max_events=max_events,
    )


def read_config_file(path: Path) -> Dict[str, Any]:
  """Reads a config document; raises ParameterError on unreadable or non-object JSON."""
  try:
    document = json.loads(Path(path).read_text())
  except (OSError, json.JSONDecodeError) as e:
    logger.error(f'Could not read config file {path}: {e}')
    raise ParameterError(f'could not read config file {path}: {e}') from e
  if not isinstance(document, dict):
    raise ParameterError(f'config file {path} must hold a JSON object')
  return document


def load_run_config(
  path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
  """Merges defaults, an optional config file and flag overrides, lowest first.

  Override values of None are treated as unset. The `sim` section is merged key by key.

  Raises:
    ParameterError: the merged document is invalid.
  """
  document: Dict[str, Any] = read_config_file(path) if path is not None else {}
  for key, value in (overrides or {}).items():
    if value is None:
      continue
    if key == 'sim':
      sim = dict(document.get('sim') or {})
      sim.update({k: v for k, v in value.items() if v is not None})
      document['sim'] = sim
    else:
      document[key] = value
  try:
    return RunConfig.model_validate(document)
  except ValidationError as e:
    raise ParameterError(f'invalid configuration: {e}') from e
