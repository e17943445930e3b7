"""Parameter sweeps emitted as CSV, one row per grid point."""

import io
import logging
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .analysis import Method, analyze
from .chains import Discipline
from .errors import AoiError, ParameterError, SweepCellError
from .metrics import jfi, split_rates, sum_aoi
from .params import SystemParams
from .simulator import SimConfig, replicate
from .tracing import traced

logger = logging.getLogger(__name__)


class SweepParameter(str, Enum):
  """The swept axis."""

  BETA = 'beta'
  BATTERY = 'battery'
  RHO_SPLIT = 'rho_split'
  RHO = 'rho'


class Output(str, Enum):
  """Per-cell statistics a sweep can emit."""

  MEAN = 'mean'
  SECOND_MOMENT = 'second_moment'
  STD = 'std'
  SUM_AOI = 'sum_aoi'
  JFI = 'jfi'


class SweepSpec(BaseModel):
  """A one-dimensional grid over one parameter with the rest held fixed.

  `rho_split` sweeps source 1's utilization rho_1 at fixed total load rho;
  the other sources share the rest by `metrics.split_rates`. Without a split
  the load is shared equally.
  """

  model_config = ConfigDict(frozen=True)

  parameter: SweepParameter
  values: List[float] = Field(min_length=1)
  n_sources: int = Field(default=2, ge=1)
  rho: float = Field(default=1.0, gt=0)
  rho_1: Optional[float] = Field(default=None, gt=0)
  beta: float = Field(default=1.5, gt=0)
  battery: int = Field(default=2, ge=1)
  mu: float = Field(default=1.0, gt=0)
  disciplines: List[Discipline] = Field(default_factory=lambda: list(Discipline))
  method: Method = Method.CLOSED
  outputs: List[Output] = Field(default_factory=lambda: list(Output))
  mgf_at: List[float] = Field(default_factory=list)
  sim: Optional[SimConfig] = None

  @model_validator(mode='after')
  def _check_values(self) -> 'SweepSpec':
    if self.parameter is SweepParameter.BATTERY:
      if any(v != int(v) or v < 1 for v in self.values):
        raise ValueError(f'battery sweep values must be integers >= 1, got {self.values}')
    elif any(v <= 0 for v in self.values):
      raise ValueError(f'{self.parameter.value} sweep values must be positive')
    return self

  def columns(self, n_sources: int) -> List[str]:
    """Fixed CSV column order: the swept value, then per-discipline blocks."""
    names = [self.parameter.value]
    for d in self.disciplines:
      for i in range(1, n_sources + 1):
        if Output.MEAN in self.outputs:
          names.append(f'delta1_{d.value}_{i}')
        if Output.SECOND_MOMENT in self.outputs:
          names.append(f'delta2_{d.value}_{i}')
        if Output.STD in self.outputs:
          names.append(f'std_{d.value}_{i}')
        names.extend(f'mgf{s:g}_{d.value}_{i}' for s in self.mgf_at)
        if self.sim is not None:
          names.extend([f'sim_delta1_{d.value}_{i}', f'sim_ci_{d.value}_{i}'])
      if Output.SUM_AOI in self.outputs:
        names.append(f'sum_aoi_{d.value}')
      if Output.JFI in self.outputs:
        names.append(f'jfi_{d.value}')
    return names


class ReportRow(BaseModel):
  """One CSV row: the swept value and every requested cell."""

  value: float
  cells: Dict[str, float]


def parse_grid(text: str) -> Tuple[SweepParameter, List[float]]:
  """Parses `name=start:stop:points[:log]` or `name=v1,v2,...`.

  Raises:
    ParameterError: malformed text, start >= stop or fewer than 2 points.
  """
  name, sep, body = text.partition('=')
  if not sep:
    raise ParameterError(f'sweep must look like name=start:stop:points, got {text!r}')
  try:
    parameter = SweepParameter(name.strip())
  except ValueError as e:
    raise ParameterError(f'unknown sweep parameter {name!r}') from e
  try:
    if ':' in body:
      parts = body.split(':')
      if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != 'log'):
        raise ParameterError(f'range must be start:stop:points[:log], got {body!r}')
      start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
      if not start < stop:
        raise ParameterError(f'sweep start {start} must be below stop {stop}')
      if points < 2:
        raise ParameterError(f'a sweep needs at least 2 points, got {points}')
      if len(parts) == 4:
        values = np.geomspace(start, stop, points)
      else:
        values = np.linspace(start, stop, points)
      return parameter, [float(v) for v in values]
    values = [float(v) for v in body.split(',') if v.strip()]
    if len(values) < 2:
      raise ParameterError(f'a sweep needs at least 2 points, got {len(values)}')
    return parameter, values
  except ValueError as e:
    if isinstance(e, ParameterError):
      raise
    raise ParameterError(f'malformed sweep values {body!r}: {e}') from e


def cell_params(spec: SweepSpec, value: float) -> SystemParams:
  """System parameters of the grid point at `value`."""
  rho, rho_1, beta, battery = spec.rho, spec.rho_1, spec.beta, spec.battery
  if spec.parameter is SweepParameter.BETA:
    beta = value
  elif spec.parameter is SweepParameter.BATTERY:
    battery = int(value)
  elif spec.parameter is SweepParameter.RHO_SPLIT:
    rho_1 = value
  else:
    rho = value
  if rho_1 is None or spec.n_sources == 1:
    rates = [rho * spec.mu / spec.n_sources] * spec.n_sources
  else:
    rates = split_rates(rho, rho_1, spec.n_sources, spec.mu)
  return SystemParams(
    arrival_rates=rates,
    energy_rate=beta * spec.mu,
    service_rate=spec.mu,
    battery_capacity=battery,
  )


def _cell_description(spec: SweepSpec, value: float) -> Dict[str, object]:
  cell = spec.model_dump(include={'n_sources', 'rho', 'rho_1', 'beta', 'battery', 'mu'})
  cell[spec.parameter.value] = value
  return cell


def evaluate_cell(spec: SweepSpec, value: float) -> ReportRow:
  """Evaluates one grid point.

  Raises:
    SweepCellError: any evaluator failed; the cell's parameters are attached.
  """
  try:
    params = cell_params(spec, value)
    cells: Dict[str, float] = {}
    for d in spec.disciplines:
      means = []
      for i in range(1, params.n_sources + 1):
        report = analyze(params, d, i, spec.method, spec.mgf_at)
        means.append(report.mean)
        cells[f'delta1_{d.value}_{i}'] = report.mean
        cells[f'delta2_{d.value}_{i}'] = report.second_moment
        cells[f'std_{d.value}_{i}'] = report.std
        for sample in report.mgf_samples:
          cells[f'mgf{sample.s_bar:g}_{d.value}_{i}'] = sample.value
      if spec.sim is not None:
        simulated = replicate(params, d, spec.sim)
        for stats in simulated.sources:
          cells[f'sim_delta1_{d.value}_{stats.source}'] = stats.mean.value
          cells[f'sim_ci_{d.value}_{stats.source}'] = stats.mean.ci_half_width
      cells[f'sum_aoi_{d.value}'] = sum_aoi(means)
      cells[f'jfi_{d.value}'] = jfi(means)
  except (AoiError, ValidationError) as e:
    cell = _cell_description(spec, value)
    logger.error(f'Sweep cell {cell} failed: {e}')
    raise SweepCellError(f'sweep cell {cell} failed: {e}', cell) from e
  return ReportRow(value=value, cells=cells)


def _evaluate(args) -> ReportRow:
  return evaluate_cell(*args)


@traced(span_type='CHAIN')
def sweep(spec: SweepSpec, workers: int = 1) -> pd.DataFrame:
  """Evaluates every grid point; rows follow the grid order whatever `workers` is."""
  jobs = [(spec, value) for value in spec.values]
  if workers > 1:
    with ProcessPoolExecutor(max_workers=workers) as executor:
      rows = list(executor.map(_evaluate, jobs))
  else:
    rows = []
    for k, job in enumerate(jobs, start=1):
      rows.append(_evaluate(job))
      logger.info(f'sweep {spec.parameter.value}: cell {k}/{len(jobs)} done')
  return to_frame(spec, rows)


def to_frame(spec: SweepSpec, rows: List[ReportRow]) -> pd.DataFrame:
  """Assembles rows into a frame with the spec's column order."""
  n_sources = spec.n_sources
  columns = spec.columns(n_sources)
  records = [{spec.parameter.value: row.value, **row.cells} for row in rows]
  frame = pd.DataFrame.from_records(records).reindex(columns=columns)
  finite = np.isfinite(frame.to_numpy(dtype=float)).all(axis=1)
  if not finite.all():
    value = rows[int(np.argmin(finite))].value
    cell = _cell_description(spec, value)
    raise SweepCellError(f'sweep cell {cell} produced a non-finite value', cell)
  return frame


def to_csv(frame: pd.DataFrame) -> str:
  """Locale-independent CSV: comma separated, '.' decimals, LF line endings."""
  buffer = io.StringIO()
  frame.to_csv(buffer, index=False, lineterminator='\n', float_format='%.12g')
  return buffer.getvalue()
