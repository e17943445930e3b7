"""Per-source AoI reports from the closed-form evaluators or the SHS engine."""

import logging
import math
from enum import Enum
from typing import Dict, List, Sequence

from pydantic import BaseModel, Field

from . import shs
from .chains import Discipline, build
from .closed_form import (
  GapPair,
  avg_aoi_closed,
  avg_gap,
  mgf_closed,
  mgf_domain_bound_closed,
  moments_b2,
  moments_from_mgf,
)
from .metrics import jfi, sum_aoi
from .params import SystemParams, check_source
from .tracing import traced

logger = logging.getLogger(__name__)

# Initial Ridders step as a share of the domain bound, capped at _MAX_STEP.
_STEP_FRACTION = 0.5
_MAX_STEP = 0.1
# Relative roundoff tolerated in a negative variance before it is reported.
_VARIANCE_TOLERANCE = 1e-8


class Method(str, Enum):
  """How the statistics are computed."""

  CLOSED = 'closed'
  SHS = 'shs'


class MgfSample(BaseModel):
  """MGF of the AoI at one normalized exponent."""

  s_bar: float
  value: float


class AoiReport(BaseModel):
  """AoI statistics of one source under one discipline."""

  discipline: Discipline
  source: int
  method: Method
  mean: float
  second_moment: float
  std: float
  mgf_samples: List[MgfSample] = Field(default_factory=list)
  domain_bound: float = Field(description='Normalized MGF domain bound sbar = s / mu.')


class DisciplineSummary(BaseModel):
  """Every source's report under one discipline plus the cross-source metrics."""

  discipline: Discipline
  reports: List[AoiReport]
  sum_aoi: float
  jfi: float


class Comparison(BaseModel):
  """WP, PS and SA side by side."""

  method: Method
  source: int
  summaries: List[DisciplineSummary]
  gaps: Dict[GapPair, float] = Field(description='Mean differences for the source of interest.')

  def summary(self, discipline: Discipline) -> DisciplineSummary:
    """Summary row of one discipline."""
    discipline = Discipline(discipline)
    return next(s for s in self.summaries if s.discipline is discipline)


def standard_deviation(mean: float, second_moment: float) -> float:
  """sqrt(E[AoI^2] - E[AoI]^2), with roundoff-sized negative variances clamped."""
  variance = second_moment - mean * mean
  if variance < 0:
    if variance < -_VARIANCE_TOLERANCE * second_moment:
      logger.warning(f'negative variance {variance:.3e} from moments ({mean}, {second_moment})')
    return 0.0
  return math.sqrt(variance)


def _closed_statistics(discipline, params, source, mgf_at):
  mean = avg_aoi_closed(discipline, params, source)
  if params.battery_capacity == 2:
    _, second = moments_b2(discipline, params, source)
  else:
    _, second = moments_from_mgf(discipline, params, source)
  bound = mgf_domain_bound_closed(discipline, params, source)
  samples = [
    MgfSample(s_bar=s_bar, value=mgf_closed(discipline, params, source, s_bar, bound=bound))
    for s_bar in mgf_at
  ]
  return mean, second, samples, bound


def _shs_statistics(discipline, params, source, mgf_at):
  model = build(discipline, params, source)
  pi = shs.steady_state(model)
  mean = shs.first_moment_vectors(model, pi).average_aoi
  mu = params.service_rate
  bound = shs.mgf_domain_bound(model).lower / mu
  step = min(_MAX_STEP, _STEP_FRACTION * bound)

  def fn(s_bar: float) -> float:
    return shs.mgf(model, mu * s_bar, pi)

  second = shs.moment_from_mgf(fn, 2, mu, step)
  samples = [MgfSample(s_bar=s_bar, value=fn(s_bar)) for s_bar in mgf_at]
  return mean, second, samples, bound


@traced(span_type='CHAIN')
def analyze(
  params: SystemParams,
  discipline: Discipline,
  source: int = 1,
  method: Method = Method.CLOSED,
  mgf_at: Sequence[float] = (),
) -> AoiReport:
  """Mean, second moment, std and MGF samples of one source's AoI.

  With the closed method the second moment comes from the B = 2 expressions
  when B = 2 and from differentiating the closed-form MGF otherwise. The SHS
  method always differentiates the engine's MGF.

  Args:
    params: System parameters.
    discipline: Queueing discipline.
    source: 1-based source of interest.
    method: Closed-form evaluators or the SHS engine.
    mgf_at: Normalized exponents sbar = s / mu at which to sample the MGF.

  Raises:
    ConvergenceRegionError: an MGF sample lies outside the domain.
  """
  discipline, method = Discipline(discipline), Method(method)
  check_source(params, source)
  evaluate = _closed_statistics if method is Method.CLOSED else _shs_statistics
  mean, second, samples, bound = evaluate(discipline, params, source, list(mgf_at))
  report = AoiReport(
    discipline=discipline,
    source=source,
    method=method,
    mean=mean,
    second_moment=second,
    std=standard_deviation(mean, second),
    mgf_samples=samples,
    domain_bound=bound,
  )
  logger.info(
    f'{method.value} {discipline.value} source {source}: mean {mean:.10g}, '
    f'second moment {second:.10g}, domain bound {bound:.6g}'
  )
  return report


@traced(span_type='CHAIN')
def compare(
  params: SystemParams,
  source: int = 1,
  method: Method = Method.CLOSED,
  mgf_at: Sequence[float] = (),
) -> Comparison:
  """Analyzes every source under WP, PS and SA and adds sum-AoI, JFI and the gaps.

  With the closed method the gaps come from their direct expressions; with
  the SHS method they are differences of the engine's means.
  """
  method = Method(method)
  check_source(params, source)
  summaries = []
  for discipline in Discipline:
    reports = [
      analyze(params, discipline, i, method, mgf_at) for i in range(1, params.n_sources + 1)
    ]
    means = [report.mean for report in reports]
    summaries.append(
      DisciplineSummary(
        discipline=discipline, reports=reports, sum_aoi=sum_aoi(means), jfi=jfi(means)
      )
    )

  if method is Method.CLOSED:
    gaps = {pair: avg_gap(pair, params, source) for pair in GapPair}
  else:
    mean = {s.discipline: s.reports[source - 1].mean for s in summaries}
    gaps = {
      GapPair.WP_PS: mean[Discipline.WP] - mean[Discipline.PS],
      GapPair.WP_SA: mean[Discipline.WP] - mean[Discipline.SA],
      GapPair.SA_PS: mean[Discipline.SA] - mean[Discipline.PS],
    }
  return Comparison(method=method, source=source, summaries=summaries, gaps=gaps)
