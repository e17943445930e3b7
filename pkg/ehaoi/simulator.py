"""Discrete-event simulation of the energy-harvesting transmitter.

The system has no waiting room: at most one update is in service and none
queue. Energy packets arrive only while the server is idle and fill a battery
of capacity B; a delivered update consumes one packet. The simulation advances
from event to event on the total rate of the enabled processes, which is exact
for exponential interarrival and service times.

Per-source AoI is integrated exactly between events (it grows with slope 1 and
resets at that source's deliveries) and split into equal-length batches after
the warmup for batch-means confidence intervals.
"""

import logging
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, TextIO

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from .chains import Discipline, build, state_key
from .errors import MgfOverflowError, SimulationBudgetError
from .params import SystemParams
from .tracing import traced

logger = logging.getLogger(__name__)

_BUFFER_SIZE = 1 << 16
_LOG_FLOAT_MAX = float(np.log(np.finfo(float).max))
CONFIDENCE = 0.95


class SimConfig(BaseModel):
  """Run-length, seeding and estimation settings of a simulation."""

  model_config = ConfigDict(frozen=True)

  horizon: float = Field(default=1e6, gt=0, allow_inf_nan=False, description='Simulated time.')
  warmup_fraction: float = Field(
    default=0.01, ge=0, lt=1, description='Leading share of the horizon excluded from estimates.'
  )
  seed: int = Field(default=42, ge=0, lt=2**64)
  replications: int = Field(default=8, ge=1)
  mgf_s_values: List[float] = Field(
    default_factory=list, description='Normalized MGF exponents sbar = s / mu.'
  )
  batches: int = Field(default=30, ge=2)
  max_events: Optional[int] = Field(
    default=None, ge=1, description='Event cap per replication; exceeding it is an error.'
  )
  workers: int = Field(default=1, ge=1, description='Processes used for replications.')


class Estimate(BaseModel):
  """Point estimate with its batch-means 95% half-width and standard error."""

  value: float
  ci_half_width: float
  stderr: float


class MgfEstimate(Estimate):
  """Empirical MGF at one normalized exponent."""

  s_bar: float


class SourceEstimates(BaseModel):
  """Estimates and update counts of one source."""

  source: int
  mean: Estimate
  second_moment: Estimate
  mgf: List[MgfEstimate]
  generated: int
  served: int
  preempted: int
  discarded: int

  mean_batches: List[float] = Field(default_factory=list, exclude=True)
  second_batches: List[float] = Field(default_factory=list, exclude=True)
  mgf_batches: List[List[float]] = Field(default_factory=list, exclude=True)


class SimResult(BaseModel):
  """Outcome of one simulation or of pooled replications."""

  discipline: Discipline
  horizon: float
  warmup: float
  replications: int
  events: int
  sources: List[SourceEstimates]
  occupancy: Dict[str, float]
  energy_harvested: int
  energy_discarded: int


def estimate(batch_values: List[float]) -> Estimate:
  """Batch-means estimate: grand mean, Student-t half-width and standard error."""
  values = np.asarray(batch_values, dtype=float)
  n = len(values)
  value = float(values.mean())
  if n < 2:
    return Estimate(value=value, ci_half_width=math.inf, stderr=math.inf)
  stderr = float(values.std(ddof=1)) / math.sqrt(n)
  half_width = float(stats.t.ppf(0.5 + CONFIDENCE / 2, n - 1)) * stderr
  return Estimate(value=value, ci_half_width=half_width, stderr=stderr)


class _RandomStream:
  """Buffered exponential and uniform draws from one generator."""

  def __init__(self, seed: int, replication: int):
    sequence = np.random.SeedSequence(seed, spawn_key=(replication,))
    self._rng = np.random.default_rng(sequence)
    self._exponentials: List[float] = []
    self._uniforms: List[float] = []

  def exponential(self) -> float:
    if not self._exponentials:
      self._exponentials = self._rng.standard_exponential(_BUFFER_SIZE).tolist()[::-1]
    return self._exponentials.pop()

  def uniform(self) -> float:
    if not self._uniforms:
      self._uniforms = self._rng.random(_BUFFER_SIZE).tolist()[::-1]
    return self._uniforms.pop()


def _log_exp_integral(s: float, a: float, tau: float) -> float:
  """log of the integral of exp(s * x) for x from a to a + tau, for s != 0."""
  x = s * tau
  if x > 0:
    log_expm1 = x + math.log(-math.expm1(-x))
  else:
    log_expm1 = math.log(-math.expm1(x))
  return s * a + log_expm1 - math.log(abs(s))


class _AgeIntegrals:
  """Lazily integrated per-source AoI, split into batches after the warmup."""

  def __init__(self, n_sources: int, warmup: float, horizon: float, batches: int, s_values):
    self.warmup = warmup
    batch_length = (horizon - warmup) / batches
    self.edges = [warmup + batch_length * (k + 1) for k in range(batches)]
    self.edges[-1] = horizon
    self.batches = batches
    self.s_values = list(s_values)
    self.reference = [0.0] * n_sources
    self.integrated_to = [0.0] * n_sources
    self.first = [[0.0] * batches for _ in range(n_sources)]
    self.second = [[0.0] * batches for _ in range(n_sources)]
    # Log of the integral of exp(s * age); -inf is an empty batch.
    self.log_mgf = [[[-math.inf] * batches for _ in self.s_values] for _ in range(n_sources)]
    self.elapsed = [[0.0] * batches for _ in range(n_sources)]

  def advance(self, i: int, t_end: float) -> None:
    """Integrates source i's AoI from where it was last integrated up to t_end."""
    start = max(self.integrated_to[i], self.warmup)
    self.integrated_to[i] = t_end
    reference = self.reference[i]
    while start < t_end:
      k = min(bisect_right(self.edges, start), self.batches - 1)
      stop = min(t_end, self.edges[k])
      tau = stop - start
      a = start - reference
      self.first[i][k] += a * tau + 0.5 * tau * tau
      self.second[i][k] += a * a * tau + a * tau * tau + tau**3 / 3.0
      for idx, s in enumerate(self.s_values):
        if s != 0.0:
          row = self.log_mgf[i][idx]
          row[k] = float(np.logaddexp(row[k], _log_exp_integral(s, a, tau)))
      self.elapsed[i][k] += tau
      start = stop

  def deliver(self, i: int, t: float, generated_at: float) -> None:
    """Resets source i's AoI to the age of the update delivered at t."""
    self.advance(i, t)
    self.reference[i] = generated_at

  def batch_values(self, i: int):
    elapsed = self.elapsed[i]
    first = [self.first[i][k] / elapsed[k] for k in range(self.batches)]
    second = [self.second[i][k] / elapsed[k] for k in range(self.batches)]
    mgf = []
    for s, row in zip(self.s_values, self.log_mgf[i]):
      if s == 0.0:
        mgf.append([1.0] * self.batches)
        continue
      logs = [row[k] - math.log(elapsed[k]) for k in range(self.batches)]
      if max(logs) > _LOG_FLOAT_MAX:
        raise MgfOverflowError(
          f'empirical MGF of source {i + 1} at s={s:g} exceeds the float range '
          f'(log batch mean {max(logs):.6g})',
          s,
        )
      mgf.append([math.exp(v) for v in logs])
    return first, second, mgf


def _occupancy_keys(discipline: Discipline, battery: int, n_sources: int):
  idle = [state_key(e) for e in range(battery + 1)]
  if discipline is Discipline.SA:
    busy = [
      [state_key(e, i + 1, source_tagged=True) for i in range(n_sources)]
      for e in range(battery + 1)
    ]
  else:
    busy = [[state_key(e, 1)] * n_sources for e in range(battery + 1)]
  return idle, busy


@traced(span_type='TOOL')
def simulate(
  params: SystemParams,
  discipline: Discipline,
  config: SimConfig,
  replication: int = 0,
  trace: Optional[TextIO] = None,
) -> SimResult:
  """Simulates one replication up to the configured horizon.

  Args:
    params: System parameters.
    discipline: Queueing discipline.
    config: Horizon, seed, batching and MGF settings.
    replication: Replication index; selects the independent random stream
      SeedSequence(config.seed, spawn_key=(replication,)).
    trace: Optional text stream receiving one line per event: time, event
      type, source, battery level and the per-source AoI.

  Raises:
    SimulationBudgetError: more than config.max_events events were needed.
  """
  discipline = Discipline(discipline)
  n = params.n_sources
  battery_capacity = params.battery_capacity
  rates = list(params.arrival_rates)
  cumulative = np.cumsum(rates).tolist()
  arrival_total = cumulative[-1]
  eta, mu = params.energy_rate, params.service_rate
  horizon = config.horizon
  warmup = config.warmup_fraction * horizon
  s_values = [s_bar * mu for s_bar in config.mgf_s_values]

  stream = _RandomStream(config.seed, replication)
  ages = _AgeIntegrals(n, warmup, horizon, config.batches, s_values)
  idle_keys, busy_keys = _occupancy_keys(discipline, battery_capacity, n)
  occupancy = {state.key: 0.0 for state in build(discipline, params).states}

  generated = [0] * n
  served = [0] * n
  preempted = [0] * n
  discarded = [0] * n
  harvested = 0
  energy_lost = 0

  battery = 0
  serving: Optional[int] = None  # 0-based source in service
  serving_since = 0.0
  t = 0.0
  events = 0

  def write_trace(kind: str, source: int) -> None:
    ages_now = ' '.join(f'{t - r:.9g}' for r in ages.reference)
    trace.write(f'{t:.9f} {kind} {source} {battery} {ages_now}\n')

  while True:
    rate = arrival_total + (eta if serving is None else mu)
    t_next = t + stream.exponential() / rate
    key = idle_keys[battery] if serving is None else busy_keys[battery][serving]
    lo, hi = max(t, warmup), min(t_next, horizon)
    if hi > lo:
      occupancy[key] += hi - lo
    if t_next >= horizon:
      break
    t = t_next
    events += 1
    if config.max_events is not None and events > config.max_events:
      raise SimulationBudgetError(
        f'simulation needed more than {config.max_events} events (reached t={t:.6g})',
        events,
        t,
      )

    u = stream.uniform() * rate
    if u < arrival_total:
      i = min(bisect_right(cumulative, u), n - 1)
      generated[i] += 1
      if serving is None:
        if battery == 0:
          discarded[i] += 1
        else:
          serving, serving_since = i, t
      elif discipline is Discipline.PS or (discipline is Discipline.SA and serving == i):
        preempted[serving] += 1
        serving, serving_since = i, t
      else:
        discarded[i] += 1
      if trace is not None:
        write_trace('arrival', i + 1)
    elif serving is None:
      if battery < battery_capacity:
        battery += 1
        harvested += 1
      else:
        energy_lost += 1
      if trace is not None:
        write_trace('energy', 0)
    else:
      j = serving
      ages.deliver(j, t, serving_since)
      battery -= 1
      served[j] += 1
      serving = None
      if trace is not None:
        write_trace('delivery', j + 1)

  for i in range(n):
    ages.advance(i, horizon)
  if serving is not None:
    # Drained after measurement stops so that every generated update is accounted for.
    served[serving] += 1

  total_time = math.fsum(occupancy.values())
  fractions = {key: value / total_time for key, value in occupancy.items()}

  sources = []
  for i in range(n):
    first, second, mgf = ages.batch_values(i)
    sources.append(
      SourceEstimates(
        source=i + 1,
        mean=estimate(first),
        second_moment=estimate(second),
        mgf=[
          MgfEstimate(s_bar=s_bar, **estimate(values).model_dump())
          for s_bar, values in zip(config.mgf_s_values, mgf)
        ],
        generated=generated[i],
        served=served[i],
        preempted=preempted[i],
        discarded=discarded[i],
        mean_batches=first,
        second_batches=second,
        mgf_batches=mgf,
      )
    )
  logger.debug(
    f'{discipline.value} replication {replication}: {events} events, '
    f'mean AoI {[round(s.mean.value, 6) for s in sources]}'
  )
  return SimResult(
    discipline=discipline,
    horizon=horizon,
    warmup=warmup,
    replications=1,
    events=events,
    sources=sources,
    occupancy=fractions,
    energy_harvested=harvested,
    energy_discarded=energy_lost,
  )


def _run_replication(args) -> SimResult:
  params, discipline, config, replication = args
  return simulate(params, discipline, config, replication)


def pool(results: List[SimResult], config: SimConfig) -> SimResult:
  """Pools replications: batch means are concatenated in replication order."""
  first = results[0]
  sources = []
  for i, head in enumerate(first.sources):
    per_run = [result.sources[i] for result in results]
    mean_batches = [v for run in per_run for v in run.mean_batches]
    second_batches = [v for run in per_run for v in run.second_batches]
    mgf_batches = [
      [v for run in per_run for v in run.mgf_batches[idx]] for idx in range(len(head.mgf))
    ]
    sources.append(
      SourceEstimates(
        source=head.source,
        mean=estimate(mean_batches),
        second_moment=estimate(second_batches),
        mgf=[
          MgfEstimate(s_bar=s_bar, **estimate(values).model_dump())
          for s_bar, values in zip(config.mgf_s_values, mgf_batches)
        ],
        generated=sum(run.generated for run in per_run),
        served=sum(run.served for run in per_run),
        preempted=sum(run.preempted for run in per_run),
        discarded=sum(run.discarded for run in per_run),
        mean_batches=mean_batches,
        second_batches=second_batches,
        mgf_batches=mgf_batches,
      )
    )
  occupancy = {
    key: math.fsum(result.occupancy[key] for result in results) / len(results)
    for key in first.occupancy
  }
  return SimResult(
    discipline=first.discipline,
    horizon=first.horizon,
    warmup=first.warmup,
    replications=len(results),
    events=sum(result.events for result in results),
    sources=sources,
    occupancy=occupancy,
    energy_harvested=sum(result.energy_harvested for result in results),
    energy_discarded=sum(result.energy_discarded for result in results),
  )


@traced(span_type='TOOL')
def replicate(params: SystemParams, discipline: Discipline, config: SimConfig) -> SimResult:
  """Runs independent replications and pools their batch means.

  Replication r draws from SeedSequence(config.seed, spawn_key=(r,)), so the
  pooled result depends only on (params, discipline, config), not on how the
  replications were scheduled.
  """
  discipline = Discipline(discipline)
  if config.replications == 1:
    return simulate(params, discipline, config)
  jobs = [(params, discipline, config, r) for r in range(config.replications)]
  if config.workers > 1:
    with ProcessPoolExecutor(max_workers=config.workers) as executor:
      results = list(executor.map(_run_replication, jobs))
  else:
    results = [_run_replication(job) for job in jobs]
  pooled = pool(results, config)
  logger.info(
    f'{discipline.value}: {config.replications} replications, {pooled.events} events, '
    f'mean AoI {[round(s.mean.value, 6) for s in pooled.sources]}'
  )
  return pooled
