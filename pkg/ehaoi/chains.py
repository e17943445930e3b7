"""Markov chains of the LCFS-WP, LCFS-PS and LCFS-SA disciplines.

State numbering is fixed so that solver output can be read against the
transition tables of `dump_model` directly:

* WP and PS: state 1 is (0 energy, idle); state 2k is (k, idle) and state
  2k + 1 is (k, busy) for 1 <= k <= B.
* SA: state 1 is (0, idle); at energy level k the idle state is
  2 + (k - 1)(N + 1) and the state serving source m is 2 + m + (k - 1)(N + 1),
  where m = 1 is the source of interest and m = 2..N are the others in their
  original order.

Discarded events (update arrival with an empty battery, energy arrival at a
full battery, WP arrival while busy) change neither the discrete state nor the
ages, so they are absent rather than modeled as self-transitions.
"""

import logging
from enum import Enum
from typing import List, Optional

import numpy as np

from .params import SystemParams, check_source, derive
from .shs import ResetMap, ShsModel, StateDescriptor, SteadyState, Transition

logger = logging.getLogger(__name__)

# x A for the reset maps used by all three disciplines.
KEEP_AGE: ResetMap = ((1, 0), (0, 0))  # [x0, 0]
FREEZE_AGE: ResetMap = ((1, 1), (0, 0))  # [x0, x0]
DELIVER: ResetMap = ((0, 0), (1, 0))  # [x1, 0]

# Relative tolerance for treating rho and beta as equal.
EQUAL_LOAD_TOLERANCE = 1e-9


class Discipline(str, Enum):
  """Queueing discipline at the transmitter."""

  WP = 'wp'
  PS = 'ps'
  SA = 'sa'


def state_key(energy: int, serving: Optional[int] = None, source_tagged: bool = False) -> str:
  """Occupancy key shared by chain descriptors and the simulator.

  Args:
    energy: Battery level.
    serving: 1-based source in service, or None when idle.
    source_tagged: Whether busy states are distinguished by source (SA).
  """
  if serving is None:
    return f'e{energy}_idle'
  if source_tagged:
    return f'e{energy}_busy_s{serving}'
  return f'e{energy}_busy'


def source_order(n_sources: int, source: int) -> List[int]:
  """1-based source ids with the source of interest moved to the front."""
  return [source] + [i for i in range(1, n_sources + 1) if i != source]


def _energy_states(battery: int) -> List[StateDescriptor]:
  states = [StateDescriptor(index=1, energy=0, occupancy=0, row=1, key=state_key(0))]
  for k in range(1, battery + 1):
    states.append(StateDescriptor(index=2 * k, energy=k, occupancy=0, row=1, key=state_key(k)))
    states.append(
      StateDescriptor(index=2 * k + 1, energy=k, occupancy=1, row=2, key=state_key(k, 1))
    )
  return states


def _wp_transitions(params: SystemParams, source: int) -> List[Transition]:
  rates = derive(params, source)
  transitions = []
  for k in range(1, params.battery_capacity + 1):
    idle_below = 1 if k == 1 else 2 * k - 2
    idle, busy = 2 * k, 2 * k + 1
    base = 4 * k - 3
    transitions.append(
      Transition(
        label=base,
        source_state=idle_below,
        target_state=idle,
        rate=params.energy_rate,
        rate_name='eta',
        reset_map=KEEP_AGE,
      )
    )
    transitions.append(
      Transition(
        label=base + 1,
        source_state=idle,
        target_state=busy,
        rate=rates.source_rate,
        rate_name='lambda_1',
        reset_map=KEEP_AGE,
      )
    )
    if rates.other_rate > 0:
      transitions.append(
        Transition(
          label=base + 2,
          source_state=idle,
          target_state=busy,
          rate=rates.other_rate,
          rate_name='lambda_-1',
          reset_map=FREEZE_AGE,
        )
      )
    transitions.append(
      Transition(
        label=base + 3,
        source_state=busy,
        target_state=idle_below,
        rate=params.service_rate,
        rate_name='mu',
        reset_map=DELIVER,
      )
    )
  return transitions


def build_wp(params: SystemParams, source: int = 1) -> ShsModel:
  """LCFS-WP chain: 2B + 1 states, four transition families per energy level."""
  check_source(params, source)
  return ShsModel(
    states=tuple(_energy_states(params.battery_capacity)),
    transitions=tuple(_wp_transitions(params, source)),
  )


def build_ps(params: SystemParams, source: int = 1) -> ShsModel:
  """LCFS-PS chain: the WP chain plus preemption self-transitions on busy states."""
  check_source(params, source)
  rates = derive(params, source)
  transitions = _wp_transitions(params, source)
  first_label = 4 * params.battery_capacity
  for k in range(1, params.battery_capacity + 1):
    busy = 2 * k + 1
    transitions.append(
      Transition(
        label=first_label + 2 * k - 1,
        source_state=busy,
        target_state=busy,
        rate=rates.source_rate,
        rate_name='lambda_1',
        reset_map=KEEP_AGE,
      )
    )
    if rates.other_rate > 0:
      transitions.append(
        Transition(
          label=first_label + 2 * k,
          source_state=busy,
          target_state=busy,
          rate=rates.other_rate,
          rate_name='lambda_-1',
          reset_map=FREEZE_AGE,
        )
      )
  states = tuple(_energy_states(params.battery_capacity))
  return ShsModel(states=states, transitions=tuple(transitions))


def sa_idle_state(level: int, n_sources: int) -> int:
  """State id of the idle state at a battery level."""
  return 1 if level == 0 else 2 + (level - 1) * (n_sources + 1)


def sa_busy_state(position: int, level: int, n_sources: int) -> int:
  """State id of the busy state serving the source at `position` (1 = interest)."""
  return 2 + position + (level - 1) * (n_sources + 1)


def build_sa(params: SystemParams, source: int = 1) -> ShsModel:
  """LCFS-SA chain: 1 + B(N + 1) states with busy states tagged by source."""
  check_source(params, source)
  n = params.n_sources
  order = source_order(n, source)
  states = [StateDescriptor(index=1, energy=0, occupancy=0, row=1, key=state_key(0))]
  for k in range(1, params.battery_capacity + 1):
    states.append(
      StateDescriptor(
        index=sa_idle_state(k, n), energy=k, occupancy=0, row=1, key=state_key(k)
      )
    )
    for position, original in enumerate(order, start=1):
      states.append(
        StateDescriptor(
          index=sa_busy_state(position, k, n),
          energy=k,
          occupancy=original,
          row=position + 1,
          key=state_key(k, original, source_tagged=True),
        )
      )

  transitions: List[Transition] = []

  def add(source_state: int, target_state: int, rate: float, rate_name: str, reset: ResetMap):
    transitions.append(
      Transition(
        label=len(transitions) + 1,
        source_state=source_state,
        target_state=target_state,
        rate=rate,
        rate_name=rate_name,
        reset_map=reset,
      )
    )

  for k in range(1, params.battery_capacity + 1):
    idle_below, idle = sa_idle_state(k - 1, n), sa_idle_state(k, n)
    add(idle_below, idle, params.energy_rate, 'eta', KEEP_AGE)
    for position, original in enumerate(order, start=1):
      busy = sa_busy_state(position, k, n)
      rate = params.arrival_rates[original - 1]
      name = 'lambda_1' if position == 1 else f'lambda_{original}'
      add(idle, busy, rate, name, KEEP_AGE)
      add(busy, busy, rate, name, KEEP_AGE)
      add(busy, idle_below, params.service_rate, 'mu', DELIVER if position == 1 else KEEP_AGE)
  return ShsModel(states=tuple(states), transitions=tuple(transitions))


def build(discipline: Discipline, params: SystemParams, source: int = 1) -> ShsModel:
  """Builds the chain of a discipline for the chosen source of interest."""
  discipline = Discipline(discipline)
  builders = {Discipline.WP: build_wp, Discipline.PS: build_ps, Discipline.SA: build_sa}
  model = builders[discipline](params, source)
  logger.debug(
    f'{discipline.value} chain: {model.n_states} states, {len(model.transitions)} transitions'
  )
  return model


def equal_load(rho: float, beta: float) -> bool:
  """True when rho and beta agree to EQUAL_LOAD_TOLERANCE (relative)."""
  return abs(rho - beta) <= EQUAL_LOAD_TOLERANCE * max(rho, beta)


def empty_battery_probability(params: SystemParams) -> float:
  """Stationary probability of state 1 (empty battery, idle server).

  Uses the rho == beta branch when the two agree to EQUAL_LOAD_TOLERANCE.
  """
  mu = params.service_rate
  rho = sum(params.arrival_rates) / mu
  beta = params.energy_rate / mu
  b = params.battery_capacity
  if equal_load(rho, beta):
    return 1.0 / (1.0 + b * (1.0 + rho))
  numerator = rho**b * (beta - rho)
  return numerator / (numerator + beta * (1.0 + rho) * (beta**b - rho**b))


def level_weights(params: SystemParams) -> np.ndarray:
  """(beta / rho)^k for k = 0..B."""
  rho = sum(params.arrival_rates) / params.service_rate
  beta = params.energy_rate / params.service_rate
  return (beta / rho) ** np.arange(params.battery_capacity + 1)


def steady_state_closed(
  discipline: Discipline, params: SystemParams, source: int = 1
) -> SteadyState:
  """Closed-form stationary probabilities in the state order of `build`.

  WP and PS share one chain skeleton (self-transitions do not move mass). In SA
  the busy mass at each level splits by source utilization.
  """
  discipline = Discipline(discipline)
  check_source(params, source)
  pi1 = empty_battery_probability(params)
  weights = level_weights(params) * pi1
  rho = sum(params.arrival_rates) / params.service_rate
  if discipline is Discipline.SA:
    n = params.n_sources
    pi = np.zeros(1 + params.battery_capacity * (n + 1))
    pi[0] = pi1
    order = source_order(n, source)
    for k in range(1, params.battery_capacity + 1):
      pi[sa_idle_state(k, n) - 1] = weights[k]
      for position, original in enumerate(order, start=1):
        utilization = params.arrival_rates[original - 1] / params.service_rate
        pi[sa_busy_state(position, k, n) - 1] = utilization * weights[k]
  else:
    pi = np.zeros(2 * params.battery_capacity + 1)
    pi[0] = pi1
    for k in range(1, params.battery_capacity + 1):
      pi[2 * k - 1] = weights[k]
      pi[2 * k] = rho * weights[k]
  return SteadyState(pi=pi, residual=0.0)


def _format_reset(reset: ResetMap) -> str:
  return '[[{},{}],[{},{}]]'.format(*reset[0], *reset[1])


def dump_model(model: ShsModel) -> str:
  """Deterministic text rendering: states, then one line per transition."""
  lines = [f'# states: {model.n_states}']
  for state in model.states:
    lines.append(f'q{state.index:<3} e={state.energy} u={state.occupancy} r{state.row} {state.key}')
  lines.append(f'# transitions: {len(model.transitions)}')
  for t in model.transitions:
    lines.append(
      f'l={t.label:<4} {t.source_state:>3} -> {t.target_state:<3} '
      f'{t.rate_name:<10} {t.rate:<12.6g} A={_format_reset(t.reset_map)}'
    )
  return '\n'.join(lines) + '\n'
