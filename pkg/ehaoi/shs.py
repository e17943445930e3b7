"""Stochastic hybrid system engine for age-of-information analysis.

A model is a finite continuous-time Markov chain whose transitions reset a
two-component age vector x = [x0, x1] through binary matrices. x0 is the age
of the source of interest at the destination; x1 is what x0 becomes if the
update in service is delivered.

The engine solves three dense linear systems per model:

* the balance equations for the stationary probabilities,
* the first-moment system for the correlation vectors v_q (whose x0
  components sum to the average AoI),
* the MGF system for v_q^s (whose x0 components sum to E[exp(s * AoI)]).

All unknown vectors are laid out state-major: entry 2 * q + j holds component
j of state q (0-based q).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .errors import (
  ConvergenceRegionError,
  NegativeSolutionError,
  ParameterError,
  ReducibleChainError,
  SingularSystemError,
)

logger = logging.getLogger(__name__)

ResetMap = Tuple[Tuple[int, int], Tuple[int, int]]

# Roundoff band for componentwise non-negativity.
NEGATIVE_TOLERANCE = 1e-10
# Below this a first-moment solution is genuinely infeasible.
NEGATIVE_FAILURE = -1e-6
RESIDUAL_TOLERANCE = 1e-10
DOMAIN_BOUND_TOLERANCE = 1e-6


class StateDescriptor(BaseModel):
  """One discrete state of the chain."""

  model_config = ConfigDict(frozen=True)

  index: int = Field(ge=1, description='1-based state id.')
  energy: int = Field(ge=0, description='Energy packets in the battery (e_q).')
  occupancy: int = Field(ge=0, description='0 when idle, else 1 or the serving source (u_q).')
  row: int = Field(ge=1, description='Row-set tag of the state (1 idle, 2.. busy positions).')
  key: str = Field(description='Stable label shared with simulator occupancy.')


class Transition(BaseModel):
  """A rate-weighted transition with its age reset map."""

  model_config = ConfigDict(frozen=True)

  label: int = Field(ge=1)
  source_state: int = Field(ge=1)
  target_state: int = Field(ge=1)
  rate: float = Field(gt=0, allow_inf_nan=False)
  rate_name: str = Field(description='Symbolic rate, e.g. "eta" or "lambda_-1".')
  reset_map: ResetMap

  @field_validator('reset_map')
  @classmethod
  def _binary(cls, value: ResetMap) -> ResetMap:
    if any(entry not in (0, 1) for row in value for entry in row):
      raise ValueError(f'reset map must be binary, got {value}')
    return value

  @property
  def is_self_loop(self) -> bool:
    """True when the transition leaves the discrete state unchanged."""
    return self.source_state == self.target_state


class ShsModel(BaseModel):
  """Discrete states, transitions and reset maps of one SHS."""

  model_config = ConfigDict(frozen=True)

  states: Tuple[StateDescriptor, ...]
  transitions: Tuple[Transition, ...]
  continuous_dim: int = 2

  @model_validator(mode='after')
  def _consistent(self) -> 'ShsModel':
    if self.continuous_dim != 2:
      raise ValueError('only two-component age vectors are supported')
    ids = [state.index for state in self.states]
    if ids != list(range(1, len(ids) + 1)):
      raise ValueError('state ids must be 1..n in order')
    for transition in self.transitions:
      for endpoint in (transition.source_state, transition.target_state):
        if not 1 <= endpoint <= len(ids):
          raise ValueError(f'transition {transition.label} references unknown state {endpoint}')
    return self

  @property
  def n_states(self) -> int:
    """Number of discrete states."""
    return len(self.states)

  def out_rates(self) -> np.ndarray:
    """Total outgoing rate per state, self-transitions included."""
    out = np.zeros(self.n_states)
    for transition in self.transitions:
      out[transition.source_state - 1] += transition.rate
    return out


@dataclass(frozen=True)
class SteadyState:
  """Stationary probabilities, indexed like ShsModel.states."""

  pi: np.ndarray
  residual: float


@dataclass(frozen=True)
class MomentVectors:
  """First-moment correlation vectors, shape (n_states, 2)."""

  v: np.ndarray
  raw_min: float
  residual: float

  @property
  def average_aoi(self) -> float:
    """Sum of the x0 components."""
    return float(np.sum(self.v[:, 0]))


@dataclass(frozen=True)
class MgfVectors:
  """MGF correlation vectors at one exponent, shape (n_states, 2)."""

  s_value: float
  vs: np.ndarray
  residual: float

  @property
  def mgf(self) -> float:
    """Sum of the x0 components."""
    return float(np.sum(self.vs[:, 0]))


@dataclass(frozen=True)
class DomainBound:
  """Bracket [lower, upper) on the smallest s where the MGF system breaks down."""

  lower: float
  upper: float

  def as_tuple(self) -> Tuple[float, float]:
    """Returns (lower, upper)."""
    return (self.lower, self.upper)


def hat_matrix(reset_map) -> np.ndarray:
  """Builds the diagonal selector of all-zero columns of a reset map.

  Entry (k, j) is 1 iff k == j and column j of the reset map is zero.
  """
  a = np.asarray(reset_map)
  if a.shape != (2, 2) or not np.isin(a, (0, 1)).all():
    raise ParameterError(f'reset map must be a 2x2 binary matrix, got {reset_map!r}')
  zero_columns = ~a.astype(bool).any(axis=0)
  return np.diag(zero_columns.astype(int))


def _check_irreducible(model: ShsModel) -> None:
  n = model.n_states
  rows = [t.source_state - 1 for t in model.transitions if not t.is_self_loop]
  cols = [t.target_state - 1 for t in model.transitions if not t.is_self_loop]
  graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
  forward = set(breadth_first_order(graph, 0, directed=True, return_predecessors=False).tolist())
  backward = set(
    breadth_first_order(graph.T.tocsr(), 0, directed=True, return_predecessors=False).tolist()
  )
  stranded = sorted(i + 1 for i in range(n) if i not in forward or i not in backward)
  if stranded:
    raise ReducibleChainError(
      f'chain is reducible; states not mutually reachable with state 1: {stranded}', stranded
    )


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
  try:
    solution = linalg.solve(matrix, rhs)
  except linalg.LinAlgError as e:
    raise SingularSystemError(f'{what} system is singular: {e}') from e
  if not np.all(np.isfinite(solution)):
    raise SingularSystemError(f'{what} system produced a non-finite solution')
  return solution


def _relative_residual(matrix: np.ndarray, solution: np.ndarray, rhs: np.ndarray) -> float:
  scale = max(1.0, float(np.abs(matrix).max()) * float(np.abs(solution).max()))
  return float(np.abs(matrix @ solution - rhs).max()) / scale


def generator_matrix(model: ShsModel) -> np.ndarray:
  """Infinitesimal generator of the discrete chain; self-transitions cancel."""
  n = model.n_states
  q = np.zeros((n, n))
  for transition in model.transitions:
    if transition.is_self_loop:
      continue
    a, b = transition.source_state - 1, transition.target_state - 1
    q[a, b] += transition.rate
    q[a, a] -= transition.rate
  return q


def steady_state(model: ShsModel) -> SteadyState:
  """Solves the balance equations with one row replaced by the normalization.

  Raises:
    ReducibleChainError: some states are not mutually reachable.
    SingularSystemError: the system could not be solved accurately.
  """
  _check_irreducible(model)
  q = generator_matrix(model)
  n = model.n_states
  system = q.T.copy()
  system[-1, :] = 1.0
  rhs = np.zeros(n)
  rhs[-1] = 1.0
  pi = _solve(system, rhs, 'steady-state')
  balance = float(np.abs(pi @ q).max()) / max(1.0, float(np.abs(q).max()))
  residual = max(balance, abs(float(pi.sum()) - 1.0))
  if residual > RESIDUAL_TOLERANCE:
    raise SingularSystemError(f'steady-state residual {residual:.3e} exceeds tolerance')
  if pi.min() < -1e-12:
    raise NegativeSolutionError('stationary vector has negative entries', float(pi.min()))
  logger.debug(f'steady state of {n} states solved, residual {residual:.2e}')
  return SteadyState(pi=np.clip(pi, 0.0, None), residual=residual)


def moment_matrix(model: ShsModel) -> np.ndarray:
  """Assembles the first-moment system matrix G over the 2n unknowns.

  Row 2b + j reads: v_bj * out_b - sum over transitions l into b of
  rate_l * (v_{q_l} A_l)_j. G is a Z-matrix (non-positive off-diagonal).
  """
  n = model.n_states
  g = np.zeros((2 * n, 2 * n))
  out = model.out_rates()
  for q in range(n):
    g[2 * q, 2 * q] += out[q]
    g[2 * q + 1, 2 * q + 1] += out[q]
  for transition in model.transitions:
    a, b = transition.source_state - 1, transition.target_state - 1
    reset = np.asarray(transition.reset_map)
    for k in range(2):
      for j in range(2):
        if reset[k, j]:
          g[2 * b + j, 2 * a + k] -= transition.rate
  return g


def _mgf_rhs(model: ShsModel, pi: np.ndarray) -> np.ndarray:
  rhs = np.zeros(2 * model.n_states)
  for transition in model.transitions:
    a, b = transition.source_state - 1, transition.target_state - 1
    hat = hat_matrix(transition.reset_map)
    for j in range(2):
      if hat[j, j]:
        rhs[2 * b + j] += transition.rate * pi[a]
  return rhs


def first_moment_vectors(model: ShsModel, pi: SteadyState) -> MomentVectors:
  """Solves the first-moment system for v_q.

  Components within the roundoff band are clamped to zero; the raw minimum is
  reported on the result.

  Raises:
    SingularSystemError: the system is singular.
    NegativeSolutionError: no non-negative limit exists for this model.
  """
  g = moment_matrix(model)
  rhs = np.repeat(pi.pi, 2)
  v = _solve(g, rhs, 'first-moment')
  residual = _relative_residual(g, v, rhs)
  if residual > RESIDUAL_TOLERANCE:
    raise SingularSystemError(f'first-moment residual {residual:.3e} exceeds tolerance')
  raw_min = float(v.min())
  if raw_min < NEGATIVE_FAILURE:
    raise NegativeSolutionError(
      f'first-moment solution has a negative component {raw_min:.3e}; '
      'no non-negative limit exists',
      raw_min,
    )
  if raw_min < -NEGATIVE_TOLERANCE:
    logger.warning(f'clamping first-moment component {raw_min:.3e} to zero')
  logger.debug(f'first-moment residual {residual:.2e}, raw minimum {raw_min:.3e}')
  return MomentVectors(v=np.clip(v, 0.0, None).reshape(-1, 2), raw_min=raw_min, residual=residual)


def average_aoi(model: ShsModel) -> float:
  """Average AoI of the source of interest: the summed x0 correlations."""
  return first_moment_vectors(model, steady_state(model)).average_aoi


def _inside_domain(g: np.ndarray, s: float) -> bool:
  # G - sI is a nonsingular M-matrix iff (G - sI) y = 1 has a positive solution.
  shifted = g - s * np.eye(g.shape[0])
  try:
    y = linalg.solve(shifted, np.ones(g.shape[0]))
  except linalg.LinAlgError:
    return False
  return bool(np.all(np.isfinite(y)) and np.all(y > 0))


def _bisect_domain(g: np.ndarray, tolerance: float = DOMAIN_BOUND_TOLERANCE) -> DomainBound:
  lower, upper = 0.0, float(np.diag(g).min())
  if upper <= 0.0 or not _inside_domain(g, lower):
    return DomainBound(lower=0.0, upper=0.0)
  while upper - lower > tolerance:
    middle = 0.5 * (lower + upper)
    if _inside_domain(g, middle):
      lower = middle
    else:
      upper = middle
  return DomainBound(lower=lower, upper=upper)


def mgf_domain_bound(model: ShsModel) -> DomainBound:
  """Brackets the smallest s > 0 at which the MGF system loses its valid solution.

  The bracket is in raw s units (not normalized by the service rate).
  """
  bound = _bisect_domain(moment_matrix(model))
  logger.debug(f'MGF domain bound in [{bound.lower:.6g}, {bound.upper:.6g})')
  return bound


def mgf_vectors(model: ShsModel, pi: SteadyState, s: float) -> MgfVectors:
  """Solves the MGF system (G - sI) v^s = b for one exponent s.

  Raises:
    ConvergenceRegionError: s is at or beyond the domain bound, or the solution
      has negative components.
    SingularSystemError: the system could not be solved accurately.
  """
  g = moment_matrix(model)
  if s > 0 and not _inside_domain(g, s):
    bound = _bisect_domain(g)
    raise ConvergenceRegionError(
      f's={s:.6g} is outside the MGF convergence region; '
      f'bound in [{bound.lower:.6g}, {bound.upper:.6g})',
      bound.as_tuple(),
    )
  shifted = g - s * np.eye(g.shape[0])
  rhs = _mgf_rhs(model, pi.pi)
  vs = _solve(shifted, rhs, 'MGF')
  residual = _relative_residual(shifted, vs, rhs)
  if residual > RESIDUAL_TOLERANCE:
    raise SingularSystemError(f'MGF residual {residual:.3e} exceeds tolerance at s={s:.6g}')
  if vs.min() < -NEGATIVE_TOLERANCE * max(1.0, float(np.abs(vs).max())):
    bound = _bisect_domain(g)
    raise ConvergenceRegionError(
      f'MGF solution at s={s:.6g} has negative components', bound.as_tuple()
    )
  return MgfVectors(s_value=s, vs=np.clip(vs, 0.0, None).reshape(-1, 2), residual=residual)


def mgf(model: ShsModel, s: float, pi: Optional[SteadyState] = None) -> float:
  """MGF of the AoI of the source of interest at raw exponent s."""
  if pi is None:
    pi = steady_state(model)
  return mgf_vectors(model, pi, s).mgf


# Ridders extrapolation constants: step shrink factor, tableau size, early-exit ratio.
_CON = 1.4
_CON2 = _CON * _CON
_NTAB = 10
_SAFE = 2.0


def _central_difference(fn: Callable[[float], float], order: int, h: float, f0: float) -> float:
  if order == 1:
    return (fn(h) - fn(-h)) / (2.0 * h)
  return (fn(h) - 2.0 * f0 + fn(-h)) / (h * h)


def ridders_derivative(
  fn: Callable[[float], float], order: int, step: float = 0.1
) -> Tuple[float, float]:
  """Derivative of `fn` at 0 by central differences with Ridders extrapolation.

  Both central formulas have error expansions in even powers of h, so the
  same Neville tableau serves first and second derivatives.

  Args:
    fn: Function evaluable on [-step, step].
    order: 1 or 2.
    step: Initial step; it need not be small, only inside the domain of fn.

  Returns:
    (estimate, error estimate).
  """
  if order not in (1, 2):
    raise ParameterError(f'only first and second derivatives are supported, got {order}')
  if step <= 0:
    raise ParameterError('step must be positive')
  f0 = fn(0.0) if order == 2 else 0.0
  a = np.zeros((_NTAB, _NTAB))
  hh = step
  a[0, 0] = _central_difference(fn, order, hh, f0)
  err = np.inf
  result = a[0, 0]
  for i in range(1, _NTAB):
    hh /= _CON
    a[0, i] = _central_difference(fn, order, hh, f0)
    fac = _CON2
    for j in range(1, i + 1):
      a[j, i] = (a[j - 1, i] * fac - a[j - 1, i - 1]) / (fac - 1.0)
      fac *= _CON2
      errt = max(abs(a[j, i] - a[j - 1, i]), abs(a[j, i] - a[j - 1, i - 1]))
      if errt <= err:
        err = errt
        result = a[j, i]
    if abs(a[i, i] - a[i - 1, i - 1]) >= _SAFE * err:
      break
  return float(result), float(err)


def moment_from_mgf(
  mgf_fn: Callable[[float], float], k: int, mu: float, step: float = 0.1
) -> float:
  """k-th moment of AoI from an MGF given in the normalized argument s/mu.

  Returns (1 / mu^k) * d^k M / d sbar^k at sbar = 0.

  Raises:
    SingularSystemError: the MGF could not be evaluated near 0.
  """
  try:
    value, err = ridders_derivative(mgf_fn, k, step)
  except (ArithmeticError, ConvergenceRegionError) as e:
    raise SingularSystemError(f'MGF evaluation failed near 0: {e}') from e
  if not np.isfinite(value):
    raise SingularSystemError('MGF derivative is not finite')
  logger.debug(f'moment {k} from MGF: {value:.12g} (extrapolation error {err:.2e})')
  return value / mu**k
