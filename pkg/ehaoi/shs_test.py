import math

import numpy as np
import pytest
from pydantic import ValidationError

from ehaoi import shs
from ehaoi.chains import DELIVER, FREEZE_AGE, KEEP_AGE, Discipline, build
from ehaoi.errors import ConvergenceRegionError, ParameterError, ReducibleChainError
from ehaoi.params import SystemParams
from ehaoi.shs import ShsModel, StateDescriptor, Transition


def _params(rates, eta, mu=1.0, battery=2):
  return SystemParams(
    arrival_rates=rates, energy_rate=eta, service_rate=mu, battery_capacity=battery
  )


# lambda = (1, 1), eta = 1, mu = 1, B = 2.
P1 = _params([1.0, 1.0], 1.0)
# lambda = (1, 1), eta = 2: rho == beta.
P2 = _params([1.0, 1.0], 2.0)


@pytest.mark.parametrize(
  'reset, expected',
  [
    (KEEP_AGE, [[0, 0], [0, 1]]),
    (FREEZE_AGE, [[0, 0], [0, 0]]),
    (DELIVER, [[0, 0], [0, 1]]),
    (((0, 0), (0, 0)), [[1, 0], [0, 1]]),
  ],
)
def test_hat_matrix(reset, expected):
  np.testing.assert_array_equal(shs.hat_matrix(reset), expected)


def test_hat_matrix_rejects_non_binary():
  with pytest.raises(ParameterError):
    shs.hat_matrix(((2, 0), (0, 0)))


def test_transition_rejects_non_binary_reset():
  with pytest.raises(ValidationError):
    Transition(
      label=1, source_state=1, target_state=1, rate=1.0, rate_name='x', reset_map=((1, 2), (0, 0))
    )


def test_steady_state_wp():
  pi = shs.steady_state(build(Discipline.WP, P1))
  np.testing.assert_allclose(pi.pi, np.array([4, 2, 4, 1, 2]) / 13, rtol=1e-12)
  assert pi.residual < 1e-12


def test_steady_state_equal_load():
  pi = shs.steady_state(build(Discipline.PS, P2))
  np.testing.assert_allclose(pi.pi, np.array([1, 1, 2, 1, 2]) / 7, rtol=1e-12)


def test_generator_rows_sum_to_zero():
  q = shs.generator_matrix(build(Discipline.SA, P1))
  np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-14)


@pytest.mark.parametrize(
  'discipline, expected',
  [(Discipline.WP, 184 / 39), (Discipline.PS, 158 / 39), (Discipline.SA, 329 / 78)],
)
def test_average_aoi(discipline, expected):
  assert shs.average_aoi(build(discipline, P1)) == pytest.approx(expected, rel=1e-12)


def test_average_aoi_single_source():
  model = build(Discipline.WP, _params([1.0], 1.0))
  assert shs.average_aoi(model) == pytest.approx(2.8, rel=1e-12)


def test_moment_matrix_is_z_matrix():
  g = shs.moment_matrix(build(Discipline.PS, P1))
  off_diagonal = g - np.diag(np.diag(g))
  assert (off_diagonal <= 0).all()


def test_first_moment_vectors_report_raw_minimum():
  model = build(Discipline.WP, P1)
  vectors = shs.first_moment_vectors(model, shs.steady_state(model))
  assert vectors.v.shape == (5, 2)
  assert (vectors.v >= 0).all()
  assert vectors.raw_min >= -1e-10
  assert vectors.average_aoi == pytest.approx(184 / 39, rel=1e-12)


def test_reducible_chain_rejected():
  states = tuple(
    StateDescriptor(index=i, energy=0, occupancy=0, row=1, key=f's{i}') for i in (1, 2, 3)
  )
  edges = [(1, 2, KEEP_AGE), (2, 1, DELIVER), (3, 1, DELIVER)]
  transitions = tuple(
    Transition(label=k, source_state=a, target_state=b, rate=1.0, rate_name='r', reset_map=reset)
    for k, (a, b, reset) in enumerate(edges, start=1)
  )
  model = ShsModel(states=states, transitions=transitions)
  with pytest.raises(ReducibleChainError) as info:
    shs.steady_state(model)
  assert info.value.unreachable == (3,)


def test_model_rejects_unknown_state():
  states = (StateDescriptor(index=1, energy=0, occupancy=0, row=1, key='s1'),)
  transition = Transition(
    label=1, source_state=1, target_state=2, rate=1.0, rate_name='a', reset_map=KEEP_AGE
  )
  with pytest.raises(ValidationError):
    ShsModel(states=states, transitions=(transition,))


@pytest.mark.parametrize('discipline', list(Discipline))
def test_mgf_at_zero_is_one(discipline):
  assert shs.mgf(build(discipline, P1), 0.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize('discipline', list(Discipline))
def test_mgf_domain_bound(discipline):
  model = build(discipline, P1)
  bound = shs.mgf_domain_bound(model)
  assert 0 < bound.lower < bound.upper
  assert bound.upper - bound.lower <= 1e-6
  inside = shs.mgf(model, 0.5 * bound.lower)
  assert math.isfinite(inside) and inside > 1.0
  with pytest.raises(ConvergenceRegionError) as info:
    shs.mgf(model, bound.upper + 1e-3)
  assert info.value.bound[0] == pytest.approx(bound.lower)


def test_mgf_increasing_in_s():
  model = build(Discipline.WP, P1)
  pi = shs.steady_state(model)
  bound = shs.mgf_domain_bound(model).lower
  values = [shs.mgf(model, s, pi) for s in np.linspace(-0.5, 0.9 * bound, 8)]
  assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize('order, tolerance', [(1, 1e-9), (2, 1e-6)])
def test_ridders_derivative_of_exponential(order, tolerance):
  value, err = shs.ridders_derivative(math.exp, order, step=0.5)
  assert value == pytest.approx(1.0, rel=tolerance)
  assert err < 1e-4


def test_ridders_rejects_third_order():
  with pytest.raises(ParameterError):
    shs.ridders_derivative(math.exp, 3)


def test_moment_from_mgf_rescales_by_service_rate():
  # M(sbar) = exp(2 sbar) is the MGF of the constant 1 when mu = 2.
  assert shs.moment_from_mgf(lambda x: math.exp(2 * x), 1, 2.0) == pytest.approx(1.0, rel=1e-8)
  assert shs.moment_from_mgf(lambda x: math.exp(2 * x), 2, 2.0) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize(
  'discipline, expected',
  [(Discipline.WP, 1418 / 39), (Discipline.PS, 3466 / 117), (Discipline.SA, 1214.5 / 39)],
)
def test_second_moment_from_engine_mgf(discipline, expected):
  model = build(discipline, P1)
  pi = shs.steady_state(model)
  step = min(0.1, 0.5 * shs.mgf_domain_bound(model).lower)
  second = shs.moment_from_mgf(lambda x: shs.mgf(model, x, pi), 2, 1.0, step)
  assert second == pytest.approx(expected, rel=1e-5)
