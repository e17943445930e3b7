import numpy as np
import pytest

from ehaoi import chains, shs
from ehaoi.chains import Discipline, build
from ehaoi.params import SystemParams


def _params(rates, eta, mu=1.0, battery=2):
  return SystemParams(
    arrival_rates=rates, energy_rate=eta, service_rate=mu, battery_capacity=battery
  )


GRID = [
  _params([1.0, 1.0], 1.0),
  _params([1.0, 1.0], 2.0),
  _params([0.5, 0.5], 1.0),
  _params([0.6, 0.3, 0.4], 1.5, battery=3),
  _params([0.7, 0.2], 0.4, mu=1.3, battery=4),
  _params([1.0], 1.0, battery=1),
]


@pytest.mark.parametrize('battery', [1, 2, 5])
def test_wp_shape(battery):
  model = build(Discipline.WP, _params([0.5, 0.5], 1.5, battery=battery))
  assert model.n_states == 2 * battery + 1
  assert len(model.transitions) == 4 * battery
  assert sorted(t.label for t in model.transitions) == list(range(1, 4 * battery + 1))


def test_single_source_omits_other_source_families():
  model = build(Discipline.WP, _params([1.0], 1.0, battery=3))
  assert len(model.transitions) == 9
  assert all(t.rate_name != 'lambda_-1' for t in model.transitions)


@pytest.mark.parametrize('battery', [1, 3])
def test_ps_adds_preemption_loops(battery):
  model = build(Discipline.PS, _params([0.5, 0.5], 1.5, battery=battery))
  loops = [t for t in model.transitions if t.is_self_loop]
  assert len(model.transitions) == 6 * battery
  assert len(loops) == 2 * battery
  assert {t.source_state for t in loops} == {2 * k + 1 for k in range(1, battery + 1)}


@pytest.mark.parametrize('n_sources, battery', [(2, 2), (3, 1), (4, 3)])
def test_sa_shape(n_sources, battery):
  model = build(Discipline.SA, _params([0.3] * n_sources, 1.0, battery=battery))
  assert model.n_states == 1 + battery * (n_sources + 1)
  assert len(model.transitions) == battery * (1 + 3 * n_sources)


def test_sa_state_numbering():
  assert chains.sa_idle_state(0, 3) == 1
  assert chains.sa_idle_state(1, 3) == 2
  assert chains.sa_idle_state(2, 3) == 6
  assert chains.sa_busy_state(1, 1, 3) == 3
  assert chains.sa_busy_state(3, 2, 3) == 9


def test_sa_only_source_of_interest_delivers():
  model = build(Discipline.SA, _params([0.5, 0.5], 1.0))
  for t in model.transitions:
    if t.rate_name == 'mu':
      state = model.states[t.source_state - 1]
      expected = chains.DELIVER if state.row == 2 else chains.KEEP_AGE
      assert t.reset_map == expected


def test_sa_keys_follow_original_source_ids():
  model = build(Discipline.SA, _params([0.5, 0.2, 0.3], 1.0, battery=1), source=2)
  assert [s.key for s in model.states] == [
    'e0_idle',
    'e1_idle',
    'e1_busy_s2',
    'e1_busy_s1',
    'e1_busy_s3',
  ]


def test_state_key():
  assert chains.state_key(0) == 'e0_idle'
  assert chains.state_key(3, 1) == 'e3_busy'
  assert chains.state_key(2, 4, source_tagged=True) == 'e2_busy_s4'
  assert chains.source_order(4, 3) == [3, 1, 2, 4]


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize('params', GRID)
def test_closed_steady_state_matches_solver(discipline, params):
  model = build(discipline, params)
  solved = shs.steady_state(model).pi
  closed = chains.steady_state_closed(discipline, params).pi
  np.testing.assert_allclose(closed, solved, rtol=1e-10, atol=1e-14)
  assert closed.sum() == pytest.approx(1.0, rel=1e-12)


def test_equal_load_branch_is_continuous():
  exact = chains.empty_battery_probability(_params([1.0, 1.0], 2.0))
  nearby = chains.empty_battery_probability(_params([1.0, 1.0], 2.0 + 1e-6))
  assert exact == pytest.approx(1 / 7)
  assert nearby == pytest.approx(exact, rel=1e-5)


def test_level_weights():
  np.testing.assert_allclose(chains.level_weights(_params([1.0], 2.0)), [1.0, 2.0, 4.0])


@pytest.mark.parametrize('discipline', list(Discipline))
def test_relabeling_symmetric_sources(discipline):
  params = _params([0.5, 0.5], 1.5)
  first = shs.average_aoi(build(discipline, params, 1))
  second = shs.average_aoi(build(discipline, params, 2))
  assert first == pytest.approx(second, rel=1e-12)


def _with_identity_loops(model: shs.ShsModel) -> shs.ShsModel:
  label = max(t.label for t in model.transitions)
  loops = [
    shs.Transition(
      label=label + q,
      source_state=q,
      target_state=q,
      rate=0.3 + 0.7 * q,
      rate_name='extra_loop',
      reset_map=((1, 0), (0, 1)),
    )
    for q in range(1, model.n_states + 1)
  ]
  return model.model_copy(update={'transitions': (*loops[::2], *model.transitions, *loops[1::2])})


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize('params', GRID)
def test_identity_self_loops_change_nothing(discipline, params):
  plain = build(discipline, params)
  looped = _with_identity_loops(plain)
  assert len(looped.transitions) == len(plain.transitions) + plain.n_states

  np.testing.assert_allclose(
    shs.steady_state(looped).pi, shs.steady_state(plain).pi, rtol=1e-10, atol=1e-14
  )
  assert shs.average_aoi(looped) == pytest.approx(shs.average_aoi(plain), rel=1e-10)
  bound = shs.mgf_domain_bound(plain)
  assert shs.mgf_domain_bound(looped).lower == pytest.approx(bound.lower, abs=1e-5)
  for s in (-0.4, 0.5 * bound.lower):
    assert shs.mgf(looped, s) == pytest.approx(shs.mgf(plain, s), rel=1e-9)


def test_dump_model_is_deterministic():
  params = _params([1.0, 1.0], 1.0)
  text = chains.dump_model(build(Discipline.WP, params))
  assert text == chains.dump_model(build(Discipline.WP, params))
  lines = text.splitlines()
  assert lines[0] == '# states: 5'
  assert '# transitions: 8' in lines
  assert any('lambda_-1' in line and 'A=[[1,1],[0,0]]' in line for line in lines)
