import pytest

from ehaoi import shs
from ehaoi.chains import Discipline, build
from ehaoi.closed_form.average import (
  GapPair,
  avg_aoi_closed,
  avg_aoi_limit,
  avg_aoi_single_ps,
  avg_aoi_single_wp,
  avg_gap,
)
from ehaoi.params import SystemParams

WP, PS, SA = Discipline.WP, Discipline.PS, Discipline.SA


def _params(rates, eta, mu=1.0, battery=2):
  return SystemParams(
    arrival_rates=rates, energy_rate=eta, service_rate=mu, battery_capacity=battery
  )


P1 = _params([1.0, 1.0], 1.0)
P2 = _params([1.0, 1.0], 2.0)
P3 = _params([0.5, 0.5], 1.0)
P4 = _params([0.5, 0.5], 2.0)

GRID = [
  P1,
  P2,
  P3,
  P4,
  _params([0.5, 0.5], 1.5),
  _params([0.6, 0.3, 0.4], 1.5, battery=3),
  _params([0.7, 0.2], 0.4, mu=1.3, battery=5),
  _params([2.0, 0.5, 0.25, 0.25], 1.5, battery=1),
  _params([0.2, 1.1], 3.0, mu=0.5, battery=8),
]

SHARES = {1: [1.0], 2: [0.6, 0.4], 3: [0.5, 0.3, 0.2]}
FULL_GRID = [
  _params([rho * share for share in SHARES[n]], beta, battery=battery)
  for n in (1, 2, 3)
  for battery in (1, 2, 3, 5)
  for rho in (0.5, 1.0, 3.0)
  for beta in (0.5, 1.5, 5.0)
]


@pytest.mark.parametrize(
  'discipline, params, expected',
  [
    (WP, P1, 184 / 39),
    (PS, P1, 158 / 39),
    (SA, P1, 329 / 78),
    (WP, P2, 225 / 56),
    (PS, P2, 563 / 168),
    (SA, P2, 197 / 56),
    (WP, P3, 5.25),
    (PS, P3, 4.75),
    (SA, P3, 295 / 60),
    (WP, P4, 184 / 39),
    (PS, P4, 164.5 / 39),
    (SA, P4, 57 / 13),
  ],
)
def test_two_source_averages(discipline, params, expected):
  assert avg_aoi_closed(discipline, params) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
  'rho, beta, expected',
  [(1.0, 1.0, 2.8), (2.0, 2.0, 16 / 7), (1.0, 2.0, 67 / 26)],
)
def test_single_source_wp(rho, beta, expected):
  assert avg_aoi_single_wp(_params([rho], beta)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('rho, beta, expected', [(1.0, 1.0, 2.3), (2.0, 2.0, 68 / 42)])
def test_single_source_ps(rho, beta, expected):
  assert avg_aoi_single_ps(_params([rho], beta)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('discipline', list(Discipline))
def test_single_source_dispatch(discipline):
  params = _params([0.8], 1.7, battery=3)
  expected = shs.average_aoi(build(discipline, params))
  assert avg_aoi_closed(discipline, params) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize('params', GRID)
def test_matches_engine(discipline, params):
  for source in range(1, params.n_sources + 1):
    expected = shs.average_aoi(build(discipline, params, source))
    assert avg_aoi_closed(discipline, params, source) == pytest.approx(expected, rel=1e-9)


def test_time_rescaling():
  params = _params([0.6, 0.3, 0.4], 1.5, battery=3)
  for discipline in Discipline:
    base = avg_aoi_closed(discipline, params)
    assert avg_aoi_closed(discipline, params.scaled(2.0)) == pytest.approx(base / 2, rel=1e-12)


@pytest.mark.parametrize('params', GRID)
def test_discipline_ordering(params):
  wp, ps, sa = (avg_aoi_closed(d, params) for d in (WP, PS, SA))
  assert ps <= sa + 1e-12
  assert sa <= wp + 1e-12


@pytest.mark.parametrize(
  'discipline, expected', [(WP, 4.5), (PS, 4.0), (SA, 4.0 + 1 / 6)]
)
def test_limits(discipline, expected):
  assert avg_aoi_limit(discipline, _params([0.5, 0.5], 1.0)) == pytest.approx(expected)


@pytest.mark.parametrize('discipline', list(Discipline))
def test_large_energy_rate_reaches_limit(discipline):
  params = _params([0.5, 0.5], 1e6)
  assert avg_aoi_closed(discipline, params) == pytest.approx(
    avg_aoi_limit(discipline, params), abs=1e-4
  )


def test_gaps_on_oracle_point():
  assert avg_gap(GapPair.WP_PS, P1) == pytest.approx(2 / 3, rel=1e-12)
  assert avg_gap(GapPair.WP_SA, P1) == pytest.approx(1 / 2, rel=1e-12)
  assert avg_gap(GapPair.SA_PS, P1) == pytest.approx(1 / 6, rel=1e-12)


@pytest.mark.parametrize('params', GRID + [_params([0.9], 0.6, battery=3)])
def test_gaps_match_differences(params):
  pairs = {GapPair.WP_PS: (WP, PS), GapPair.WP_SA: (WP, SA), GapPair.SA_PS: (SA, PS)}
  for pair, (left, right) in pairs.items():
    gap = avg_gap(pair, params)
    expected = avg_aoi_closed(left, params) - avg_aoi_closed(right, params)
    assert gap >= 0
    assert gap == pytest.approx(expected, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize('params', FULL_GRID)
def test_matches_engine_across_grid(discipline, params):
  for source in range(1, params.n_sources + 1):
    expected = shs.average_aoi(build(discipline, params, source))
    assert avg_aoi_closed(discipline, params, source) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize('battery', [1, 2])
def test_faint_second_source_reduces_to_single_source(discipline, battery):
  faint = _params([1.0, 1e-8], 1.0, battery=battery)
  alone = _params([1.0], 1.0, battery=battery)
  single = avg_aoi_single_wp(alone) if discipline is WP else avg_aoi_single_ps(alone)
  value = avg_aoi_closed(discipline, faint)
  assert value == pytest.approx(single, rel=1e-7)
  assert value == pytest.approx(shs.average_aoi(build(discipline, faint)), rel=1e-7)


def test_single_source_values_at_equal_load():
  assert avg_aoi_single_wp(_params([1.0], 1.0, battery=1)) == pytest.approx(3.0, rel=1e-12)
  assert avg_aoi_single_ps(_params([1.0], 1.0, battery=1)) == pytest.approx(2.5, rel=1e-12)
