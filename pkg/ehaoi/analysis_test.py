import math

import pytest

from ehaoi.analysis import Method, analyze, compare, standard_deviation
from ehaoi.chains import Discipline
from ehaoi.closed_form import GapPair, avg_aoi_limit
from ehaoi.errors import ConvergenceRegionError, ParameterError
from ehaoi.params import SystemParams


def _params(rates, eta, mu=1.0, battery=2):
  return SystemParams(
    arrival_rates=rates, energy_rate=eta, service_rate=mu, battery_capacity=battery
  )


def test_single_source_report():
  report = analyze(_params([1.0], 1.0), Discipline.WP, method=Method.CLOSED)
  assert report.mean == pytest.approx(2.8)
  assert report.second_moment == pytest.approx(11.2)
  assert report.std == pytest.approx(math.sqrt(3.36))
  assert report.domain_bound == pytest.approx(1.0)


def test_mgf_sample_at_zero():
  report = analyze(_params([0.5, 0.5], 1.5), Discipline.PS, mgf_at=[0.0])
  assert report.mgf_samples[0].s_bar == 0.0
  assert report.mgf_samples[0].value == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize('discipline', list(Discipline))
@pytest.mark.parametrize(
  'params',
  [
    _params([0.5, 0.5], 1.5),
    _params([0.6, 0.3, 0.4], 1.5, battery=3),
    _params([0.9], 0.6, mu=2.0, battery=4),
  ],
)
def test_methods_agree(discipline, params):
  closed = analyze(params, discipline, 1, Method.CLOSED, mgf_at=[0.05])
  engine = analyze(params, discipline, 1, Method.SHS, mgf_at=[0.05])
  assert closed.mean == pytest.approx(engine.mean, rel=1e-9)
  assert closed.second_moment == pytest.approx(engine.second_moment, rel=1e-5)
  assert closed.mgf_samples[0].value == pytest.approx(engine.mgf_samples[0].value, rel=1e-9)


def test_sample_outside_domain():
  with pytest.raises(ConvergenceRegionError):
    analyze(_params([0.5, 0.5], 1.5), Discipline.WP, mgf_at=[0.99])


def test_invalid_source():
  with pytest.raises(ParameterError):
    analyze(_params([0.5, 0.5], 1.5), Discipline.WP, source=3)


def test_standard_deviation_clamps_roundoff():
  assert standard_deviation(2.0, 4.0 - 1e-12) == 0.0
  assert standard_deviation(1.0, 2.0) == pytest.approx(1.0)


def test_compare_ordering_and_metrics():
  comparison = compare(_params([0.5, 0.5], 1.5))
  means = {s.discipline: s.reports[0].mean for s in comparison.summaries}
  assert means[Discipline.PS] <= means[Discipline.SA] <= means[Discipline.WP]
  for summary in comparison.summaries:
    assert len(summary.reports) == 2
    assert summary.jfi == pytest.approx(1.0)
    assert summary.sum_aoi == pytest.approx(2 * summary.reports[0].mean)
  assert comparison.gaps[GapPair.WP_PS] == pytest.approx(
    means[Discipline.WP] - means[Discipline.PS], rel=1e-9
  )


def test_compare_methods_agree_on_gaps():
  params = _params([0.7, 0.2, 0.4], 1.1, battery=3)
  closed = compare(params, source=2)
  engine = compare(params, source=2, method=Method.SHS)
  for pair in GapPair:
    assert closed.gaps[pair] == pytest.approx(engine.gaps[pair], rel=1e-7, abs=1e-10)
  assert closed.summary(Discipline.SA).jfi == pytest.approx(
    engine.summary(Discipline.SA).jfi, rel=1e-9
  )
  assert closed.summary(Discipline.WP).jfi < 1.0


def test_compare_near_the_energy_limit():
  params = _params([0.5, 0.5], 1e6)
  comparison = compare(params)
  for summary in comparison.summaries:
    limit = avg_aoi_limit(summary.discipline, params)
    assert summary.reports[0].mean == pytest.approx(limit, abs=1e-4)
