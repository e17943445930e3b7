import pytest

from ehaoi.closed_form.recursions import CVariant, c_constants
from ehaoi.errors import ParameterError, SingleSourceError
from ehaoi.params import SystemParams


def _params(rates, eta, mu=1.0, battery=2):
  return SystemParams(
    arrival_rates=rates, energy_rate=eta, service_rate=mu, battery_capacity=battery
  )


def test_one_packet_battery():
  constants = c_constants(CVariant.C, _params([0.6, 0.4], 1.5, battery=1))
  assert constants.values == pytest.approx((2.25, 1.0))
  assert constants.labels() == ('c_0', 'c_2')


def test_two_packet_battery():
  constants = c_constants(CVariant.C, _params([0.5, 0.5], 1.0))
  assert constants.values == pytest.approx((4 / 3, 1.5, 1.0))
  assert list(constants.products()) == pytest.approx([4 / 3, 2.0, 2.0])


def test_barred_set_relabels_the_same_numbers():
  params = _params([0.7, 0.2, 0.4], 1.3, battery=4)
  plain = c_constants(CVariant.C, params)
  barred = c_constants(CVariant.C_BAR, params)
  assert barred.values == plain.values
  assert barred.labels() == ('c_bar_-1', 'c_bar_0', 'c_bar_1', 'c_bar_2', 'c_bar_3')


@pytest.mark.parametrize('variant', [CVariant.C_S, CVariant.C_BAR_S])
def test_s_variant_reduces_at_zero(variant):
  params = _params([0.7, 0.2, 0.4], 1.3, mu=1.7, battery=4)
  at_zero = c_constants(variant, params, s=0.0)
  assert at_zero.values == pytest.approx(c_constants(CVariant.C, params).values, rel=1e-12)
  assert at_zero.s_value == 0.0


def test_s_variant_full_battery_term():
  constants = c_constants(CVariant.C_S, _params([0.5, 0.5], 1.0), s=0.25)
  assert constants.values[-1] == pytest.approx(0.75)


def test_source_of_interest_changes_the_lowest_term():
  params = _params([0.6, 0.4], 1.5, battery=1)
  assert c_constants(CVariant.C, params, source=2).values[0] == pytest.approx(1.5 * (1 / 0.6 - 1))


def test_single_source_rejected():
  with pytest.raises(SingleSourceError):
    c_constants(CVariant.C, _params([1.0], 1.0))


def test_s_variant_needs_s():
  assert CVariant.C_S.needs_s and not CVariant.C_BAR.needs_s
  with pytest.raises(ParameterError):
    c_constants(CVariant.C_S, _params([0.5, 0.5], 1.0))
