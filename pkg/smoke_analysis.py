#!/usr/bin/env python3
"""End-to-end smoke run: closed form, SHS engine and a short simulation on one system."""

import json
import sys

from ehaoi.analysis import Method, analyze, compare
from ehaoi.chains import Discipline
from ehaoi.params import SystemParams
from ehaoi.simulator import SimConfig, replicate
from ehaoi.tracing import get_experiment_id


def main():
  """Run every evaluator on a two-source system and compare the answers."""
  params = SystemParams(
    arrival_rates=[0.5, 0.5], energy_rate=1.5, service_rate=1.0, battery_capacity=2
  )
  print(f'Tracing experiment: {get_experiment_id()}')
  print('Comparing disciplines...')
  print('=' * 50)
  print(json.dumps(compare(params).model_dump(mode='json'), indent=2))

  failures = 0
  for discipline in Discipline:
    closed = analyze(params, discipline, method=Method.CLOSED)
    engine = analyze(params, discipline, method=Method.SHS)
    simulated = replicate(params, discipline, SimConfig(horizon=2e4, replications=4))
    estimate = simulated.sources[0].mean
    agree = abs(closed.mean - engine.mean) <= 1e-9 * closed.mean
    covered = abs(estimate.value - closed.mean) <= 5 * estimate.stderr
    print(
      f'{discipline.value}: closed {closed.mean:.9f}  shs {engine.mean:.9f}  '
      f'sim {estimate.value:.4f} +/- {estimate.ci_half_width:.4f}  '
      f'{"ok" if agree and covered else "MISMATCH"}'
    )
    failures += not (agree and covered)

  if failures:
    print(f'{failures} discipline(s) disagree', file=sys.stderr)
    sys.exit(1)
  print('All evaluators agree.')


if __name__ == '__main__':
  main()
