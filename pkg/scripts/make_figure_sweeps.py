#!/usr/bin/env python3
"""Regenerates the CSV grids behind the battery, energy-rate and load-split curves.

Usage: uv run python scripts/make_figure_sweeps.py --output-dir sweeps/
"""

from pathlib import Path

import click
import numpy as np

from ehaoi.sweep import Output, SweepParameter, SweepSpec, sweep, to_csv

SPLIT_LOADS = (1.0, 3.0)
SPLIT_SOURCES = (2, 4, 5)


def figure_specs():
  """(file name, spec) pairs for every curve family."""
  specs = [
    (
      'battery.csv',
      SweepSpec(parameter=SweepParameter.BATTERY, values=list(range(1, 9)), rho=1.0, beta=1.5),
    ),
    (
      'beta.csv',
      SweepSpec(
        parameter=SweepParameter.BETA,
        values=[float(v) for v in np.geomspace(0.1, 10.0, 25)],
        rho=1.0,
        battery=2,
      ),
    ),
  ]
  for rho in SPLIT_LOADS:
    for n_sources in SPLIT_SOURCES:
      specs.append(
        (
          f'rho_split_rho{rho:g}_n{n_sources}.csv',
          SweepSpec(
            parameter=SweepParameter.RHO_SPLIT,
            values=[float(v) for v in np.linspace(0.05 * rho, 0.95 * rho, 19)],
            rho=rho,
            n_sources=n_sources,
            beta=1.5,
            battery=2,
            outputs=list(Output),
          ),
        )
      )
  return specs


@click.command()
@click.option('--output-dir', required=True, type=click.Path(path_type=Path, file_okay=False))
@click.option('--workers', type=int, default=1, show_default=True)
def main(output_dir: Path, workers: int) -> None:
  """Write one CSV per curve family."""
  output_dir.mkdir(parents=True, exist_ok=True)
  for name, spec in figure_specs():
    path = output_dir / name
    path.write_text(to_csv(sweep(spec, workers=workers)))
    print(f'Wrote {path} ({len(spec.values)} rows)')


if __name__ == '__main__':
  main()
