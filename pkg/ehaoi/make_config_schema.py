"""Writes the JSON schema of the run config document to the specified output.

This is meant to run as a standalone script: python -m ehaoi.make_config_schema --output PATH.
"""

import json

import click

from .config import RunConfig


@click.command()
@click.option(
  '--output', required=True, type=str, help='The output filepath for the config schema.'
)
def main(output: str) -> None:
  """Create the JSON schema of the config document accepted by `ehaoi --config`."""
  with open(output, 'w') as f:
    json.dump(RunConfig.model_json_schema(by_alias=True), f, indent=2)


if __name__ == '__main__':
  main()
