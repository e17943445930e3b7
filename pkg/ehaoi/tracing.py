"""MLflow tracing utils."""

import logging
import os
from typing import Callable, Optional, TypeVar

import mlflow

logger = logging.getLogger(__name__)

F = TypeVar('F', bound=Callable)

MLFLOW_EXPERIMENT_ID = os.environ.get('MLFLOW_EXPERIMENT_ID', None)
TRACING_ENABLED = (
  MLFLOW_EXPERIMENT_ID is not None and os.getenv('EHAOI_TRACING', 'on').lower() != 'off'
)

if TRACING_ENABLED:
  # NOTE: MLFLOW_TRACKING_URI selects the tracking server; the local store is the default.
  mlflow.set_experiment(experiment_id=MLFLOW_EXPERIMENT_ID)
  logger.info(f'Tracing solver runs to mlflow experiment {MLFLOW_EXPERIMENT_ID}')


def traced(span_type: str = 'CHAIN') -> Callable[[F], F]:
  """Wraps a solver entry point in an MLflow span when tracing is enabled.

  Without an experiment the function is returned unchanged, so library calls
  and tests never write trace stores.
  """

  def decorate(fn: F) -> F:
    if not TRACING_ENABLED:
      return fn
    return mlflow.trace(fn, span_type=span_type)

  return decorate


def get_experiment_id() -> Optional[str]:
  """Gets the mlflow experiment id traces are written to, if tracing is on."""
  return MLFLOW_EXPERIMENT_ID if TRACING_ENABLED else None
