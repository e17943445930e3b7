"""Test setup shared by every colocated *_test.py module."""

import os

# Set before ehaoi.tracing is imported so no test writes trace stores.
os.environ['EHAOI_TRACING'] = 'off'
os.environ.pop('MLFLOW_EXPERIMENT_ID', None)
