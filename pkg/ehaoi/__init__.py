"""Age of information of a multi-source energy-harvesting transmitter."""

from .analysis import AoiReport, Method, analyze, compare
from .chains import Discipline, build
from .params import DerivedRates, SystemParams, derive
from .simulator import SimConfig, SimResult, replicate, simulate

__all__ = [
  'AoiReport',
  'DerivedRates',
  'Discipline',
  'Method',
  'SimConfig',
  'SimResult',
  'SystemParams',
  'analyze',
  'build',
  'compare',
  'derive',
  'replicate',
  'simulate',
]
