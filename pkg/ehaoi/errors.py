"""Errors raised by the AoI solvers, evaluators and simulator."""

from typing import Mapping, Optional, Sequence, Tuple


class AoiError(ValueError):
  """Base class for every error raised by ehaoi."""


class ParameterError(AoiError):
  """Invalid parameters, source index, sweep or config values."""


class SingularSystemError(AoiError):
  """A linear system could not be solved or produced a non-finite solution."""


class ReducibleChainError(SingularSystemError):
  """The discrete chain is not irreducible."""

  def __init__(self, message: str, unreachable: Sequence[int]):
    super().__init__(message)
    self.unreachable = tuple(unreachable)


class NegativeSolutionError(AoiError):
  """The first-moment system has no non-negative solution."""

  def __init__(self, message: str, raw_min: float):
    super().__init__(message)
    self.raw_min = raw_min


class ConvergenceRegionError(AoiError):
  """The MGF argument lies at or beyond the domain bound."""

  def __init__(self, message: str, bound: Tuple[float, float]):
    super().__init__(message)
    self.bound = bound


class SingleSourceError(AoiError):
  """A recursion needs other-source traffic but the chosen source is alone."""


class PreconditionError(AoiError):
  """An evaluator was called outside the regime it is defined for."""


class SweepCellError(AoiError):
  """A sweep grid cell failed; carries the offending parameters."""

  def __init__(self, message: str, cell: Mapping[str, object]):
    super().__init__(message)
    self.cell = dict(cell)


class SimulationBudgetError(AoiError):
  """A simulation hit its event cap before reaching the horizon."""

  def __init__(self, message: str, events: int, time: Optional[float] = None):
    super().__init__(message)
    self.events = events
    self.time = time


class MgfOverflowError(AoiError):
  """An empirical MGF batch mean exceeds the floating-point range."""

  def __init__(self, message: str, s: float):
    super().__init__(message)
    self.s = s
