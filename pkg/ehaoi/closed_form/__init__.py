"""Closed-form AoI evaluators for the LCFS-WP, LCFS-PS and LCFS-SA disciplines."""

from .average import GapPair, Limit, avg_aoi_closed, avg_aoi_limit, avg_gap
from .mgf import mgf_closed, mgf_domain_bound_closed, theta
from .moments import moments_b2, moments_from_mgf
from .recursions import CConstants, CVariant, c_constants

__all__ = [
  'CConstants',
  'CVariant',
  'GapPair',
  'Limit',
  'avg_aoi_closed',
  'avg_aoi_limit',
  'avg_gap',
  'c_constants',
  'mgf_closed',
  'mgf_domain_bound_closed',
  'moments_b2',
  'moments_from_mgf',
  'theta',
]
