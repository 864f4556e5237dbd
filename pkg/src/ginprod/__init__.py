"""Spectral statistics of products of rectangular complex Ginibre matrices.

Modules
-------
specfun     log-gamma and related special functions on the complex plane
density     limiting density in the equal-ratio model, edges, cdf, moments
stieltjes   resolvent and density for distinct ratios
kernel      finite-N correlation kernel by contour integration
montecarlo  seeded sampling of the product and empirical checks
"""

from .density import ModelParams, density_at, support_edges
from .errors import (BranchTrackingError, ContourConfigError, DomainError,
                     EdgeProximityWarning, InadmissibleAngleError, PrecisionLossError)
from .kernel import ContourConfig, FiniteModel, kernel_log
from .montecarlo import EnsembleConfig, run_ensemble
from .stieltjes import GeneralParams, solve_G

__version__ = "0.1.0"
