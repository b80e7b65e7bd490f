"""Expert selection in shifting stochastic environments.

Follow-The-Best-Interval (FTBI) with Follow-The-Leader and AdaNormalHedge
baselines, reward environments and a seeded benchmark harness.
"""

from ._jit import HAVE_NUMBA
from .dyadic import DyadicInterval, TimeRange, active_set, cover_of_segments, geometric_cover
from .policies import ANH, FTBI, FTL, Decision, anh_potential, make_policy, run_policy

__all__ = [
    "HAVE_NUMBA",
    "DyadicInterval",
    "TimeRange",
    "active_set",
    "geometric_cover",
    "cover_of_segments",
    "FTL",
    "FTBI",
    "ANH",
    "Decision",
    "anh_potential",
    "make_policy",
    "run_policy",
]

__version__ = "0.1.0"
