"""Multiview delay-map ensemble forecasting for open chaotic systems.

Pipeline: sample many small delay-coordinate maps (randomly or by random
disjoint partitioning of the coordinate universe), fit a linear response
model per map, down-select by predictive correlation on a held-out window,
combine survivors by a timewise trimmed mean, and act through
threshold-crossing decisions.  A walk-forward trading backtest and a
column-permutation skill test provide the validation surface.
"""

from .backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
