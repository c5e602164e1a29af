"""Simulation toolkit for infrastructure-less UWB relative localization.

A mobile robot carries a small trio of UWB anchors and localizes a tag
in its own body frame. The package covers the geometry (GDOP), the
ranging error model, NLLS trilateration, a localization loss that scores
robot poses, a unicycle episode engine, learned and heuristic motion
policies, and the benchmark harness that compares them.
"""

from .geometry import AnchorLayout, equilateral_layout, gdop_analytical, gdop_grid, isosceles_layout, layout_by_name
from .sensing import RangingModel, expected_short_range_error, measure_ranges, true_ranges
from .estimation import Estimate, gdop_empirical, trilaterate, trilaterate_batch
from .loss import LossConfig, LossExtrema, default_extrema, find_loss_extrema, localization_loss, loss_grid, scaled_loss, scaled_loss_grid
from .sim import LocalizationEnv, Pose2D, RewardParams, compute_reward, run_episode, step_unicycle

__version__ = "0.1.0"
