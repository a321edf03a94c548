"""Region-based PolSAR classification by minimum stochastic-distance statistics."""

__version__ = "0.1.0"

from .distances import (  # noqa: E402
    StatisticKind,
    TestResult,
    chi2_sf,
    distance_from_statistic,
    stat_bhattacharyya,
    stat_chisquare,
    stat_gaussian_bhattacharyya,
    stat_hellinger,
    stat_kl,
    stat_renyi,
)
from .wishart import CovarianceEstimate, WishartModel, estimate_covariance  # noqa: E402
from .classifier import SegmentMap, classify_segments, fuse_majority, fuzzy_assign, grid_segment  # noqa: E402
from .scenes import MosaicSpec, PrototypeSet, preset, simulate_mosaic, simulate_prototypes  # noqa: E402
