"""
hotspot_spread

从每周热点观测中学习分区之间的潜在传播矩阵，预测下一周热点，并分析传播网络的稳定性及其与人口流动的关系
"""

__version__ = "1.0.0"

from .exceptions import HotspotSpreadError, UsageError, DataError
from .weeks import EpiWeekCalendar
from .ingest import (
    IngestConfig,
    LocalityRecord,
    SubzoneIndex,
    WeeklyCaseCounts,
    parse_snapshot,
    assign_subzone,
    build_weekly_counts,
    load_subzone_index,
)
from .hotspot import HotspotSeries, binarize
from .learner import (
    LearnerConfig,
    SpreadingModel,
    estimate,
    loss,
    row_gradient,
    fit_spreading_matrix,
    search_temporal_weights,
    learn_weeks,
)
from .forecaster import ForecastResult, activate, indicator_threshold, forecast_next_week
from .evaluation import WeeklyScore, YearlySummary, confusion_counts, weekly_metrics, yearly_summary
from .analysis import (
    FlowNetwork,
    RegionMetrics,
    row_normalize,
    ssim,
    aggregate_yearly,
    build_mobility_network,
    region_metrics,
    rollup_planning_areas,
    compare_networks,
)
from .synth import SynthScenario, generate

__all__ = [
    "HotspotSpreadError",
    "UsageError",
    "DataError",
    "EpiWeekCalendar",
    "IngestConfig",
    "LocalityRecord",
    "SubzoneIndex",
    "WeeklyCaseCounts",
    "parse_snapshot",
    "assign_subzone",
    "build_weekly_counts",
    "load_subzone_index",
    "HotspotSeries",
    "binarize",
    "LearnerConfig",
    "SpreadingModel",
    "estimate",
    "loss",
    "row_gradient",
    "fit_spreading_matrix",
    "search_temporal_weights",
    "learn_weeks",
    "ForecastResult",
    "activate",
    "indicator_threshold",
    "forecast_next_week",
    "WeeklyScore",
    "YearlySummary",
    "confusion_counts",
    "weekly_metrics",
    "yearly_summary",
    "FlowNetwork",
    "RegionMetrics",
    "row_normalize",
    "ssim",
    "aggregate_yearly",
    "build_mobility_network",
    "region_metrics",
    "rollup_planning_areas",
    "compare_networks",
    "SynthScenario",
    "generate",
]
