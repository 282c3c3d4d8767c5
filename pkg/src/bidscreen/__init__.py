"""Screening public tenders for bid rigging.

Per-tender screens, subgroup summary predictors, a bid simulator for
incomplete cartels, tree/forest/lasso learners and a repeated-split
evaluation harness.
"""

__version__ = "0.1.0"

from .errors import BidScreenError, DataError, NumericError
from .evaluation import EvalReport, evaluate, ladder_report, ladder_table, robustness_contract_filter, robustness_drop_top
from .nonparam import ks_two_sample, mann_whitney, screen_distribution_suite
from .screens import RATIO_SCREENS, VALUE_SCREENS, ScreenVector, screen_vector
from .simulate import Ladder, build_ladder, build_pool, inject
from .subgroups import MODEL_SPECS, FeatureTable, ModelSpec, build_features, enumerate_subgroups, model_spec, subgroup_summary
from .tender import Bid, ContractType, Dataset, Label, Tender, filter_min_bids, ingest_csv, moments, write_csv

__all__ = [
    "Bid", "BidScreenError", "ContractType", "DataError", "Dataset", "EvalReport", "FeatureTable", "Label",
    "Ladder", "MODEL_SPECS", "ModelSpec", "NumericError", "RATIO_SCREENS", "ScreenVector", "Tender",
    "VALUE_SCREENS", "build_features", "build_ladder", "build_pool", "enumerate_subgroups", "evaluate",
    "filter_min_bids", "ingest_csv", "inject", "ks_two_sample", "ladder_report", "ladder_table",
    "mann_whitney", "model_spec", "moments", "robustness_contract_filter", "robustness_drop_top",
    "screen_distribution_suite", "screen_vector", "subgroup_summary", "write_csv",
]
