"""Boosting with weighted hybrid sampling for imbalanced binary classification."""

from .classifiers import ClassifierSpec, train_classifier
from .data import Dataset, Feature, FeatureSchema, load_csv_dataset, stratified_split
from .distance import build_vdm_table, mixed_distance
from .ensemble import (
    BoostConfig,
    TrainedEnsemble,
    adaboost_resample_train,
    ensemble_predict,
    ensemble_score,
    hsboost_train,
    smoteboost_train,
    whsboost_train,
)
from .evaluation import (
    Pipeline,
    SimulationSpec,
    compute_metrics,
    confusion_matrix,
    roc_auc,
    run_experiment,
    simulate_dataset,
    wilcoxon_signed_rank,
)
from .sampling import allocate_synthesis_counts, wsmote, wusample

__version__ = "0.1.0"
