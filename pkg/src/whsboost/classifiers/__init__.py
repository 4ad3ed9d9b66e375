"""Base learners behind one fit/predict/score contract.

All of them train on unweighted data; boosting weights are realized by the
samplers in the ensemble module.
"""

from __future__ import annotations

from ..data import Dataset, FeatureSchema
from ..distance import VdmTable
from .base import ClassifierSpec, OneHotEncoder, TrainedClassifier, sign_labels
from .bpnn import BPNNClassifier, train_bpnn
from .knn import KNNClassifier, train_knn
from .svm import SVMClassifier, train_svm
from .tree import DecisionTreeClassifier, train_decision_tree

_CLASSES = {
    "knn": KNNClassifier,
    "dtree": DecisionTreeClassifier,
    "bpnn": BPNNClassifier,
    "svm": SVMClassifier,
}


def train_classifier(spec: ClassifierSpec, train: Dataset, vdm: VdmTable | None = None,
                     seed=None) -> TrainedClassifier:
    """Fit the learner described by ``spec``; ``seed`` only matters for BPNN."""
    if spec.kind == "knn":
        return train_knn(train, spec.k, vdm)
    if spec.kind == "dtree":
        return train_decision_tree(train, spec.max_depth, spec.min_leaf)
    if spec.kind == "bpnn":
        return train_bpnn(train, spec.hidden_units, spec.epochs, spec.learning_rate,
                          spec.init_seed if seed is None else seed)
    return train_svm(train, spec)


def classifier_from_dict(d: dict) -> TrainedClassifier:
    schema = FeatureSchema.from_dict(d["schema"])
    return _CLASSES[d["kind"]].from_params(schema, d["params"])


__all__ = [
    "BPNNClassifier",
    "ClassifierSpec",
    "DecisionTreeClassifier",
    "KNNClassifier",
    "OneHotEncoder",
    "SVMClassifier",
    "TrainedClassifier",
    "classifier_from_dict",
    "sign_labels",
    "train_bpnn",
    "train_classifier",
    "train_decision_tree",
    "train_knn",
    "train_svm",
]
