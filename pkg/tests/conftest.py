from pathlib import Path

import numpy as np
import pytest

from whsboost.data import Dataset, Feature, FeatureSchema, continuous_schema

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = ROOT / "data"


def cont_dataset(X, y):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return Dataset(continuous_schema(X.shape[1]), X, y)


def mixed_schema(n_cont=2, vocab_sizes=(3,)):
    feats = [Feature(f"c{j}") for j in range(n_cont)]
    feats += [Feature(f"k{j}", "categorical", tuple(f"v{i}" for i in range(s)))
              for j, s in enumerate(vocab_sizes)]
    return FeatureSchema(tuple(feats))


def random_mixed(rng, n_pos, n_neg, n_cont=2, vocab_sizes=(3,)):
    schema = mixed_schema(n_cont, vocab_sizes)
    n = n_pos + n_neg
    cols = [rng.normal(size=n) for _ in range(n_cont)]
    cols += [rng.integers(0, s, size=n).astype(float) for s in vocab_sizes]
    y = np.array([1] * n_pos + [-1] * n_neg)
    return Dataset(schema, np.column_stack(cols), y)


def imbalanced_blobs(rng, n_pos, n_neg, m=2, shift=1.5):
    X = np.vstack([rng.normal(shift, 1.0, size=(n_pos, m)), rng.normal(0.0, 1.0, size=(n_neg, m))])
    y = np.array([1] * n_pos + [-1] * n_neg)
    return cont_dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
