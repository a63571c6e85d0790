import pytest

from fed_fixtures import build_federation
from foltr_unlearn.data import normalize_features
from foltr_unlearn.synthetic import make_synthetic_dataset


@pytest.fixture(scope="session")
def tiny_dataset():
    return normalize_features(make_synthetic_dataset(
        n_train_queries=20, n_test_queries=8, docs_per_query=12,
        n_features=6, relevance_levels=3, noise=0.0, seed=3))


@pytest.fixture()
def tiny_federation(tiny_dataset):
    return build_federation(tiny_dataset)
