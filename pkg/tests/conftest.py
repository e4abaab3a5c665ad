import numpy as np
import pytest

from skinfuse.synthetic import SUITE_SIZE, generate_suite


@pytest.fixture(scope="session")
def suite_dir(tmp_path_factory):
    """The 20-image synthetic dataset, generated once per session."""
    root = tmp_path_factory.mktemp("suite")
    generate_suite(root, count=SUITE_SIZE, seed=7)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
