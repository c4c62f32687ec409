import pytest

from tmexport import load_dataset


@pytest.fixture(scope="session")
def digits():
    return load_dataset("digits", seed=0)


@pytest.fixture(scope="session")
def small_train(digits):
    # 400-example slice keeps model unit tests fast.
    return digits.train_x[:400], digits.train_y[:400]
