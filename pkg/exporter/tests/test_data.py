import numpy as np
import pytest

from tmexport import corrupt_labels, load_dataset
from tmexport.data import _upscale


def test_digits_shapes_and_range(digits):
    assert digits.name == "digits"
    assert digits.train_x.shape == (1258, 28, 28)
    assert digits.test_x.shape == (539, 28, 28)
    assert digits.train_x.dtype == np.float32
    for x in (digits.train_x, digits.test_x):
        assert x.min() >= 0.0 and x.max() <= 1.0
    assert digits.n_classes == 10


def test_digits_split_is_stratified(digits):
    total = np.concatenate([digits.train_y, digits.test_y])
    assert len(total) == 1797
    for k in range(10):
        n_train = int((digits.train_y == k).sum())
        n_all = int((total == k).sum())
        assert n_train == round(n_all * 0.7)


def test_digits_deterministic_per_seed():
    a = load_dataset("digits", seed=0)
    b = load_dataset("digits", seed=0)
    assert np.array_equal(a.train_x, b.train_x)
    assert np.array_equal(a.train_y, b.train_y)
    c = load_dataset("digits", seed=1)
    assert not np.array_equal(a.train_y, c.train_y)


def test_upscale_preserves_range_and_blocks():
    img = np.zeros((1, 8, 8), dtype=np.float32)
    img[0, 0, 0] = 1.0
    big = _upscale(img)
    assert big.shape == (1, 28, 28)
    assert big.max() == 1.0 and big.min() == 0.0
    # first source pixel covers rows/cols 0..6 before pooling -> 0..2 pure
    assert (big[0, :3, :3] == 1.0).all()
    assert (big[0, 4:, 4:] == 0.0).all()


def test_auto_falls_back_with_warning(tmp_path):
    with pytest.warns(UserWarning, match="using digits fallback"):
        data = load_dataset("auto", root=str(tmp_path / "nope"), seed=0)
    assert data.name == "digits"


def test_unknown_dataset():
    with pytest.raises(ValueError, match="unknown dataset"):
        load_dataset("imagenet")


def test_corrupt_exact_count(digits):
    n_src = int((digits.train_y == 0).sum())
    assert n_src == 125
    new, changed = corrupt_labels(digits.train_y, 0.9, 0, 1, seed=0)
    assert len(changed) == 112  # floor(0.9 * 125)
    assert (digits.train_y[changed] == 0).all()
    assert (new[changed] == 1).all()
    untouched = np.setdiff1d(np.arange(len(new)), changed)
    assert np.array_equal(new[untouched], digits.train_y[untouched])


def test_corrupt_indices_sorted_unique_seeded(digits):
    _, a = corrupt_labels(digits.train_y, 0.5, 0, 1, seed=7)
    _, b = corrupt_labels(digits.train_y, 0.5, 0, 1, seed=7)
    _, c = corrupt_labels(digits.train_y, 0.5, 0, 1, seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(a, np.unique(a))


def test_corrupt_edge_fractions(digits):
    new, changed = corrupt_labels(digits.train_y, 0.0, 0, 1, seed=0)
    assert len(changed) == 0 and np.array_equal(new, digits.train_y)
    new, changed = corrupt_labels(digits.train_y, 1.0, 0, 1, seed=0)
    assert len(changed) == 125
    assert not (new == 0).any()


def test_corrupt_validation(digits):
    with pytest.raises(ValueError, match="fraction"):
        corrupt_labels(digits.train_y, 1.5, 0, 1)
    with pytest.raises(ValueError, match="must differ"):
        corrupt_labels(digits.train_y, 0.5, 3, 3)
