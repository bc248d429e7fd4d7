import numpy as np
import pytest

from hlpsvd.classifier import (
    ADAM_EPS,
    AdamState,
    MlpConfig,
    adam_step,
    evaluate,
    forward,
    init_params,
    loss_and_grad,
    train,
)
from hlpsvd.data import Split
from util import numeric_gradients


def _blobs(n=30, d=5, classes=3, seed=0, spread=3.0):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % classes
    centers = rng.standard_normal((classes, d)) * spread
    x = centers[labels] + rng.standard_normal((n, d))
    return x, labels


def _split(n, train_frac=0.6, val_frac=0.2):
    idx = np.arange(n)
    a = int(n * train_frac)
    b = int(n * (train_frac + val_frac))
    return Split(idx[:a], idx[a:b], idx[b:])


def test_config_validation():
    with pytest.raises(ValueError, match="dropout"):
        MlpConfig(dropout=1.0)
    with pytest.raises(ValueError, match="learning_rate"):
        MlpConfig(learning_rate=0.0)
    with pytest.raises(ValueError, match="weight_decay"):
        MlpConfig(weight_decay=-1e-3)
    with pytest.raises(ValueError, match="hidden_dim"):
        MlpConfig(hidden_dim=0)
    with pytest.raises(ValueError, match="dropout_on"):
        MlpConfig(dropout_on="everything")


def test_init_params_shapes_and_precision_independence():
    p64 = init_params(7, 3, 4, seed=5, dtype=np.float64)
    p32 = init_params(7, 3, 4, seed=5, dtype=np.float32)
    shapes = [(7, 4), (4,), (4, 3), (3,)]
    assert [p.shape for p in p64] == shapes
    np.testing.assert_array_equal(p64[1], 0.0)
    np.testing.assert_array_equal(p64[3], 0.0)
    for a, b in zip(p64, p32):
        assert b.dtype == np.float32
        np.testing.assert_array_equal(a.astype(np.float32), b)
    bound = np.sqrt(6.0 / (7 + 4))
    assert np.abs(p64[0]).max() <= bound


def test_gradients_match_finite_differences():
    x, y = _blobs(n=12, d=4, classes=3, seed=1)
    mask = np.arange(12)
    for hidden in (None, 5):
        config = MlpConfig(hidden_dim=hidden, weight_decay=0.01)
        params = init_params(4, 3, hidden, seed=2)

        def loss_of(ps):
            return loss_and_grad(ps, x, y, mask, config)[0]

        _, grads = loss_and_grad(params, x, y, mask, config)
        numeric = numeric_gradients(loss_of, params)
        for g, gn in zip(grads, numeric):
            denom = max(np.abs(gn).max(), 1e-8)
            assert np.abs(g - gn).max() / denom <= 1e-5


def test_loss_is_log_num_classes_at_zero_weights():
    x, y = _blobs(n=20, d=6, classes=4, seed=3)
    params = [np.zeros((6, 4)), np.zeros(4)]
    loss, _ = loss_and_grad(params, x, y, np.arange(20), MlpConfig())
    assert loss == pytest.approx(np.log(4), abs=1e-12)


def test_loss_and_grad_rejects_empty_mask():
    x, y = _blobs(n=6, d=2, classes=2)
    with pytest.raises(ValueError, match="empty mask"):
        loss_and_grad([np.zeros((2, 2)), np.zeros(2)], x, y, np.array([], int), MlpConfig())


def test_adam_first_step_closed_form(rng):
    params = [rng.standard_normal((3, 2)), rng.standard_normal(2)]
    grads = [rng.standard_normal((3, 2)), rng.standard_normal(2)]
    state = adam_step(AdamState([p.copy() for p in params]), grads, lr=0.05)
    assert state.t == 1
    for p0, g, p1 in zip(params, grads, state.params):
        # bias correction makes the first step lr * g / (|g| + eps)
        expected = p0 - 0.05 * g / (np.abs(g) + ADAM_EPS)
        np.testing.assert_allclose(p1, expected, rtol=1e-12)


def test_adam_accumulates_moments(rng):
    params = [np.zeros((2, 2))]
    g1 = [np.ones((2, 2))]
    s1 = adam_step(AdamState(params), g1, lr=0.1)
    s2 = adam_step(s1, g1, lr=0.1)
    assert s2.t == 2
    np.testing.assert_allclose(s2.m[0], 0.9 * s1.m[0] + 0.1 * g1[0], rtol=1e-12)


def test_train_learns_separable_data():
    x, y = _blobs(n=60, d=5, classes=3, seed=4, spread=4.0)
    model, metrics = train(
        x, y, _split(60), MlpConfig(hidden_dim=8, dropout=0.1, learning_rate=0.01)
    )
    assert not model.diverged
    assert metrics["test"].accuracy >= 0.9
    assert model.has_hidden


def test_checkpoint_is_best_validation_epoch():
    x, y = _blobs(n=60, d=5, classes=3, seed=5)
    split = _split(60)
    config = MlpConfig(hidden_dim=6, dropout=0.2, max_epochs=40, patience=8, seed=9)
    model, _ = train(x, y, split, config)
    measured = evaluate(model, x, y, split.val, tag="val")
    assert measured.accuracy == pytest.approx(model.best_val_accuracy)
    # rerunning with the budget cut at best_epoch reproduces the snapshot:
    # per-epoch dropout streams are identical, so the checkpoint must be too
    clipped, _ = train(x, y, split, MlpConfig(
        hidden_dim=6, dropout=0.2, max_epochs=model.best_epoch, patience=8, seed=9
    ))
    assert clipped.best_epoch == model.best_epoch
    for a, b in zip(model.params, clipped.params):
        np.testing.assert_array_equal(a, b)


def test_max_epochs_bounds_best_epoch():
    x, y = _blobs(n=30, d=4, classes=2, seed=6)
    model, _ = train(
        x, y, _split(30), MlpConfig(hidden_dim=4, max_epochs=7, patience=1000)
    )
    assert 1 <= model.best_epoch <= 7


def test_divergence_is_flagged_not_raised():
    x, y = _blobs(n=24, d=4, classes=2, seed=7)
    model, metrics = train(
        x, y, _split(24),
        MlpConfig(hidden_dim=4, learning_rate=1e200, weight_decay=0.1),
    )
    assert model.diverged
    assert metrics["test"].accuracy == 0.0
    assert np.isinf(metrics["test"].loss)


def test_training_is_deterministic():
    x, y = _blobs(n=40, d=5, classes=3, seed=8)
    config = MlpConfig(hidden_dim=6, dropout=0.4, seed=11)
    m1, r1 = train(x, y, _split(40), config)
    m2, r2 = train(x, y, _split(40), config)
    for a, b in zip(m1.params, m2.params):
        np.testing.assert_array_equal(a, b)
    assert r1["test"].accuracy == r2["test"].accuracy


def test_float32_inputs_stay_float32():
    x, y = _blobs(n=30, d=4, classes=2, seed=9)
    model, _ = train(
        x.astype(np.float32), y, _split(30), MlpConfig(hidden_dim=4, max_epochs=10)
    )
    assert all(p.dtype == np.float32 for p in model.params)


def test_forward_probabilities_and_guards():
    x, y = _blobs(n=20, d=3, classes=2, seed=10)
    model, _ = train(x, y, _split(20), MlpConfig(hidden_dim=4, max_epochs=5))
    probs = forward(model, x)
    assert probs.shape == (20, 2)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-9)
    with pytest.raises(ValueError, match="does not match"):
        forward(model, x[:, :2])
    bad = x.copy()
    bad[0, 0] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        forward(model, bad)


def test_evaluate_empty_mask_raises():
    x, y = _blobs(n=10, d=3, classes=2, seed=12)
    model, _ = train(x, y, _split(10), MlpConfig(hidden_dim=3, max_epochs=3))
    with pytest.raises(ValueError, match="empty mask"):
        evaluate(model, x, y, np.array([], dtype=int))


def test_logistic_regression_mode_has_two_params():
    x, y = _blobs(n=20, d=4, classes=3, seed=13)
    model, _ = train(x, y, _split(20), MlpConfig(hidden_dim=None, max_epochs=10))
    assert len(model.params) == 2
    assert not model.has_hidden
