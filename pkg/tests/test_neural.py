import numpy as np
import pytest

from hopedetect.neural import layers
from hopedetect.neural.model import CNNBiLSTM, NeuralConfig, backward, forward
from hopedetect.neural.train import EarlyStopping, TrainingDivergedError, train_network

TINY = dict(max_len=6, embed_dim=4, conv_filters=3, conv_kernel=3, pool_window=2,
            lstm_units=5, dropout=0.0)
VOCAB = 7


def tiny_model(seed=0, **overrides):
    cfg = NeuralConfig(**{**TINY, **overrides})
    model = CNNBiLSTM.initialize(cfg, VOCAB, 3, seed=seed)
    rng = np.random.default_rng(seed + 100)
    # nonzero biases so no unit sits exactly at a ReLU kink
    model.params["conv_b"] = rng.normal(scale=0.3, size=cfg.conv_filters)
    return model


def batch(rng, n=4, max_len=6):
    ids = rng.integers(1, VOCAB + 2, size=(n, max_len))
    ids[:, -1] = 0
    return ids, rng.integers(0, 3, n)


def numeric_grad(model, ids, y, name, h=1e-6):
    p = model.params[name]
    out = np.zeros_like(p)
    for idx in np.ndindex(*p.shape):
        old = p[idx]
        p[idx] = old + h
        up = model.loss(ids, y)
        p[idx] = old - h
        down = model.loss(ids, y)
        p[idx] = old
        out[idx] = (up - down) / (2 * h)
    return out


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


@pytest.mark.parametrize("mode", ["final", "sequence"])
def test_full_network_gradient_check(rng, mode):
    model = tiny_model(output_mode=mode)
    ids, y = batch(rng)
    grads = backward(model, ids, y)
    for name in CNNBiLSTM.PARAM_ORDER:
        fd = numeric_grad(model, ids, y, name)
        g = grads[name]
        if name == "embedding":
            # row 0 is padding and is held at zero by design
            fd, g = fd[1:], g[1:]
        assert rel_err(g, fd) <= 1e-4, name


def test_padding_row_gets_no_gradient(rng):
    model = tiny_model()
    ids, y = batch(rng)
    assert np.all(backward(model, ids, y)["embedding"][0] == 0)


def test_frozen_embedding_zero_gradient(rng):
    model = tiny_model(trainable_embedding=False)
    ids, y = batch(rng)
    grads = backward(model, ids, y)
    assert not grads["embedding"].any()
    assert grads["conv_W"].any()


def test_duplicate_example_doubles_contribution(rng):
    model = tiny_model()
    ids, y = batch(rng, n=2)
    a, b = ids[:1], ids[1:]
    ga = backward(model, a, y[:1])
    gb = backward(model, b, y[1:])
    gdup = backward(model, np.vstack([a, a, b]), np.r_[y[0], y[0], y[1]])
    for name in CNNBiLSTM.PARAM_ORDER:
        np.testing.assert_allclose(3 * gdup[name], 2 * ga[name] + gb[name], atol=1e-12)


def test_forward_rows_sum_to_one(rng):
    model = tiny_model()
    ids, _ = batch(rng, n=5)
    probs = forward(model, ids)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(probs, forward(model, ids))


def test_padding_input_with_zero_head_is_uniform():
    model = tiny_model()
    model.params["out_W"][:] = 0
    model.params["out_b"][:] = 0
    probs = forward(model, np.zeros((3, 6), dtype=np.int64))
    np.testing.assert_allclose(probs, 1 / 3, atol=1e-15)


def test_forward_rejects_bad_ids():
    model = tiny_model()
    with pytest.raises(ValueError):
        forward(model, np.zeros((2, 5), dtype=np.int64))
    with pytest.raises(ValueError):
        forward(model, np.full((1, 6), VOCAB + 2))


def test_dropout_mask_needs_rng():
    model = tiny_model(dropout=0.5)
    with pytest.raises(ValueError):
        model.forward(np.zeros((1, 6), dtype=np.int64), train=True)


def test_maxpool_routes_to_argmax(rng):
    A = rng.normal(size=(2, 7, 3))
    P, arg = layers.maxpool_forward(A, 3)
    assert P.shape == (2, 2, 3)
    dP = rng.normal(size=P.shape)
    dA = layers.maxpool_backward(dP, arg, 3, 7)
    np.testing.assert_allclose(dA.sum(axis=1), dP.sum(axis=1))
    assert np.count_nonzero(dA) == dP.size
    for bi, t, f in zip(*np.nonzero(dA)):
        window = t // 3
        assert A[bi, t, f] == P[bi, window, f]
    assert not dA[:, 6].any()  # tail beyond the last full window


def test_lstm_zero_input_zero_output():
    H, F = 4, 3
    rng = np.random.default_rng(0)
    H_out, _ = layers.lstm_forward(np.zeros((2, 5, F)), rng.normal(size=(F, 4 * H)),
                                   rng.normal(size=(H, 4 * H)), np.zeros(4 * H))
    assert not H_out.any()


def synthetic_task(n=50, seed=0):
    rng = np.random.default_rng(seed)
    ids = rng.integers(2, VOCAB + 1, size=(n, 6))
    y = rng.integers(0, 2, n)
    ids[y == 1, rng.integers(0, 6, (y == 1).sum())] = 1  # token 1 plays "hope"
    ids[y == 0] = np.where(ids[y == 0] == 1, 2, ids[y == 0])
    return ids, y


def test_single_batch_loss_decreases():
    ids, y = synthetic_task(32)
    cfg = NeuralConfig(**{**TINY, "learning_rate": 1e-3})
    model = CNNBiLSTM.initialize(cfg, VOCAB, 2, seed=1)
    from hopedetect.neural.train import Adam
    opt = Adam(model.params, lr=1e-3)
    losses = []
    for _ in range(6):
        losses.append(model.loss(ids, y, keep_cache=True))
        opt.step(model.params, model.backward(y))
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_synthetic_task_reaches_perfect_validation():
    ids, y = synthetic_task(50)
    cfg = NeuralConfig(**{**TINY, "epochs": 20, "patience": 20, "batch_size": 8,
                          "learning_rate": 1e-2, "dropout": 0.2})
    model = CNNBiLSTM.initialize(cfg, VOCAB, 2, seed=0)
    record = train_network(model, ids, y, ids, y, rng=np.random.default_rng(0))
    assert max(record.valid_f1) == 1.0
    assert len(record.epochs) <= 20


def test_early_stopping_contract():
    stopper = EarlyStopping(patience=2)
    decisions = [stopper.update(e, s) for e, s in enumerate([0.9, 0.8, 0.7], start=1)]
    assert decisions == [False, False, True]
    tie = EarlyStopping(patience=1)
    tie.update(1, 0.5, loss=1.0)
    assert not tie.update(2, 0.5, loss=0.9)
    assert tie.best_epoch == 2


def test_training_stops_at_epoch_three():
    ids, y = synthetic_task(16)
    cfg = NeuralConfig(**{**TINY, "epochs": 30, "patience": 2})
    model = CNNBiLSTM.initialize(cfg, VOCAB, 2, seed=0)
    scores = iter([0.9, 0.8, 0.7, 0.6])
    record = train_network(model, ids, y, scorer=lambda m: next(scores))
    assert record.epochs == [1, 2, 3]
    assert record.early_stopped and record.best_epoch == 1


def test_training_is_deterministic():
    ids, y = synthetic_task(24)
    cfg = NeuralConfig(**{**TINY, "epochs": 3, "dropout": 0.2})
    records = []
    for _ in range(2):
        model = CNNBiLSTM.initialize(cfg, VOCAB, 2, seed=5)
        records.append(train_network(model, ids, y, ids, y, rng=np.random.default_rng(5)))
    assert records[0].as_dict() == records[1].as_dict()


def test_divergence_is_reported():
    ids, y = synthetic_task(8)
    cfg = NeuralConfig(**{**TINY, "epochs": 2})
    model = CNNBiLSTM.initialize(cfg, VOCAB, 2, seed=0)
    model.params["out_b"][:] = np.nan
    with pytest.raises(TrainingDivergedError):
        train_network(model, ids, y)


def test_config_validation():
    with pytest.raises(ValueError):
        NeuralConfig(max_len=3, conv_kernel=3, pool_window=5)
    with pytest.raises(ValueError):
        NeuralConfig(dropout=1.0)
    with pytest.raises(ValueError):
        NeuralConfig(output_mode="mean")
