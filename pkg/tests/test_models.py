"""Predictor configs, parameter counts, training, and checkpoints."""
from __future__ import annotations

import numpy as np
import pytest

import riscast
from riscast import channel, models
from riscast.errors import CheckpointError, ConfigError, DivergenceError

TABLE_NS = (4, 8, 12, 16, 20)


# --- configuration ---------------------------------------------------------


def test_resolved_fills_sizes():
    cfg = riscast.ModelConfig(variant="transformer", n_elements=8).resolved()
    assert cfg.dnn_hidden == (36, 40, 40, 36)
    assert (cfg.lstm_width, cfg.lstm_fc_width) == (44, 36)
    assert cfg.d_model == 48
    assert cfg.ff_width == cfg.d_model
    assert cfg.d_model % cfg.heads == 0


def test_resolved_off_table_sizes_are_usable():
    for n in (1, 3, 6, 25):
        cfg = riscast.ModelConfig(variant="transformer", n_elements=n).resolved()
        assert cfg.d_model % cfg.heads == 0
        assert len(cfg.dnn_hidden) == 4
        assert cfg.lstm_width >= 8


def test_resolved_rejects_bad_configs():
    with pytest.raises(ConfigError):
        riscast.ModelConfig(variant="gru", n_elements=4).resolved()
    with pytest.raises(ConfigError):
        riscast.ModelConfig(variant="dnn", n_elements=0).resolved()
    with pytest.raises(ConfigError):
        riscast.ModelConfig(variant="dnn", n_elements=4, window=0).resolved()
    with pytest.raises(ConfigError):
        riscast.ModelConfig(variant="transformer", n_elements=4, d_model=10, heads=4).resolved()
    with pytest.raises(ConfigError):
        riscast.ModelConfig(variant="dnn", n_elements=4, dnn_hidden=(5, 5)).resolved()


# --- parameter counts ------------------------------------------------------


def test_dnn_param_count_reference_value():
    cfg = riscast.ModelConfig(variant="dnn", n_elements=4)
    assert riscast.analytic_param_count(cfg) == 2280
    assert riscast.param_count(riscast.build_model(cfg, seed=0)) == 2280


@pytest.mark.parametrize("variant", riscast.VARIANTS)
@pytest.mark.parametrize("n", TABLE_NS)
def test_runtime_count_matches_analytic(variant, n):
    cfg = riscast.ModelConfig(variant=variant, n_elements=n)
    model = riscast.build_model(cfg, seed=0)
    assert riscast.param_count(model) == riscast.analytic_param_count(cfg)


def test_param_names_are_unique():
    for variant in riscast.VARIANTS:
        model = riscast.build_model(riscast.ModelConfig(variant=variant, n_elements=4), seed=0)
        names = [n for n, _ in model.named_params()]
        assert len(names) == len(set(names))


# --- deterministic construction -------------------------------------------


def test_build_model_is_seed_deterministic():
    cfg = riscast.ModelConfig(variant="lstm", n_elements=2)
    a = riscast.build_model(cfg, seed=3)
    b = riscast.build_model(cfg, seed=3)
    c = riscast.build_model(cfg, seed=4)
    for (_, ta), (_, tb) in zip(a.named_params(), b.named_params()):
        assert np.array_equal(ta.data, tb.data)
    assert any(
        not np.array_equal(ta.data, tc.data)
        for (_, ta), (_, tc) in zip(a.named_params(), c.named_params())
    )


# --- training --------------------------------------------------------------


def test_train_is_bitwise_deterministic(tiny_dataset):
    cfg = riscast.ModelConfig(variant="dnn", n_elements=2)
    tc = riscast.TrainConfig(epochs=3, seed=0)
    a = riscast.train_model(cfg, tiny_dataset, tc)
    b = riscast.train_model(cfg, tiny_dataset, tc)
    assert a.train_history == b.train_history
    assert a.val_history == b.val_history
    for name in a.state:
        assert np.array_equal(a.state[name], b.state[name])


def test_train_histories_cover_every_epoch(tiny_models):
    for trained in tiny_models.values():
        assert len(trained.train_history) == 3
        assert len(trained.val_history) == 3
        assert all(np.isfinite(v) for v in trained.train_history + trained.val_history)


def test_train_rejects_mismatched_dataset(tiny_dataset):
    with pytest.raises(ConfigError):
        riscast.train_model(riscast.ModelConfig(variant="dnn", n_elements=3), tiny_dataset)
    with pytest.raises(ConfigError):
        riscast.train_model(riscast.ModelConfig(variant="dnn", n_elements=2, window=7), tiny_dataset)
    bare = channel.windowize(np.arange(96.0).reshape(-1, 8) ** 0.5, 10)
    with pytest.raises(ConfigError):
        riscast.train_model(riscast.ModelConfig(variant="dnn", n_elements=2), bare)


def ar_dataset(rho: float = 0.95, rows: int = 300, seed: int = 0) -> channel.WindowedDataset:
    """AR(1) features with an easy next-step map, for convergence tests."""
    rng = np.random.default_rng(seed)
    matrix = np.empty((rows, 4))
    matrix[0] = rng.normal(size=4)
    for t in range(1, rows):
        matrix[t] = rho * matrix[t - 1] + np.sqrt(1 - rho**2) * rng.normal(size=4)
    return channel.prepare_dataset(matrix, window=4)


def test_training_learns_an_easy_map():
    # the process noise floor sits near 0.08 in normalized units
    ds = ar_dataset()
    cfg = riscast.ModelConfig(variant="dnn", n_elements=1, window=4, dnn_hidden=(8, 8, 8, 8))
    trained = riscast.train_model(cfg, ds, riscast.TrainConfig(epochs=40, learning_rate=1e-2, seed=0))
    assert trained.train_history[-1] < 0.12
    assert trained.train_history[-1] < trained.train_history[0] / 3.0


def test_training_diverges_loudly_with_absurd_learning_rate():
    ds = ar_dataset()
    cfg = riscast.ModelConfig(variant="dnn", n_elements=1, window=4, dnn_hidden=(8, 8, 8, 8))
    with np.errstate(all="ignore"), pytest.raises(DivergenceError):
        riscast.train_model(cfg, ds, riscast.TrainConfig(epochs=3, learning_rate=1e200, seed=0))


# --- prediction ------------------------------------------------------------


def test_predict_next_denormalizes(tiny_models, tiny_dataset):
    trained = tiny_models["dnn"]
    window = tiny_dataset.val_inputs[0]
    out = riscast.predict_next(trained, window)
    raw = models.predict_batch(trained, window[None])[0]
    assert np.allclose(out, channel.denormalize(raw, trained.stats))


def test_predict_next_rejects_bad_window(tiny_models):
    trained = tiny_models["dnn"]
    with pytest.raises(ValueError):
        riscast.predict_next(trained, np.zeros((3, 8)))
    with pytest.raises(ValueError):
        riscast.predict_next(trained, np.zeros((10, 4)))


def test_evaluate_rmse_matches_manual(tiny_models, tiny_dataset):
    trained = tiny_models["lstm"]
    got = models.evaluate_rmse(trained.model(), tiny_dataset.val_inputs, tiny_dataset.val_targets, chunk=7)
    pred = models.predict_batch(trained, tiny_dataset.val_inputs)
    manual = float(np.sqrt(np.mean((pred - tiny_dataset.val_targets) ** 2)))
    assert got == pytest.approx(manual, rel=1e-12)


def test_test_rmse_is_seeded(tiny_models, tiny_geometry, tiny_filter):
    trained = tiny_models["dnn"]
    a = riscast.test_rmse(trained, tiny_geometry, tiny_filter, seed=5, segments=2, segment_length=10)
    b = riscast.test_rmse(trained, tiny_geometry, tiny_filter, seed=5, segments=2, segment_length=10)
    c = riscast.test_rmse(trained, tiny_geometry, tiny_filter, seed=6, segments=2, segment_length=10)
    assert a == b
    assert a != c
    assert np.isfinite(a) and a > 0


def test_hash_seed_is_stable():
    assert models.hash_seed(5, 0) == models.hash_seed(5, 0)
    assert models.hash_seed(5, 0) != models.hash_seed(5, 1)
    assert models.hash_seed(5, 0) != models.hash_seed(6, 0)


# --- checkpoints -----------------------------------------------------------


def test_checkpoint_roundtrip(tmp_path, tiny_models, tiny_dataset):
    for variant, trained in tiny_models.items():
        path = tmp_path / f"{variant}.ckpt"
        riscast.save_checkpoint(path, trained)
        back = riscast.load_checkpoint(path)
        assert back.config == trained.config
        assert back.train_config == trained.train_config
        assert back.train_history == trained.train_history
        assert np.array_equal(back.stats.offset, trained.stats.offset)
        assert np.array_equal(back.stats.scale, trained.stats.scale)
        for name in trained.state:
            assert np.array_equal(back.state[name], trained.state[name])
        x = tiny_dataset.val_inputs[:3]
        assert np.array_equal(models.predict_batch(back, x), models.predict_batch(trained, x))


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        riscast.load_checkpoint(path)


def test_checkpoint_rejects_truncation(tmp_path, tiny_models):
    path = tmp_path / "model.ckpt"
    riscast.save_checkpoint(path, tiny_models["dnn"])
    raw = path.read_bytes()
    for cut in (len(raw) // 2, len(raw) - 5):
        clipped = tmp_path / "clipped.ckpt"
        clipped.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            riscast.load_checkpoint(clipped)


def test_checkpoint_rejects_trailing_garbage(tmp_path, tiny_models):
    path = tmp_path / "model.ckpt"
    riscast.save_checkpoint(path, tiny_models["dnn"])
    path.write_bytes(path.read_bytes() + b"\x00" * 16)
    with pytest.raises(CheckpointError):
        riscast.load_checkpoint(path)


def test_checkpoint_rejects_corrupt_header(tmp_path, tiny_models):
    path = tmp_path / "model.ckpt"
    riscast.save_checkpoint(path, tiny_models["dnn"])
    raw = bytearray(path.read_bytes())
    raw[20] ^= 0xFF  # somewhere inside the JSON header
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        riscast.load_checkpoint(path)


def test_apply_state_rejects_missing_or_misshapen_arrays(tiny_models):
    trained = tiny_models["dnn"]
    model = riscast.build_model(trained.config, trained.train_config.seed)
    partial = dict(trained.state)
    partial.pop(next(iter(partial)))
    with pytest.raises(CheckpointError):
        models.apply_state(model, partial)
    warped = dict(trained.state)
    first = next(iter(warped))
    warped[first] = np.zeros((1, 1))
    with pytest.raises(CheckpointError):
        models.apply_state(model, warped)
