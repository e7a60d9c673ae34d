import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from melodyga import _jit
from melodyga.chromosome import Chromosome, random_melody_uniform
from melodyga.neural import (
    LstmModel,
    ModelFileError,
    ModelVersionError,
    TrainConfig,
    backward,
    featurize,
    forward,
    load_model,
    lstm_score,
    parameter_count,
    save_model,
    train,
)
from melodyga.neural import kernels
from melodyga.neural.model import GATES, model_to_json, unflatten
from melodyga.records import DatasetRecord


def random_model(hidden, rng, scale=0.5):
    m = LstmModel(hidden, rng.normal(0.0, scale, parameter_count(hidden)),
                  rng.normal(0, 1, 4), rng.uniform(0.5, 2.0, 4))
    return m


def oracle_score(model, X):
    """Step-by-step recurrence written from the gate equations, one gate block at a time."""
    H = model.hidden_size

    def sig(z):
        return 1.0 / (1.0 + math.exp(-z))

    finals = []
    for d, seq in ((0, X), (1, X[::-1])):
        blocks = {g: model.gate_block(d, g) for g in GATES}
        h = [0.0] * H
        c = [0.0] * H
        for x in seq:
            pre = {}
            for g, (wx, wh, bias) in blocks.items():
                pre[g] = [
                    bias[j] + sum(wx[j, k] * x[k] for k in range(4)) + sum(wh[j, k] * h[k] for k in range(H))
                    for j in range(H)
                ]
            i = [sig(v) for v in pre["input"]]
            f = [sig(v) for v in pre["forget"]]
            g = [math.tanh(v) for v in pre["modulation"]]
            o = [sig(v) for v in pre["output"]]
            c = [f[j] * c[j] + i[j] * g[j] for j in range(H)]
            h = [o[j] * math.tanh(c[j]) for j in range(H)]
        finals.extend(h)
    p = model.params
    return sum(w * v for w, v in zip(p["w_out"], finals)) + p["b_out"][0]


def test_zero_network_scores_its_bias():
    m = LstmModel.zeros(5)
    m.params["b_out"][0] = 42.5
    rng = np.random.default_rng(0)
    scores = {lstm_score(m, random_melody_uniform(int(rng.integers(1, 20)), rng)) for _ in range(20)}
    assert scores == {42.5}


def test_featurize_z_scores():
    m = LstmModel(3, np.zeros(parameter_count(3)), [0.0, 3.0, 4.0, 1.0], [1.0, 2.0, 0.5, 0.25])
    c = Chromosome.from_tuples([(0, 3, 4, 1), (1, 5, 5, F(3, 2)), (-1, 1, 3, F(1, 2))])
    X = featurize(c, m)
    expected = [[0, 0, 0, 0], [1, 1, 2, 2], [-1, -1, -2, -2]]
    assert np.max(np.abs(X - np.array(expected))) < 1e-12


@pytest.mark.parametrize("T", [1, 4, 7])
def test_forward_matches_recurrence_oracle(T):
    rng = np.random.default_rng(T)
    m = random_model(3, rng)
    X = rng.normal(size=(T, 4))
    score, _ = forward(m, X)
    assert abs(score - oracle_score(m, X)) < 1e-10


def test_forward_is_pure():
    rng = np.random.default_rng(1)
    m = random_model(4, rng)
    X = rng.normal(size=(6, 4))
    a, _ = forward(m, X)
    forward(m, rng.normal(size=(3, 4)))
    b, _ = forward(m, X)
    assert a == b


def test_empty_sequence_rejected():
    m = LstmModel.zeros(2)
    with pytest.raises(ValueError):
        forward(m, np.zeros((0, 4)))


def numeric_gradient(m, X, h=1e-5):
    g = np.zeros_like(m.theta)
    for k in range(m.theta.size):
        keep = m.theta[k]
        m.theta[k] = keep + h
        up = forward(m, X)[0]
        m.theta[k] = keep - h
        down = forward(m, X)[0]
        m.theta[k] = keep
        g[k] = (up - down) / (2 * h)
    return g


def max_relative_error(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(1e-7, np.abs(a) + np.abs(b))))


def test_gradient_check_small_instance():
    rng = np.random.default_rng(77)
    m = random_model(8, rng)
    X = rng.normal(size=(5, 4))
    score, cache = forward(m, X)
    analytic = backward(m, cache, 1.0)
    assert max_relative_error(analytic, numeric_gradient(m, X)) < 1e-4


def test_backward_trivial_cases():
    rng = np.random.default_rng(3)
    m = random_model(4, rng)
    _, cache = forward(m, rng.normal(size=(4, 4)))
    assert not np.any(backward(m, cache, 0.0))
    grad = backward(m, cache, 2.5)
    assert grad[-1] == 2.5
    with pytest.raises(ValueError):
        backward(LstmModel.zeros(3), cache, 1.0)


@pytest.mark.skipif(not _jit.USE_NUMBA, reason="numba backend disabled")
def test_numba_and_numpy_backends_agree():
    rng = np.random.default_rng(5)
    for T in (1, 2, 9, 40):
        m = random_model(6, rng)
        X = rng.normal(size=(T, 4))
        p = m.params
        args = (p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X)
        s_nb, c_nb = kernels.bilstm_forward_nb(*args)
        s_np, c_np = kernels.bilstm_forward_np(*args)
        assert abs(s_nb - s_np) < 1e-12
        assert abs(kernels.bilstm_score_nb(*args) - s_np) < 1e-12
        grads = []
        for bwd, cache in ((kernels.bilstm_backward_nb, c_nb), (kernels.bilstm_backward_np, c_np)):
            gr = np.zeros_like(m.theta)
            g = unflatten(gr, 6)
            bwd(p["Wh"], p["w_out"], X, cache, 0.7, g["Wx"], g["Wh"], g["b"], g["w_out"], g["b_out"])
            grads.append(gr)
        assert np.max(np.abs(grads[0] - grads[1])) < 1e-12
    theta = rng.normal(size=50)
    grad = rng.normal(size=50)
    a = [theta.copy(), grad.copy(), np.zeros(50), np.zeros(50)]
    b = [theta.copy(), grad.copy(), np.zeros(50), np.zeros(50)]
    kernels.adam_update_nb(*a, 1e-3, 0.9, 0.999, 1e-8, 1)
    kernels.adam_update_np(*b, 1e-3, 0.9, 0.999, 1e-8, 1)
    assert np.max(np.abs(a[0] - b[0])) < 1e-15
    g1, g2 = grad.copy(), grad.copy()
    assert abs(kernels.clip_global_norm_nb(g1, 1.0) - kernels.clip_global_norm_np(g2, 1.0)) < 1e-12
    assert np.max(np.abs(g1 - g2)) < 1e-15 and abs(np.linalg.norm(g1) - 1.0) < 1e-12


def test_initialization_scheme():
    rng = np.random.default_rng(0)
    H = 12
    m = LstmModel.initialize(H, rng)
    p = m.params
    limit = math.sqrt(6 / (4 + H))
    assert np.all(np.abs(p["Wx"]) <= limit)
    for d in range(2):
        for gate in GATES:
            _, wh, bias = m.gate_block(d, gate)
            assert np.allclose(wh @ wh.T, np.eye(H), atol=1e-12)
            assert np.all(bias == (1.0 if gate == "forget" else 0.0))
    assert not np.any(p["w_out"]) and p["b_out"][0] == 0.0


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    m = random_model(7, rng)
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    assert back == m
    for _ in range(100):
        c = random_melody_uniform(int(rng.integers(1, 25)), rng)
        assert lstm_score(back, c) == lstm_score(m, c)


def test_load_guards(tmp_path):
    m = random_model(3, np.random.default_rng(0))
    path = tmp_path / "m.json"
    save_model(m, path)
    text = path.read_text()
    bad = tmp_path / "bad.json"
    bad.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFileError):
        load_model(bad)
    doc = model_to_json(m)
    doc["version"] = 99

    bad.write_text(json.dumps(doc))
    with pytest.raises(ModelVersionError):
        load_model(bad)
    doc = model_to_json(m)
    doc["blocks"][0]["shape"] = [4, 3]
    bad.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError):
        load_model(bad)
    doc = model_to_json(m)
    del doc["blocks"][5]
    bad.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError, match="missing"):
        load_model(bad)
    doc = model_to_json(m)
    doc["hidden_size"] = 4
    bad.write_text(json.dumps(doc))
    with pytest.raises(ModelFileError):
        load_model(bad)


def toy_records(n, rng, lo=6, hi=14):
    out = []
    for k in range(n):
        c = random_melody_uniform(int(rng.integers(lo, hi + 1)), rng)
        out.append(DatasetRecord(f"r{k}", "random_uniform", c, float(rng.uniform(0, 100))))
    return out


def test_zero_learning_rate_keeps_weights():
    rng = np.random.default_rng(2)
    recs = toy_records(12, rng)
    res = train(recs, TrainConfig(max_epochs=1, learning_rate=0.0, hidden_size=4), rng=np.random.default_rng(0))
    assert res.history[0].val_rmse == res.initial_val_rmse
    assert res.history[0].train_rmse == pytest.approx(res.initial_train_rmse, rel=1e-12)
    assert np.array_equal(res.final_model.theta, res.model.theta)


def test_training_deterministic():
    recs = toy_records(10, np.random.default_rng(4))
    cfg = TrainConfig(max_epochs=3, learning_rate=1e-3, hidden_size=5)
    a = train(recs, cfg, rng=np.random.default_rng(1))
    b = train(recs, cfg, rng=np.random.default_rng(1))
    assert a.model == b.model and a.final_model == b.final_model
    assert [h.val_rmse for h in a.history] == [h.val_rmse for h in b.history]


def test_training_reduces_error_and_uses_train_statistics():
    rng = np.random.default_rng(6)
    recs = toy_records(20, rng)
    res = train(recs, TrainConfig(max_epochs=300, learning_rate=1e-2, hidden_size=8),
                rng=np.random.default_rng(0))
    assert res.history[-1].train_rmse < 0.5 * res.initial_train_rmse
    assert len(res.history) == 300
    assert res.best_epoch == 1 + int(np.argmin([h.val_rmse for h in res.history]))


def test_validation_never_feeds_statistics():
    from melodyga.neural.model import raw_features
    from melodyga.records import split_dataset

    recs = toy_records(30, np.random.default_rng(9))
    rng = np.random.default_rng(3)
    res = train(recs, TrainConfig(max_epochs=1, learning_rate=0.0, hidden_size=3), rng=rng)
    split_seed = int(np.random.default_rng(3).integers(2**63))
    tr, va = split_dataset(recs, 0.1, split_seed)
    allx = np.concatenate([raw_features(r.notes) for r in tr])
    assert np.allclose(res.model.feature_means, allx.mean(axis=0), atol=1e-12)
    assert not {r.id for r in tr} & {r.id for r in va}


def test_zero_variance_feature_warns():
    recs = [DatasetRecord(f"r{k}", "corpus", Chromosome.from_tuples([(0, 1 + k % 7, 4, 1)] * 5), 50.0)
            for k in range(6)]
    with pytest.warns(RuntimeWarning, match="zero-variance"):
        res = train(recs, TrainConfig(max_epochs=1, hidden_size=2), rng=np.random.default_rng(0))
    assert res.model.feature_stds[0] == 1.0 and res.model.feature_stds[2] == 1.0


def test_too_few_records():
    with pytest.raises(ValueError):
        train(toy_records(1, np.random.default_rng(0)))
