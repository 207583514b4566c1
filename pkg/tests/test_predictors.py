import math

import numpy as np
import pytest

from trafficzip.errors import ModelError
from trafficzip.models import ModelContext
from trafficzip.neural import autodiff as ad
from trafficzip.neural.arch import ArchDescriptor, init_params, param_shapes
from trafficzip.neural.gradcheck import grad_check
from trafficzip.neural.predictors import (
    RnnPredictor,
    StgnnPredictor,
    adjacency_matrix,
    rnn_apply,
    stgnn_apply,
)
from trafficzip.neural.serialize import PredictorModel
from trafficzip.topologies import directed_ring
from trafficzip.topology import Topology, build_link_graph


def rnn_arch(**kw):
    defaults = dict(kind="rnn", alphabet_size=1024, hidden_dim=8, window=4, mlp_layers=(8,))
    defaults.update(kw)
    return ArchDescriptor(**defaults)


def stgnn_arch(**kw):
    defaults = dict(kind="stgnn", alphabet_size=1024, hidden_dim=8, window=4, mlp_layers=(8,))
    defaults.update(kw)
    return ArchDescriptor(**defaults)


def zero_params(arch):
    return {k: np.zeros(s) for k, s in param_shapes(arch).items()}


def tensors(params):
    return {k: ad.Tensor(v) for k, v in params.items()}


class TestRnnForward:
    def test_zero_weights_forced_outputs(self):
        # zero weights silence the network: the location offset is zero, so
        # mu falls back to the last window value rescaled to symbols, and the
        # scale is softplus(0) times the window dispersion (or the floor)
        arch = rnn_arch()
        params = tensors(zero_params(arch))
        windows = np.random.default_rng(0).random((3, arch.window))
        mu, b = rnn_apply(params, arch, windows)
        assert np.allclose(mu.data, windows[:, -1] * (arch.alphabet_size - 1))
        disp = np.abs(np.diff(windows, axis=1)).mean(axis=1) * (arch.alphabet_size - 1)
        assert np.allclose(b.data, np.maximum(math.log(2.0) * disp, arch.min_scale))
        mu0, b0 = rnn_apply(params, arch, np.zeros((2, arch.window)))
        assert np.allclose(mu0.data, 0.0)  # zero window: mu equals the head bias
        assert np.allclose(b0.data, arch.min_scale)  # frozen window: floored scale

    def test_min_scale_clamp(self):
        arch = rnn_arch(min_scale=5.0)
        params = tensors(zero_params(arch))
        windows = np.random.default_rng(1).random((2, arch.window)) * 0.001
        _, b = rnn_apply(params, arch, windows)
        assert np.allclose(b.data, 5.0)  # tiny dispersion -> clamped at the floor

    def test_deterministic(self):
        arch = rnn_arch()
        params = tensors(init_params(arch, seed=3))
        window = np.random.default_rng(1).random((2, arch.window))
        mu1, b1 = rnn_apply(params, arch, window)
        mu2, b2 = rnn_apply(params, arch, window)
        assert np.array_equal(mu1.data, mu2.data)
        assert np.array_equal(b1.data, b2.data)

    def test_window_length_checked(self):
        arch = rnn_arch()
        params = tensors(zero_params(arch))
        with pytest.raises(ModelError):
            rnn_apply(params, arch, np.zeros((2, arch.window + 1)))


def reference_message_free_forward(params, arch, windows, mask, known):
    """Oracle: per-link recurrent path with zero message input.

    On an edgeless graph every link's aggregated message is zero, so the
    graph forward must reduce to this reference.
    """
    batch, w, num_links = windows.shape
    hd = arch.hidden_dim

    def mlp(prefix, x, layers):
        for i in range(layers):
            x = x @ params[f"{prefix}.{i}.w"] + params[f"{prefix}.{i}.b"]
            if i < layers - 1:
                x = np.tanh(x)
        return x

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-x))

    h = np.zeros((batch, num_links, hd))
    h[:, :, 0] = windows[:, 0, :]
    for t in range(w):
        agg = np.zeros((batch, num_links, hd))
        u = np.concatenate([agg, windows[:, t, :, None]], axis=-1)
        z = sigmoid(u @ params["gru.wz"] + h @ params["gru.uz"] + params["gru.bz"])
        r = sigmoid(u @ params["gru.wr"] + h @ params["gru.ur"] + params["gru.br"])
        c = np.tanh(u @ params["gru.wc"] + (r * h) @ params["gru.uc"] + params["gru.bc"])
        h = (1 - z) * c + z * h
    # edgeless graph: neighbor summary features are zero, last-diff is live;
    # the linear bypass weight is zero-initialized so it contributes nothing
    dlast = windows[:, -1, :] - windows[:, -2, :]
    zero = np.zeros_like(dlast)
    skip = np.stack([zero, zero, dlast, zero], axis=-1)
    h = np.concatenate([h, skip], axis=-1)
    out = mlp("head", h, len(arch.mlp_layers) + 1)
    mu = (out[..., 0] + windows[:, -1, :]) * (arch.alphabet_size - 1)
    disp = np.maximum(
        np.abs(np.diff(windows, axis=1)).mean(axis=1) * (arch.alphabet_size - 1), 0.02
    )
    b = np.maximum(np.logaddexp(0.0, out[..., 1]) * disp, arch.min_scale)
    return mu, b


class TestStgnnForward:
    def test_edgeless_graph_matches_message_free_reference(self):
        # empty mask: no coded source exists, so the copy gate is inert and
        # the forward must reduce to independent per-link recurrent paths
        arch = stgnn_arch()
        params_np = init_params(arch, seed=5)
        num_links = 3
        rng = np.random.default_rng(7)
        windows = rng.random((2, arch.window, num_links))
        mask = np.zeros((2, num_links))
        known = np.zeros((2, num_links))
        adj = np.zeros((num_links, num_links))
        mu, b = stgnn_apply(tensors(params_np), arch, windows, mask, known, adj)
        ref_mu, ref_b = reference_message_free_forward(params_np, arch, windows, mask, known)
        assert np.allclose(mu.data, ref_mu, atol=1e-12)
        assert np.allclose(b.data, ref_b, atol=1e-12)

    def test_permutation_equivariance(self):
        arch = stgnn_arch()
        params = tensors(init_params(arch, seed=11))
        topo = directed_ring(3)
        graph = build_link_graph(topo)
        adj = adjacency_matrix(graph)
        num_links = graph.num_links
        rng = np.random.default_rng(13)
        windows = rng.random((1, arch.window, num_links))
        mask = (rng.random((1, num_links)) < 0.4).astype(float)
        mask[0, 0] = 0.0
        known = rng.random((1, num_links)) * mask

        perm = rng.permutation(num_links)
        adj_p = adj[np.ix_(perm, perm)]
        mu, b = stgnn_apply(params, arch, windows, mask, known, adj)
        mu_p, b_p = stgnn_apply(
            params, arch, windows[:, :, perm], mask[:, perm], known[:, perm], adj_p
        )
        assert np.allclose(mu.data[0, perm], mu_p.data[0], atol=1e-9)
        assert np.allclose(b.data[0, perm], b_p.data[0], atol=1e-9)

    def test_identical_links_on_ring_identical_params(self):
        arch = stgnn_arch()
        params = tensors(init_params(arch, seed=17))
        graph = build_link_graph(directed_ring(4))
        adj = adjacency_matrix(graph)
        series = np.random.default_rng(19).random(arch.window)
        windows = np.repeat(series[None, :, None], graph.num_links, axis=2)
        mask = np.zeros((1, graph.num_links))
        known = np.zeros((1, graph.num_links))
        mu, b = stgnn_apply(params, arch, windows, mask, known, adj)
        assert np.allclose(mu.data[0], mu.data[0, 0])
        assert np.allclose(b.data[0], b.data[0, 0])

    def test_mask_channels_reach_neighbor_readout(self):
        # the whole point of the conditioning channels: a neighbor's known
        # value must influence the target link's parameters
        arch = stgnn_arch()
        params = tensors(init_params(arch, seed=23))
        graph = build_link_graph(directed_ring(3))
        adj = adjacency_matrix(graph)
        rng = np.random.default_rng(29)
        windows = rng.random((1, arch.window, graph.num_links))
        empty_mask = np.zeros((1, graph.num_links))
        mask = empty_mask.copy()
        mask[0, 1] = 1.0
        known = np.zeros((1, graph.num_links))
        known[0, 1] = 0.7
        mu0, _ = stgnn_apply(params, arch, windows, empty_mask, np.zeros_like(known), adj)
        mu1, _ = stgnn_apply(params, arch, windows, mask, known, adj)
        assert not np.allclose(mu0.data[0, 0], mu1.data[0, 0])

    def test_shape_validation(self):
        arch = stgnn_arch()
        params = tensors(zero_params(arch))
        with pytest.raises(ModelError):
            stgnn_apply(params, arch, np.zeros((1, 3, 2)), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((2, 2)))
        with pytest.raises(ModelError):
            stgnn_apply(params, arch, np.zeros((1, 4, 2)), np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((3, 3)))


class TestGradChecks:
    def test_rnn_gradients_match_finite_differences(self):
        arch = rnn_arch(hidden_dim=6, window=3, mlp_layers=(6,))
        rng = np.random.default_rng(31)
        windows = rng.random((4, arch.window))
        targets = rng.random(4) * 1023

        def loss(params):
            mu, b = rnn_apply(params, arch, windows)
            x = ad.Tensor(targets)
            return ad.mean(ad.log(b) + ad.absolute(x - mu) / b)

        assert grad_check(loss, init_params(arch, seed=37)) < 1e-4

    def test_stgnn_gradients_match_finite_differences(self):
        arch = stgnn_arch(hidden_dim=4, window=3, mlp_layers=(4,))
        topo = Topology(
            nodes=("a", "b", "c"),
            links=(("a", "b"), ("b", "c"), ("c", "a"), ("b", "a")),
        )
        graph = build_link_graph(topo)
        adj = adjacency_matrix(graph)
        rng = np.random.default_rng(41)
        windows = rng.random((2, arch.window, graph.num_links))
        mask = (rng.random((2, graph.num_links)) < 0.5).astype(float)
        known = rng.random((2, graph.num_links)) * mask
        targets = rng.random((2, graph.num_links)) * 1023
        weight = 1.0 - mask

        def loss(params):
            mu, b = stgnn_apply(params, arch, windows, mask, known, adj)
            terms = ad.log(b) + ad.absolute(ad.Tensor(targets) - mu) / b
            w = ad.Tensor(weight)
            return ad.total(terms * w) / ad.total(w)

        assert grad_check(loss, init_params(arch, seed=43)) < 1e-4


class TestFastInferenceMatchesTape:
    def test_rnn_wrapper_matches_tape_forward(self):
        arch = rnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=71))
        predictor = RnnPredictor(model)
        rng = np.random.default_rng(73)
        window = rng.integers(0, 1024, arch.window)
        params = {k: ad.Tensor(v.astype(np.float64)) for k, v in model.weights.items()}
        with ad.no_grad():
            mu_t, b_t = rnn_apply(params, arch, window[None, :] / 1023.0)
        lp = predictor.forward_window(window)
        assert lp.mu == pytest.approx(float(mu_t.data[0]), rel=1e-4, abs=0.05)
        assert lp.b == pytest.approx(float(b_t.data[0]), rel=1e-3, abs=1e-4)

    def test_stgnn_wrapper_matches_tape_forward(self):
        arch = stgnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=79))
        graph = build_link_graph(directed_ring(3))
        predictor = StgnnPredictor(model, graph)
        rng = np.random.default_rng(83)
        window = rng.integers(0, 1024, (arch.window, graph.num_links))
        mask = rng.random(graph.num_links) < 0.5
        mask[0] = False
        known = rng.integers(0, 1024, graph.num_links) * mask
        params = {k: ad.Tensor(v.astype(np.float64)) for k, v in model.weights.items()}
        with ad.no_grad():
            mu_t, b_t = stgnn_apply(
                params, arch,
                window[None].astype(float) / 1023.0,
                mask[None].astype(float),
                (known[None].astype(float) / 1023.0) * mask[None],
                adjacency_matrix(graph),
            )
        mu_f, b_f = predictor.forward_window(window, mask, known)
        assert np.allclose(mu_f, mu_t.data[0], rtol=1e-4, atol=0.05)
        assert np.allclose(b_f, b_t.data[0], rtol=1e-3, atol=1e-3)


class TestPredictorWrappers:
    def test_rnn_predictor_pmf(self):
        arch = rnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=47))
        predictor = RnnPredictor(model)
        rng = np.random.default_rng(53)
        window = rng.integers(0, 1024, (arch.window, 3)).astype(np.int32)
        ctx = ModelContext(window=window, target_link=1)
        pmf = predictor.predict_pmf(ctx)
        assert pmf.num_symbols == 1024
        assert pmf == predictor.predict_pmf(ctx)  # deterministic

    def test_rnn_window_mismatch_rejected(self):
        arch = rnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=1))
        predictor = RnnPredictor(model)
        with pytest.raises(ModelError):
            predictor.forward_window(np.zeros(arch.window + 2))

    def test_stgnn_predictor_pmf_uses_mask(self):
        arch = stgnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=59))
        graph = build_link_graph(directed_ring(3))
        predictor = StgnnPredictor(model, graph)
        rng = np.random.default_rng(61)
        window = rng.integers(0, 1024, (arch.window, graph.num_links)).astype(np.int32)
        mask = np.zeros(graph.num_links, dtype=bool)
        mask[2] = True
        known = np.zeros(graph.num_links, dtype=np.int32)
        known[2] = 900
        ctx_plain = ModelContext(window=window, target_link=0)
        ctx_known = ModelContext(window=window, target_link=0, mask=mask, known=known)
        assert predictor.predict_pmf(ctx_plain) != predictor.predict_pmf(ctx_known)

    def test_kind_mismatch_rejected(self):
        arch = rnn_arch()
        model = PredictorModel(arch=arch, weights=init_params(arch, seed=2))
        graph = build_link_graph(directed_ring(3))
        with pytest.raises(ModelError):
            StgnnPredictor(model, graph)
