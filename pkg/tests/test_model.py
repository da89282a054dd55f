import numpy as np
import pytest

from dualgraph.config import ArchKind, FeatureMode, GraphType, ModelConfig, SchedulerKind
from dualgraph.graphs import Graph, SamplePair, ValidationError, merge_graphs
from dualgraph.model import (
    GraphOps,
    Model,
    branch_names,
    init_params,
    load_params,
    prepare_sample,
    save_params,
)


def make_config(**kw):
    base = dict(
        graph_type=GraphType.DUAL,
        feature=FeatureMode.LDP,
        model_arch=ArchKind.GCN,
        layer=2,
        fc=2,
        dim=8,
        scheduler=SchedulerKind.ONECYCLE,
    )
    base.update(kw)
    return ModelConfig(**base)


def random_pair(rng, sid="s0", label=0, max_nodes=10):
    def g():
        n = int(rng.integers(1, max_nodes + 1))
        m = int(rng.integers(0, 3 * n + 1))
        return Graph(n, tuple((int(rng.integers(0, n)), int(rng.integers(0, n))) for _ in range(m)))

    return SamplePair(sid, label, g(), g(), float(rng.uniform(0, 8)))


def dense_ops_oracle(g: Graph):
    """A-tilde = undirected binary adjacency + I, built densely."""
    n = g.node_count
    und = np.zeros((n, n))
    for s, t in set(g.edges):
        und[s, t] = und[t, s] = 1.0
    a = und + np.eye(n)
    deg = a.sum(axis=1)
    return a, a / np.sqrt(np.outer(deg, deg)), a / deg[:, None]


class TestGraphOps:
    def test_two_node_fixture(self):
        ops = GraphOps(Graph(2, ((0, 1),)))
        assert np.allclose(ops.adj_sum.to_dense(), [[1, 1], [1, 1]])
        assert np.allclose(ops.adj_gcn.to_dense(), [[0.5, 0.5], [0.5, 0.5]])
        assert np.allclose(ops.adj_mean.to_dense(), [[0.5, 0.5], [0.5, 0.5]])
        # hand-computed propagation of features [2, 4]
        assert np.allclose(ops.adj_gcn.to_dense() @ [[2.0], [4.0]], [[3.0], [3.0]])

    def test_data_self_loop_stacks_on_added_one(self):
        ops = GraphOps(Graph(1, ((0, 0),)))
        assert np.allclose(ops.adj_sum.to_dense(), [[2.0]])
        assert np.allclose(ops.adj_gcn.to_dense(), [[1.0]])
        assert np.allclose(ops.adj_mean.to_dense(), [[1.0]])

    def test_edgeless_graph_is_identity(self):
        ops = GraphOps(Graph(3, ()))
        assert np.allclose(ops.adj_sum.to_dense(), np.eye(3))
        assert np.allclose(ops.adj_gcn.to_dense(), np.eye(3))

    def test_matches_dense_oracle_on_random_graphs(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            n = int(rng.integers(1, 11))
            m = int(rng.integers(0, 3 * n + 1))
            g = Graph(n, tuple((int(rng.integers(0, n)), int(rng.integers(0, n))) for _ in range(m)))
            a, gcn, mean = dense_ops_oracle(g)
            assert np.abs(GraphOps(g).adj_sum.to_dense() - a).max() < 1e-10
            assert np.abs(GraphOps(g).adj_gcn.to_dense() - gcn).max() < 1e-10
            assert np.abs(GraphOps(g).adj_mean.to_dense() - mean).max() < 1e-10


class TestParamLayout:
    def test_branch_names(self):
        assert branch_names(GraphType.DUAL) == ["fcg", "pcg"]
        assert branch_names(GraphType.MERGED) == ["merged"]
        assert branch_names(GraphType.FCG) == ["fcg"]

    def test_dual_gcn_names(self):
        params = init_params(make_config(layer=2), seed=0)
        assert list(params) == [
            "branch.fcg.conv0.W",
            "branch.fcg.conv1.W",
            "branch.pcg.conv0.W",
            "branch.pcg.conv1.W",
            "gate.w",
            "head.fc0.W",
            "head.fc0.b",
            "head.fc1.W",
            "head.fc1.b",
        ]

    def test_shapes_per_arch(self):
        p = init_params(make_config(model_arch=ArchKind.SGC, graph_type=GraphType.FCG), 0)
        assert p["branch.fcg.lin.W"].shape == (5, 8)
        p = init_params(make_config(model_arch=ArchKind.GIN, graph_type=GraphType.FCG, layer=1), 0)
        assert p["branch.fcg.conv0.W1"].shape == (5, 8)
        assert p["branch.fcg.conv0.W2"].shape == (8, 8)
        p = init_params(make_config(model_arch=ArchKind.SAGE, graph_type=GraphType.FCG, layer=2), 0)
        assert p["branch.fcg.conv0.W"].shape == (10, 8)
        assert p["branch.fcg.conv1.W"].shape == (16, 8)

    def test_head_shapes(self):
        p = init_params(make_config(fc=3, dim=4), 0)
        assert p["head.fc0.W"].shape == (4, 4)
        assert p["head.fc1.W"].shape == (4, 4)
        assert p["head.fc2.W"].shape == (4, 2)
        assert p["head.fc2.b"].shape == (1, 2)

    def test_init_deterministic(self):
        cfg = make_config()
        a = init_params(cfg, 5)
        b = init_params(cfg, 5)
        for name in a:
            assert np.array_equal(a[name].values, b[name].values)
        c = init_params(cfg, 6)
        assert not np.array_equal(a["head.fc0.W"].values, c["head.fc0.W"].values)

    def test_gate_and_biases_start_zero(self):
        p = init_params(make_config(), 3)
        assert np.array_equal(p["gate.w"].values, [[0.0, 0.0]])
        assert np.array_equal(p["head.fc0.b"].values, np.zeros((1, 8)))

    def test_glorot_bound(self):
        p = init_params(make_config(graph_type=GraphType.FCG, layer=1, dim=8), 0)
        w = p["branch.fcg.conv0.W"].values
        bound = np.sqrt(6.0 / (5 + 8))
        assert np.abs(w).max() <= bound


class TestForward:
    def test_probs_normalized(self):
        rng = np.random.default_rng(0)
        model = Model(make_config(), seed=1)
        for _ in range(10):
            probs = model.forward(random_pair(rng))
            assert probs.shape == (2,)
            assert abs(probs.sum() - 1.0) < 1e-12
            assert np.all(probs >= 0)

    def test_all_arch_graph_type_combos_run(self):
        rng = np.random.default_rng(1)
        pair = random_pair(rng)
        for arch in ArchKind:
            for gt in GraphType:
                cfg = make_config(model_arch=arch, graph_type=gt, layer=2, dim=4)
                probs = Model(cfg, seed=0).forward(pair)
                assert abs(probs.sum() - 1.0) < 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        cfg = make_config(model_arch=ArchKind.GIN, layer=2)
        model = Model(cfg, seed=4)
        for _ in range(5):
            pair = random_pair(rng)
            base = model.forward(pair)

            def permute(g):
                perm = rng.permutation(g.node_count)
                return Graph(g.node_count, tuple((int(perm[s]), int(perm[t])) for s, t in g.edges))

            shuffled = SamplePair(pair.id, pair.label, permute(pair.fcg), permute(pair.pcg), pair.entropy)
            assert np.abs(model.forward(shuffled) - base).max() < 1e-9

    def test_merged_equals_single_branch_on_premerged_graph(self):
        rng = np.random.default_rng(3)
        pair = random_pair(rng)
        merged_cfg = make_config(graph_type=GraphType.MERGED)
        merged_model = Model(merged_cfg, seed=9)
        single_cfg = make_config(graph_type=GraphType.FCG)
        renamed = {
            name.replace("branch.merged.", "branch.fcg."): p.values.copy()
            for name, p in merged_model.params.items()
        }
        single_model = Model(single_cfg, seed=9)
        single_model.set_values(renamed)
        pre = SamplePair(pair.id, pair.label, merge_graphs(pair.fcg, pair.pcg), Graph(1, ()), pair.entropy)
        assert np.allclose(merged_model.forward(pair), single_model.forward(pre), atol=1e-12)

    def test_saturated_gate_matches_single_branch(self):
        rng = np.random.default_rng(4)
        pair = random_pair(rng)
        dual = Model(make_config(), seed=7)
        dual.params["gate.w"].values[...] = [[40.0, -40.0]]
        fcg = Model(make_config(graph_type=GraphType.FCG), seed=7)
        fcg.set_values(
            {
                name: p.values.copy()
                for name, p in dual.params.items()
                if name in fcg.params
            }
        )
        assert np.abs(dual.forward(pair) - fcg.forward(pair)).max() < 1e-6

    def test_zero_gate_averages_branches(self):
        # with identical branch weights and identical graphs both branches agree,
        # so the fused embedding equals either branch embedding
        rng = np.random.default_rng(5)
        g = Graph(4, ((0, 1), (1, 2), (2, 3)))
        pair = SamplePair("x", 0, g, g, 4.0)
        dual = Model(make_config(), seed=11)
        shared = dual.params["branch.fcg.conv0.W"].values.copy()
        dual.params["branch.pcg.conv0.W"].values[...] = shared
        dual.params["branch.pcg.conv1.W"].values[...] = dual.params["branch.fcg.conv1.W"].values
        fcg = Model(make_config(graph_type=GraphType.FCG), seed=11)
        fcg.set_values({n: p.values.copy() for n, p in dual.params.items() if n in fcg.params})
        assert np.allclose(dual.forward(pair), fcg.forward(pair), atol=1e-12)

    def test_train_forward_requires_rng_when_head_has_hidden_layers(self):
        pair = random_pair(np.random.default_rng(6))
        model = Model(make_config(fc=2), seed=0)
        with pytest.raises(ValidationError):
            model.forward(pair, train=True)

    def test_train_forward_fc1_needs_no_rng(self):
        pair = random_pair(np.random.default_rng(7))
        probs = Model(make_config(fc=1), seed=0).forward(pair, train=True)
        assert abs(probs.sum() - 1.0) < 1e-12

    def test_eval_forward_deterministic_train_forward_stochastic(self):
        pair = random_pair(np.random.default_rng(8))
        model = Model(make_config(), seed=2)
        assert np.array_equal(model.forward(pair), model.forward(pair))
        rng = np.random.default_rng(0)
        a = model.forward(pair, train=True, rng=rng)
        c = model.forward(pair, train=True, rng=np.random.default_rng(0))
        assert np.array_equal(a, c)
        draws = {tuple(model.forward(pair, train=True, rng=rng)) for _ in range(10)}
        assert len(draws) > 1

    def test_feature_width_mismatch_rejected(self):
        pair = random_pair(np.random.default_rng(9))
        model = Model(make_config(feature=FeatureMode.LDP), seed=0)
        wrong = prepare_sample(pair, make_config(feature=FeatureMode.LDP_ENTROPY))
        with pytest.raises(ValidationError, match="feature width"):
            model.forward(wrong)


class TestBackward:
    def test_backward_before_forward_rejected(self):
        model = Model(make_config(), seed=0)
        with pytest.raises(ValidationError, match="before forward"):
            model.backward(np.array([1.0, 0.0]))

    def test_gate_grad_zero_for_single_graph(self):
        pair = random_pair(np.random.default_rng(10))
        for gt in (GraphType.FCG, GraphType.PCG, GraphType.MERGED):
            model = Model(make_config(graph_type=gt), seed=0)
            model.forward(pair)
            grads = model.backward(np.array([1.0, -1.0]))
            assert np.array_equal(grads["gate.w"], [[0.0, 0.0]])

    def test_gate_grad_nonzero_for_dual(self):
        pair = random_pair(np.random.default_rng(11))
        model = Model(make_config(), seed=0)
        model.forward(pair)
        grads = model.backward(np.array([1.0, -1.0]))
        assert np.abs(grads["gate.w"]).max() > 0.0

    def test_grads_accumulate_until_zero_grad(self):
        pair = random_pair(np.random.default_rng(12))
        model = Model(make_config(), seed=0)
        model.forward(pair)
        g1 = {k: v.copy() for k, v in model.backward(np.array([1.0, 0.0])).items()}
        model.forward(pair)
        g2 = model.backward(np.array([1.0, 0.0]))
        assert np.allclose(g2["head.fc0.W"], 2 * g1["head.fc0.W"])
        model.zero_grad()
        model.forward(pair)
        g3 = model.backward(np.array([1.0, 0.0]))
        assert np.allclose(g3["head.fc0.W"], g1["head.fc0.W"])


class TestModelValidation:
    def test_wrong_param_set_rejected(self):
        params = init_params(make_config(dim=4), seed=0)
        with pytest.raises(ValidationError, match="parameter set"):
            Model(make_config(dim=8), params=params)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        params = init_params(make_config(model_arch=ArchKind.GIN), seed=13)
        path = tmp_path / "m.ckpt"
        save_params(path, params, "cafe0123cafe0123")
        loaded, fp = load_params(path)
        assert fp == "cafe0123cafe0123"
        assert list(loaded) == list(params)
        for name in params:
            assert params[name].values.tobytes() == loaded[name].values.tobytes()

    def test_save_twice_identical_bytes(self, tmp_path):
        params = init_params(make_config(), seed=1)
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_params(a, params, "f" * 16)
        save_params(b, params, "f" * 16)
        assert a.read_bytes() == b.read_bytes()

    def test_loaded_params_drive_model(self, tmp_path):
        cfg = make_config()
        model = Model(cfg, seed=21)
        pair = random_pair(np.random.default_rng(14))
        want = model.forward(pair)
        path = tmp_path / "m.ckpt"
        save_params(path, model.params, "0" * 16)
        loaded, _ = load_params(path)
        assert np.array_equal(Model(cfg, params=loaded).forward(pair), want)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
        with pytest.raises(ValidationError, match="not a parameter checkpoint"):
            load_params(path)

    def test_truncated_file_rejected(self, tmp_path):
        params = init_params(make_config(), seed=0)
        path = tmp_path / "m.ckpt"
        save_params(path, params, "a" * 16)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 17])
        with pytest.raises(ValidationError, match="truncated"):
            load_params(path)
