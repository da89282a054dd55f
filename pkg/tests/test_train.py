import math

import numpy as np
import pytest

import dualgraph.autodiff as ad
from dualgraph.config import (
    ArchKind,
    FeatureMode,
    GraphType,
    ModelConfig,
    SchedulerKind,
    TrainConfig,
)
from dualgraph.graphs import Graph, SamplePair, ValidationError
from dualgraph.train import (
    AdamState,
    PlateauState,
    adam_step,
    cross_entropy_grad,
    cross_entropy_loss,
    one_cycle_lr,
    train_run,
    write_run_log,
)


def tiny_config(**kw):
    base = dict(
        graph_type=GraphType.DUAL,
        feature=FeatureMode.LDP_ENTROPY,
        model_arch=ArchKind.GCN,
        layer=1,
        fc=2,
        dim=4,
        scheduler=SchedulerKind.ONECYCLE,
    )
    base.update(kw)
    return ModelConfig(**base)


def tiny_dataset(n=12, seed=0):
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        label = i % 2
        fcg = Graph(4, tuple((int(rng.integers(0, 4)), int(rng.integers(0, 4))) for _ in range(5)))
        pcg = Graph(3, ((0, 1), (1, 2)) if label else ((0, 1), (0, 2)))
        samples.append(SamplePair(f"t{i:02d}", label, fcg, pcg, float(rng.uniform(0, 8))))
    return samples


class TestCrossEntropy:
    def test_half_half(self):
        assert cross_entropy_loss(np.array([0.5, 0.5]), 0) == pytest.approx(math.log(2.0), abs=1e-15)

    def test_certain_correct(self):
        assert cross_entropy_loss(np.array([0.0, 1.0]), 1) == 0.0

    def test_clamp_floor(self):
        assert cross_entropy_loss(np.array([0.0, 1.0]), 0) == pytest.approx(-math.log(1e-12), rel=1e-12)
        assert cross_entropy_loss(np.array([1e-300, 1.0]), 0) == pytest.approx(-math.log(1e-12), rel=1e-12)

    def test_grad_shape_and_value(self):
        g = cross_entropy_grad(np.array([0.25, 0.75]), 1)
        assert np.allclose(g, [0.0, -4.0 / 3.0])

    def test_grad_zero_under_clamp(self):
        assert np.array_equal(cross_entropy_grad(np.array([0.0, 1.0]), 0), [0.0, 0.0])

    def test_grad_matches_loss_slope(self):
        eps = 1e-7
        for p in (0.2, 0.9):
            probs = np.array([p, 1 - p])
            num = (cross_entropy_loss(np.array([p + eps, 1 - p]), 0) - cross_entropy_loss(np.array([p - eps, 1 - p]), 0)) / (2 * eps)
            assert cross_entropy_grad(probs, 0)[0] == pytest.approx(num, rel=1e-6)

    def test_bad_label(self):
        with pytest.raises(ValidationError):
            cross_entropy_loss(np.array([0.5, 0.5]), 2)
        with pytest.raises(ValidationError):
            cross_entropy_grad(np.array([0.5, 0.5]), -1)


class TestAdam:
    def test_first_step_is_signed_lr(self):
        # bias correction makes the first update lr * sign(g) up to eps rounding
        p = {"w": ad.param(np.zeros((1, 2)))}
        adam_step(p, {"w": np.array([[0.5, -3.0]])}, AdamState(), lr=0.1)
        assert np.allclose(p["w"].values, [[-0.1, 0.1]], atol=1e-6)

    def test_zero_grad_is_noop(self):
        p = {"w": ad.param(np.array([[1.0, 2.0]]))}
        state = AdamState()
        for _ in range(3):
            adam_step(p, {"w": np.zeros((1, 2))}, state, lr=0.5)
        assert np.array_equal(p["w"].values, [[1.0, 2.0]])

    def test_step_counter_shared_across_params(self):
        p = {"a": ad.param(np.zeros((1, 1))), "b": ad.param(np.zeros((1, 1)))}
        state = AdamState()
        adam_step(p, {"a": np.ones((1, 1)), "b": np.ones((1, 1))}, state, lr=0.1)
        assert state.t == 1
        assert set(state.m) == {"a", "b"}

    def test_matches_reference_formula(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(2, 2))
        p = {"w": ad.param(vals)}
        state = AdamState()
        m = np.zeros((2, 2))
        v = np.zeros((2, 2))
        want = vals.copy()
        for t in range(1, 6):
            g = rng.normal(size=(2, 2))
            adam_step(p, {"w": g}, state, lr=0.01)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            mhat = m / (1 - 0.9**t)
            vhat = v / (1 - 0.999**t)
            want -= 0.01 * mhat / (np.sqrt(vhat) + 1e-8)
            assert np.allclose(p["w"].values, want, atol=1e-12)


class TestOneCycle:
    def test_endpoints_and_peak(self):
        total, max_lr = 100, 1e-3
        warm = round(0.3 * total)
        assert one_cycle_lr(0, total, max_lr) == pytest.approx(max_lr / 25)
        assert one_cycle_lr(warm, total, max_lr) == pytest.approx(max_lr)
        assert one_cycle_lr(total - 1, total, max_lr) == pytest.approx(max_lr / 1e4, abs=1e-18)

    def test_warmup_linear(self):
        total, max_lr = 100, 2.0
        warm = round(0.3 * total)
        start = max_lr / 25
        for step in range(warm + 1):
            want = start + (max_lr - start) * step / warm
            assert one_cycle_lr(step, total, max_lr) == pytest.approx(want)

    def test_rises_then_falls(self):
        total = 50
        trace = [one_cycle_lr(s, total, 1.0) for s in range(total)]
        warm = round(0.3 * total)
        assert all(trace[i] < trace[i + 1] for i in range(warm))
        assert all(trace[i] > trace[i + 1] for i in range(warm, total - 1))

    def test_single_step_run(self):
        assert one_cycle_lr(0, 1, 1e-3) == pytest.approx(1e-3)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            one_cycle_lr(100, 100, 1e-3)
        with pytest.raises(ValidationError):
            one_cycle_lr(-1, 100, 1e-3)


class TestPlateau:
    def test_flat_eleven_epochs_one_halving(self):
        # the first observation sets the best; ten flat epochs then halve
        state = PlateauState(1e-3)
        lrs = [state.observe(0.5) for _ in range(11)]
        assert lrs[:10] == [1e-3] * 10
        assert lrs[10] == pytest.approx(5e-4)

    def test_flat_forty_from_1e3(self):
        state = PlateauState(1e-3)
        for _ in range(40):
            lr = state.observe(0.5)
        assert lr == pytest.approx(1.25e-4)

    def test_improvement_resets_counter(self):
        state = PlateauState(1e-3)
        score = 0.5
        for i in range(30):
            score += 0.01
            assert state.observe(score) == 1e-3

    def test_sub_threshold_improvement_does_not_reset(self):
        state = PlateauState(1e-3)
        state.observe(0.5)
        for i in range(1, 11):
            state.observe(0.5 + i * 1e-5)
        assert state.lr == pytest.approx(5e-4)

    def test_floor(self):
        state = PlateauState(1e-6)
        for _ in range(100):
            lr = state.observe(0.1)
        assert lr == 1e-6


class TestTrainRun:
    def test_empty_split_rejected(self):
        cfg, tc = tiny_config(), TrainConfig(epochs=1)
        data = tiny_dataset()
        with pytest.raises(ValidationError, match="empty split"):
            train_run([], data, cfg, tc)
        with pytest.raises(ValidationError, match="empty split"):
            train_run(data, [], cfg, tc)

    def test_deterministic(self):
        data = tiny_dataset()
        cfg = tiny_config()
        tc = TrainConfig(epochs=4, batch_size=4, base_lr=1e-3, seed=3)
        a = train_run(data[:8], data[8:], cfg, tc)
        b = train_run(data[:8], data[8:], cfg, tc)
        assert a.records == b.records
        assert a.best_epoch == b.best_epoch
        for name in a.best_params:
            assert np.array_equal(a.best_params[name], b.best_params[name])

    def test_seed_changes_trace(self):
        data = tiny_dataset()
        cfg = tiny_config()
        a = train_run(data[:8], data[8:], cfg, TrainConfig(epochs=3, batch_size=4, seed=0))
        b = train_run(data[:8], data[8:], cfg, TrainConfig(epochs=3, batch_size=4, seed=1))
        assert a.records != b.records

    def test_record_trace_shape(self):
        data = tiny_dataset()
        result = train_run(data[:8], data[8:], tiny_config(), TrainConfig(epochs=5, batch_size=4))
        assert [r.epoch for r in result.records] == [1, 2, 3, 4, 5]
        assert all(r.loss >= 0 for r in result.records)
        assert all(0 <= r.val_f1 <= 1 for r in result.records)

    def test_best_epoch_is_argmax_earliest(self):
        data = tiny_dataset()
        result = train_run(data[:8], data[8:], tiny_config(), TrainConfig(epochs=6, batch_size=4))
        scores = [r.val_f1 for r in result.records]
        assert result.best_f1 == max(scores)
        assert result.best_epoch == scores.index(max(scores)) + 1

    def test_best_params_reproduce_best_f1(self):
        from dualgraph.metrics import f1_score
        from dualgraph.model import Model, prepare_sample

        data = tiny_dataset(16, seed=5)
        cfg = tiny_config()
        result = train_run(data[:10], data[10:], cfg, TrainConfig(epochs=8, batch_size=4, seed=2))
        model = Model(cfg, seed=0)
        model.set_values(result.best_params)
        preds = [int(np.argmax(model.forward(prepare_sample(s, cfg)))) for s in data[10:]]
        assert f1_score(preds, [s.label for s in data[10:]]) == result.best_f1

    def test_onecycle_lr_recorded_per_epoch(self):
        data = tiny_dataset()
        tc = TrainConfig(epochs=4, batch_size=4, base_lr=1e-3)
        result = train_run(data[:8], data[8:], tiny_config(), tc)
        # 8 train samples, batch 4 -> 2 steps/epoch, 8 total; epoch e ends on step 2e-1
        for e, rec in enumerate(result.records, start=1):
            assert rec.lr == pytest.approx(one_cycle_lr(2 * e - 1, 8, 1e-3))

    def test_plateau_keeps_base_lr_early(self):
        data = tiny_dataset()
        cfg = tiny_config(scheduler=SchedulerKind.PLATEAU)
        result = train_run(data[:8], data[8:], cfg, TrainConfig(epochs=3, batch_size=4, base_lr=1e-3))
        assert result.records[0].lr == 1e-3

    def test_loss_decreases_on_learnable_data(self):
        data = tiny_dataset(16, seed=1)
        result = train_run(data[:12], data[12:], tiny_config(), TrainConfig(epochs=30, batch_size=4, seed=0))
        first = np.mean([r.loss for r in result.records[:5]])
        last = np.mean([r.loss for r in result.records[-5:]])
        assert last < first


class TestRunLog:
    def test_format_and_round_trip_floats(self, tmp_path):
        from dualgraph.train import EpochRecord

        cfg, tc = tiny_config(), TrainConfig(epochs=2, seed=9)
        records = (
            EpochRecord(1, 0.6931471805599453, 0.5, 0.001),
            EpochRecord(2, 1 / 3, 2 / 3, 4e-05),
        )
        path = tmp_path / "run.csv"
        write_run_log(path, records, cfg, tc)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# config=") and lines[0].endswith("seed=9")
        assert lines[1] == "epoch,loss,val_f1,lr"
        assert len(lines) == 4
        _, loss, f1, lr = lines[3].split(",")
        assert float(loss) == 1 / 3 and float(f1) == 2 / 3 and float(lr) == 4e-05

    def test_no_timestamps(self, tmp_path):
        cfg, tc = tiny_config(), TrainConfig(epochs=2, batch_size=4)
        data = tiny_dataset()
        result = train_run(data[:8], data[8:], cfg, tc)
        path = tmp_path / "run.csv"
        write_run_log(path, result.records, cfg, tc)
        text = path.read_text()
        assert "202" not in text.split("\n")[0] or "config=" in text.split("\n")[0]
        write_run_log(tmp_path / "again.csv", result.records, cfg, tc)
        assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()
