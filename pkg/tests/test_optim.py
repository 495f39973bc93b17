import math

import numpy as np
import pytest

from grouprobe import (
    DivergedError,
    InvalidInputError,
    InvalidSpecError,
    LossEval,
    LossWeights,
    OptimConfig,
    SelectionStrategy,
    heterogeneous_batches,
    init_params,
    sgd_step,
    train,
)
from grouprobe.optim import MomentumState
from grouprobe.evalsel import select_checkpoint


class TestOptimConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"learning_rate": 0.0},
            {"learning_rate": -1.0},
            {"batch_size": 0},
            {"epochs": 0},
            {"patience": -1},
            {"momentum": 1.0},
            {"momentum": -0.1},
            {"seed": -1},
        ],
    )
    def test_invalid(self, kw):
        base = dict(learning_rate=0.1, batch_size=4, epochs=2)
        base.update(kw)
        with pytest.raises(InvalidSpecError):
            OptimConfig(**base)


class TestBatches:
    def test_covers_driver_stream_once(self, tiny_task):
        n = len(tiny_task.train)
        seen = []
        for ei, ai in heterogeneous_batches(tiny_task.train, None, 16, 0):
            assert ai is None
            seen.extend(ei.tolist())
        assert sorted(seen) == list(range(n))

    def test_batch_count_and_short_tail(self, tiny_task):
        n = len(tiny_task.train)
        sizes = [len(ei) for ei, _ in heterogeneous_batches(tiny_task.train, None, 32, 1)]
        assert len(sizes) == math.ceil(n / 32)
        assert sizes[-1] == n - 32 * (len(sizes) - 1)
        assert all(s == 32 for s in sizes[:-1])

    def test_shorter_stream_recycles(self, tiny_task, tiny_aux):
        short = tiny_aux.take(np.arange(10))
        batches = list(heterogeneous_batches(tiny_task.train, short, 16, 2))
        n_end = len(tiny_task.train)
        assert len(batches) == math.ceil(n_end / 16)
        aux_seen = np.concatenate([ai for _, ai in batches])
        assert len(aux_seen) == n_end
        # every index of the short stream keeps appearing instead of running out
        counts = np.bincount(aux_seen, minlength=10)
        assert counts.min() >= 1
        assert set(aux_seen.tolist()) <= set(range(10))

    def test_end_and_aux_shuffles_independent(self, tiny_task, tiny_aux):
        b1 = list(heterogeneous_batches(tiny_task.train, tiny_aux, 16, 5))
        b2 = list(heterogeneous_batches(tiny_task.train, tiny_aux, 16, 5))
        for (e1, a1), (e2, a2) in zip(b1, b2):
            assert np.array_equal(e1, e2)
            assert np.array_equal(a1, a2)
        b3 = list(heterogeneous_batches(tiny_task.train, tiny_aux, 16, 6))
        assert any(not np.array_equal(a, b) for (a, _), (b, _) in zip(b1, b3))

    def test_aux_only_stream(self, tiny_aux):
        batches = list(heterogeneous_batches(None, tiny_aux, 32, 3))
        assert all(ei is None for ei, _ in batches)
        total = sum(len(ai) for _, ai in batches)
        assert total == len(tiny_aux)

    def test_no_stream_rejected(self):
        with pytest.raises(InvalidInputError):
            list(heterogeneous_batches(None, None, 4, 0))

    def test_bad_batch_size(self, tiny_task):
        with pytest.raises(InvalidSpecError):
            list(heterogeneous_batches(tiny_task.train, None, 0, 0))


class TestSgdStep:
    def _grads(self, d, scale=1.0):
        g = LossEval.zeros(d)
        g.grad_a = np.full(d, scale)
        g.grad_w_end = np.full(d, -scale)
        g.grad_W_aux = np.full((d, d), scale)
        return g

    def test_plain_step(self):
        p = init_params(2, None, 0, fro_radius=None)
        cfg = OptimConfig(learning_rate=0.1, batch_size=1, epochs=1)
        state = MomentumState.zeros(2)
        q = sgd_step(p, self._grads(2), cfg, state)
        assert np.allclose(q.a, p.a - 0.1)
        assert np.allclose(q.w_end, p.w_end + 0.1)

    def test_ball_projection_applied(self):
        p = init_params(2, 1.0, 0)
        cfg = OptimConfig(learning_rate=5.0, batch_size=1, epochs=1)
        q = sgd_step(p, self._grads(2, scale=-1.0), cfg, MomentumState.zeros(2))
        assert np.abs(q.a).sum() <= 1.0 + 1e-9
        assert q.feasible()

    def test_sphere_rescale_applied(self):
        p = init_params(2, 1.0, 0, l1_boundary=True)
        cfg = OptimConfig(learning_rate=0.3, batch_size=1, epochs=1)
        q = sgd_step(p, self._grads(2), cfg, MomentumState.zeros(2))
        assert abs(np.abs(q.a).sum() - 1.0) < 1e-9

    def test_fro_radius_maintained(self):
        p = init_params(3, 1.0, 1)
        cfg = OptimConfig(learning_rate=0.5, batch_size=1, epochs=1)
        q = sgd_step(p, self._grads(3), cfg, MomentumState.zeros(3))
        assert abs(np.linalg.norm(q.W_aux) - 1.0) < 1e-9

    def test_momentum_accumulates(self):
        p = init_params(1, None, 0, fro_radius=None)
        cfg = OptimConfig(learning_rate=1.0, batch_size=1, epochs=1, momentum=0.5)
        state = MomentumState.zeros(1)
        g = self._grads(1)
        q1 = sgd_step(p, g, cfg, state)
        q2 = sgd_step(q1, g, cfg, state)
        # velocity 1 then 1.5: positions -1 then -2.5
        assert q1.a[0] == pytest.approx(p.a[0] - 1.0)
        assert q2.a[0] == pytest.approx(p.a[0] - 2.5)

    def test_nonfinite_gradient_raises(self):
        p = init_params(2, None, 0, fro_radius=None)
        cfg = OptimConfig(learning_rate=0.1, batch_size=1, epochs=1)
        g = self._grads(2)
        g.grad_a = np.array([np.nan, 0.0])
        with pytest.raises(DivergedError):
            sgd_step(p, g, cfg, MomentumState.zeros(2))


class TestTrain:
    def _run(self, task, aux, cfg, tau=0.5, weights=None, selector=SelectionStrategy.NO_GP):
        params = init_params(task.train.d, tau, [cfg.seed, 101])
        weights = weights or LossWeights(alpha_aux=1.0, lambda_l2=1.0)
        return train(params, task.train, aux, weights, cfg, task.val, selector)

    def test_one_record_per_epoch(self, tiny_task, tiny_aux, tiny_cfg):
        trace, _ = self._run(tiny_task, tiny_aux, tiny_cfg)
        assert len(trace.records) == tiny_cfg.epochs
        assert [r.epoch for r in trace.records] == list(range(tiny_cfg.epochs))
        assert trace.stop_epoch == tiny_cfg.epochs
        assert not trace.stopped_early

    def test_selected_checkpoint_is_argmax(self, tiny_task, tiny_aux, tiny_cfg):
        trace, best = self._run(tiny_task, tiny_aux, tiny_cfg)
        idx = select_checkpoint(trace, SelectionStrategy.NO_GP)
        series = [r.val_avg_acc for r in trace.records]
        assert series[idx] == max(series)
        assert np.array_equal(best.a, trace.records[idx].params.a)
        assert np.array_equal(best.w_end, trace.records[idx].params.w_end)

    def test_bit_determinism(self, tiny_task, tiny_aux, tiny_cfg):
        t1, b1 = self._run(tiny_task, tiny_aux, tiny_cfg)
        t2, b2 = self._run(tiny_task, tiny_aux, tiny_cfg)
        assert np.array_equal(b1.a, b2.a)
        assert np.array_equal(b1.w_end, b2.w_end)
        assert np.array_equal(b1.W_aux, b2.W_aux)
        assert [r.train_loss for r in t1.records] == [r.train_loss for r in t2.records]

    def test_feasibility_every_epoch(self, tiny_task, tiny_aux, tiny_cfg):
        trace, _ = self._run(tiny_task, tiny_aux, tiny_cfg, tau=0.2)
        for r in trace.records:
            assert r.params.feasible()

    def test_all_losses_finite(self, tiny_task, tiny_aux, tiny_cfg):
        trace, _ = self._run(tiny_task, tiny_aux, tiny_cfg)
        assert all(math.isfinite(r.train_loss) for r in trace.records)

    def test_patience_stops_early(self, tiny_task, tiny_aux):
        cfg = OptimConfig(learning_rate=1e-6, batch_size=16, epochs=60, patience=3, seed=0)
        trace, _ = self._run(tiny_task, tiny_aux, cfg)
        assert trace.stopped_early
        assert trace.stop_epoch <= 60
        assert len(trace.records) == trace.stop_epoch

    def test_nonfinite_loss_raises(self, tiny_task, tiny_cfg):
        params = init_params(tiny_task.train.d, None, 0, fro_radius=None)

        def bad_loss(p, ei, ai):
            le = LossEval.zeros(p.d)
            le.value = float("nan")
            return le

        with pytest.raises(DivergedError):
            train(params, tiny_task.train, None, LossWeights(), tiny_cfg,
                  tiny_task.val, SelectionStrategy.NO_GP, loss_fn=bad_loss)

    def test_aux_only_requires_val_aux(self, tiny_aux, tiny_cfg):
        params = init_params(tiny_aux.d, 1.0, 0)
        with pytest.raises(InvalidInputError):
            train(params, None, tiny_aux, LossWeights(), tiny_cfg, None,
                  SelectionStrategy.NO_GP)

    def test_end_training_requires_val(self, tiny_task, tiny_cfg):
        params = init_params(tiny_task.train.d, None, 0, fro_radius=None)
        with pytest.raises(InvalidInputError):
            train(params, tiny_task.train, None, LossWeights(), tiny_cfg, None,
                  SelectionStrategy.NO_GP)

    def test_sample_weights_and_loss_fn_exclusive(self, tiny_task, tiny_cfg):
        params = init_params(tiny_task.train.d, None, 0, fro_radius=None)
        with pytest.raises(InvalidInputError):
            train(params, tiny_task.train, None, LossWeights(), tiny_cfg,
                  tiny_task.val, SelectionStrategy.NO_GP,
                  loss_fn=lambda p, ei, ai: LossEval.zeros(p.d),
                  end_sample_weights=np.ones(len(tiny_task.train)))

    def test_trace_csv(self, tiny_task, tiny_aux, tiny_cfg, tmp_path):
        trace, _ = self._run(tiny_task, tiny_aux, tiny_cfg)
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_avg_acc,val_wg_acc,g0,g1,g2,g3"
        assert len(lines) == 1 + tiny_cfg.epochs
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[1]) == pytest.approx(trace.records[0].train_loss)
