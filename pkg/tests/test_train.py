"""Initialization, the relaxed objective, analytic gradients, and the training loop."""

import numpy as np
import pytest
from conftest import generic_gradient_instance

from boxnn.core import BoxModel, BoxRegion
from boxnn.data import Dataset
from boxnn.oracle import SynthSpec, synth_two_class
from boxnn.train import (
    TrainConfig,
    _loss_and_grad,
    init_model,
    loss,
    relaxed_certificate,
    train,
)

SYNTH = synth_two_class(SynthSpec(seed=3))
SYNTH_CONFIG = TrainConfig(
    num_boxes=2, tau=1.0, clip=3.0, lr=0.02, epochs=20, batch_size=256, seed=1
)


class TestConfig:
    def test_defaults_valid(self):
        TrainConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_boxes": 0},
            {"tau": -1.0},
            {"clip": 0.0},
            {"lr": -0.1},
            {"epochs": -1},
            {"batch_size": 0},
            {"init_halfwidth": -0.2},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_dict_round_trip(self):
        config = TrainConfig(num_boxes=7, tau=2.5, seed=99)
        assert TrainConfig.from_dict(config.to_dict()) == config

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"momentum": 0.9})


class TestInitModel:
    def test_single_point_box(self):
        ds = Dataset(xs=np.array([[0.5, 0.5]]), ys=np.array([3]), num_classes=4)
        model = init_model(ds, TrainConfig(num_boxes=1, init_halfwidth=0.1, seed=0))
        np.testing.assert_allclose(model.lower, [[0.4, 0.4]])
        np.testing.assert_allclose(model.upper, [[0.6, 0.6]])
        assert model.labels.tolist() == [3]

    def test_same_seed_same_model(self):
        config = TrainConfig(num_boxes=10, seed=5)
        a = init_model(SYNTH, config)
        b = init_model(SYNTH, config)
        np.testing.assert_array_equal(a.lower, b.lower)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_labels_come_from_sample(self):
        model = init_model(SYNTH, TrainConfig(num_boxes=2, seed=7))
        assert set(model.labels.tolist()) <= {0, 1}

    def test_too_many_boxes_rejected(self):
        with pytest.raises(ValueError):
            init_model(SYNTH, TrainConfig(num_boxes=SYNTH.num_samples + 1))


class TestRelaxedCertificate:
    def test_far_other_box_approaches_hard_margin(self):
        # x inside its own box; the differing-label box is 10 hinge units away
        dim = 5
        model = BoxModel.from_boxes(
            [
                BoxRegion([0.0] * dim, [0.4] * dim, 0),
                BoxRegion([2.2] * dim, [2.4] * dim, 1),
            ],
            num_classes=2,
        )
        x = np.full(dim, 0.2)
        value = relaxed_certificate(model, x, 0, tau=1000.0, clip=50.0)
        assert value == pytest.approx(10.0, abs=1e-6)

    def test_nearest_other_label_goes_negative(self):
        model = BoxModel.from_boxes(
            [
                BoxRegion([0.9, 0.9], [1.0, 1.0], 0),
                BoxRegion([0.1, 0.1], [0.3, 0.3], 1),
            ],
            num_classes=2,
        )
        # predicted label forced to 0 although label-1 box is adjacent
        assert relaxed_certificate(model, [0.2, 0.2], 0, tau=5.0, clip=50.0) < 0

    def test_clip_is_sharp(self):
        dim = 4
        model = BoxModel.from_boxes(
            [
                BoxRegion([0.0] * dim, [0.1] * dim, 0),
                BoxRegion([20.0] * dim, [21.0] * dim, 1),
            ],
            num_classes=2,
        )
        assert relaxed_certificate(model, [0.05] * dim, 0, tau=100.0, clip=50.0) == 50.0

    def test_no_other_label_rejected(self):
        model = BoxModel.from_boxes([BoxRegion([0.0], [1.0], 0)], num_classes=1)
        with pytest.raises(ValueError):
            relaxed_certificate(model, [0.5], 0, tau=1.0, clip=50.0)


_generic_instance = generic_gradient_instance


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(17)
        tau, clip = 0.7, 50.0
        h = 1e-5
        probes = 0
        for _ in range(10):
            xs, ys, lower, upper, labels = _generic_instance(rng)
            model_args = dict(num_classes=3)
            _, dlo, dhi = _loss_and_grad(lower, upper, labels, xs, ys, tau, clip)
            config = TrainConfig(num_boxes=len(labels), tau=tau, clip=clip)
            for _ in range(10):
                side = rng.integers(0, 2)
                m = rng.integers(0, lower.shape[0])
                j = rng.integers(0, lower.shape[1])
                target = lower if side == 0 else upper
                analytic = (dlo if side == 0 else dhi)[m, j]
                orig = target[m, j]
                target[m, j] = orig + h
                up = loss(BoxModel(lower, upper, labels, **model_args), xs, ys, config).loss
                target[m, j] = orig - h
                down = loss(BoxModel(lower, upper, labels, **model_args), xs, ys, config).loss
                target[m, j] = orig
                fd = (up - down) / (2 * h)
                assert abs(analytic - fd) <= max(1e-6, 1e-4 * max(abs(analytic), abs(fd)))
                probes += 1
        assert probes == 100

    def test_tau_zero_gradient_still_matches(self):
        rng = np.random.default_rng(23)
        xs, ys, lower, upper, labels = _generic_instance(rng, dim=4, num_boxes=4, batch=4)
        _, dlo, _ = _loss_and_grad(lower, upper, labels, xs, ys, 0.0, 50.0)
        config = TrainConfig(num_boxes=4, tau=0.0)
        h = 1e-5
        orig = lower[1, 2]
        lower[1, 2] = orig + h
        up = loss(BoxModel(lower, upper, labels, num_classes=3), xs, ys, config).loss
        lower[1, 2] = orig - h
        down = loss(BoxModel(lower, upper, labels, num_classes=3), xs, ys, config).loss
        lower[1, 2] = orig
        fd = (up - down) / (2 * h)
        assert abs(dlo[1, 2] - fd) <= max(1e-6, 1e-4 * abs(fd))


class TestLoss:
    def test_all_correct_loss_is_negated_certificate(self):
        dim = 5
        model = BoxModel.from_boxes(
            [
                BoxRegion([0.0] * dim, [0.4] * dim, 0),
                BoxRegion([2.2] * dim, [2.4] * dim, 1),
            ],
            num_classes=2,
        )
        xs = np.full((3, dim), 0.2)
        ys = np.zeros(3, dtype=np.int64)
        config = TrainConfig(num_boxes=2, tau=1000.0, clip=50.0)
        report = loss(model, xs, ys, config)
        cert = relaxed_certificate(model, xs[0], 0, config.tau, config.clip)
        assert report.loss == pytest.approx(-cert)
        assert report.accuracy == 1.0

    def test_misclassified_sign_algebra(self):
        dim = 3
        model = BoxModel.from_boxes(
            [
                BoxRegion([0.0] * dim, [0.4] * dim, 0),
                BoxRegion([0.8] * dim, [1.0] * dim, 1),
            ],
            num_classes=2,
        )
        x = np.full((1, dim), 0.2)  # predicted 0, labeled 1
        report = loss(model, x, np.array([1]), TrainConfig(num_boxes=2, tau=1000.0))
        cert = relaxed_certificate(model, x[0], 0, 1000.0, 50.0)
        assert cert > 0
        assert report.loss == pytest.approx(cert)
        assert report.accuracy == 0.0

    def test_batch_order_invariance(self):
        rng = np.random.default_rng(31)
        xs, ys, lower, upper, labels = _generic_instance(rng, batch=32)
        model = BoxModel(lower, upper, labels, num_classes=3)
        config = TrainConfig(num_boxes=len(labels), tau=0.8)
        base = loss(model, xs, ys, config).loss
        perm = rng.permutation(len(xs))
        shuffled = loss(model, xs[perm], ys[perm], config).loss
        assert abs(base - shuffled) <= 1e-9

    def test_empty_batch_rejected(self):
        model = BoxModel.from_boxes(
            [BoxRegion([0.0], [0.5], 0), BoxRegion([0.6], [1.0], 1)], num_classes=2
        )
        with pytest.raises(ValueError):
            loss(model, np.zeros((0, 1)), np.zeros(0, dtype=int), TrainConfig(num_boxes=2))


class TestTrainLoop:
    def test_zero_epochs_is_init(self):
        config = TrainConfig(num_boxes=4, epochs=0, seed=2)
        init = init_model(SYNTH, config)
        model, history = train(SYNTH, config)
        assert history == []
        np.testing.assert_array_equal(model.lower, init.lower)
        np.testing.assert_array_equal(model.upper, init.upper)

    def test_zero_lr_changes_nothing(self):
        config = TrainConfig(num_boxes=4, epochs=3, lr=0.0, seed=2, batch_size=64)
        init = init_model(SYNTH, config)
        model, history = train(SYNTH, config)
        assert len(history) == 3
        np.testing.assert_array_equal(model.lower, init.lower)
        np.testing.assert_array_equal(model.upper, init.upper)

    def test_deterministic_given_seed(self):
        a, _ = train(SYNTH, SYNTH_CONFIG)
        b, _ = train(SYNTH, SYNTH_CONFIG)
        np.testing.assert_array_equal(a.lower, b.lower)
        np.testing.assert_array_equal(a.upper, b.upper)

    def test_corners_stay_ordered(self):
        config = TrainConfig(num_boxes=6, epochs=5, lr=0.5, seed=0, batch_size=32, clip=3.0)
        model, _ = train(SYNTH, config)
        assert np.all(model.lower <= model.upper)

    def test_objective_improves_on_synthetic(self):
        model, history = train(SYNTH, SYNTH_CONFIG)
        assert -history[-1].loss > -history[0].loss
        assert history[-1].accuracy == 1.0

    def test_extreme_lr_still_terminates(self):
        # clipping zeroes the gradient of exploded rows, so even absurd steps
        # freeze rather than diverge to non-finite corners
        config = TrainConfig(num_boxes=3, epochs=3, lr=1e300, seed=1, batch_size=50)
        model, history = train(SYNTH, config)
        assert np.isfinite(model.lower).all() and np.isfinite(model.upper).all()
        assert all(np.isfinite(r.loss) for r in history)
