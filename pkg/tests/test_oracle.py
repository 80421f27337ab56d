"""Attack completeness, synthetic data, and the analytic checks."""

import math

import numpy as np
import pytest

from boxnn.certify import predict
from boxnn.core import BoxModel, BoxRegion
from boxnn.oracle import (
    AttackBudgetError,
    SynthSpec,
    attack_candidate_count,
    ball_box_model,
    brute_force_l0_distance,
    concentration_mc_check,
    exhaustive_attack,
    localization_eps_uniform,
    random_box_model,
    soundness_sweep,
    synth_two_class,
)


def _two_box_model(dim):
    return BoxModel(
        lower=np.stack([np.full(dim, 0.1), np.full(dim, 0.7)]),
        upper=np.stack([np.full(dim, 0.3), np.full(dim, 0.9)]),
        labels=np.array([0, 1], dtype=np.int64),
        num_classes=2,
    )


class TestExhaustiveAttack:
    def test_zero_budget_is_none(self):
        model = _two_box_model(3)
        assert exhaustive_attack(model, np.full(3, 0.2), 0) is None

    def test_single_box_model_never_flips(self):
        model = BoxModel(
            lower=np.zeros((1, 3)), upper=np.full((1, 3), 0.5), labels=np.array([4]), num_classes=5
        )
        for k in range(4):
            assert exhaustive_attack(model, np.full(3, 0.2), k) is None

    def test_full_budget_reaches_other_box(self):
        model = _two_box_model(3)
        x = np.full(3, 0.2)
        adv = exhaustive_attack(model, x, 3)
        assert adv is not None
        assert predict(model, adv) != predict(model, x)
        assert np.all((adv >= 0) & (adv <= 1))

    def test_returns_none_only_when_grid_scan_agrees(self):
        # cross-check against a dense value grid on tiny instances
        rng = np.random.default_rng(21)
        for _ in range(40):
            dim = int(rng.integers(1, 3))
            model = random_box_model(rng, dim, 3, 2)
            x = rng.uniform(0, 1, dim)
            base = predict(model, x)
            found = exhaustive_attack(model, x, dim) is not None
            grid = np.linspace(0, 1, 41)
            mesh = np.meshgrid(*([grid] * dim), indexing="ij")
            points = np.stack([m.ravel() for m in mesh], axis=1)
            dense = any(predict(model, p) != base for p in points)
            # the dense scan is a subset of all points, so it can only find
            # adversarial examples the complete search also finds
            if dense:
                assert found
            if not found:
                assert not dense

    def test_budget_guard(self):
        model = _two_box_model(6)
        with pytest.raises(AttackBudgetError):
            exhaustive_attack(model, np.full(6, 0.2), 6, budget=10)

    def test_candidate_count_matches_enumeration(self):
        model = _two_box_model(2)
        per_coord = 2 * 2 + 2  # clipped corners + domain bounds, before midpoints
        count = attack_candidate_count(model, 2)
        # per-coordinate candidate lists: unique {0, .1, .3, .7, .9, 1} plus 5 midpoints
        assert count == 11 + 11 + 11 * 11
        assert per_coord <= 11

    def test_k_out_of_range(self):
        model = _two_box_model(2)
        with pytest.raises(ValueError):
            exhaustive_attack(model, np.full(2, 0.2), 3)


class TestBruteForceDistance:
    def test_inside(self):
        box = BoxRegion([0.0, 0.0], [1.0, 1.0], 0)
        assert brute_force_l0_distance([0.5, 0.5], box) == 0

    def test_all_outside(self):
        box = BoxRegion([0.4, 0.4], [0.6, 0.6], 0)
        assert brute_force_l0_distance([0.0, 1.0], box) == 2


class TestSynthTwoClass:
    def test_samples_stay_in_balls(self):
        spec = SynthSpec(dim=8, eps_inf=0.05, samples_per_class=50, seed=1)
        ds = synth_two_class(spec)
        class0 = ds.xs[ds.ys == 0]
        class1 = ds.xs[ds.ys == 1]
        assert np.abs(class0 - spec.center0).max() <= spec.eps_inf
        assert np.abs(class1 - spec.center1).max() <= spec.eps_inf

    def test_deterministic(self):
        a = synth_two_class(SynthSpec(seed=9))
        b = synth_two_class(SynthSpec(seed=9))
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_array_equal(a.ys, b.ys)

    def test_overlapping_balls_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(center0=0.45, center1=0.55, eps_inf=0.1)

    def test_ball_leaving_cube_rejected(self):
        with pytest.raises(ValueError):
            SynthSpec(center0=0.02, eps_inf=0.05)

    def test_exact_model_robust_at_one_pixel(self):
        spec = SynthSpec(samples_per_class=25, seed=5)
        ds = synth_two_class(spec)
        model = ball_box_model(spec)
        for x, y in zip(ds.xs, ds.ys):
            assert predict(model, x) == y
            assert exhaustive_attack(model, x, 1) is None


class TestLocalization:
    def test_full_support_rate_zero(self):
        assert localization_eps_uniform(1.0, 5, 0.0) == 0.0

    def test_reference_value(self):
        assert localization_eps_uniform(1 / math.e, 3, 0.0) == pytest.approx(3.0)

    def test_monotone_in_delta_and_n(self):
        base = localization_eps_uniform(0.5, 4, 0.1)
        assert localization_eps_uniform(0.5, 4, 0.2) > base
        assert localization_eps_uniform(0.5, 5, 0.1) > base

    @pytest.mark.parametrize("a,delta", [(0.0, 0.0), (1.5, 0.0), (0.5, 1.0), (0.5, -0.1)])
    def test_domain_errors(self, a, delta):
        with pytest.raises(ValueError):
            localization_eps_uniform(a, 3, delta)


class TestConcentration:
    def test_full_cube_never_misses(self):
        box = BoxRegion(np.zeros(4), np.ones(4), 0)
        result = concentration_mc_check(box, 1, 1000, seed=0)
        assert result.lhs_estimate == 0.0
        assert result.passed

    def test_t_zero_lhs_is_probability(self):
        box = BoxRegion(np.zeros(4), np.full(4, 0.5), 0)
        result = concentration_mc_check(box, 0, 2000, seed=0)
        assert result.lhs_estimate <= 1.0
        assert result.passed

    def test_reference_box(self):
        box = BoxRegion(np.zeros(10), np.full(10, 0.5), 0)
        result = concentration_mc_check(box, 3, 100_000, seed=0)
        assert result.passed

    def test_zero_volume_rejected(self):
        box = BoxRegion([0.5, 0.2], [0.5, 0.8], 0)
        with pytest.raises(ValueError):
            concentration_mc_check(box, 1, 100, seed=0)

    def test_box_outside_cube_rejected(self):
        box = BoxRegion([-0.1, 0.0], [0.5, 0.5], 0)
        with pytest.raises(ValueError):
            concentration_mc_check(box, 1, 100, seed=0)


class TestSoundnessSweep:
    def test_quick_sweep_clean(self):
        report = soundness_sweep(30, 10, seed=42, probe_tightness=True)
        assert report.passed
        assert report.inputs_checked == 300
        # the sweep must actually exercise nonzero radii to mean anything
        assert report.attacks_run > 0
