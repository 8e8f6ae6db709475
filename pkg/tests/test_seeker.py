import math

import mpmath
import numpy as np
import pytest

from nashseek import (NumericalAbort, PerturbationParams, QuadraticGame, ScriptedGame,
                      SeekerConfig, StepSchedule, baseline_gradient_ascent, perturbation_signal,
                      run)
from nashseek.seeker import GradientUnavailable, step
from nashseek.game import GameModel

from conftest import quad_centered


def one(b=0.9, omega=0.9, phi=0.0, z=0.9):
    return PerturbationParams([b], [omega], [phi], [z])


class TestStep:
    def test_hand_computed(self):
        mpmath.mp.dps = 40
        oracle = float(1 + mpmath.mpf("0.81") * mpmath.sin(mpmath.mpf("0.9")) * 2)
        out = step(np.array([1.0]), 1.0, 1.0, [2.0], one())
        assert out[0] == pytest.approx(oracle, rel=1e-15)
        # agrees with the published figure 2.26898 to five significant digits
        assert oracle == pytest.approx(2.26899, abs=1e-5)

    def test_zero_growth(self):
        assert step(np.array([3.0]), 1.3, 0.5, [7.0], one(z=0.0))[0] == 3.0

    def test_zero_rate(self):
        assert step(np.array([3.0]), 1.3, 0.0, [7.0], one())[0] == 3.0

    def test_non_finite_payoff(self):
        p = PerturbationParams([1.0, 1.0], [1.0, 1.5], [0.0, 0.0], [1.0, 1.0])
        with pytest.raises(NumericalAbort) as info:
            step(np.zeros(2), 1.0, 0.1, [1.0, float("nan")], p, iteration=12)
        assert info.value.node == 1 and info.value.iteration == 12


def quad_cfg(horizon=20000, seed=0, **kw):
    p = PerturbationParams.uniform(1, amplitude=0.1, frequency=1.0, phase=0.0, growth=1.0)
    return SeekerConfig(p, StepSchedule.constant(0.05), horizon, [0.0], seed, **kw)


class TestRun:
    def test_horizon_zero(self):
        tr = run(ScriptedGame(quad_centered(2.0)), quad_cfg(horizon=0))
        assert len(tr) == 1 and tr.hat_a[0, 0] == 0.0 and tr.k.tolist() == [0]

    def test_quadratic_converges(self):
        tr = run(ScriptedGame(quad_centered(2.0)), quad_cfg())
        # brute-force scan oracle for the maximizer
        grid = np.linspace(-5, 5, 100001)
        a_star = grid[np.argmax(-(grid - 2.0) ** 2)]
        assert abs(tr.hat_a[-2000:, 0].mean() - a_star) < 0.05

    def test_decomposition_exact(self, reference_dither, wireless_game):
        cfg = SeekerConfig(reference_dither, StepSchedule.constant(0.01), 3000, [13.96, 13.96], 3)
        tr = run(wireless_game, cfg)
        # the action is built as hat_a + dither, so that sum is reproduced bit for bit
        np.testing.assert_array_equal(tr.a, tr.hat_a + perturbation_signal(tr.khat, reference_dither))
        np.testing.assert_allclose(tr.a - tr.hat_a, perturbation_signal(tr.khat, reference_dither),
                                   rtol=0, atol=1e-14)
        assert tr.khat[0] == 0.0

    def test_update_identity(self, reference_dither, wireless_game):
        cfg = SeekerConfig(reference_dither, StepSchedule.vanishing(0.5), 2000, [5.0, 5.0], 1)
        tr = run(wireless_game, cfg)
        lhs = (tr.hat_a[1:] - tr.hat_a[:-1]) / tr.lam[:-1, None]
        rhs = reference_dither.growth * perturbation_signal(tr.khat[:-1], reference_dither) * tr.payoff[:-1]
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)

    def test_payoff_from_shared_state(self, reference_dither, wireless_game):
        cfg = SeekerConfig(reference_dither, StepSchedule.constant(0.01), 50, [5.0, 5.0], 9)
        tr = run(wireless_game, cfg)
        states = wireless_game.sample_states(np.random.default_rng(9), 51)
        for k in (0, 17, 50):
            np.testing.assert_allclose(tr.payoff[k], wireless_game.payoffs(states[k], tr.a[k]),
                                       rtol=1e-13)

    def test_seed_determinism_bitwise(self, reference_dither, wireless_game):
        cfg = SeekerConfig(reference_dither, StepSchedule.constant(0.01), 5000, [13.96, 13.96], 5)
        a, b = run(wireless_game, cfg), run(wireless_game, cfg)
        for f in ("khat", "hat_a", "a", "payoff", "lam"):
            assert getattr(a, f).tobytes() == getattr(b, f).tobytes()
        c = run(wireless_game, SeekerConfig(reference_dither, cfg.schedule, 5000, cfg.initial, 6))
        assert not np.array_equal(a.hat_a, c.hat_a)

    def test_zero_growth_freezes(self, noisy_quadratic):
        p = PerturbationParams.uniform(1, amplitude=0.5, frequency=1.0, growth=0.0)
        tr = run(noisy_quadratic, SeekerConfig(p, StepSchedule.constant(0.1), 500, [0.7], 0))
        assert np.all(tr.hat_a == 0.7)

    def test_zero_signal_freezes(self):
        model = ScriptedGame(lambda a: np.zeros(2), 2)
        p = PerturbationParams([1.0, 1.0], [1.0, 1.5], [0.0, 0.0], [1.0, 1.0])
        tr = run(model, SeekerConfig(p, StepSchedule.constant(0.1), 300, [1.0, -2.0], 0))
        assert np.all(tr.hat_a == [1.0, -2.0])

    def test_clamp(self, wireless_game):
        # phase 3*pi/2 starts the dither at its trough, so the first action is negative
        dither = PerturbationParams([0.9, 0.9], [0.9, 1.0], [1.5 * math.pi] * 2, [0.9, 0.9])
        cfg = SeekerConfig(dither, StepSchedule.constant(0.01), 400, [0.2, 0.2], 0,
                           clamp_nonnegative=True)
        tr = run(wireless_game, cfg)
        assert tr.a.min() >= 0.0
        raw = tr.hat_a + perturbation_signal(tr.khat, dither)
        assert (raw < 0).any()
        np.testing.assert_array_equal(tr.a, np.maximum(raw, 0.0))

    def test_negative_power_aborts_without_clamp(self, wireless_game):
        dither = PerturbationParams([0.9, 0.9], [0.9, 1.0], [1.5 * math.pi] * 2, [0.9, 0.9])
        cfg = SeekerConfig(dither, StepSchedule.constant(0.01), 400, [0.2, 0.2], 0)
        with pytest.raises(NumericalAbort):
            run(wireless_game, cfg)

    def test_non_finite_payoff_aborts(self):
        model = ScriptedGame(lambda a: np.array([np.inf if a[0] > 0.5 else 1.0]), 1)
        cfg = SeekerConfig(one(b=1.0, omega=1.0, z=1.0), StepSchedule.constant(0.1), 100, [0.0], 0)
        with pytest.raises(NumericalAbort) as info:
            run(model, cfg)
        assert info.value.node == 0 and info.value.iteration is not None

    def test_config_validation(self):
        p = one()
        with pytest.raises(ValueError):
            SeekerConfig(p, StepSchedule.constant(0.1), -1, [0.0])
        with pytest.raises(ValueError):
            SeekerConfig(p, StepSchedule.constant(0.1), 10, [float("nan")])
        with pytest.raises(ValueError):
            SeekerConfig(p, StepSchedule.constant(0.1), 10, [0.0, 1.0])
        bad = PerturbationParams([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            run(ScriptedGame(lambda a: a, 2), SeekerConfig(bad, StepSchedule.constant(0.1), 5, [0, 0]))

    def test_node_count_mismatch(self, quad2):
        p = PerturbationParams([1.0, 1.0], [1.0, 1.5], [0.0, 0.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            run(quad2, SeekerConfig(p, StepSchedule.constant(0.1), 5, [0.0, 0.0]))


class TestBaseline:
    def test_zero_gradient_constant(self, quad2):
        tr = baseline_gradient_ascent(quad2, StepSchedule.constant(0.1), 10.0, [3.0], 50,
                                      gradient=lambda a: np.zeros(1))
        assert np.all(tr.a == 3.0)

    def test_contraction(self):
        model = QuadraticGame([2.0])
        tr = baseline_gradient_ascent(model, StepSchedule.constant(0.1), 10.0, [0.0], 200)
        first = int(np.argmax(np.abs(tr.a[:, 0] - 2.0) <= 1e-6))
        assert abs(tr.a[first, 0] - 2.0) <= 1e-6 and first <= 200
        # factor 0.8 per step: |a_k - 2| = 2 * 0.8**k
        np.testing.assert_allclose(tr.a[:20, 0], 2 - 2 * 0.8 ** np.arange(20), rtol=1e-12)

    def test_projection(self):
        model = QuadraticGame([20.0])
        tr = baseline_gradient_ascent(model, StepSchedule.constant(0.1), 5.0, [50.0], 100)
        assert tr.a.min() >= 0 and tr.a.max() <= 5.0
        assert tr.a[-1, 0] == 5.0

    def test_finite_difference_fallback(self, quad2):
        tr = baseline_gradient_ascent(quad2, StepSchedule.constant(0.1), 10.0, [0.0], 200)
        assert abs(tr.a[-1, 0] - 2.0) < 1e-6

    def test_gradient_unavailable(self):
        class Opaque(GameModel):
            n_nodes = 1

            def sample_state(self, rng):
                return None

            def payoffs(self, state, a):
                return np.zeros(1)

            def expected_payoffs(self, a):
                raise NotImplementedError

        with pytest.raises(GradientUnavailable):
            baseline_gradient_ascent(Opaque(), StepSchedule.constant(0.1), 1.0, [0.0], 3)
