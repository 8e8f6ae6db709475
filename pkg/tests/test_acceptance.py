"""Acceptance criteria, one test each; tolerances are pinned constants below."""

import math
import time

import mpmath
import numpy as np
import pytest

from nashseek import (BoundConstants, PerturbationParams, ScriptedGame,
                      SeekerConfig, StepSchedule, convergence_time,
                      fit_stability_envelope, integrate_deterministic, interpolate,
                      martingale_diagnostics, perturbation_signal, run, stability_envelope,
                      theorem1_bound, validate_frequencies)
from nashseek import harness
from nashseek.config import reference_config
from nashseek.ode import gap_sweep
from nashseek.wireless import (WirelessGame, analytic_equilibrium, default_settings, payoff_own_gradient,
                               payoffs, sample_channels)

from conftest import record

P_STAR_PUBLISHED = 3.9604
EQ_RUNTIME_S = 1e-3
REPRO_REL_TOL = 0.10
REPRO_MIN_SEEDS = 8
REPRO_SEEDS = range(10)
REPRO_RUNTIME_S = 60.0
SWEEP_LAMBDAS = (0.1, 0.05, 0.025)
SWEEP_SEEDS = range(30)
SWEEP_R2 = 0.9
SWEEP_RUNTIME_S = 120.0
ODE_TOL = 1e-8
ODE_ORDER_RATIO = 8.0
ODE_ROUNDOFF_FLOOR = 1e-13
MG_SIGMAS = 3.0
MG_RATIO_MAX = 1.5
FIXTURE_SIG = 5
ENV_RATE_REL = 0.10
ENV_FLOOR_REL = 0.20


def test_criterion_1_equilibrium_oracle():
    params = default_settings()
    p = analytic_equilibrium(params)
    reps = 200
    start = time.perf_counter()
    for _ in range(reps):
        analytic_equilibrium(params)
    per_call = (time.perf_counter() - start) / reps
    ok = bool(np.all(np.round(p, 4) == P_STAR_PUBLISHED) and np.allclose(p, 4 / 1.01, rtol=1e-14)
              and per_call < EQ_RUNTIME_S)
    record(1, ok, f"p*={p.round(6).tolist()} (4 dp {np.round(p, 4).tolist()}), "
                  f"{per_call * 1e6:.0f} us per call")
    assert ok


@pytest.mark.slow
def test_criterion_2_end_to_end_reproduction(tmp_path):
    start = time.perf_counter()
    rows = []
    for seed in REPRO_SEEDS:
        cfg = reference_config(str(tmp_path / f"seed{seed}"), seed=seed)
        rep = harness.cmd_run(cfg).summary
        rows.append((seed, rep["windowed_mean_hat_a"], rep["relative_error"]))
    elapsed = time.perf_counter() - start
    passing = [seed for seed, _, err in rows if np.all(err <= REPRO_REL_TOL)]
    for seed, mean, err in rows:
        print(f"  seed {seed}: windowed mean {np.round(mean, 4).tolist()}, rel err {np.round(err, 4).tolist()}")
    ok = len(passing) >= REPRO_MIN_SEEDS and elapsed < REPRO_RUNTIME_S
    means = np.array([m for _, m, _ in rows])
    record(2, ok, f"{len(passing)}/10 seeds within 10% of {P_STAR_PUBLISHED} (need {REPRO_MIN_SEEDS}); "
                  f"seed-mean of windowed means {means.mean(axis=0).round(3).tolist()}; {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_3_gap_scaling(noisy_quadratic, small_dither):
    start = time.perf_counter()
    sweep = gap_sweep(noisy_quadratic, small_dither, [0.0], SWEEP_LAMBDAS, SWEEP_SEEDS, 0.0, 20.0)
    elapsed = time.perf_counter() - start
    g = sweep.mean_gaps
    slope, intercept, r2 = sweep.sqrt_lambda_fit()
    ok = bool(g[0] > g[1] > g[2] and r2 >= SWEEP_R2 and elapsed < SWEEP_RUNTIME_S)
    record(3, ok, f"mean sup-gaps {g.round(5).tolist()}, R^2={r2:.4f}, slope={slope:.4f}, {elapsed:.1f} s")
    assert ok


class _ConstantPayoff(ScriptedGame):
    def __init__(self):
        super().__init__(lambda a: np.ones(1), 1)


def test_criterion_4_ode_integrator():
    p = PerturbationParams([1.0], [1.0], [0.0], [1.0])
    exact = 1 - math.cos(1.0)

    def err(h):
        sol = integrate_deterministic(_ConstantPayoff(), p, [0.0], (0.0, 1.0), h)
        return abs(sol.hat_a[-1, 0] - exact)

    e_ref = err(1e-3)
    hs = [0.2 / 2 ** i for i in range(7)]
    errs = [err(h) for h in hs]
    ratios_ok = all(a / b >= ODE_ORDER_RATIO or b <= ODE_ROUNDOFF_FLOOR for a, b in zip(errs, errs[1:]))
    ok = e_ref <= ODE_TOL and ratios_ok
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(errs, errs[1:])]
    record(4, ok, f"error at h=1e-3: {e_ref:.2e}; halving ratios {np.round(ratios, 2).tolist()}")
    assert ok


@pytest.mark.slow
def test_criterion_5_martingale_diagnostics(wireless_params, reference_dither):
    model = WirelessGame(wireless_params, expectation="exact")
    start_point = [4 / 1.01 + 10] * 2
    reports = {}
    for horizon in (100000, 200000):
        cfg = SeekerConfig(reference_dither, StepSchedule.constant(0.01), horizon, start_point, 0)
        tr = run(model, cfg)
        reports[horizon] = martingale_diagnostics(tr, model, reference_dither)
    short, long_ = reports[100000], reports[200000]
    zero_ok = bool(np.all(np.abs(short.mean) <= MG_SIGMAS * short.stderr))
    ratio = long_.c_hat / short.c_hat
    ok = zero_ok and ratio <= MG_RATIO_MAX
    record(5, ok, f"mean M {short.mean.round(5).tolist()} vs 3 SE {(3 * short.stderr).round(5).tolist()}; "
                  f"c_hat {short.c_hat:.3f} -> {long_.c_hat:.3f} (ratio {ratio:.3f})")
    assert ok


def test_criterion_6_bound_calculators():
    mpmath.mp.dps = 40
    checks = {}
    checks["C_T zero"] = BoundConstants(L=0, C0=5, T=3, r0_norm=0).C_T == 0.0
    checks["T zero"] = convergence_time(2.0, 0.05, 0.7, 0.1).time == 0.0
    decade = [convergence_time(10, 2, m, 1e-3).time - convergence_time(10, 2, m, 1e-2).time - math.log(10) / m
              for m in (0.1, 0.5, 2.0)]
    checks["decade"] = all(abs(d) <= 1e-12 for d in decade)
    c_t = 1 + 2 * mpmath.e
    oracle = float(c_t * mpmath.mpf("0.01") * mpmath.e + c_t * mpmath.mpf("0.1"))
    value = theorem1_bound(BoundConstants(L=1, C0=1, T=1, r0_norm=1), 0.01, 0.1, 0.0).value
    checks["tracking fixture"] = (f"{value:.{FIXTURE_SIG}g}" == "0.81862"
                                  and abs(value - oracle) <= 1e-14 * oracle)
    y1 = stability_envelope(2, 0.5, 10, 4, 0.01, 0.9)
    checks["y1 fixture"] = abs(y1 - float(20 * mpmath.exp(-2) + mpmath.mpf("0.739"))) <= 1e-14
    checks["T fixture"] = abs(convergence_time(10, 2, 0.5, 0.1).time - float(2 * mpmath.log(200))) <= 1e-13
    ok = all(checks.values())
    record(6, ok, f"tracking bound {value:.5f}, y1 {y1:.6f}, " + ", ".join(f"{k}={'ok' if v else 'BAD'}"
                                                                    for k, v in checks.items()))
    assert ok


def test_criterion_7_invariant_suite(wireless_params, reference_dither):
    checks = {}
    model = WirelessGame(wireless_params)
    cfg = SeekerConfig(reference_dither, StepSchedule.constant(0.01), 5000, [13.96, 13.96], 42)
    a, b = run(model, cfg), run(model, cfg)
    checks["decomposition"] = bool(np.array_equal(a.a, a.hat_a + perturbation_signal(a.khat, reference_dither)))
    checks["determinism"] = all(getattr(a, f).tobytes() == getattr(b, f).tobytes()
                                for f in ("khat", "hat_a", "a", "payoff", "lam"))
    frozen = PerturbationParams([0.9, 0.9], [0.9, 1.0], [0, 0], [0.0, 0.0])
    fz = run(model, SeekerConfig(frozen, StepSchedule.constant(0.01), 2000, [13.96, 13.96], 1))
    checks["z=0 freeze"] = bool(np.all(fz.hat_a == 13.96))
    checks["frequencies"] = (validate_frequencies([0.9, 1.0]).ok and not validate_frequencies([1, 1]).ok
                             and not validate_frequencies([1, 2, 3]).ok)
    path = interpolate(a, StepSchedule.constant(0.01))
    checks["breakpoints"] = bool(np.array_equal(path.evaluate(a.khat), a.hat_a))
    rng = np.random.default_rng(99)
    exch = []
    for _ in range(5):
        p = 0.5 + rng.random(2) * 6
        G = sample_channels(wireless_params, rng, 40000)
        g = payoff_own_gradient(G, p[None, :], wireless_params)[:, 0]
        h = 1e-4
        fd = (payoffs(G, (p + [h, 0])[None, :], wireless_params)[:, 0]
              - payoffs(G, (p - [h, 0])[None, :], wireless_params)[:, 0]) / (2 * h)
        se = math.sqrt(g.var() / g.size + fd.var() / fd.size)
        exch.append(abs(g.mean() - fd.mean()) <= 3 * se)
    checks["gradient exchange"] = all(exch)
    ok = all(checks.values())
    record(7, ok, ", ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items()))
    assert ok


def test_criterion_8_envelope_fit():
    t = np.linspace(0.0, 40.0, 2001)
    fit = fit_stability_envelope(t, 5 * np.exp(-0.3 * t) + 0.1)
    ok = abs(fit.mbar - 0.3) <= ENV_RATE_REL * 0.3 and abs(fit.floor - 0.1) <= ENV_FLOOR_REL * 0.1
    record(8, ok, f"mbar={fit.mbar:.5f}, floor={fit.floor:.5f}, Mbar*Delta0={fit.Mbar * fit.Delta0:.4f}")
    assert ok
