import numpy as np
import pytest

from hybridopt import Bounds, CmaParams, rng_stream
from hybridopt.localsearch import (LsParams, NestedCmaes, cmaes_ls_run,
                                   mtsls_run, schedule_ls)


def test_schedule_ls_worked_example():
    sched = schedule_ls(100000, LsParams(algo="mtsls", budget=0.25, divide=10))
    assert sched.per_run_budget == 2500
    assert sched.remaining_fes == 25000

    whole = schedule_ls(1000, LsParams(algo="mtsls", budget=1.0, divide=1))
    assert whole.per_run_budget == 1000

    odd = schedule_ls(1000, LsParams(algo="mtsls", budget=0.5, divide=7))
    assert odd.per_run_budget == 71
    assert odd.remaining_fes == 500   # 7*71 = 497, 3 spill into extra runs


def test_scheduler_extra_runs_until_spent():
    sched = schedule_ls(1000, LsParams(algo="mtsls", budget=0.5, divide=7))
    consumed_total = 0
    runs = 0
    while True:
        grant = sched.begin_run()
        if grant == 0:
            break
        consumed = min(grant, sched.remaining_fes)
        sched.finish_run(consumed)
        consumed_total += consumed
        runs += 1
    assert runs == 8          # 7 scheduled plus one extra for the remainder
    assert consumed_total == 500
    assert sched.begin_run() == 0


def test_mtsls_monotone_descent_1d():
    bounds = Bounds(np.array([0.0]), np.array([8.0]))
    visited = []

    def f(x):
        visited.append(float(x[0]))
        return float(x[0] ** 2)

    params = LsParams(algo="mtsls", mtsls_init_ss=1 / 8, mtsls_iterations=5,
                      mtsls_bias=0.5)
    res = mtsls_run(np.array([4.0]), 16.0, f, bounds, budget=100, params=params,
                    rng=rng_stream(0))
    assert visited[:4] == [3.0, 2.0, 1.0, 0.0]   # one step down per sweep
    assert res.fitness == 0.0
    assert res.solution == pytest.approx([0.0])
    # 4 improving sweeps keep ss = 1; the 5th is fruitless and halves it
    assert res.ss_history == pytest.approx([1.0, 1.0, 1.0, 1.0, 0.5])


def test_mtsls_no_improvement_halves_step():
    bounds = Bounds.symmetric(4.0, 2)

    def f(x):
        return float(np.dot(x, x))

    params = LsParams(algo="mtsls", mtsls_init_ss=0.25, mtsls_iterations=1)
    res = mtsls_run(np.zeros(2), 0.0, f, bounds, budget=50, params=params,
                    rng=rng_stream(1))
    assert res.fitness == 0.0
    assert res.ss_history == pytest.approx([1.0])   # ss0 = 2, halved once


def test_mtsls_step_halves_every_sweep_on_constant():
    bounds = Bounds.symmetric(4.0, 3)
    params = LsParams(algo="mtsls", mtsls_init_ss=0.5, mtsls_iterations=3)
    res = mtsls_run(np.ones(3), 1.0, lambda x: 1.0, bounds, budget=1000,
                    params=params, rng=rng_stream(2))
    ss0 = 0.5 * 8.0
    assert res.ss_history == pytest.approx([ss0 / 2, ss0 / 4, ss0 / 8])
    assert res.fitness == 1.0   # never worse than the input


def test_mtsls_out_of_bounds_penalty():
    # Minimizing -x^2 on [0,1]: the probe at 1.5 evaluates the clamped point
    # 1.0 and is rejected because of the +0.5^2 penalty, while a probe at 1.1
    # (penalty 0.01) is accepted.  Without the penalty both would win.
    seen = []

    def f(x):
        seen.append(float(x[0]))
        return -float(x[0] ** 2)

    bounds = Bounds(np.array([0.0]), np.array([1.0]))
    params = LsParams(algo="mtsls", mtsls_init_ss=1.0, mtsls_iterations=2)
    res = mtsls_run(np.array([0.5]), -0.25, f, bounds, budget=10, params=params,
                    rng=rng_stream(3))
    # sweep 1: 0.5-1.0 -> clamp 0 rejected; 0.5+0.5 = 1.0 accepted (f=-1)
    # sweep 2: 1.0-1.0 -> 0 rejected; 1.0+0.5 = 1.5 -> clamp 1.0, value
    #          -1 + 0.25 = -0.75 > -1 rejected, so the sweep is fruitless
    assert res.fitness == -1.0
    assert res.solution == pytest.approx([1.0])
    assert all(0.0 <= x <= 1.0 for x in seen)    # only feasible evaluations
    assert res.ss_history[-1] == pytest.approx(0.5)  # fruitless sweep halved ss

    accept = LsParams(algo="mtsls", mtsls_init_ss=0.4, mtsls_iterations=1)
    res2 = mtsls_run(np.array([0.9]), -0.81, f, bounds, budget=10,
                     params=accept, rng=rng_stream(4))
    # second probe 0.9 + 0.2 = 1.1 -> clamped value -1 + 0.01 = -0.99 < -0.81
    assert res2.fitness == -1.0
    assert res2.solution == pytest.approx([1.0])


def test_mtsls_tiny_improvement_triggers_reset_and_bias_restart():
    bounds = Bounds.symmetric(4.0, 1)

    def f(x):
        return 1e-21 * float(x[0] ** 2)

    params = LsParams(algo="mtsls", mtsls_init_ss=0.25, mtsls_iterations=2,
                      mtsls_bias=1.0)
    res = mtsls_run(np.array([2.0]), f(np.array([2.0])), f, bounds, budget=100,
                    params=params, rng=rng_stream(5))
    # first sweep improves by 4e-21 <= 1e-20: ss resets into [0.3, 0.6]*width
    assert 0.3 * 8.0 <= res.ss_history[0] <= 0.6 * 8.0
    # with bias 1 the restart point is exactly the best-so-far
    assert res.fitness <= f(np.array([2.0]))


def test_mtsls_budget_slice_respected():
    calls = []

    def f(x):
        calls.append(1)
        return float(np.dot(x, x))

    bounds = Bounds.symmetric(5.0, 4)
    params = LsParams(algo="mtsls", mtsls_init_ss=0.5, mtsls_iterations=3)
    res = mtsls_run(np.full(4, 3.0), 36.0, f, bounds, budget=5, params=params,
                    rng=rng_stream(6))
    assert res.evals == 5 == len(calls)
    assert res.fitness <= 36.0


def test_mtsls_determinism():
    bounds = Bounds.symmetric(5.0, 3)

    def f(x):
        return float(np.dot(x, x))

    params = LsParams(algo="mtsls", mtsls_init_ss=0.3, mtsls_iterations=3,
                      mtsls_bias=-0.5)
    a = mtsls_run(np.full(3, 2.0), 12.0, f, bounds, 40, params, rng_stream(7))
    b = mtsls_run(np.full(3, 2.0), 12.0, f, bounds, 40, params, rng_stream(7))
    assert np.array_equal(a.solution, b.solution)
    assert a.fitness == b.fitness and a.evals == b.evals


def test_cmaes_ls_improves_sphere():
    bounds = Bounds.symmetric(100.0, 5)

    def f(x):
        return float(np.dot(x, x))

    start = np.full(5, 5.0)
    for seed in range(10):
        x, fit = cmaes_ls_run(start, f(start), CmaParams(c=0.1), f, bounds,
                              budget=5000, rng=rng_stream(seed))
        assert fit < f(start)


def test_cmaes_ls_zero_budget_returns_input():
    bounds = Bounds.symmetric(10.0, 3)
    start = np.ones(3)
    x, fit = cmaes_ls_run(start, 3.0, CmaParams(), lambda v: float(np.dot(v, v)),
                          bounds, budget=0, rng=rng_stream(1))
    assert np.array_equal(x, start)
    assert fit == 3.0


def test_cmaes_ls_degenerate_sigma_keeps_input():
    bounds = Bounds.symmetric(10.0, 3)
    searcher = NestedCmaes(CmaParams(restart=False), bounds)
    rng = rng_stream(2)
    start = np.ones(3)

    def f(v):
        return float(np.dot(v, v))

    _, fit, _ = searcher.run_slice(start, 3.0, f, 60, rng)
    searcher.runner.state.sigma = 0.0
    mean_before = searcher.runner.state.mean.copy()
    _, fit2, consumed = searcher.run_slice(start, fit, f, 60, rng)
    # all samples collapse onto the mean: no real improvement, no blow-up
    assert consumed > 0
    assert fit2 <= fit
    assert fit2 == pytest.approx(fit, rel=1e-9, abs=1e-12)
    assert searcher.runner.state.mean == pytest.approx(mean_before, rel=1e-9)
    assert np.isfinite(searcher.runner.state.sigma)


def test_nested_cmaes_state_persists_across_slices():
    bounds = Bounds.symmetric(100.0, 4)
    searcher = NestedCmaes(CmaParams(c=0.1), bounds)
    rng = rng_stream(3)

    def f(v):
        return float(np.dot(v, v))

    start = np.full(4, 20.0)
    _, fit1, used1 = searcher.run_slice(start, f(start), f, 200, rng)
    gen1 = searcher.runner.state.gen
    _, fit2, used2 = searcher.run_slice(start, fit1, f, 200, rng)
    assert searcher.runner.state.gen > gen1   # same instance kept evolving
    assert fit2 <= fit1
    assert used1 <= 200 and used2 <= 200
