"""Subordinate local search interleaved with the main algorithm.

Two searchers are available: a dimension-sweep trajectory search with
step-size halving, and a nested, fully independent CMA-ES instance whose
state persists across its scheduled slices.  Both are fed the incumbent
best and may never return anything worse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmaes import CmaParams, CmaRunner
from .core import Bounds, BudgetExhausted, repair_to_bounds

CONVERGENCE_EPS = 1e-20


@dataclass
class LsParams:
    algo: str = "none"             # none | mtsls | cmaes
    budget: float = 0.25           # fraction of the total FE budget given to LS
    divide: int = 10               # number of scheduled independent runs
    mtsls_init_ss: float = 0.5     # initial step as a fraction of the box width
    mtsls_iterations: int = 1      # dimension sweeps per scheduled run
    mtsls_bias: float = 0.5        # pull of restart points toward the incumbent
    nested_cma: CmaParams | None = None


@dataclass
class LsScheduler:
    """Slices the LS budget into per-run grants, then extra runs until spent."""

    per_run_budget: int
    remaining_fes: int
    divide: int
    runs_started: int = 0

    def begin_run(self) -> int:
        """Budget for the next run (0 when the LS budget is gone)."""
        if self.remaining_fes <= 0 or self.per_run_budget <= 0:
            return 0
        self.runs_started += 1
        return self.per_run_budget

    def finish_run(self, consumed: int) -> None:
        self.remaining_fes -= consumed


def schedule_ls(total_fes: int, params: LsParams) -> LsScheduler:
    """per_run = floor(budget*total/divide); leftovers become extra runs."""
    total_ls = int(params.budget * total_fes)
    per_run = total_ls // params.divide
    return LsScheduler(per_run_budget=per_run, remaining_fes=total_ls,
                       divide=params.divide)


@dataclass
class MtslsResult:
    solution: np.ndarray
    fitness: float
    evals: int
    ss_history: list[float] = field(default_factory=list)


def bound_penalty(x: np.ndarray, inside: np.ndarray) -> float:
    """Sum of squared offsets between a raw probe and its clamped image."""
    offsets = x - inside
    return float(np.dot(offsets, offsets))


def mtsls_run(start: np.ndarray, start_fitness: float, f, bounds: Bounds,
              budget: int, params: LsParams, rng: np.random.Generator) -> MtslsResult:
    """Dimension-sweep local search from `start`.

    Per dimension, the probe s_j - ss is tried first and s_j + ss/2 second;
    a fruitless full sweep halves the step everywhere.  Out-of-bounds probes
    are charged the clamped evaluation plus the squared offsets.  The best
    feasible point seen is returned and is never worse than the input.

    Parameters
    ----------
    f : callable evaluating a feasible point for one FE; may raise
        BudgetExhausted, which ends the run gracefully.
    budget : FE slice for this run; the sweep stops exactly at the limit.
    """
    d = bounds.d
    width = bounds.width()
    ss = params.mtsls_init_ss * width
    s = np.asarray(start, dtype=float).copy()
    current_f = float(start_fitness)

    best_x = repair_to_bounds(s, bounds).copy()
    best_f = current_f
    evals = 0
    ss_history: list[float] = []

    def probe(x):
        nonlocal evals, best_x, best_f
        if evals >= budget:
            raise BudgetExhausted("local-search slice spent")
        inside = repair_to_bounds(x, bounds)
        value = f(inside)
        evals += 1
        if value < best_f:
            best_f = value
            best_x = inside.copy()
        return value + bound_penalty(x, inside)

    needs_restart = False
    try:
        for _ in range(params.mtsls_iterations):
            if needs_restart:
                # restart between a random point and the best found so far
                r = rng.uniform(bounds.lower, bounds.upper)
                pull = (1.0 - params.mtsls_bias) * rng.uniform(size=d) + params.mtsls_bias
                s = r + pull * (best_x - r)
                current_f = probe(s)
                needs_restart = False

            f_sweep_start = current_f
            improved_any = False
            for j in range(d):
                trial = s.copy()
                trial[j] = s[j] - ss[j]
                val = probe(trial)
                if val < current_f:
                    s, current_f = trial, val
                    improved_any = True
                    continue
                trial = s.copy()
                trial[j] = s[j] + 0.5 * ss[j]
                val = probe(trial)
                if val < current_f:
                    s, current_f = trial, val
                    improved_any = True

            improvement = f_sweep_start - current_f
            if not improved_any:
                ss = ss / 2.0
            elif improvement <= CONVERGENCE_EPS:
                # converged: the step restarts at a random fraction of the box
                ss = float(rng.uniform(0.3, 0.6)) * width
            ss_history.append(float(ss[0]))
            needs_restart = improvement <= CONVERGENCE_EPS
    except BudgetExhausted:
        pass

    return MtslsResult(solution=best_x, fitness=best_f, evals=evals,
                       ss_history=ss_history)


class NestedCmaes:
    """CMA-ES used as local search: independent params, state kept across slices."""

    def __init__(self, params: CmaParams, bounds: Bounds):
        self.params = params
        self.bounds = bounds
        self.runner: CmaRunner | None = None
        self.stalled = False  # set when a slice cannot fit one generation

    def run_slice(self, best: np.ndarray, best_fitness: float, f, budget: int,
                  rng: np.random.Generator, fes_used: int = 0) -> tuple[np.ndarray, float, int]:
        """Advance the nested instance by up to `budget` FEs.

        Returns (solution, fitness, consumed); the solution is the input when
        no strict improvement was sampled.
        """
        if self.runner is None:
            self.runner = CmaRunner(self.params, self.bounds.d, self.bounds, rng,
                                    mean=np.asarray(best, dtype=float),
                                    fes_used=fes_used)
        out_x = np.asarray(best, dtype=float)
        out_f = float(best_fitness)
        consumed = 0

        def tracked(x):
            nonlocal out_x, out_f, consumed
            value = f(x)
            consumed += 1
            if value < out_f:
                out_f = value
                out_x = x.copy()
            return value

        if self.runner.state.lam > budget:
            self.stalled = True  # a whole generation no longer fits a slice
            return out_x, out_f, consumed
        try:
            while consumed + self.runner.state.lam <= budget:
                self.runner.generation(tracked, rng, fes_used=fes_used + consumed)
                if self.runner.state.lam > budget:
                    break  # a restart grew the population past the slice size
        except BudgetExhausted:
            pass
        return out_x, out_f, consumed


def cmaes_ls_run(best: np.ndarray, best_fitness: float, nested: CmaParams, f,
                 bounds: Bounds, budget: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """One-shot nested CMA-ES run seeded at `best` with a fixed FE budget."""
    searcher = NestedCmaes(nested, bounds)
    x, fit, _ = searcher.run_slice(best, best_fitness, f, budget, rng)
    return x, fit
