"""Run template: initialization, the generation loop with per-individual
dispatch under the three execution modes, the local-search hook, optional
population re-initialization, and dynamic parameter updates."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import de as de_mod
from . import pso as pso_mod
from .cmaes import CmaParams, CmaRunner
from .core import (Bounds, BudgetExhausted, EvalBudget, Individual, Population,
                   RunResult, evaluate, repair_to_bounds, rng_stream)
from .de import DeParams
from .localsearch import LsParams, NestedCmaes, mtsls_run, schedule_ls
from .pso import PsoParams, SuccessWindow

MODULES = ("pso", "de", "cmaes")


@dataclass
class ExecutionConfig:
    mode: str = "component_based"        # component_based | probabilistic | multiple_phases
    module_order: tuple[str, ...] = ("pso",)
    pr: float = 0.5
    gate_dist: str = "uniform"           # uniform | normal | levy
    par_std: float = 1.0
    phase_fractions: tuple[float, ...] = ()
    reinit: str = "none"                 # none | change | similarity


@dataclass
class PopulationSettings:
    size: int = 40
    mode: str = "constant"               # constant | incremental | time_varying
    min_size: int = 40
    max_size: int = 100
    interval: int = 10


@dataclass
class AlgorithmConfig:
    """Validated, typed view of one flat parameter assignment."""

    execution: ExecutionConfig
    population: PopulationSettings
    pso: PsoParams | None = None
    de: DeParams | None = None
    cmaes: CmaParams | None = None
    ls: LsParams = field(default_factory=LsParams)
    raw: dict = field(default_factory=dict)


@dataclass
class ExecState:
    """Per-run mutable execution variables (iteration, gate sharpness, windows)."""

    t: int = 0
    gamma_t: int = 10
    windows: tuple[tuple[str, int, int], ...] = ()


def phase_windows(order, fractions, max_evals: int):
    """FE window [start, end) per module under multiple-phases execution."""
    windows = []
    start = 0
    acc = 0.0
    for module, frac in zip(order, fractions):
        acc += frac
        end = max_evals if module == order[-1] else int(math.floor(acc * max_evals))
        windows.append((module, start, end))
        start = end
    return tuple(windows)


def _gate_sample(cfg: ExecutionConfig, state: ExecState, rng) -> float:
    if cfg.gate_dist == "uniform":
        return float(rng.uniform())
    if cfg.gate_dist == "normal":
        return abs(float(rng.normal(0.0, cfg.par_std)))
    if cfg.gate_dist == "levy":
        # gamma_t in {10..20} maps to stability index gamma_t/10 in [1, 2]
        return abs(cfg.par_std * float(pso_mod.mantegna_levy(state.gamma_t / 10.0, rng)))
    raise ValueError(f"unknown gate distribution {cfg.gate_dist!r}")


def dispatch_update(i: int, cfg: ExecutionConfig, state: ExecState,
                    fes_used: int, rng) -> tuple[str, ...]:
    """Modules to apply to individual i this generation."""
    if cfg.mode == "probabilistic":
        first, second = cfg.module_order
        return (first,) if _gate_sample(cfg, state, rng) <= cfg.pr else (second,)
    if cfg.mode == "multiple_phases":
        for module, start, end in state.windows:
            if start <= fes_used < end:
                return (module,)
        return (state.windows[-1][0],)
    # component-based: the fixed composed pipeline, DE before PSO
    order = cfg.module_order
    if "de" in order and "pso" in order:
        return ("de", "pso")
    return tuple(order)


def update_execution_parameters(cfg: ExecutionConfig, state: ExecState, rng,
                                topology=None) -> ExecState:
    """Advance the iteration counter and every time-keyed execution variable."""
    state.t += 1
    if cfg.mode == "probabilistic" and cfg.gate_dist == "levy":
        state.gamma_t = int(rng.integers(10, 21))
    if topology is not None:
        pso_mod.advance_topology(topology, state.t, rng)
    return state


# ---------------------------------------------------------------------------
# re-initialization
# ---------------------------------------------------------------------------

def reinit_indices(kind: str, positions: np.ndarray, best_position: np.ndarray,
                   best_history, d: int) -> list[int]:
    """Members to re-initialize under RI-change / RI-similarity (empty if none)."""
    n = len(positions)
    if kind == "change":
        spread = float(np.mean(np.std(positions, axis=0)))
        window = math.ceil(10.0 * d / n)
        stalled = (len(best_history) > window
                   and best_history[-1 - window] - best_history[-1] < 1e-8)
        if spread < 1e-3 or stalled:
            return list(range(n))
        return []
    if kind == "similarity":
        dist = np.linalg.norm(positions - best_position, axis=1)
        keep = int(np.argmin(dist))  # the member closest to the incumbent survives
        return [i for i in range(n) if i != keep and dist[i] < 1e-3]
    raise ValueError(f"unknown re-initialization kind {kind!r}")


def apply_reinitialization(kind: str, pop: Population, best_position: np.ndarray,
                           bounds: Bounds, best_history, rng, evaluator) -> list[int]:
    """Re-initialize the selected members uniformly; returns their indices."""
    idx = reinit_indices(kind, pop.positions(), best_position, best_history, bounds.d)
    for i in idx:
        x = bounds.sample_uniform(rng)
        v = pso_mod.random_velocity(bounds, rng)
        pop.members[i] = Individual.fresh(x, v, evaluator(x))
    return idx


# ---------------------------------------------------------------------------
# the run itself
# ---------------------------------------------------------------------------

class _Run:
    def __init__(self, cfg: AlgorithmConfig, objective, seed: int,
                 budget: EvalBudget, trace_every: int | None):
        self.cfg = cfg
        self.obj = objective
        self.bounds: Bounds = objective.bounds
        self.d = objective.d
        self.budget = budget
        self.rng = rng_stream(seed)
        self.order = cfg.execution.module_order
        self.exec_state = ExecState(gamma_t=10)
        if cfg.execution.mode == "multiple_phases":
            self.exec_state.windows = phase_windows(
                self.order, cfg.execution.phase_fractions, budget.max_evals)
        if cfg.execution.mode == "probabilistic" and cfg.execution.gate_dist == "levy":
            self.exec_state.gamma_t = int(self.rng.integers(10, 21))

        self.has_population = any(m in ("pso", "de") for m in self.order)
        self.n = cfg.population.min_size if cfg.population.mode != "constant" \
            else cfg.population.size
        self.pop: Population | None = None
        self.topology = None
        self.success: list[SuccessWindow] = []
        self.cma: CmaRunner | None = None
        self.nested_ls: NestedCmaes | None = None
        self.ls_scheduler = None
        self.ls_dead = False
        if cfg.ls.algo != "none":
            self.ls_scheduler = schedule_ls(budget.max_evals, cfg.ls)

        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self.best_history: list[float] = []
        self.module_evals: dict[str, int] = {}
        self.active_module = self.order[0]
        self.current_phase: str | None = None
        self.trace_every = trace_every
        self.trace: list[tuple[int, float]] | None = [] if trace_every else None
        self._trace_mark = -1

        # schedule horizon in iterations for inertia/AC/topology schedules
        self.total_iters = max(1, budget.max_evals // max(1, self.n))

    # -- evaluation funnel --------------------------------------------------

    def ev(self, x: np.ndarray) -> float:
        f = evaluate(self.obj, x, self.budget)
        self.module_evals[self.active_module] = \
            self.module_evals.get(self.active_module, 0) + 1
        if f < self.best_f:
            self.best_f = f
            self.best_x = np.asarray(x, dtype=float).copy()
        if self.trace is not None:
            mark = self.budget.used_evals // self.trace_every
            if mark > self._trace_mark:
                self._trace_mark = mark
                self.trace.append((self.budget.used_evals, self.best_f))
        return f

    # -- initialization -----------------------------------------------------

    def initialize(self) -> None:
        if self.has_population:
            members = []
            for _ in range(self.n):
                x = self.bounds.sample_uniform(self.rng)
                v = pso_mod.random_velocity(self.bounds, self.rng)
                members.append(Individual.fresh(x, v, self.ev(x)))
            self.pop = Population(members=members)
            self.success = [SuccessWindow() for _ in range(self.n)]
            if "pso" in self.order:
                self.topology = pso_mod.build_topology(
                    self.cfg.pso.topology, self.n, self.rng, self.total_iters)
        if self.cfg.execution.mode != "multiple_phases" and self.order == ("cmaes",):
            self.cma = CmaRunner(self.cfg.cmaes, self.d, self.bounds, self.rng,
                                 fes_used=self.budget.used_evals)

    def _enter_phase(self, module: str) -> None:
        self.current_phase = module
        self.active_module = module
        if module == "cmaes":
            self.cma = CmaRunner(self.cfg.cmaes, self.d, self.bounds, self.rng,
                                 mean=self.best_x, fes_used=self.budget.used_evals)
        elif module == "pso" and self.pop is not None:
            for m in self.pop.members:
                m.velocity = pso_mod.random_velocity(self.bounds, self.rng)

    # -- generation ---------------------------------------------------------

    def generation(self) -> None:
        cfg = self.cfg.execution
        if cfg.mode == "multiple_phases":
            module = dispatch_update(0, cfg, self.exec_state,
                                     self.budget.used_evals, self.rng)[0]
            if module != self.current_phase:
                self._enter_phase(module)
            if module == "cmaes":
                self._cma_generation()
            else:
                self._population_generation(fixed_modules=(module,))
            return
        if self.order == ("cmaes",):
            self.active_module = "cmaes"
            self._cma_generation()
            return
        self._population_generation()

    def _cma_generation(self) -> None:
        if self.cma is None:
            self.cma = CmaRunner(self.cfg.cmaes, self.d, self.bounds, self.rng,
                                 fes_used=self.budget.used_evals)
        self.cma.generation(self.ev, self.rng, fes_used=self.budget.used_evals)

    def _population_generation(self, fixed_modules: tuple[str, ...] | None = None) -> None:
        pop = self.pop
        n = len(pop)
        positions = pop.positions()
        fitnesses = pop.fitnesses()
        pbests = pop.personal_bests()
        pbest_fits = pop.personal_best_fitnesses()

        basis = None
        wants_basis = ((self.cfg.pso and self.cfg.pso.vector_basis == "eigenvector")
                       or (self.cfg.de and self.cfg.de.vector_basis == "eigenvector"))
        if wants_basis:
            basis = de_mod.population_eigenbasis(positions)

        k = None
        if self.cfg.de is not None:
            k = de_mod.num_vector_differences(self.cfg.de.diff_fraction, n)

        neighbor_sets = None
        if self.topology is not None:
            neighbor_sets = [sorted(pso_mod.neighbors(self.topology, i))
                             for i in range(n)]
            pop.neighborhood_best = [
                min(nb, key=lambda j: (pbest_fits[j], j)) for nb in neighbor_sets]

        for i in range(n):
            if fixed_modules is not None:
                modules = fixed_modules
            else:
                modules = dispatch_update(i, self.cfg.execution, self.exec_state,
                                          self.budget.used_evals, self.rng)
            de_improved = False
            if "de" in modules:
                de_improved = self._de_update(i, positions, fitnesses, pbests,
                                              pbest_fits, k, basis)
            if "pso" in modules:
                if de_improved and self.cfg.de is not None and self.cfg.de.pso_only_on_fail:
                    continue
                self._pso_update(i, pbests, pbest_fits, neighbor_sets, basis)
        pop.generation += 1

    def _de_update(self, i, positions, fitnesses, pbests, pbest_fits, k, basis) -> bool:
        par = self.cfg.de
        self.active_module = "de"
        member = self.pop.members[i]
        base, pairs = de_mod.select_base_and_donors(
            par.base_vector, positions, pbests, fitnesses, i, k, par.beta,
            par.vectors, self.rng)
        mutant = de_mod.mutate(base, pairs, par.beta, par.base_vector)
        if par.vector_basis == "eigenvector":
            t_rot, m_rot, unrotate = de_mod.eigen_recombination_wrap(
                member.position, mutant, basis)
            trial = unrotate(de_mod.recombine(par.recombination, t_rot, m_rot,
                                              par.p_a, self.rng))
        else:
            trial = de_mod.recombine(par.recombination, member.position, mutant,
                                     par.p_a, self.rng)
        trial = repair_to_bounds(trial, self.bounds)
        old_position = member.position
        _, improved = de_mod.select_greedy(member, trial, self.ev)
        if improved and par.recompute_velocity != "none":
            member.velocity = de_mod.recompute_velocity(
                par.recompute_velocity, old_position, member.position,
                member.velocity, self.rng, self.bounds)
        return improved

    def _pso_update(self, i, pbests, pbest_fits, neighbor_sets, basis) -> None:
        par = self.cfg.pso
        self.active_module = "pso"
        member = self.pop.members[i]
        nb = neighbor_sets[i]
        informants = [(pbests[j], float(pbest_fits[j])) for j in nb]
        l_idx = self.pop.neighborhood_best[i]
        l_best = pbests[l_idx]

        if par.stagnation_detection and pso_mod.stagnation_check(
                member.velocity, member.position, l_best):
            member.velocity = pso_mod.random_velocity(self.bounds, self.rng)

        pm = 0.0
        if par.pert_info != "none" or par.pert_rand != "none":
            pm = pso_mod.perturbation_magnitude(
                par.pm_mode, par.pm, member.personal_best, l_best,
                fp=member.personal_best_fitness, fl=float(pbest_fits[l_idx]),
                success=self.success[i])

        velocity = pso_mod.compute_velocity(
            member, l_best, informants, par, self.exec_state.t, self.total_iters,
            self.rng, pm=pm,
            basis=basis if par.vector_basis == "eigenvector" else None)
        pso_mod.update_position(member, velocity, self.bounds,
                                par.velocity_clamping)
        fitness = self.ev(member.position)
        improved = fitness < member.personal_best_fitness
        member.record_evaluation(member.position, fitness)
        self.success[i].record(improved)

    # -- local search -------------------------------------------------------

    def local_search(self) -> None:
        if self.ls_scheduler is None or self.ls_dead or self.best_x is None:
            return
        grant = self.ls_scheduler.begin_run()
        if grant <= 0:
            return
        previous = self.active_module
        self.active_module = "ls"
        try:
            if self.cfg.ls.algo == "mtsls":
                result = mtsls_run(self.best_x, self.best_f, self.ev, self.bounds,
                                   grant, self.cfg.ls, self.rng)
                self.ls_scheduler.finish_run(result.evals)
            else:
                if self.nested_ls is None:
                    self.nested_ls = NestedCmaes(self.cfg.ls.nested_cma, self.bounds)
                _, _, consumed = self.nested_ls.run_slice(
                    self.best_x, self.best_f, self.ev, grant, self.rng,
                    fes_used=self.budget.used_evals)
                self.ls_scheduler.finish_run(consumed)
                if self.nested_ls.stalled:
                    self.ls_dead = True
        finally:
            self.active_module = previous

    # -- dynamic population size (DE growth schedules) ----------------------

    def update_population_parameters(self) -> None:
        settings = self.cfg.population
        if settings.mode == "constant" or self.pop is None:
            return
        if self.exec_state.t % max(1, settings.interval) != 0:
            return
        progress = self.budget.used_evals / max(1, self.budget.max_evals)
        target = settings.min_size + round(
            (settings.max_size - settings.min_size) * progress)
        while len(self.pop) < target:
            x = self.bounds.sample_uniform(self.rng)
            v = pso_mod.random_velocity(self.bounds, self.rng)
            self.pop.members.append(Individual.fresh(x, v, self.ev(x)))
            self.success.append(SuccessWindow())

    # -- main loop ----------------------------------------------------------

    def execute(self) -> RunResult:
        started = time.monotonic()
        try:
            self.initialize()
            while True:
                if self.budget.wallclock_exceeded():
                    break
                self.generation()
                self.best_history.append(self.best_f)
                self.local_search()
                if (self.cfg.execution.reinit != "none" and self.pop is not None
                        and self.active_module in ("pso", "de")):
                    changed = apply_reinitialization(
                        self.cfg.execution.reinit, self.pop, self.best_x,
                        self.bounds, self.best_history, self.rng, self.ev)
                    if changed and self.cfg.execution.reinit == "change":
                        self.best_history.clear()
                self.update_population_parameters()
                update_execution_parameters(self.cfg.execution, self.exec_state,
                                            self.rng, self.topology)
        except BudgetExhausted:
            pass

        wall_ms = (time.monotonic() - started) * 1000.0
        if self.best_x is None:
            best_x, best_f = np.full(self.d, np.nan), math.inf
        else:
            best_x, best_f = self.best_x, self.best_f
        return RunResult(best_position=best_x, best_fitness=best_f,
                         evals_used=self.budget.used_evals, wall_ms=wall_ms,
                         trace=self.trace, module_evals=self.module_evals)


def run(config: AlgorithmConfig, objective, seed: int,
        max_evals: int | None = None, wallclock_ms: float | None = None,
        trace_every: int | None = None) -> RunResult:
    """Execute one seeded run of the configured algorithm on the objective.

    The FE budget defaults to 5000 * d.  Identical (config, objective, seed)
    triples produce bitwise-identical results.
    """
    if max_evals is None:
        max_evals = 5000 * objective.d
    budget = EvalBudget(max_evals=max_evals, wallclock_ms=wallclock_ms)
    return _Run(config, objective, seed, budget, trace_every).execute()
