"""Shared primitives: box bounds, evaluation budget, RNG streams and population state."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

# Worst value ever reported to the outside world; internal comparisons are uncapped.
FITNESS_CAP = 1.0e10


class BudgetExhausted(Exception):
    """Raised by evaluate() once the FE or wall-clock budget is spent."""


class EmptyPopulation(Exception):
    pass


class ParseError(Exception):
    """Malformed text input (parameter file, shift/rotation data file)."""


def rng_stream(seed: int, run_id: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for one run.

    Streams are split by (seed, run_id) so concurrent runs never share state;
    the same pair always yields the same draw sequence.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(run_id),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Bounds:
    """Per-dimension box constraints lower[j] <= x[j] <= upper[j]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if lo.shape != up.shape or lo.ndim != 1:
            raise ValueError("bound vectors must be 1-D and of equal length")
        if not np.all(lo < up):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @classmethod
    def symmetric(cls, half_width: float, d: int) -> "Bounds":
        return cls(np.full(d, -half_width), np.full(d, half_width))

    @property
    def d(self) -> int:
        return self.lower.size

    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def repair_to_bounds(x: np.ndarray, b: Bounds) -> np.ndarray:
    """Clamp every component into [lb_j, ub_j]; in-bounds components pass through."""
    return np.clip(x, b.lower, b.upper)


@dataclass
class EvalBudget:
    """FE and wall-clock accounting for one run.

    used_evals is monotone and never exceeds max_evals; charge() raises
    BudgetExhausted instead of going over.
    """

    max_evals: int
    used_evals: int = 0
    wallclock_ms: float | None = None
    started_at: float = field(default_factory=time.monotonic)

    def elapsed_ms(self) -> float:
        return (time.monotonic() - self.started_at) * 1000.0

    def wallclock_exceeded(self) -> bool:
        return self.wallclock_ms is not None and self.elapsed_ms() > self.wallclock_ms

    def exhausted(self) -> bool:
        return self.used_evals >= self.max_evals or self.wallclock_exceeded()

    def charge(self) -> None:
        if self.used_evals >= self.max_evals:
            raise BudgetExhausted(f"FE budget of {self.max_evals} spent")
        if self.wallclock_exceeded():
            raise BudgetExhausted("wall-clock limit exceeded")
        self.used_evals += 1


def evaluate(obj, x: np.ndarray, budget: EvalBudget) -> float:
    """Evaluate obj at x, consuming exactly one FE.

    Raises BudgetExhausted (before calling obj) when the budget is spent.
    """
    if len(x) != obj.d:
        raise ValueError(f"point has length {len(x)}, objective expects {obj.d}")
    budget.charge()
    return float(obj(x))


@dataclass
class Individual:
    """One population member: current point, velocity, and personal-best memory."""

    position: np.ndarray
    velocity: np.ndarray
    personal_best: np.ndarray
    fitness: float
    personal_best_fitness: float

    @classmethod
    def fresh(cls, position: np.ndarray, velocity: np.ndarray, fitness: float) -> "Individual":
        return cls(position=position, velocity=velocity,
                   personal_best=position.copy(), fitness=fitness,
                   personal_best_fitness=fitness)

    def record_evaluation(self, position: np.ndarray, fitness: float) -> None:
        """Adopt a newly evaluated own position, keeping the personal best in sync."""
        self.position = position
        self.fitness = fitness
        if fitness < self.personal_best_fitness:
            self.personal_best = position.copy()
            self.personal_best_fitness = fitness


@dataclass
class Population:
    members: list[Individual]
    neighborhood_best: list[int] = field(default_factory=list)
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def positions(self) -> np.ndarray:
        return np.array([m.position for m in self.members])

    def fitnesses(self) -> np.ndarray:
        return np.array([m.fitness for m in self.members])

    def personal_bests(self) -> np.ndarray:
        return np.array([m.personal_best for m in self.members])

    def personal_best_fitnesses(self) -> np.ndarray:
        return np.array([m.personal_best_fitness for m in self.members])


def best_index(pop: Population) -> int:
    """Index of the member with minimal fitness; ties break to the lowest index."""
    if not pop.members:
        raise EmptyPopulation("best_index on empty population")
    fits = pop.fitnesses()
    return int(np.argmin(fits))  # argmin returns the first minimum


def cap_reported_value(f: float) -> float:
    """Cap a reported fitness at 1e10. Only for output; never for internal comparisons."""
    return min(float(f), FITNESS_CAP)


@dataclass
class RunResult:
    """Outcome of one seeded run."""

    best_position: np.ndarray
    best_fitness: float
    evals_used: int
    wall_ms: float
    trace: list[tuple[int, float]] | None = None
    module_evals: dict[str, int] | None = None
