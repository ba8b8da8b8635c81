"""Velocity-based solution updates.

New velocities follow the generalized rule

    v' = w1 * v + w2 * DNPP(i, t) + w3 * PertRand(i, t)

with pluggable topology, inertia schedules, next-position distributions,
acceleration coefficients, perturbations and safeguards.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import Bounds, Individual, repair_to_bounds

STAGNATION_THRESHOLD = 1e-3


@dataclass
class PsoParams:
    omega1_mode: str = "constant"            # constant | linear_decreasing | linear_increasing | random
    omega1: float = 0.729
    omega1_min: float = 0.4
    omega1_max: float = 0.9
    omega2_mode: str = "equal_to_omega1"     # equal_to_omega1 | constant | random
    omega2: float = 1.0
    omega3_mode: str = "equal_to_omega1"
    omega3: float = 1.0
    ac_mode: str = "constant"                # constant | random | time_varying
    phi1: float = 1.49445
    phi2: float = 1.49445
    phi1_min: float = 0.5
    phi1_max: float = 2.5
    topology: str = "fully_connected"
    moi: str = "best_of_neighborhood"        # best_of_neighborhood | fully_informed | ranked_fully_informed
    dnpp: str = "rectangular"                # rectangular | spherical | standard | gaussian
    mtx: str = "random_diagonal"
    pert_info: str = "none"                  # none | gaussian | levy | uniform
    pert_rand: str = "none"                  # none | rectangular | noisy
    pm_mode: str = "constant"                # constant | euclidean_distance | objfunc_distance | success_rate
    pm: float = 0.01
    velocity_clamping: bool = True
    stagnation_detection: bool = False
    ignore_pbest: bool = False
    vector_basis: str = "natural"            # natural | eigenvector


# ---------------------------------------------------------------------------
# topology
# ---------------------------------------------------------------------------

@dataclass
class TopologyState:
    kind: str
    adjacency: list[set[int]]
    t_schedule: int = 0
    next_event: int = 0
    hub: int = 0


def build_topology(kind: str, n: int, rng: np.random.Generator,
                   total_iters: int = 1) -> TopologyState:
    """Construct the informant graph for a swarm of n particles."""
    if kind in ("fully_connected", "time_varying"):
        adj = [set(range(n)) - {i} for i in range(n)]
    elif kind == "ring":
        adj = [{(i - 1) % n, (i + 1) % n} for i in range(n)]
    elif kind == "wheel":
        adj = [set(range(1, n))] + [{0} for _ in range(n - 1)]
    elif kind == "von_neumann":
        # lattice on a virtual torus of width ~sqrt(n)
        cols = max(1, round(math.sqrt(n)))
        adj = [{(i - 1) % n, (i + 1) % n, (i - cols) % n, (i + cols) % n} - {i}
               for i in range(n)]
    elif kind == "random_edge":
        adj = _random_edges(n, rng)
    else:
        raise ValueError(f"unknown topology {kind!r}")

    top = TopologyState(kind=kind, adjacency=adj)
    if kind == "time_varying":
        if n > 3:
            top.t_schedule = max(1, (total_iters * n) // (2 * (n - 3)))
            top.next_event = top.t_schedule
        else:
            top.t_schedule = 0  # n <= 3 is already a ring
    return top


def _random_edges(n: int, rng: np.random.Generator) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for i in range(n):
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        adj[i].add(j)
        adj[j].add(i)
    return adj


def neighbors(top: TopologyState, i: int, t: int = 0) -> set[int]:
    """Informant set of particle i under the current topology state."""
    return top.adjacency[i]


def advance_topology(top: TopologyState, t: int, rng: np.random.Generator) -> None:
    """Per-iteration topology maintenance (edge removal / random rewiring)."""
    if top.kind == "random_edge":
        top.adjacency = _random_edges(len(top.adjacency), rng)
        return
    if top.kind != "time_varying" or top.t_schedule <= 0 or t < top.next_event:
        return
    top.next_event = t + top.t_schedule
    adj = top.adjacency
    n = len(adj)
    for i in range(n):
        # keep the canonical ring i <-> i+-1 intact: the graph then stays
        # connected, every degree stays >= 2, and removal ends at the ring
        ring = {(i - 1) % n, (i + 1) % n}
        candidates = sorted(adj[i] - ring)
        if not candidates:
            continue
        j = candidates[int(rng.integers(len(candidates)))]
        adj[i].discard(j)
        adj[j].discard(i)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def inertia_weight(mode: str, t: int, total: int, rng: np.random.Generator,
                   value: float = 0.729, lo: float = 0.4, hi: float = 0.9) -> float:
    """Inertia weight w1 at iteration t of a run with `total` iterations."""
    total = max(1, total)
    if mode == "constant":
        return value
    if mode == "linear_decreasing":
        return hi - (hi - lo) * t / total
    if mode == "linear_increasing":
        return lo + (hi - lo) * t / total
    if mode == "random":
        return float(rng.uniform(lo, hi))
    raise ValueError(f"unknown inertia mode {mode!r}")


def acceleration_coeffs(mode: str, t: int, total: int, phi1: float, phi2: float,
                        rng: np.random.Generator, phi1_min: float = 0.5,
                        phi1_max: float = 2.5) -> tuple[float, float]:
    """phi1/phi2 pair: fixed, random in (0, phi], or linearly crossing over time."""
    total = max(1, total)
    if mode == "constant":
        return phi1, phi2
    if mode == "random":
        return float(rng.uniform(0.0, phi1)), float(rng.uniform(0.0, phi2))
    if mode == "time_varying":
        frac = t / total
        p1 = phi1_max - (phi1_max - phi1_min) * frac
        p2 = phi1_min + (phi1_max - phi1_min) * frac
        return p1, p2
    raise ValueError(f"unknown acceleration mode {mode!r}")


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------

def mantegna_levy(alpha: float, rng: np.random.Generator, size=None):
    """Symmetric Levy-stable sample(s) with stability index alpha (Mantegna)."""
    if alpha >= 2.0:
        return rng.standard_normal(size) * math.sqrt(2.0)
    num = math.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0)
    den = math.gamma((1.0 + alpha) / 2.0) * alpha * 2.0 ** ((alpha - 1.0) / 2.0)
    sigma_u = (num / den) ** (1.0 / alpha)
    u = rng.normal(0.0, sigma_u, size)
    v = np.abs(rng.standard_normal(size))
    return u / np.maximum(v, 1e-300) ** (1.0 / alpha)


@dataclass
class SuccessWindow:
    """Last-10-updates success counter driving the success-rate pm mode."""
    window: deque = field(default_factory=lambda: deque(maxlen=10))

    def record(self, improved: bool) -> None:
        self.window.append(bool(improved))

    def rate(self) -> float:
        if not self.window:
            return 0.5
        return sum(self.window) / len(self.window)


def perturbation_magnitude(mode: str, pm: float, p: np.ndarray, l: np.ndarray,
                           fp: float = 0.0, fl: float = 0.0,
                           success: SuccessWindow | None = None) -> float:
    """Magnitude of the informed/random perturbation for one particle."""
    if mode == "constant":
        return pm
    if mode == "euclidean_distance":
        return float(np.linalg.norm(p - l) / math.sqrt(p.size))
    if mode == "objfunc_distance":
        return abs(fp - fl) / (1.0 + abs(fl))
    if mode == "success_rate":
        rate = success.rate() if success is not None else 0.5
        if rate > 0.5:
            return pm * 2.0
        if rate < 0.25:
            return pm * 0.5
        return pm
    raise ValueError(f"unknown perturbation-magnitude mode {mode!r}")


def _perturb(vec: np.ndarray, kind: str, pm: float, rng: np.random.Generator) -> np.ndarray:
    if kind == "none" or pm == 0.0:
        return vec
    d = vec.size
    if kind == "gaussian":
        return vec + rng.normal(0.0, pm, d)
    if kind == "uniform":
        return vec + rng.uniform(-pm, pm, d)
    if kind == "levy":
        return vec + pm * mantegna_levy(1.5, rng, d)
    raise ValueError(f"unknown informed perturbation {kind!r}")


# ---------------------------------------------------------------------------
# DNPP
# ---------------------------------------------------------------------------

def _to_basis(v: np.ndarray, basis: np.ndarray | None) -> np.ndarray:
    return v if basis is None else basis.T @ v


def _from_basis(v: np.ndarray, basis: np.ndarray | None) -> np.ndarray:
    return v if basis is None else basis @ v


def dnpp(kind: str, particle: Individual, l_best: np.ndarray,
         informants: list[tuple[np.ndarray, float]], params: PsoParams,
         phi1: float, phi2: float, pm: float, rng: np.random.Generator,
         basis: np.ndarray | None = None) -> np.ndarray:
    """Movement term mapping the particle and its informants to the next position.

    Parameters
    ----------
    l_best : the informant (neighborhood-best personal best).
    informants : (personal_best, personal_best_fitness) of every neighbor,
        used by the fully-informed models.
    basis : optional orthonormal eigenbasis; difference vectors are rotated
        into it before combining and the result rotated back.
    """
    x = particle.position
    p = x if params.ignore_pbest else particle.personal_best
    p = _perturb(p, params.pert_info, pm, rng)
    l = _perturb(l_best, params.pert_info, pm, rng)
    dp = _to_basis(p - x, basis)
    dl = _to_basis(l - x, basis)
    d = x.size

    if kind == "rectangular":
        cognitive = phi1 * rng.uniform(size=d) * dp
        if params.moi in ("fully_informed", "ranked_fully_informed"):
            ranked = params.moi == "ranked_fully_informed"
            social = np.zeros(d)
            order = sorted(range(len(informants)), key=lambda k: (informants[k][1], k))
            m = len(informants)
            rank_total = m * (m + 1) / 2.0
            for rank0, k in enumerate(order):
                pk = _perturb(informants[k][0], params.pert_info, pm, rng)
                w = (m - rank0) / rank_total if ranked else 1.0 / m
                social += w * phi2 * rng.uniform(size=d) * _to_basis(pk - x, basis)
        else:
            social = phi2 * rng.uniform(size=d) * dl
        return _from_basis(cognitive + social, basis)

    if kind == "standard":
        return _from_basis(dp / 2.0 + dl / 2.0, basis)

    if kind == "gaussian":
        mean = (dp + dl) / 2.0
        sd = np.abs(dp - dl)
        return _from_basis(mean + sd * rng.standard_normal(d), basis)

    if kind == "spherical":
        g = (phi1 * dp + phi2 * dl) / 3.0  # centre offset of the hypersphere
        radius = float(np.linalg.norm(g))
        if radius == 0.0:
            return _from_basis(g, basis)
        direction = rng.standard_normal(d)
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 0 else direction
        magnitude = radius * rng.uniform() ** (1.0 / d)
        return _from_basis(g + magnitude * direction, basis)

    raise ValueError(f"unknown DNPP kind {kind!r}")


# ---------------------------------------------------------------------------
# velocity / position updates
# ---------------------------------------------------------------------------

def _omega_aux(mode: str, value: float, omega1: float, rng: np.random.Generator) -> float:
    if mode == "equal_to_omega1":
        return omega1
    if mode == "constant":
        return value
    if mode == "random":
        return float(rng.uniform())
    raise ValueError(f"unknown omega mode {mode!r}")


def compute_velocity(particle: Individual, l_best: np.ndarray,
                     informants: list[tuple[np.ndarray, float]], params: PsoParams,
                     t: int, total: int, rng: np.random.Generator,
                     pm: float = 0.0, basis: np.ndarray | None = None) -> np.ndarray:
    """New velocity w1*v + w2*DNPP + w3*PertRand for one particle."""
    omega1 = inertia_weight(params.omega1_mode, t, total, rng, value=params.omega1,
                            lo=params.omega1_min, hi=params.omega1_max)
    omega2 = _omega_aux(params.omega2_mode, params.omega2, omega1, rng)
    omega3 = _omega_aux(params.omega3_mode, params.omega3, omega1, rng)
    phi1, phi2 = acceleration_coeffs(params.ac_mode, t, total, params.phi1, params.phi2,
                                     rng, params.phi1_min, params.phi1_max)

    move = dnpp(params.dnpp, particle, l_best, informants, params, phi1, phi2,
                pm, rng, basis)
    v = omega1 * particle.velocity + omega2 * move
    if params.pert_rand != "none":
        d = particle.position.size
        if params.pert_rand == "rectangular":
            noise = rng.uniform(-pm, pm, d)
        elif params.pert_rand == "noisy":
            noise = rng.normal(0.0, pm, d) if pm > 0 else np.zeros(d)
        else:
            raise ValueError(f"unknown random perturbation {params.pert_rand!r}")
        v = v + omega3 * noise
    return v


def update_position(particle: Individual, velocity: np.ndarray, bounds: Bounds,
                    velocity_clamping: bool = False) -> Individual:
    """Move the particle by its new velocity, clamping the result into the box.

    With velocity clamping on, the velocity magnitude is halved once before
    the move whenever any component exceeds the width of the search space.
    """
    v = np.asarray(velocity, dtype=float)
    if velocity_clamping and np.any(np.abs(v) > bounds.width()):
        v = v / 2.0
    particle.velocity = v
    particle.position = repair_to_bounds(particle.position + v, bounds)
    return particle


def stagnation_check(velocity: np.ndarray, position: np.ndarray,
                     informant_best: np.ndarray) -> bool:
    """True when ||v|| + ||l - x|| has collapsed below 1e-3."""
    return float(np.linalg.norm(velocity) + np.linalg.norm(informant_best - position)) \
        <= STAGNATION_THRESHOLD


def random_velocity(bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Velocity drawn uniformly in [-(ub-lb)/2, (ub-lb)/2] per dimension."""
    half = bounds.width() / 2.0
    return rng.uniform(-half, half)
