"""Scalable base test functions plus the shift / rotation / partition pipeline.

The analytic forms follow the usual CEC / SOCO definitions (Ackley with
constants 20, 0.2, 2*pi; Weierstrass with a=0.5, b=3, k_max=20, ...).  Every
base function has minimum value 0 at its canonical optimum and accepts any
dimension d >= 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import Bounds, ParseError


class UnknownFunction(Exception):
    pass


class DimensionMismatch(Exception):
    pass


class InvalidPartition(Exception):
    pass


# ---------------------------------------------------------------------------
# base functions
# ---------------------------------------------------------------------------

def _sphere(z):
    return float(np.dot(z, z))


def _elliptic(z):
    d = z.size
    if d == 1:
        return float(z[0] * z[0])
    w = np.power(1e6, np.arange(d) / (d - 1))
    return float(np.dot(w, z * z))


def _bent_cigar(z):
    return float(z[0] * z[0] + 1e6 * np.dot(z[1:], z[1:]))


def _discus(z):
    return float(1e6 * z[0] * z[0] + np.dot(z[1:], z[1:]))


def _schwefel_1_2(z):
    partial = np.cumsum(z)
    return float(np.dot(partial, partial))


def _schwefel_2_21(z):
    return float(np.max(np.abs(z)))


def _schwefel_2_22(z):
    a = np.abs(z)
    return float(np.sum(a) + np.prod(a))


def _rosenbrock(z):
    return float(np.sum(100.0 * (z[:-1] ** 2 - z[1:]) ** 2 + (z[:-1] - 1.0) ** 2))


def _rastrigin(z):
    return float(np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0))


def _ackley(z):
    d = z.size
    s1 = np.sqrt(np.dot(z, z) / d)
    s2 = np.sum(np.cos(2.0 * np.pi * z)) / d
    return float(20.0 + np.e - 20.0 * np.exp(-0.2 * s1) - np.exp(s2))


def _griewank(z):
    d = z.size
    s = np.dot(z, z) / 4000.0
    p = np.prod(np.cos(z / np.sqrt(np.arange(1, d + 1))))
    return float(1.0 + s - p)


def _bohachevsky(z):
    x, y = z[:-1], z[1:]
    return float(np.sum(x * x + 2.0 * y * y
                        - 0.3 * np.cos(3.0 * np.pi * x)
                        - 0.4 * np.cos(4.0 * np.pi * y) + 0.7))


def _pairwise_f10(x, y):
    s = x * x + y * y
    return s ** 0.25 * (np.sin(50.0 * s ** 0.1) ** 2 + 1.0)


def _schaffer(z):
    return float(np.sum(_pairwise_f10(z[:-1], z[1:])))


def _extended_f10(z):
    # schaffer plus the wrap-around pair (z_d, z_1)
    return float(np.sum(_pairwise_f10(z[:-1], z[1:])) + _pairwise_f10(z[-1], z[0]))


_W_A, _W_B, _W_KMAX = 0.5, 3.0, 20
_W_AK = _W_A ** np.arange(_W_KMAX + 1)
_W_BK = _W_B ** np.arange(_W_KMAX + 1)
_W_OFFSET = float(np.sum(_W_AK * np.cos(np.pi * _W_BK)))  # cos(2*pi*b^k*0.5)


def _weierstrass(z):
    inner = np.cos(2.0 * np.pi * np.outer(z + 0.5, _W_BK)) @ _W_AK
    return float(np.sum(inner) - z.size * _W_OFFSET)


BASE_FUNCTIONS = {
    "sphere": _sphere,
    "elliptic": _elliptic,
    "bent_cigar": _bent_cigar,
    "discus": _discus,
    "schwefel_1_2": _schwefel_1_2,
    "schwefel_2_21": _schwefel_2_21,
    "schwefel_2_22": _schwefel_2_22,
    "rosenbrock": _rosenbrock,
    "rastrigin": _rastrigin,
    "ackley": _ackley,
    "griewank": _griewank,
    "bohachevsky": _bohachevsky,
    "schaffer": _schaffer,
    "extended_f10": _extended_f10,
    "weierstrass": _weierstrass,
}

# Search range half-widths per Table-style conventions (box is symmetric).
SEARCH_RANGES = {
    "sphere": 100.0,
    "elliptic": 100.0,
    "bent_cigar": 100.0,
    "discus": 100.0,
    "schwefel_1_2": 65.536,
    "schwefel_2_21": 100.0,
    "schwefel_2_22": 10.0,
    "rosenbrock": 100.0,
    "rastrigin": 100.0,
    "ackley": 32.0,
    "griewank": 600.0,
    "bohachevsky": 100.0,
    "schaffer": 100.0,
    "extended_f10": 100.0,
    "weierstrass": 100.0,
}


def eval_base(fid: str, z: np.ndarray) -> float:
    """Evaluate the named base function at z (no transforms)."""
    try:
        fn = BASE_FUNCTIONS[fid]
    except KeyError:
        raise UnknownFunction(f"unknown base function {fid!r}") from None
    return fn(np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformData:
    """Shift vector o, orthogonal rotation M, additive bias, optional partition."""

    shift: np.ndarray | None = None
    rotation: np.ndarray | None = None
    bias: float = 0.0
    partition: tuple[tuple[str, np.ndarray], ...] | None = None

    def __post_init__(self):
        if self.rotation is not None:
            m = np.asarray(self.rotation, dtype=float)
            object.__setattr__(self, "rotation", m)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionMismatch("rotation matrix must be square")
            dev = float(np.max(np.abs(m @ m.T - np.eye(m.shape[0]))))
            if dev >= 1e-3:
                raise ValueError(f"rotation matrix is not orthogonal (deviation {dev:.2e})")
            if dev >= 1e-8:
                warnings.warn(f"rotation matrix only loosely orthogonal (deviation {dev:.2e})")
        if self.shift is not None:
            object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float))


def apply_transforms(x: np.ndarray, t: TransformData) -> np.ndarray:
    """z = M (x - o); identity when neither shift nor rotation is present."""
    z = np.asarray(x, dtype=float)
    if t.shift is not None:
        if t.shift.size != z.size:
            raise DimensionMismatch(f"shift has length {t.shift.size}, point has {z.size}")
        z = z - t.shift
    if t.rotation is not None:
        if t.rotation.shape[0] != z.size:
            raise DimensionMismatch(f"rotation is {t.rotation.shape[0]}x..., point has length {z.size}")
        z = t.rotation @ z
    return z


def validate_partition(parts, d: int):
    """Check that the partition's index sets are disjoint and cover 0..d-1."""
    seen = np.zeros(d, dtype=bool)
    out = []
    for fid, idx in parts:
        if fid not in BASE_FUNCTIONS:
            raise UnknownFunction(f"unknown base function {fid!r} in partition")
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0 or np.any(idx < 0) or np.any(idx >= d):
            raise InvalidPartition(f"indices of part {fid!r} outside 0..{d - 1}")
        if np.any(seen[idx]):
            raise InvalidPartition("partition index sets overlap")
        seen[idx] = True
        out.append((fid, idx))
    if not np.all(seen):
        raise InvalidPartition("partition does not cover every dimension")
    return tuple(out)


def eval_hybrid(parts, x: np.ndarray) -> float:
    """Sum of eval_base(part, x restricted to the part's dimensions)."""
    z = np.asarray(x, dtype=float)
    parts = validate_partition(parts, z.size)
    return float(sum(eval_base(fid, z[idx]) for fid, idx in parts))


def parse_parts(spec: str, d: int):
    """Parse 'sphere:0-24,rastrigin:25-49' into a validated partition."""
    parts = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            fid, rng = chunk.split(":")
            lo, hi = rng.split("-")
            idx = np.arange(int(lo), int(hi) + 1)
        except ValueError:
            raise ParseError(f"bad partition chunk {chunk!r}; expected name:lo-hi") from None
        parts.append((fid.strip(), idx))
    return validate_partition(parts, d)


# ---------------------------------------------------------------------------
# objective instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectiveInstance:
    """An immutable, callable problem: base function + transforms + bounds."""

    base_id: str
    d: int
    bounds: Bounds
    transform: TransformData = field(default_factory=TransformData)

    def __call__(self, x: np.ndarray) -> float:
        z = apply_transforms(x, self.transform)
        if self.transform.partition is not None:
            val = eval_hybrid(self.transform.partition, z)
        else:
            val = eval_base(self.base_id, z)
        return val + self.transform.bias


def random_shift(bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    """Shift sampled uniformly in the central 80% of the box."""
    w = bounds.width()
    return bounds.lower + 0.1 * w + rng.uniform(size=bounds.d) * 0.8 * w


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal matrix from the QR decomposition of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))  # fix signs so the map is deterministic


def make_instance(function_id: str, d: int, instance_seed: int = 0,
                  shift_file: str | None = None, rotation_file: str | None = None,
                  parts: str | None = None, bias: float = 0.0) -> ObjectiveInstance:
    """Build an ObjectiveInstance from a function id.

    Ids take the form ``[shifted_][rotated_]<base>`` or ``hybrid`` (which
    requires ``parts``).  Generated shift/rotation data is reproducible from
    instance_seed; explicit data files override generation.
    """
    fid = function_id.strip().lower()
    shifted = rotated = False
    while True:
        if fid.startswith("shifted_"):
            shifted, fid = True, fid[len("shifted_"):]
        elif fid.startswith("rotated_"):
            rotated, fid = True, fid[len("rotated_"):]
        else:
            break

    partition = None
    if fid == "hybrid":
        if not parts:
            raise InvalidPartition("function 'hybrid' needs a partition spec")
        partition = parse_parts(parts, d)
        half = SEARCH_RANGES[partition[0][0]]
    else:
        if fid not in BASE_FUNCTIONS:
            raise UnknownFunction(f"unknown function id {function_id!r}")
        half = SEARCH_RANGES[fid]
    bounds = Bounds.symmetric(half, d)

    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=int(instance_seed) & 0xFFFFFFFFFFFFFFFF,
                               spawn_key=(0xB0B,))))
    shift = rotation = None
    if shift_file is not None:
        shift = load_shift_file(shift_file, d)
    elif shifted:
        shift = random_shift(bounds, rng)
    if rotation_file is not None:
        rotation = load_rotation_file(rotation_file, d)
    elif rotated:
        rotation = random_rotation(d, rng)

    return ObjectiveInstance(base_id=fid, d=d, bounds=bounds,
                             transform=TransformData(shift=shift, rotation=rotation,
                                                     bias=bias, partition=partition))


# ---------------------------------------------------------------------------
# data files (whitespace-separated decimal text)
# ---------------------------------------------------------------------------

def load_shift_file(path, d: int) -> np.ndarray:
    try:
        data = np.loadtxt(path, dtype=float).ravel()
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot parse shift file {path}: {exc}") from None
    if data.size != d:
        raise DimensionMismatch(f"shift file has {data.size} values, expected {d}")
    return data


def load_rotation_file(path, d: int) -> np.ndarray:
    try:
        data = np.loadtxt(path, dtype=float)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot parse rotation file {path}: {exc}") from None
    data = np.atleast_2d(data)
    if data.shape != (d, d):
        raise DimensionMismatch(f"rotation file is {data.shape}, expected ({d}, {d})")
    dev = float(np.max(np.abs(data @ data.T - np.eye(d))))
    if dev > 1e-6:
        warnings.warn(f"rotation file {path} deviates from orthogonality by {dev:.2e}")
    return data
