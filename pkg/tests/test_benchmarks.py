import numpy as np
import pytest

from hybridopt import (TransformData, apply_transforms, eval_base, eval_hybrid,
                       load_rotation_file, load_shift_file, make_instance,
                       rng_stream)
from hybridopt.benchmarks import (BASE_FUNCTIONS, DimensionMismatch,
                                  InvalidPartition, UnknownFunction,
                                  parse_parts, random_rotation)
from hybridopt.core import ParseError


def test_canonical_optima():
    assert eval_base("rastrigin", np.zeros(6)) == pytest.approx(0.0, abs=1e-12)
    assert eval_base("rosenbrock", np.ones(5)) == pytest.approx(0.0, abs=1e-12)
    for fid in BASE_FUNCTIONS:
        if fid == "rosenbrock":
            continue
        assert eval_base(fid, np.zeros(4)) == pytest.approx(0.0, abs=1e-9), fid


def test_hand_evaluations():
    assert eval_base("elliptic", np.array([1.0, 1.0])) == pytest.approx(1000001.0)
    assert eval_base("schwefel_2_22", np.array([-2.0, 3.0])) == pytest.approx(11.0)
    # an extra hand case each for the cumulative-sum and max-norm forms
    assert eval_base("schwefel_1_2", np.array([1.0, 2.0])) == pytest.approx(1 + 9)
    assert eval_base("schwefel_2_21", np.array([-7.0, 3.0])) == pytest.approx(7.0)


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        eval_base("nope", np.zeros(3))


def test_non_negativity_everywhere():
    rng = rng_stream(7)
    for fid in BASE_FUNCTIONS:
        for _ in range(50):
            z = rng.uniform(-100, 100, size=6)
            assert eval_base(fid, z) >= -1e-12, fid


def test_scalability_any_dimension():
    rng = rng_stream(8)
    for fid in BASE_FUNCTIONS:
        for d in (2, 3, 7, 25):
            val = eval_base(fid, rng.uniform(-1, 1, size=d))
            assert np.isfinite(val), (fid, d)


def test_apply_transforms():
    x = np.array([1.5, -2.0])
    t = TransformData(shift=x.copy(), rotation=np.eye(2))
    assert apply_transforms(x, t) == pytest.approx([0.0, 0.0])

    ident = TransformData(rotation=np.eye(2))
    assert apply_transforms(x, ident) == pytest.approx(x)

    rot90 = TransformData(shift=np.zeros(2),
                          rotation=np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert apply_transforms(np.array([1.0, 0.0]), rot90) == pytest.approx(
        [0.0, 1.0], abs=1e-12)

    with pytest.raises(DimensionMismatch):
        apply_transforms(np.zeros(3), TransformData(shift=np.zeros(2)))


def test_optimum_preservation():
    rng = rng_stream(11)
    for fid in BASE_FUNCTIONS:
        inst = make_instance(f"shifted_rotated_{fid}", 6, instance_seed=3)
        at_shift = inst(inst.transform.shift)
        assert at_shift == pytest.approx(eval_base(fid, np.zeros(6)), abs=1e-9)
    del rng


def test_rotation_isometry():
    rng = rng_stream(12)
    m = random_rotation(5, rng)
    for _ in range(25):
        x = rng.uniform(-50, 50, 5)
        o = rng.uniform(-10, 10, 5)
        z = apply_transforms(x, TransformData(shift=o, rotation=m))
        assert np.linalg.norm(z) == pytest.approx(np.linalg.norm(x - o), abs=1e-9)


def test_hybrid_partitions():
    z = np.arange(1.0, 7.0)
    whole = (("sphere", np.arange(6)),)
    assert eval_hybrid(whole, z) == pytest.approx(eval_base("sphere", z))

    halves = (("sphere", np.arange(3)), ("sphere", np.arange(3, 6)))
    assert eval_hybrid(halves, z) == pytest.approx(eval_base("sphere", z))

    parts = (("sphere", np.array([0])), ("rastrigin", np.array([1])))
    assert eval_hybrid(parts, np.array([2.0, 0.0])) == pytest.approx(4.0)

    with pytest.raises(InvalidPartition):
        eval_hybrid((("sphere", np.array([0, 1])), ("sphere", np.array([1, 2]))),
                    np.zeros(3))
    with pytest.raises(InvalidPartition):
        eval_hybrid((("sphere", np.array([0])),), np.zeros(2))


def test_parse_parts():
    parts = parse_parts("sphere:0-24,rastrigin:25-49", 50)
    assert parts[0][0] == "sphere" and list(parts[0][1]) == list(range(25))
    assert parts[1][0] == "rastrigin"
    with pytest.raises(ParseError):
        parse_parts("sphere", 3)


def test_hybrid_instance():
    inst = make_instance("hybrid", 4, parts="sphere:0-1,rastrigin:2-3")
    assert inst(np.zeros(4)) == pytest.approx(0.0)
    assert inst(np.array([2.0, 0.0, 0.0, 0.0])) == pytest.approx(4.0)


def test_shift_file_loading(tmp_path):
    path = tmp_path / "shift.txt"
    path.write_text("1.0 2.0 3.0\n")
    assert load_shift_file(path, 3) == pytest.approx([1.0, 2.0, 3.0])
    path.write_text("1.0 2.0\n")
    with pytest.raises(DimensionMismatch):
        load_shift_file(path, 3)
    path.write_text("1.0 banana\n")
    with pytest.raises(ParseError):
        load_shift_file(path, 2)


def test_rotation_file_loading(tmp_path):
    path = tmp_path / "rot.txt"
    np.savetxt(path, np.eye(3))
    loaded = load_rotation_file(path, 3)
    assert loaded == pytest.approx(np.eye(3))
    np.savetxt(path, np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        load_rotation_file(path, 3)
    np.savetxt(path, np.ones((3, 3)))
    with pytest.warns(UserWarning):
        load_rotation_file(path, 3)


def test_instance_seed_reproducibility():
    a = make_instance("shifted_rotated_ackley", 5, instance_seed=9)
    b = make_instance("shifted_rotated_ackley", 5, instance_seed=9)
    c = make_instance("shifted_rotated_ackley", 5, instance_seed=10)
    assert np.array_equal(a.transform.shift, b.transform.shift)
    assert np.array_equal(a.transform.rotation, b.transform.rotation)
    assert not np.array_equal(a.transform.shift, c.transform.shift)


def test_search_ranges_applied():
    inst = make_instance("schwefel_1_2", 4)
    assert inst.bounds.lower == pytest.approx([-65.536] * 4)
    assert make_instance("ackley", 3).bounds.upper == pytest.approx([32.0] * 3)
