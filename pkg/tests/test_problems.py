import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halpern.errors import ConfigError, DimensionMismatch, NotMonotone
from halpern.operators import eval_forward
from halpern.problems import (
    EQUATION_ZOO,
    INCLUSION_ZOO,
    REGISTRY,
    ProblemInstance,
    box_active_set,
    get_problem,
    l1_sign_enumeration,
    list_problems,
    make_affine_monotone,
    make_box_inclusion,
    make_l1_quadratic,
    make_random_affine,
    make_rotation,
)


def test_rotation_examples():
    p = make_rotation(2, 1.0)
    g = eval_forward(p.G, np.array([1.0, 0.0]))
    assert np.allclose(g, [0.0, -1.0]) and np.linalg.norm(g) == 1.0
    assert np.all(eval_forward(p.G, np.zeros(2)) == 0.0)
    assert p.L == 1.0


@given(st.integers(0, 10_000))
def test_rotation_skew_monotonicity(seed):
    rng = np.random.default_rng(seed)
    p = make_rotation(4, 2.5)
    x, y = rng.standard_normal(4), rng.standard_normal(4)
    assert abs((eval_forward(p.G, x) - eval_forward(p.G, y)) @ (x - y)) < 1e-12


def test_rotation_rejects_bad_args():
    with pytest.raises(ValueError):
        make_rotation(3)
    with pytest.raises(ValueError):
        make_rotation(2, 0.0)


def test_affine_identity_solution():
    p = make_affine_monotone(np.eye(2), [-1.0, -1.0])
    assert np.allclose(p.known_solution, [1.0, 1.0])


def test_affine_skew_plus_shift_against_direct_solve():
    rng = np.random.default_rng(42)
    M = np.array([[0.1, 1.0], [-1.0, 0.1]])
    q = rng.standard_normal(2)
    p = make_affine_monotone(M, q)
    assert np.allclose(p.known_solution, np.linalg.solve(M, -q))
    assert p.certify() <= 1e-10


def test_affine_not_monotone():
    with pytest.raises(NotMonotone):
        make_affine_monotone(np.diag([1.0, -0.5]), [0.0, 0.0])


def test_box_scalar_active_set():
    p = make_box_inclusion([0.0], [1.0], [[1.0]], q=[-2.0])
    assert np.allclose(p.known_solution, [1.0])


def test_box_interior_solution():
    p = make_box_inclusion([-1.0, -1.0], [1.0, 1.0], np.eye(2))
    assert np.allclose(p.known_solution, [0.0, 0.0])


def test_box_projection_gamma_independent():
    p = make_box_inclusion([0.0], [1.0], [[1.0]], q=[-2.0])
    assert all(p.A.resolve(g, np.array([1.5]))[0] == 1.0 for g in (0.3, 1.0, 9.0))


def test_l1_examples():
    assert np.allclose(make_l1_quadratic(1.0, [[1.0]], [-3.0]).known_solution, [2.0])
    assert np.allclose(make_l1_quadratic(5.0, [[1.0]], [-3.0]).known_solution, [0.0])
    p = make_l1_quadratic(0.0, [[2.0, 1.0], [-1.0, 1.0]], [1.0, -1.0])
    assert p.certification == "linear-solve"
    assert np.allclose(p.known_solution, np.linalg.solve([[2.0, 1.0], [-1.0, 1.0]], [-1.0, 1.0]))


def test_enumeration_dimension_caps():
    with pytest.raises(DimensionMismatch):
        box_active_set(-np.ones(7), np.ones(7), np.eye(7), np.zeros(7))
    with pytest.raises(DimensionMismatch):
        l1_sign_enumeration(1.0, np.eye(7), np.zeros(7))


def test_every_registered_problem_certifies():
    for name in REGISTRY:
        p = get_problem(name)
        assert p.certify() <= 1e-10, name


def test_declared_lipschitz_matches_samples(rng):
    for name in EQUATION_ZOO + INCLUSION_ZOO:
        p = get_problem(name)
        op = p.G if p.kind == "equation" else p.B
        worst = 0.0
        for _ in range(1000):
            x, y = rng.standard_normal(p.dim), rng.standard_normal(p.dim)
            worst = max(worst, np.linalg.norm(eval_forward(op, x) - eval_forward(op, y)) / np.linalg.norm(x - y))
        assert worst <= p.L * (1 + 1e-8), name


def test_deterministic_generation():
    a, b = make_random_affine(5, 0.2, seed=9), make_random_affine(5, 0.2, seed=9)
    assert a.dumps() == b.dumps()
    assert get_problem("l1-quadratic-3").dumps() == get_problem("l1-quadratic-3").dumps()


def test_json_roundtrip_all():
    for name in REGISTRY:
        p = get_problem(name)
        q = ProblemInstance.loads(p.dumps())
        assert q.dumps() == p.dumps(), name
        assert np.allclose(q.residual_at(p.x0), p.residual_at(p.x0))
        assert q.certification == p.certification


def test_unknown_problem():
    with pytest.raises(ConfigError):
        get_problem("no-such-problem")


def test_list_problems():
    ids = {d["id"] for d in list_problems()}
    assert ids == set(REGISTRY)
