import math

import numpy as np
import pytest

import mp_ref
from mp_ref import mp
from halpern.errors import ConfigError, MissingForward, MissingResolvent, NonFiniteIterate
from halpern.operators import (
    OperatorHandle,
    ResidualMap,
    affine,
    box_projection,
    eval_forward,
    halfspace,
    linear,
    residual,
    rotation,
    rotation_matrix,
    zero,
)
from halpern.problems import ProblemInstance, get_problem, make_box_inclusion, make_rotation
from halpern.schedules import FixedSchedule, residual_lipschitz_sq, split_popov_cap
from halpern.solvers import (
    ACCELERATED,
    SCHEMES,
    RunConfig,
    coefficients,
    iterate,
    lyapunov_value,
    prepare,
    run,
)

INF = float("inf")


def xs(states, key="x"):
    return np.array([s.points[key] for s in states])


def inclusion(A, B, x0, gamma=1.0, L=None, xstar=None, id="custom"):
    return ProblemInstance(id=id, kind="inclusion", dim=len(x0), x0=np.asarray(x0, float), A=A, B=B,
                           L=B.lipschitz if L is None else L, gamma=gamma,
                           known_solution=None if xstar is None else np.asarray(xstar, float))


# -- anchored Popov ---------------------------------------------------------------


def test_anchored_popov_stationary_at_solution():
    p = make_rotation(2, 1.0, x0=[0.0, 0.0])
    assert np.all(xs(iterate("anchored_popov", p, 50)) == 0.0)


def test_anchored_popov_first_extrapolation():
    p = make_rotation(2, 1.0)
    s = iterate("anchored_popov", p, 1)
    eta0 = 1 / (2 * math.sqrt(3))
    assert np.allclose(s[1].points["y_prev"], p.x0 - eta0 * eval_forward(p.G, p.x0), atol=1e-15)


def test_anchored_popov_vs_extended_precision():
    p = make_rotation(2, 1.0, x0=[1.0, 0.0])
    S = rotation_matrix(2)
    ref = np.array(mp_ref.anchored_popov(lambda v: mp_ref.matvec(S, v), [1.0, 0.0], 1 / (2 * math.sqrt(3)), 4.0, 1000))
    got = xs(iterate("anchored_popov", p, 1000))
    assert np.max(np.abs(got - ref)) < 1e-10


def test_reflected_form_equivalence():
    p = get_problem("affine-skew-4")
    a = xs(iterate("anchored_popov", p, 500))
    b = xs(iterate("anchored_popov_reflected", p, 500))
    assert np.max(np.abs(a - b)) < 1e-10


def test_reflected_gradient_reduction():
    # beta = 0, constant eta: x_{k+1} = x_k - eta G(2 x_k - x_{k-1})
    p = get_problem("affine-skew-4")
    eta = 0.15
    got = xs(iterate("anchored_popov_reflected", p, 100, schedule=FixedSchedule(0.0, eta)))
    pop = xs(iterate("anchored_popov", p, 100, schedule=FixedSchedule(0.0, eta)))
    van = xs(iterate("vanilla_popov", p, 100, eta=eta))
    x_prev, x = p.x0.copy(), p.x0 - eta * eval_forward(p.G, p.x0 - eta * eval_forward(p.G, p.x0))
    hand = [p.x0.copy(), x.copy()]
    for _ in range(99):
        x_prev, x = x, x - eta * eval_forward(p.G, 2 * x - x_prev)
        hand.append(x.copy())
    hand = np.array(hand)
    assert np.max(np.abs(got - hand)) < 1e-12
    assert np.max(np.abs(pop - hand)) < 1e-12
    assert np.max(np.abs(van - hand)) < 1e-12


def test_one_forward_per_popov_iteration():
    t = run("anchored_popov", get_problem("rotation-2"), max_iters=300, tol=INF)
    counts = t.column("G_forward")
    assert counts[0] == 1 and np.all(np.diff(counts) == 1)


def test_anchored_eg_two_forwards_per_iteration():
    t = run("anchored_eg", get_problem("rotation-2"), max_iters=100, tol=INF)
    assert np.all(np.diff(t.column("G_forward")) == 2)


# -- split schemes --------------------------------------------------------------


def test_split_aeg_scalar_vs_extended_precision():
    b, g, n = 2.0, 0.5, 100
    p = inclusion(zero(1), linear([[b]]), [1.0], gamma=g)
    N = residual_lipschitz_sq(b, g)
    eta0 = 1 / math.sqrt(3 * N)
    B, G = mp.mpf(b), mp.mpf(g)
    be, e = mp_ref.betas(n), mp_ref.popov_etas(eta0, N, n)
    x = mp.mpf(1)
    u0 = x + G * B * x
    u = u0
    ref = [1.0]
    for k in range(n):
        base = u + be[k] * (u0 - u)
        v = base - e[k] * B * x
        y = v / (1 + G * B)
        u = base - e[k] * B * y
        x = u / (1 + G * B)
        ref.append(float(x))
    got = xs(iterate("split_aeg", p, n))[:, 0]
    assert np.max(np.abs(got - np.array(ref))) < 1e-12


def test_split_aeg_equivalence():
    p = get_problem("box-4")
    a, b = iterate("split_aeg", p, 500), iterate("split_aeg_resolvent_only", p, 500)
    assert np.max(np.abs(xs(a) - xs(b))) < 1e-10
    assert np.max(np.abs(xs(a, "u") - xs(b, "u"))) < 1e-10


def test_split_aeg_resolvent_only_dr_reduction():
    # beta = 0, eta = gamma: v_k = u_k + vhat_k - x_k
    p = get_problem("l1-quadratic-3")
    g = p.gamma
    s = iterate("split_aeg_resolvent_only", p, 1, schedule=FixedSchedule(0.0, g))
    u0, x0 = s[0].points["u"], s[0].points["x"]
    vhat = p.A.resolve(g, 2 * x0 - u0)
    v = u0 + vhat - x0
    y = p.B.resolve(g, v)
    uhat = p.A.resolve(g, 2 * y - v)
    assert np.allclose(s[1].points["u"], u0 + uhat - y, atol=1e-14)


def test_split_popov_vs_extended_precision():
    g, n = 1.0, 100
    Amat = np.diag([1.0, 0.5])
    Bmat = np.array([[0.2, 1.0], [-1.0, 0.2]])
    p = inclusion(linear(Amat), linear(Bmat), [1.0, -1.0], gamma=g)
    L = p.L
    eta0 = split_popov_cap(L, g)
    M = 4 * residual_lipschitz_sq(L, g)
    be, e = mp_ref.betas(n), mp_ref.popov_etas(eta0, M, n)
    G = mp.mpf(g)
    I2 = np.eye(2)

    def JA(v):
        return mp_ref.solve(I2 + g * Amat, v)

    def JB(v):
        return mp_ref.solve(I2 + g * Bmat, v)

    def Bf(v):
        return mp_ref.matvec(Bmat, v)

    def Gg(y, by):
        return (y - JA(y - G * by)) / G

    x = mp_ref.vec([1.0, -1.0])
    u0 = x + G * Bf(x)
    by_prev = Bf(x)
    gy_prev = Gg(x, by_prev)
    ref = [mp_ref.to_float(x)]
    for k in range(n):
        v = x + be[k] * (u0 - x) - e[k] * gy_prev + G * (1 - be[k]) * by_prev
        y = JB(v)
        by = Bf(y)
        gy = Gg(y, by)
        x = x + be[k] * (u0 - x) - e[k] * gy - G * by + G * (1 - be[k]) * by_prev
        by_prev, gy_prev = by, gy
        ref.append(mp_ref.to_float(x))
    got = xs(iterate("split_popov", p, n))
    assert np.max(np.abs(got - np.array(ref))) < 1e-12


def test_split_popov_dr_form_equivalence():
    for name in ("box-2", "l1-quadratic-3"):
        p = get_problem(name)
        a, b = iterate("split_popov", p, 200), iterate("split_popov_dr", p, 200)
        assert np.max(np.abs(xs(a) - xs(b))) < 1e-9


def test_split_popov_dr_bootstrap_first_step():
    p = get_problem("box-4")
    a, b = iterate("split_popov", p, 1), iterate("split_popov_dr", p, 1)
    assert np.allclose(a[1].points["x"], b[1].points["x"], atol=1e-14)


def test_split_popov_eval_counts():
    t = run("split_popov", get_problem("box-2"), max_iters=200, tol=INF)
    for col in ("A_resolvent", "B_forward", "B_resolvent"):
        assert np.all(np.diff(t.column(col)) == 1), col


def test_split_aeg_eval_counts():
    t = run("split_aeg", get_problem("box-2"), max_iters=50, tol=INF)
    for col in ("A_resolvent", "B_forward", "B_resolvent"):
        assert np.all(np.diff(t.column(col)) == 2), col


@pytest.mark.parametrize("scheme", ["split_aeg", "split_aeg_resolvent_only", "split_popov", "split_popov_dr",
                                    "accel_dr", "accel_dr_conceptual", "vanilla_dr"])
def test_split_schemes_stationary_at_solution(scheme):
    p = get_problem("box-2")
    s = iterate(scheme, p, 30, x0=p.known_solution)
    assert np.max(np.abs(xs(s) - p.known_solution)) < 1e-14


# -- accelerated DR --------------------------------------------------------------


def test_accel_dr_vs_extended_precision():
    g, n = 1.0, 500
    p = make_box_inclusion([0.0, 0.0], [1.0, 1.0], np.eye(2), q=[-2.0, -2.0], gamma=g, x0=[0.0, 0.0])
    assert np.allclose(p.known_solution, [1.0, 1.0])
    G = mp.mpf(g)
    be, e = mp_ref.betas(n), mp_ref.dr_etas(0.5 * g, g, n)
    q = mp_ref.vec([2.0, 2.0])

    def JB(u):
        return (u + G * q) / (1 + G)

    def JA(v):
        return mp.matrix([min(max(t, mp.mpf(0)), mp.mpf(1)) for t in v])

    x = mp_ref.vec([0.0, 0.0])
    u0 = x + G * (x - q)
    u = u0
    ref = [mp_ref.to_float(x)]
    for k in range(n):
        x = JB(u)
        v = JA(2 * x - u)
        u = be[k] * u0 + (1 - be[k]) * u + (e[k] / G) * (v - x)
        ref.append(mp_ref.to_float(JB(u)))
    got = xs(iterate("accel_dr", p, n))
    assert np.max(np.abs(got - np.array(ref))) < 1e-12


def test_accel_dr_conceptual_equivalence():
    p = get_problem("l1-quadratic-3")
    a, b = iterate("accel_dr", p, 300), iterate("accel_dr_conceptual", p, 300)
    assert np.max(np.abs(xs(a, "u") - xs(b, "u"))) < 1e-9


def test_accel_dr_reduces_to_vanilla_dr():
    p = get_problem("box-4")
    a = iterate("accel_dr", p, 100, schedule=FixedSchedule(0.0, p.gamma))
    b = iterate("vanilla_dr", p, 100)
    assert np.max(np.abs(xs(a, "u") - xs(b, "u"))) < 1e-12


def test_vanilla_dr_identity_resolvents():
    p = inclusion(zero(2), zero(2), [1.0, 2.0])
    s = iterate("vanilla_dr", p, 10, u0=[3.0, -1.0])
    assert np.all(xs(s, "u") == np.array([3.0, -1.0]))


def test_vanilla_dr_two_halfspaces():
    A, B = halfspace([1.0, 0.0], 1.0), halfspace([0.0, 1.0], -2.0)
    p = inclusion(A, B, [5.0, 5.0], L=0.0)
    t = run("vanilla_dr", p, max_iters=200, tol=1e-12, u0=[5.0, 5.0], store_iterates=True)
    x = t.iterates[-1]["x"]
    assert x[0] <= 1.0 + 1e-9 and x[1] <= -2.0 + 1e-9


# -- baselines ----------------------------------------------------------------


def test_vanilla_eg_rotation_hand_transcription():
    p = make_rotation(2, 1.0)
    eta = 0.2
    S = rotation_matrix(2)
    x = p.x0.copy()
    hand = [x.copy()]
    for _ in range(50):
        y = x - eta * S @ x
        x = x - eta * S @ y
        hand.append(x.copy())
    got = xs(iterate("vanilla_eg", p, 50, eta=eta))
    assert np.max(np.abs(got - np.array(hand))) < 1e-14


@pytest.mark.parametrize("scheme", ["vanilla_eg", "vanilla_popov", "anchored_eg", "anchored_popov"])
def test_forward_schemes_stationary_for_zero_operator(scheme):
    p = ProblemInstance(id="z", kind="equation", dim=3, x0=np.array([1.0, 2.0, 3.0]), G=zero(3), L=1.0)
    assert np.max(np.abs(xs(iterate(scheme, p, 20)) - p.x0)) < 1e-14


# -- Lyapunov ------------------------------------------------------------------


def test_lyapunov_coefficients():
    c = coefficients(0, 0.5, 0.3)
    assert c.b == 1.0 and c.a == pytest.approx(0.3)
    for k in range(50):
        b_next = coefficients(k + 1, 1 / (k + 3), 0.1).b
        assert b_next * (1 - 1 / (k + 2)) == pytest.approx(coefficients(k, 1 / (k + 2), 0.1).b, rel=1e-15)


def test_lyapunov_zero_at_solution():
    for name, scheme in [("rotation-2", "anchored_popov"), ("box-2", "split_aeg"), ("box-2", "split_popov"),
                         ("box-2", "accel_dr")]:
        p = get_problem(name)
        t = run(scheme, p, max_iters=5, tol=INF, x0=p.known_solution)
        assert all(abs(v) < 1e-20 for v in t.column("lyapunov") if np.isfinite(v))


def test_lyapunov_initial_value_popov():
    p = get_problem("rotation-4-scaled")
    t = run("anchored_popov", p, max_iters=0)
    g0 = eval_forward(p.G, p.x0)
    eta0 = t.rows[0]["eta"]
    assert t.rows[0]["lyapunov"] == pytest.approx(eta0 * g0 @ g0, rel=1e-14)


def test_lyapunov_value_matches_stream():
    p = get_problem("box-4")
    t = run("split_popov", p, max_iters=40, tol=INF, store_iterates=True)
    scheme, ctx, st = prepare("split_popov", p, RunConfig(max_iters=40, tol=INF))
    for k in range(40):
        scheme.step(ctx, st)
    assert lyapunov_value(scheme, st, ctx) == pytest.approx(t.rows[-1]["lyapunov"], rel=1e-12)


def test_split_aeg_strict_decrease():
    p = get_problem("box-4")
    t = run("split_aeg", p, max_iters=2000, tol=INF)
    V, d = t.column("lyapunov"), t.column("res_diff_sq")
    g = p.gamma
    for k in range(len(V) - 1):
        bk, beta = k + 1.0, 1.0 / (k + 2)
        assert V[k + 1] + bk * g / beta * d[k + 1] <= V[k] + 1e-9 * (1 + abs(V[k]))


# -- run ------------------------------------------------------------------------


def test_run_infinite_tol_runs_max_iters():
    t = run("anchored_popov", get_problem("rotation-2"), max_iters=37, tol=INF)
    assert len(t) == 38 and list(t.k) == list(range(38))


def test_run_solved_at_start():
    p = get_problem("rotation-2")
    t = run("anchored_popov", p, x0=[0.0, 0.0])
    assert len(t) == 1 and t.rows[0]["residual"] == 0.0


def test_run_final_residual_under_bound():
    t = run("anchored_popov", get_problem("rotation-2"), max_iters=10_000, tol=INF)
    assert t.rows[-1]["residual"] ** 2 <= t.rows[-1]["bound_rhs"]


def test_run_nonfinite_carries_partial_trace():
    calls = {"n": 0}

    def blowup(x):
        calls["n"] += 1
        return x if calls["n"] < 6 else x * np.inf

    p = ProblemInstance(id="bad", kind="equation", dim=2, x0=np.ones(2),
                        G=OperatorHandle(forward=blowup, lipschitz=1.0, dim=2), L=1.0)
    with pytest.raises(NonFiniteIterate) as ei:
        run("anchored_popov", p, max_iters=100, tol=INF)
    tr = ei.value.trace
    assert tr is not None and 0 < len(tr) < 100 and tr.status == "nonfinite"


def test_run_config_errors():
    with pytest.raises(ConfigError):
        run("nope", get_problem("rotation-2"))
    with pytest.raises(ConfigError):
        run("anchored_popov", get_problem("rotation-2"), eta0=1.0)
    with pytest.raises(MissingResolvent):
        run("split_aeg", get_problem("rotation-2"), gamma=1.0)
    p = get_problem("box-2")
    with pytest.raises(MissingForward):
        run("split_aeg", inclusion(p.A, box_projection([-1, -1], [1, 1]), p.x0, L=1.0))


def test_experimental_eta0_allows_out_of_range():
    t = run("anchored_popov", get_problem("rotation-2"), eta0=0.325, experimental_eta0=True, max_iters=10, tol=INF)
    assert len(t) == 11


def test_header_echoes_constants():
    t = run("split_popov", get_problem("box-2"), max_iters=3)
    h = t.header
    assert h["scheme"] == "split_popov" and h["problem"] == "box-2"
    assert h["constants"]["M"] == pytest.approx(4 * residual_lipschitz_sq(1.0, 1.0))
    assert h["constants"]["eta_star"] > 0 and h["bound"]["theorem"] == "split_popov"


def test_eval_counts_nondecreasing_all_schemes():
    probs = {"G.forward": get_problem("affine-skew-4"), "inclusion": get_problem("l1-quadratic-3")}
    for name, s in SCHEMES.items():
        p = probs["G.forward"] if "G.forward" in s.needs else probs["inclusion"]
        t = run(name, p, max_iters=30, tol=INF)
        for col in [c for c in t.rows[0] if c.endswith(("_forward", "_resolvent"))]:
            assert np.all(np.diff(t.column(col)) >= 0)


def test_accelerated_registry():
    assert set(ACCELERATED) <= set(SCHEMES)
