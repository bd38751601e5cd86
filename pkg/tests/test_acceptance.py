"""Acceptance checks.  Each test prints a single ``PASS``/``FAIL`` line.

Run standalone with ``python3 tests/test_acceptance.py`` to get just the nine
lines.
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from halpern.applications import AdmmProblem, L1Term, QuadraticTerm, dual_dr_problem, solve_admm_accel, solve_admm_vanilla
from halpern.errors import NonPositiveResidual
from halpern.harness import check_bound, fit_rate
from halpern.operators import ResidualMap, eval_forward, eval_resolvent, residual, zero
from halpern.problems import EQUATION_ZOO, INCLUSION_ZOO, get_problem
from halpern.schedules import FixedSchedule, schedule_limit
from halpern.solvers import RunConfig, iterate, run

INF = float("inf")
N = 10_000
ZOO = {"anchored_popov": EQUATION_ZOO, "split_aeg": INCLUSION_ZOO, "split_popov": INCLUSION_ZOO,
       "accel_dr": INCLUSION_ZOO}


@lru_cache(maxsize=None)
def long_run(scheme, problem):
    return run(scheme, get_problem(problem), max_iters=N, tol=INF)


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line, flush=True)
    return ok


def emit(capsys, n, ok, detail):
    with capsys.disabled():
        print()
        report(n, ok, detail)
    assert ok, detail


# 1 -----------------------------------------------------------------------------


def check_1():
    out = []
    t = time.perf_counter()
    popov = schedule_limit("popov_eg", 1.0, 0.65, 10**6)
    t_popov = time.perf_counter() - t
    # DR in scaled form eta_hat = eta / (2 gamma); gamma = 1/2 makes it the raw value
    t = time.perf_counter()
    dr = schedule_limit("accel_dr", 0.5, 0.5, 10**6)
    t_dr = time.perf_counter() - t
    ok_p = popov >= 0.4370579 and t_popov < 1.0
    ok_d = abs(dr - 0.276314355842637) <= 1e-9 and t_dr < 1.0
    out.append(f"popov limit {popov:.10f} (need >= 0.4370579, {t_popov:.2f}s)")
    out.append(f"dr limit {dr:.12f} (need 0.276314355842637 +- 1e-9, {t_dr:.2f}s)")
    return ok_p and ok_d, "; ".join(out)


# 2 -----------------------------------------------------------------------------


def check_2():
    worst, where = -INF, None
    for scheme, probs in ZOO.items():
        for name in probs:
            V = long_run(scheme, name).column("lyapunov")
            prev, nxt = V[:-1], V[1:]
            m = np.isfinite(prev) & np.isfinite(nxt)
            if m.sum() < N - 1:
                return False, f"{scheme}/{name}: Lyapunov missing at {N - 1 - int(m.sum())} steps"
            excess = (nxt[m] - prev[m]) / (1.0 + np.abs(prev[m]))
            if excess.max() > worst:
                worst, where = float(excess.max()), f"{scheme}/{name}"
    return worst <= 1e-9, f"max relative increase {worst:.2e} ({where}) over 12 runs, k <= {N}"


# 3 -----------------------------------------------------------------------------


def check_3():
    reports = [
        check_bound(run("anchored_popov", get_problem("rotation-2"), max_iters=N, tol=INF, eta0=0.325,
                        experimental_eta0=True), "anchored_popov"),
        check_bound(long_run("anchored_popov", "rotation-2"), "anchored_popov"),
    ]
    for name in ("box-2", "box-4"):
        reports += [check_bound(long_run("split_aeg", name), "split_aeg"),
                    check_bound(long_run("split_popov", name), "split_popov")]
    reports.append(check_bound(long_run("accel_dr", "l1-quadratic-3"), "accel_dr"))
    has_env = "envelope_90" in reports[0].lines
    bad = [f"{r.theorem}:{k}" for r in reports for k, ln in r.lines.items()
           if not ln.informational and not ln.passed]
    n_lines = sum(1 for r in reports for ln in r.lines.values() if not ln.informational)
    detail = f"{n_lines} bound lines checked, envelope_90 {'present' if has_env else 'MISSING'}"
    if bad:
        detail += f", failing {bad}"
    return has_env and not bad, detail


# 4 -----------------------------------------------------------------------------


def check_4():
    slopes = {f"{s}/{p}": fit_rate(long_run(s, p), 100, N).slope for s, ps in ZOO.items() for p in ps}
    worst = max(slopes, key=slopes.get)
    vanilla = []
    for name in INCLUSION_ZOO:
        try:
            v = fit_rate(long_run("vanilla_dr", name), 100, N).slope
            vanilla.append(f"{name} {v:.2f}")
        except NonPositiveResidual:
            vanilla.append(f"{name} solved exactly")
    ok = slopes[worst] <= -0.9
    return ok, (f"worst accelerated slope {slopes[worst]:.3f} ({worst}); "
                f"vanilla DR slopes (reported only, >= -0.75 expected): {', '.join(vanilla)}")


# 5 -----------------------------------------------------------------------------


def _gap(a, b, key="x"):
    return max(float(np.max(np.abs(p.points[key] - q.points[key]))) for p, q in zip(a, b))


def _admm_instances():
    return [
        AdmmProblem(P=np.eye(2), Q=np.eye(2), r=[2.0, 2.0], f=QuadraticTerm(np.eye(2)), g=QuadraticTerm(np.eye(2))),
        AdmmProblem(P=np.array([[1.0, 0.5], [0.0, 2.0]]), Q=-np.eye(2), r=[1.0, -1.0],
                    f=QuadraticTerm([[2.0, 0.3], [0.3, 1.0]], [1.0, 0.0]),
                    g=QuadraticTerm(np.eye(2) * 0.5, [0.0, -1.0]), gamma=1.3),
        AdmmProblem(P=np.diag([1.0, 2.0]), Q=-np.eye(2), r=[0.0, 0.0], f=QuadraticTerm(np.eye(2), [-3, 1]),
                    g=L1Term(0.5, 2), gamma=0.7),
    ]


def check_5():
    n = 250
    gaps = {}
    for name in INCLUSION_ZOO:
        p = get_problem(name)
        gaps[f"a/{name}"] = _gap(iterate("split_aeg", p, n), iterate("split_aeg_resolvent_only", p, n))
        gaps[f"b/{name}"] = _gap(iterate("split_popov", p, n), iterate("split_popov_dr", p, n))
        gaps[f"c/{name}"] = _gap(iterate("accel_dr", p, n), iterate("accel_dr_conceptual", p, n), "u")
    for name in EQUATION_ZOO:
        p = get_problem(name)
        gaps[f"d/{name}"] = _gap(iterate("anchored_popov", p, n), iterate("anchored_popov_reflected", p, n))
    for i, prob in enumerate(_admm_instances()):
        cfg = RunConfig(max_iters=n, tol=INF, store_iterates=True)
        t = solve_admm_accel(prob, cfg)
        d = run("accel_dr", dual_dr_problem(prob), RunConfig(max_iters=n, tol=INF, store_iterates=True, u0=prob.u0))
        gaps[f"e/admm{i}"] = max(float(np.max(np.abs(a["u"] - b["u"]))) for a, b in zip(t.iterates, d.iterates))
    worst = max(gaps, key=gaps.get)
    return gaps[worst] <= 1e-8, f"{len(gaps)} pairs over {n} iterations, worst {gaps[worst]:.2e} ({worst})"


# 6 -----------------------------------------------------------------------------


def check_6():
    gaps = []
    for name in INCLUSION_ZOO:
        p = get_problem(name)
        a = iterate("accel_dr", p, 100, schedule=FixedSchedule(0.0, p.gamma))
        gaps.append(max(_gap(a, iterate("vanilla_dr", p, 100), k) for k in ("u", "x")))
    for prob in _admm_instances():
        v = solve_admm_vanilla(prob, RunConfig(max_iters=100, tol=INF, store_iterates=True))
        r = solve_admm_accel(prob, RunConfig(max_iters=100, tol=INF, store_iterates=True,
                                             schedule=FixedSchedule(0.0, prob.gamma)))
        gaps.append(max(float(np.max(np.abs(p[k] - q[k]))) for p, q in zip(v.iterates, r.iterates)
                        for k in ("z", "w", "x")))
    return max(gaps) <= 1e-12, f"{len(gaps)} reductions over 100 iterations, worst {max(gaps):.2e}"


# 7 -----------------------------------------------------------------------------


def _pairs(rng, dim, n=120):
    for _ in range(n):
        s = 10.0 ** rng.uniform(-2, 1)
        yield s * rng.standard_normal(dim), s * rng.standard_normal(dim)


def check_7():
    rng = np.random.default_rng(2024)
    worst = {"firm": -INF, "lemma_a": -INF, "lipschitz": -INF}
    count = 0
    for name in EQUATION_ZOO + INCLUSION_ZOO:
        p = get_problem(name)
        A, B = (zero(p.dim), p.G) if p.kind == "equation" else (p.A, p.B)
        for g in ((p.gamma or 1.0), 0.3, 2.0):
            rm = ResidualMap(A, B, g)
            res = [op for op in (A, B) if op.has_resolvent]
            for x, y in _pairs(rng, p.dim):
                count += 1
                for op in res:
                    d = eval_resolvent(op, g, x) - eval_resolvent(op, g, y)
                    worst["firm"] = max(worst["firm"], d @ d - d @ (x - y))
                dG = residual(rm, x) - residual(rm, y)
                dB = eval_forward(B, x) - eval_forward(B, y)
                worst["lemma_a"] = max(worst["lemma_a"], g * (dG @ dG) - dG @ (x - y) - g * (dG @ dB))
                worst["lipschitz"] = max(worst["lipschitz"],
                                         np.linalg.norm(dG) - rm.lipschitz * np.linalg.norm(x - y))
    ok = all(v <= 1e-10 for v in worst.values())
    return ok, f"{count} pairs over 6 problems x 3 gammas, max violations " + ", ".join(
        f"{k} {v:.1e}" for k, v in worst.items())


# 8 -----------------------------------------------------------------------------


def check_8():
    n = 500
    details, ok = [], True
    for name in EQUATION_ZOO:
        c = run("anchored_popov", get_problem(name), max_iters=n, tol=INF).column("G_forward")
        ok &= bool(np.all(np.diff(c) == 1))
    details.append("anchored Popov 1 G per iteration")
    for name in INCLUSION_ZOO:
        t = run("split_popov", get_problem(name), max_iters=n, tol=INF)
        for col in ("A_resolvent", "B_forward", "B_resolvent"):
            ok &= bool(np.all(np.diff(t.column(col)) == 1))
    details.append("split Popov 1 G_gamma (1 J_A + 1 B) + 1 J_B per iteration")
    return ok, "; ".join(details) + f", checked over {n} iterations on 6 problems"


# 9 -----------------------------------------------------------------------------


def check_9():
    rep = check_bound(long_run("split_aeg", "box-2"), "split_aeg")
    line = rep.lines["summability"]
    return line.passed, (f"box-2 partial sums through k = {N}, {line.n_checked} checked, "
                         f"max lhs - rhs {line.max_violation:.3e}")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n, capsys):
    ok, detail = CHECKS[n - 1]()
    emit(capsys, n, ok, detail)


if __name__ == "__main__":
    for i, chk in enumerate(CHECKS, 1):
        report(i, *chk())
