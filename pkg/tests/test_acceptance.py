"""Acceptance criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines next to
the pytest verdicts, or ``python tests/test_acceptance.py`` for the lines only.
"""

import contextlib
import io
import math
import sys
import time

import numpy as np
import pytest

from smolyak_qc import drivers
from smolyak_qc.cli import main as cli_main
from smolyak_qc.objective import phi1, phi2, phi3
from smolyak_qc.optimize import initial_params, minimize
from smolyak_qc.qdyn import propagate_batch, unitarity_error
from smolyak_qc.quadrature import Measure
from smolyak_qc.sparsegrid import estimate, monte_carlo_set, smolyak_grid

SCENARIOS = sorted(drivers.PRESETS)


def _line(number, title, ok, detail, elapsed):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({elapsed:.1f}s) {detail}"


def _cli_rows(argv):
    buf, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(err):
        code = cli_main(argv)
    rows = [ln for ln in buf.getvalue().splitlines() if ln and not ln.startswith("#")]
    return code, rows


# 1 -------------------------------------------------------------------------


def criterion_1():
    code, rows = _cli_rows(["grid", "-d", "5", "-K", "3"])
    nodes = np.array([[float(v) for v in r.split(",")[:-1]] for r in rows])
    unique = len(np.unique(np.round(nodes, 12), axis=0))
    problems = []
    if code != 0 or len(rows) != 61 or unique != 61:
        problems.append(f"d=5,K=3 gave {len(rows)} rows / {unique} unique")
    for d in range(1, 9):
        n = len(smolyak_grid(d, 2))
        if n != 2 * d + 1:
            problems.append(f"d={d},K=2 gave {n} (want {2 * d + 1})")
    n13 = len(smolyak_grid(2, 3))
    if n13 != 13:
        problems.append(f"d=2,K=3 gave {n13}")
    return not problems, "; ".join(problems) or "61 / 2d+1 / 13 nodes", 1.0


# 2 -------------------------------------------------------------------------


def _random_polynomial(rng, d, degree):
    terms = []
    for _ in range(int(rng.integers(1, 9))):
        total = int(rng.integers(0, degree + 1))
        cuts = np.sort(rng.integers(0, total + 1, size=d - 1))
        terms.append((float(rng.normal()), np.diff(np.concatenate([[0], cuts, [total]]))))
    return terms


def _abs_moment(measure, k):
    if measure.kind == "normal":
        return 2 ** (k / 2) * math.gamma((k + 1) / 2) / math.sqrt(math.pi)
    return 0.5**k / (k + 1)


def criterion_2():
    rng = np.random.default_rng(20240517)
    worst = 0.0
    for measure in (Measure("uniform", -0.5, 0.5), Measure("normal")):
        for d in (2, 3, 5):
            for K in (2, 3, 4):
                grid = smolyak_grid(d, K, measure)
                for _ in range(50):
                    terms = _random_polynomial(rng, d, 2 * K - 1)
                    exact = sum(c * np.prod([measure.moment(int(k)) for k in e]) for c, e in terms)
                    # relative to sum |c| E|monomial|, so expectations that cancel to ~0 stay well posed
                    scale = sum(abs(c) * np.prod([_abs_moment(measure, int(k)) for k in e]) for c, e in terms)
                    est = estimate(grid, lambda X: sum(c * np.prod(X**e, axis=1) for c, e in terms), vectorized=True)
                    worst = max(worst, abs(est - exact) / max(abs(exact), scale))
    return worst < 1e-10, f"worst relative error {worst:.2e}", 10.0


# 3 -------------------------------------------------------------------------

PUBLISHED = {"hadamard": 1.87e-4, "pi8": 4.18e-5, "phase_s": 7.35e-5, "rx_pi_k3": 2.05e-3, "rx_pi_k4": 6.5e-4}


def criterion_3():
    parts, ok = [], True
    for name, published in PUBLISHED.items():
        cfg = drivers.resolve_config(name)
        obj = drivers.build_scenario(cfg)
        theta = drivers.load_fixture(cfg).params
        ref = obj.expected(theta, drivers.reference_sampling(cfg))
        resid = drivers.self_convergence(obj, theta)
        rel = ref / published - 1
        good = abs(rel) <= 0.2
        ok &= good
        parts.append(f"{name} {cfg['metric']}={ref:.3e} vs {published:.3g} ({rel:+.0%}, conv {resid:.0e})"
                     + ("" if good else " OUT"))
    return ok, "; ".join(parts), 120.0


# 4 -------------------------------------------------------------------------


def criterion_4():
    worst = {}
    for name in ("rx_pi_k3", "rx_pi_k4"):
        cfg = drivers.resolve_config(name)
        obj = drivers.build_scenario(cfg)
        theta = drivers.load_fixture(cfg).params
        worst[name] = float(drivers.battery(obj, theta, 800, seed=0).max())
    ok = worst["rx_pi_k4"] < 1e-2 and worst["rx_pi_k4"] < worst["rx_pi_k3"]
    return ok, f"worst K=4 {worst['rx_pi_k4']:.3e}, K=3 {worst['rx_pi_k3']:.3e}", 60.0


# 5 -------------------------------------------------------------------------


def criterion_5():
    cfg = drivers.resolve_config("rx_pi_d5")
    obj = drivers.build_scenario(cfg)
    assert len(obj.sampling) == 61
    reference = drivers.reference_sampling(cfg)
    assert len(reference) == 3125
    bench = cfg["benchmark"]
    opt = drivers._optimizer_config(cfg, "smgrape", {"max_iterations": bench["iterations"], "ftol": 0.0})
    iterates = []

    def fun(theta):
        iterates.append(np.array(theta, copy=True))
        return obj.value_and_grad(theta)

    minimize(fun, initial_params(obj.n_params, cfg["seed"]), opt)
    wins, total, ratios = 0, 0, []
    for k in range(0, len(iterates), bench["every"]):
        e = drivers.estimator_errors(obj, iterates[k], reference, mc_n=61, mc_seeds=range(50))
        med = float(np.median(e["mc_err"]))
        wins += e["smolyak_err"] < med
        total += 1
        ratios.append(e["smolyak_err"] / med)
    ok = wins == total
    return ok, f"Smolyak beat the MC median at {wins}/{total} checkpoints (max err ratio {max(ratios):.2f})", 300.0


# 6 -------------------------------------------------------------------------


def _fd_gradient(obj, theta, sampling, h=1e-6):
    out = np.empty_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        out[k] = (obj.expected(theta + e, sampling) - obj.expected(theta - e, sampling)) / (2 * h)
    return out


def criterion_6(points=20):
    worst_unit, worst_conv, worst_grad = 0.0, 0.0, 0.0
    for name in SCENARIOS:
        obj = drivers.build_scenario(name)
        unc = obj.uncertainty
        deltas = unc.physical(obj.sampling.nodes)
        theta0 = initial_params(obj.n_params, 0)
        pulse = obj.pulse.with_params(theta0)
        U = propagate_batch(obj.model, pulse, deltas, obj.grid)
        U2 = propagate_batch(obj.model, pulse, deltas, obj.grid.refined(2))
        worst_unit = max(worst_unit, max(unitarity_error(u) for u in U))
        worst_conv = max(worst_conv, float(np.linalg.norm(U - U2, axis=(1, 2)).max()))
        rng = np.random.default_rng(6)
        for p in range(points):
            theta = initial_params(obj.n_params, 100 + p)
            node = monte_carlo_set(unc.dim, 1, unc.measures, int(rng.integers(2**31)))
            g = obj.gradient(theta, node)
            fd = _fd_gradient(obj, theta, node)
            worst_grad = max(worst_grad, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    ok = worst_unit < 1e-9 and worst_conv < 1e-8 and worst_grad < 1e-5
    detail = f"unitarity {worst_unit:.1e}, self-convergence {worst_conv:.1e}, gradient rel err {worst_grad:.1e}"
    return ok, detail, 300.0


# 7 -------------------------------------------------------------------------


def _first_success(name, threshold, seeds=range(8)):
    cfg = drivers.resolve_config(name)
    reference = drivers.reference_sampling(cfg)
    tried = []
    for s in seeds:
        res = drivers.run(cfg, seed=s, reference=reference)
        ref = res.report["reference_infidelity"]
        tried.append((s, ref, res.report["evaluations"]))
        if ref <= threshold:
            return True, tried
    return False, tried


def criterion_7():
    ok_h, tried_h = _first_success("hadamard", 5e-4)
    budget_ok = all(ev <= 2000 for _, _, ev in tried_h)
    ok_c, tried_c = _first_success("cnot", 1e-3)
    s_h, r_h, e_h = tried_h[-1]
    s_c, r_c, _ = tried_c[-1]
    detail = (f"smGOAT hadamard seed {s_h}: E[phi2]={r_h:.3e} in {e_h} evaluations; "
              f"smGRAPE cnot seed {s_c}: E[phi3]={r_c:.3e}")
    return ok_h and budget_ok and ok_c, detail, 1800.0


# 8 -------------------------------------------------------------------------


def _haar(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def criterion_8():
    rng = np.random.default_rng(8)
    worst_order, worst_id, worst_phase = 0.0, 0.0, 0.0
    for i in range(1000):
        dim = 2 if i % 2 else 4
        A, B = _haar(rng, dim), _haar(rng, dim)
        p1, p2, p3 = phi1(A, B), phi2(A, B), phi3(A, B)
        worst_order = max(worst_order, p2 - p1)
        worst_id = max(worst_id, abs(p2 - 2 * dim * (1 - np.sqrt(1 - p3))))
        Bp = np.exp(1j * rng.uniform(0, 2 * np.pi)) * B
        worst_phase = max(worst_phase, abs(phi2(A, Bp) - p2), abs(phi3(A, Bp) - p3))
    ok = worst_order <= 1e-10 and worst_id < 1e-10 and worst_phase < 1e-10
    return ok, f"max(phi2-phi1) {worst_order:.1e}, identity {worst_id:.1e}, phase {worst_phase:.1e}", 5.0


CRITERIA = {
    1: ("grid counts", criterion_1),
    2: ("quadrature exactness", criterion_2),
    3: ("fixture replay", criterion_3),
    4: ("worst-case battery", criterion_4),
    5: ("estimator benchmark", criterion_5),
    6: ("numerical soundness", criterion_6),
    7: ("optimization capability", criterion_7),
    8: ("metric identities", criterion_8),
}


def run_criterion(number):
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail, budget = fn()
    elapsed = time.perf_counter() - t0
    if elapsed >= budget:
        ok = False
        detail += f"; over the {budget:.0f}s runtime budget"
    return ok, _line(number, title, ok, detail, elapsed)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = run_criterion(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failures = 0
    for n in sorted(CRITERIA):
        ok, line = run_criterion(n)
        failures += not ok
        print(line, flush=True)
    sys.exit(1 if failures else 0)
