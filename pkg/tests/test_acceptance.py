"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line (printed immediately and again in the
terminal summary) before asserting.
"""

import json
import math
import time

import numpy as np
import pytest
import yaml

from conftest import ACCEPTANCE_LINES
from confnull.calculus import Constant, FractionalOrder, Sinusoid
from confnull.calculus.selftest import run_rule_suite
from confnull.cli import main
from confnull.control import (
    ControlHorizon,
    ControlSignal,
    check_null_controllable,
    gramian,
    simulate_linear,
    synthesize_control,
)
from confnull.mild import ControlProblem, NonlinearitySpec, NonlocalSpec, approximant_factor, eval_g, solve
from confnull.spectral import EvolutionSystem, SpectralState, apply_evolution, apply_evolution_adjoint, evolution_factor


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def default_system(alpha=1.0, modes=16, zeta=1e-6, t_end=1.0, p=None):
    return EvolutionSystem(FractionalOrder(alpha), modes, p if p is not None else Constant(0.0), zeta, t_end)


def semilinear(zeta=1e-6):
    sys = default_system(zeta=zeta)
    return ControlProblem.build(
        sys,
        1.0 / np.arange(1, 17),
        NonlocalSpec((0.06, 0.04), (0.4, 0.7)),
        NonlinearitySpec("scaled_sin", 0.1),
        nodes=256,
    )


def nonlocal_gap(problem, res, n=None):
    g = eval_g(problem.nonlocal_, res.trajectory).coeffs
    if n is not None:
        g = approximant_factor(problem.system, n) * g
    return float(np.linalg.norm(res.trajectory.states[0] + g - problem.x0.coeffs))


def test_criterion_1_calculus_rules():
    start = time.perf_counter()
    results = run_rule_suite(instances=20, seed=42, epsilon=1e-6)
    elapsed = time.perf_counter() - start
    worst_oracle = max(r.max_oracle_dev for r in results)
    worst_analytic = max(r.max_analytic_dev for r in results)
    names = {r.name for r in results}
    required = {"linearity", "constant", "product", "quotient", "classical_derivative", "alpha_power", "chain", "leibniz"}
    ok = (
        required <= names
        and all(r.instances >= 20 for r in results)
        and worst_oracle <= 1e-4
        and worst_analytic <= 1e-8
        and elapsed < 5.0
    )
    record(1, ok, f"{len(results)} rules, oracle dev {worst_oracle:.1e} (<=1e-4), analytic dev {worst_analytic:.1e} (<=1e-8), {elapsed:.2f}s (<5s)")


def test_criterion_2_evolution_laws():
    systems = [default_system(), default_system(alpha=0.5, zeta=0.01, p=Constant(0.7))]
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    identity_ok, adjoint_ok, worst = True, True, 0.0
    for sys in systems:
        for _ in range(100):
            tau, s, t = np.sort(rng.uniform(sys.zeta, sys.t_end, 3))
            z = SpectralState(rng.standard_normal(16))
            identity_ok &= bool(np.array_equal(apply_evolution(sys, s, s, z).coeffs, z.coeffs))
            two = apply_evolution(sys, t, s, apply_evolution(sys, s, tau, z)).coeffs
            one = apply_evolution(sys, t, tau, z).coeffs
            worst = max(worst, float(np.max(np.abs(two - one))))
            adjoint_ok &= bool(np.array_equal(apply_evolution(sys, t, s, z).coeffs, apply_evolution_adjoint(sys, t, s, z).coeffs))
        identity_ok &= all(evolution_factor(sys, n, 0.5, 0.5) == 1.0 for n in range(1, 17))
    elapsed = (time.perf_counter() - start) / len(systems)
    ok = identity_ok and adjoint_ok and worst <= 1e-12 and elapsed < 1.0
    record(2, ok, f"identity exact={identity_ok}, composition dev {worst:.1e} (<=1e-12), adjoint exact={adjoint_ok}, {elapsed:.3f}s per system (<1s)")


def test_criterion_3_gramian_closed_forms():
    sys = default_system()
    w1 = gramian(sys, ControlHorizon.for_system(sys)).diag[0]
    half = default_system(alpha=0.5, zeta=1.0, t_end=4.0)
    w_half = gramian(half, ControlHorizon.for_system(half)).diag[0]
    d1 = abs(w1 - (1 - math.exp(-2)) / 2)
    d2 = abs(w_half - (1 - math.exp(-4)) / 2)
    record(3, d1 <= 1e-6 and d2 <= 1e-6, f"alpha=1 dev {d1:.1e}, alpha=0.5 dev {d2:.1e} (both <=1e-6)")


def test_criterion_4_linear_null_transfer():
    sys = default_system()
    hor = ControlHorizon.for_system(sys, nodes=256)
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        z0 = SpectralState(rng.standard_normal(16))
        a, w, ph = rng.standard_normal(16), rng.uniform(0.5, 8, 16), rng.uniform(0, 2 * np.pi, 16)
        h = ControlSignal.from_function(lambda t, a=a, w=w, ph=ph: a * np.sin(np.multiply.outer(t, w) + ph), 16)
        u = synthesize_control(sys, hor, z0, h)
        final = simulate_linear(sys, hor, z0, u, h).final.norm()
        worst = max(worst, final / (1 + z0.norm()))
    elapsed = time.perf_counter() - start
    record(4, worst <= 1e-6 and elapsed < 10.0, f"max final/(1+|z0|) {worst:.1e} (<=1e-6) over 100 cases, {elapsed:.2f}s (<10s)")


def test_criterion_5_gramian_inequality():
    sys = default_system()
    rep = check_null_controllable(sys, ControlHorizon.for_system(sys), trials=500, rng=5)
    record(5, rep.min_margin >= 0.0, f"min margin {rep.min_margin:.3e} over 500 unit states, gamma {rep.gamma:.6f}")


@pytest.fixture(scope="module")
def solved():
    pb = semilinear()
    return pb, solve(pb, tol=1e-10, max_iter=200)


def test_criterion_6_semilinear_solve(solved):
    pb, res = solved
    ok = (
        res.eq8.value <= 0.9
        and res.converged
        and res.iterations <= 200
        and res.final_state_norm <= 1e-6
        and res.fixed_point_residual <= 2e-10
    )
    record(
        6,
        ok,
        f"eq8 value {res.eq8.value:.3f} (<=0.9), {res.iterations} iterations, final {res.final_state_norm:.1e} (<=1e-6), "
        f"fixed-point residual {res.fixed_point_residual:.1e} (<=2e-10)",
    )


def test_criterion_7_approximant_consistency():
    details, ok = [], True
    for zeta in (1e-6, 0.1):
        pb = semilinear(zeta)
        direct = solve(pb, tol=1e-12).trajectory
        d = [solve(pb, tol=1e-12, approximant=n).trajectory.sup_distance(direct) for n in (10, 100, 1000)]
        ok &= d[2] <= 1e-3 and d[0] > d[1] > d[2]
        details.append(f"zeta={zeta:g}: " + ", ".join(f"{x:.1e}" for x in d))
    record(7, ok, "sup distances n=10,100,1000 -> " + "; ".join(details) + " (last <=1e-3, decreasing)")


def test_criterion_8_nonlocal_consistency(solved):
    pb, res = solved
    gaps = [nonlocal_gap(pb, res), res.nonlocal_residual]
    other = semilinear(0.1)
    for n in (None, 10, 1000):
        r = solve(other, tol=1e-12, approximant=n)
        gaps.append(nonlocal_gap(other, r, n))
    worst = max(gaps)
    record(8, worst <= 1e-6, f"max |x(zeta) + g(x) - x0| {worst:.1e} (<=1e-6) over {len(gaps)} solutions")


def test_criterion_9_cli_determinism(tmp_path, capsys):
    base = {
        "system": {"alpha": 1.0, "modes": 16},
        "horizon": {"zeta": 1e-6, "t_end": 1.0},
        "initial": {"coeffs": (1.0 / np.arange(1, 17)).tolist()},
        "nonlocal": {"weights": [0.06, 0.04], "times": [0.4, 0.7]},
        "nonlinearity": {"kind": "scaled_sin", "c": 0.1},
    }
    failing = dict(base, nonlinearity={"kind": "linear", "c": 50.0}, numerics={"max_iter": 60})
    (tmp_path / "pass.yaml").write_text(yaml.safe_dump(base))
    (tmp_path / "fail.yaml").write_text(yaml.safe_dump(failing))

    def go(name, out):
        code = main(["--config", str(tmp_path / name), "--command", "solve", "--out", str(tmp_path / out), "--seed", "42"])
        return code, (tmp_path / out / "report.json").read_bytes()

    c1, r1 = go("pass.yaml", "p1")
    c2, r2 = go("pass.yaml", "p2")
    f1, s1 = go("fail.yaml", "f1")
    f2, s2 = go("fail.yaml", "f2")
    capsys.readouterr()
    rep_pass, rep_fail = json.loads(r1), json.loads(s1)
    identical = r1 == r2 and s1 == s2
    contract = (
        c1 == c2 == 0
        and all(rep_pass["verdicts"].values())
        and f1 == f2 != 0
        and not all(rep_fail["verdicts"].values())
        and not rep_fail["eq8"]["satisfied"]
    )
    record(9, identical and contract, f"byte-identical reports={identical}, exit codes pass={c1} fail={f1} (eq8 value {rep_fail['eq8']['value']:.1f})")
