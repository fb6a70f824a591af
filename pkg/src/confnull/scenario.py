"""Scenario configuration, execution and reporting."""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .calculus import Constant, FractionalOrder, Polynomial, ScalarFunction, Sinusoid
from .calculus.selftest import run_rule_suite
from .control import (
    ControlHorizon,
    ControlSignal,
    check_null_controllable,
    gramian,
    l2_alpha_norm,
    simulate_linear,
    synthesize_control,
)
from .errors import ConfigError, ConfnullError, ConvergenceError, SingularityError
from .mild import (
    DELAY_KINDS,
    NONLINEARITY_KINDS,
    ControlProblem,
    DelaySpec,
    NonlinearitySpec,
    NonlocalSpec,
    check_condition_eq8,
    solve,
)
from .spectral import EvolutionSystem, SpectralState, project
from .trajectory import Trajectory

COMMANDS = ("verify-linear", "synthesize", "solve", "calculus-selftest")

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

DEFAULTS = {
    "seed": 42,
    "system": {"alpha": 1.0, "modes": 16, "potential": {"kind": "constant", "value": 0.0}},
    "horizon": {"zeta": 1e-6, "t_end": 1.0},
    "initial": {"coeffs": [1.0]},
    "nonlocal": {"weights": [], "times": []},
    "nonlinearity": {"kind": "zero", "c": 0.0},
    "delay": {"kind": "identity", "value": 0.0},
    "numerics": {
        "nodes": 256,
        "gauss_points": 8,
        "potential_panels": 16,
        "tol": 1e-10,
        "max_iter": 200,
        "trials": 500,
        "h_samples": 200,
        "approximant": None,
        "selftest_instances": 20,
    },
    "output": {"report": "report.json", "trajectory": "trajectory.csv"},
}

POTENTIAL_KINDS = ("constant", "polynomial", "sinusoid")


def _merge(defaults: dict, given: dict, path: str, errors: list) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            errors.append(f"{where}: unknown key")
        elif isinstance(defaults[key], dict) and key != "potential" and key != "initial":
            if not isinstance(value, dict):
                errors.append(f"{where}: expected a section (mapping)")
            else:
                out[key] = _merge(defaults[key], value, where, errors)
        else:
            out[key] = value
    return out


def _number(data, path, errors, *, integer=False, minimum=None, exclusive=False):
    section, key = path.rsplit(".", 1) if "." in path else ("", path)
    node = data
    for part in filter(None, section.split(".")):
        node = node[part]
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.append(f"{path}: expected an integer, got {value!r}")
        return None
    if minimum is not None and (value <= minimum if exclusive else value < minimum):
        errors.append(f"{path}: must be {'>' if exclusive else '>='} {minimum}, got {value!r}")
        return None
    return int(value) if integer else float(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully defaulted, validated scenario configuration (nested mapping)."""

    data: dict

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def with_seed(self, seed: int) -> ScenarioConfig:
        data = copy.deepcopy(self.data)
        data["seed"] = int(seed)
        return ScenarioConfig(data)

    def potential(self) -> ScalarFunction:
        return _build_potential(self.data["system"]["potential"])

    def system(self) -> EvolutionSystem:
        s, h = self.data["system"], self.data["horizon"]
        return EvolutionSystem(
            FractionalOrder(s["alpha"]),
            modes=s["modes"],
            potential=self.potential(),
            zeta=h["zeta"],
            t_end=h["t_end"],
            potential_panels=self.data["numerics"]["potential_panels"],
        )

    def horizon(self, sys: EvolutionSystem) -> ControlHorizon:
        n = self.data["numerics"]
        return ControlHorizon.for_system(sys, n["nodes"], n["gauss_points"])

    def x0(self) -> SpectralState:
        modes = self.data["system"]["modes"]
        init = self.data["initial"]
        if "samples" in init:
            return project(np.asarray(init["samples"], dtype=float), modes)
        coeffs = np.zeros(modes)
        given = np.asarray(init["coeffs"], dtype=float)
        coeffs[: given.size] = given
        return SpectralState(coeffs)

    def problem(self) -> ControlProblem:
        sys = self.system()
        d = self.data
        return ControlProblem(
            sys,
            self.horizon(sys),
            self.x0(),
            NonlocalSpec(d["nonlocal"]["weights"], d["nonlocal"]["times"]),
            NonlinearitySpec(d["nonlinearity"]["kind"], d["nonlinearity"]["c"]),
            DelaySpec(d["delay"]["kind"], d["delay"]["value"]),
        )


def _build_potential(spec: dict) -> ScalarFunction:
    kind = spec["kind"]
    if kind == "constant":
        return Constant(float(spec.get("value", 0.0)))
    if kind == "polynomial":
        return Polynomial(tuple(spec["coeffs"]))
    return Sinusoid(float(spec["a"]), float(spec["omega"]))


def _validate_potential(spec, errors):
    path = "system.potential"
    if not isinstance(spec, dict):
        errors.append(f"{path}: expected a mapping")
        return
    kind = spec.get("kind")
    if kind not in POTENTIAL_KINDS:
        errors.append(f"{path}.kind: must be one of {POTENTIAL_KINDS}, got {kind!r}")
        return
    allowed = {"constant": {"kind", "value"}, "polynomial": {"kind", "coeffs"}, "sinusoid": {"kind", "a", "omega"}}[kind]
    for key in spec:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown key for kind {kind!r}")
    required = allowed - {"kind", "value"}
    for key in sorted(required):
        if key not in spec:
            errors.append(f"{path}.{key}: required for kind {kind!r}")
    if kind == "polynomial" and "coeffs" in spec:
        c = spec["coeffs"]
        if not isinstance(c, list) or not c or not all(_is_num(v) for v in c):
            errors.append(f"{path}.coeffs: expected a non-empty list of numbers")
    for key in ("value", "a", "omega"):
        if key in spec and not _is_num(spec[key]):
            errors.append(f"{path}.{key}: expected a number")


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(raw: dict) -> ScenarioConfig:
    """Apply defaults and check every field; raise :class:`ConfigError` listing all violations."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping of sections"])
    data = _merge(DEFAULTS, raw, "", errors)

    _number(data, "seed", errors, integer=True, minimum=0)
    alpha = data["system"]["alpha"]
    if not _is_num(alpha):
        errors.append(f"system.alpha: expected a number, got {alpha!r}")
    elif not 0.0 < alpha <= 1.0:
        errors.append("system.alpha: alpha must lie in (0,1]")
    modes = _number(data, "system.modes", errors, integer=True, minimum=1)
    _validate_potential(data["system"]["potential"], errors)
    zeta = _number(data, "horizon.zeta", errors, minimum=0.0, exclusive=True)
    t_end = _number(data, "horizon.t_end", errors, minimum=0.0, exclusive=True)
    if zeta is not None and t_end is not None and not zeta < t_end:
        errors.append("horizon: zeta must be < t_end")

    init = data["initial"]
    if set(init) - {"coeffs", "samples"} or len(init) != 1:
        errors.append("initial: give exactly one of 'coeffs' or 'samples'")
    else:
        key = next(iter(init))
        vals = init[key]
        if not isinstance(vals, list) or not vals or not all(_is_num(v) for v in vals):
            errors.append(f"initial.{key}: expected a non-empty list of numbers")
        elif modes is not None:
            if key == "coeffs" and len(vals) > modes:
                errors.append(f"initial.coeffs: {len(vals)} coefficients exceed modes = {modes}")
            if key == "samples" and len(vals) < 4 * modes:
                errors.append(f"initial.samples: need at least {4 * modes} samples for {modes} modes")

    nl = data["nonlocal"]
    w, ts = nl["weights"], nl["times"]
    if not isinstance(w, list) or not all(_is_num(v) for v in w):
        errors.append("nonlocal.weights: expected a list of numbers")
    elif not isinstance(ts, list) or not all(_is_num(v) for v in ts):
        errors.append("nonlocal.times: expected a list of numbers")
    else:
        if len(w) != len(ts):
            errors.append("nonlocal: weights and times differ in length")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            errors.append("nonlocal.times: must be strictly increasing")
        if zeta is not None and t_end is not None:
            for i, t in enumerate(ts):
                if not zeta < t < t_end:
                    errors.append(f"nonlocal.times[{i}]: {t} must lie strictly inside (zeta, t_end) = ({zeta}, {t_end})")

    if data["nonlinearity"]["kind"] not in NONLINEARITY_KINDS:
        errors.append(f"nonlinearity.kind: must be one of {NONLINEARITY_KINDS}")
    _number(data, "nonlinearity.c", errors, minimum=0.0)
    dk = data["delay"]["kind"]
    if dk not in DELAY_KINDS:
        errors.append(f"delay.kind: must be one of {DELAY_KINDS}")
    dv = _number(data, "delay.value", errors, minimum=0.0)
    if dk == "scale" and dv is not None and dv > 1.0:
        errors.append("delay.value: scale must lie in [0, 1]")

    _number(data, "numerics.nodes", errors, integer=True, minimum=64)
    _number(data, "numerics.gauss_points", errors, integer=True, minimum=1)
    _number(data, "numerics.potential_panels", errors, integer=True, minimum=1)
    _number(data, "numerics.tol", errors, minimum=0.0, exclusive=True)
    _number(data, "numerics.max_iter", errors, integer=True, minimum=1)
    _number(data, "numerics.trials", errors, integer=True, minimum=1)
    _number(data, "numerics.h_samples", errors, integer=True, minimum=1)
    _number(data, "numerics.selftest_instances", errors, integer=True, minimum=1)
    approx = data["numerics"]["approximant"]
    if approx is not None:
        n = _number(data, "numerics.approximant", errors, integer=True, minimum=1)
        if n is not None and zeta is not None and t_end is not None and (n + 1) * zeta / n > t_end:
            errors.append("numerics.approximant: (n+1) zeta / n must not exceed t_end")
    for key in ("report", "trajectory"):
        if not isinstance(data["output"][key], str) or not data["output"][key]:
            errors.append(f"output.{key}: expected a file name")

    if errors:
        raise ConfigError(errors)
    # canonical numeric types so the embedded config round-trips
    for path in ("system.alpha", "horizon.zeta", "horizon.t_end", "nonlinearity.c", "delay.value", "numerics.tol"):
        sec, key = path.split(".")
        data[sec][key] = float(data[sec][key])
    return ScenarioConfig(data)


def load_config(path) -> ScenarioConfig:
    """Read a YAML scenario file and validate it."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "unknown position"
        raise ConfigError([f"{path}: parse error at {where}: {getattr(exc, 'problem', exc)}"]) from exc
    return validate(raw if raw is not None else {})


def write_trajectory(traj: Trajectory, control: ControlSignal | None, path) -> Path:
    """Write ``t, x_1..x_N, u_1..u_N`` rows at 17 significant digits."""
    path = Path(path)
    n = traj.modes
    u = control.at(traj.times) if control is not None else np.zeros_like(traj.states)
    table = np.column_stack([traj.times, traj.states, u])
    header = ",".join(["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"u_{i}" for i in range(1, n + 1)])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")
    return path


def read_trajectory(path) -> tuple[Trajectory, np.ndarray]:
    """Inverse of :func:`write_trajectory`; returns the trajectory and control samples."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (table.shape[1] - 1) // 2
    return Trajectory(table[:, 0], table[:, 1 : n + 1]), table[:, n + 1 :]


def _eq8_dict(rep) -> dict:
    return {
        "terms": list(rep.terms),
        "value": rep.value,
        "valueSqrtT": rep.value_sqrt_t,
        "margin": rep.margin,
        "satisfied": rep.satisfied,
        "M": rep.M,
        "normH": rep.norm_H.upper,
        "normHSampled": rep.norm_H.value,
        "normHSamples": rep.norm_H.samples,
        "L": rep.L,
        "gammaGrowth": rep.gamma_growth,
        "nAlpha": rep.n_alpha,
        "sqrtT": rep.sqrt_t,
        "normB": rep.norm_B,
        "delta": rep.delta,
    }


def _eq14_dict(rep) -> dict:
    return {
        "minMargin": rep.min_margin,
        "exactMinMargin": rep.exact_min_margin,
        "gammaGram": rep.gamma,
        "trials": rep.trials,
        "satisfied": rep.satisfied,
    }


@dataclass
class RunResult:
    report: dict
    exit_code: int
    wall_time: float


def _finish(report: dict, verdicts: dict, numerical_failure: bool = False) -> int:
    report["verdicts"] = verdicts
    ok = all(verdicts.values())
    report["status"] = "pass" if ok and not numerical_failure else "fail"
    if numerical_failure:
        return EXIT_NUMERICAL
    return EXIT_OK if ok else EXIT_VERDICT


def _run_verify_linear(cfg, out):
    sys = cfg.system()
    hor = cfg.horizon(sys)
    num = cfg.data["numerics"]
    eq14 = check_null_controllable(sys, hor, num["trials"], rng=cfg.seed)
    problem = cfg.problem()
    eq8 = check_condition_eq8(problem, samples=num["h_samples"], rng=cfg.seed)
    report = {
        "gramian": gramian(sys, hor).diag.tolist(),
        "eq14": _eq14_dict(eq14),
        "M": eq8.M,
        "normH": {"exact": eq8.norm_H.upper, "sampled": eq8.norm_H.value, "samples": eq8.norm_H.samples},
        "verdict": "null controllable" if eq14.satisfied else "not certified",
    }
    return report, _finish(report, {"eq14": eq14.satisfied})


def _run_synthesize(cfg, out):
    sys = cfg.system()
    hor = cfg.horizon(sys)
    x0 = cfg.x0()
    u = synthesize_control(sys, hor, x0)
    traj = simulate_linear(sys, hor, x0, u)
    write_trajectory(traj, u, out / cfg.data["output"]["trajectory"])
    final = traj.final.norm()
    threshold = 1e-8 * (1.0 + x0.norm())
    report = {
        "finalStateNorm": final,
        "finalStateThreshold": threshold,
        "controlNorm": l2_alpha_norm(hor, u),
        "gramian": gramian(sys, hor).diag.tolist(),
        "trajectoryFile": cfg.data["output"]["trajectory"],
    }
    return report, _finish(report, {"finalState": final <= threshold})


def _run_solve(cfg, out):
    problem = cfg.problem()
    sys, hor = problem.system, problem.horizon
    num = cfg.data["numerics"]
    eq8 = check_condition_eq8(problem, samples=num["h_samples"], rng=cfg.seed)
    eq14 = check_null_controllable(sys, hor, num["trials"], rng=cfg.seed)
    report = {"eq8": _eq8_dict(eq8), "eq14": _eq14_dict(eq14), "M": eq8.M, "normH": eq8.norm_H.upper}
    tol = num["tol"]
    try:
        res = solve(problem, tol=tol, max_iter=num["max_iter"], approximant=num["approximant"], eq8=eq8)
    except ConvergenceError as exc:
        partial = exc.report
        report.update(
            {
                "converged": False,
                "iterations": partial.iterations,
                "residualHistory": partial.residual_history,
                "omega": partial.omega,
                "error": str(exc),
            }
        )
        code = _finish(report, {"converged": False, "eq8": eq8.satisfied, "eq14": eq14.satisfied}, True)
        return report, code
    write_trajectory(res.trajectory, res.control, out / cfg.data["output"]["trajectory"])
    final_threshold = max(tol, 1e-6 * (1.0 + problem.x0.norm()))
    report.update(
        {
            "converged": True,
            "finalStateNorm": res.final_state_norm,
            "finalStateThreshold": final_threshold,
            "controlNorm": res.control_norm,
            "iterations": res.iterations,
            "residualHistory": res.residual_history,
            "fixedPointResidual": res.fixed_point_residual,
            "nonlocalResidual": res.nonlocal_residual,
            "omega": res.omega,
            "approximant": res.approximant,
            "trajectoryFile": cfg.data["output"]["trajectory"],
        }
    )
    verdicts = {
        "converged": True,
        "finalState": res.final_state_norm <= final_threshold,
        "fixedPoint": res.fixed_point_residual <= 2 * tol,
        "nonlocal": res.nonlocal_residual <= 1e-6,
        "eq8": eq8.satisfied,
        "eq14": eq14.satisfied,
    }
    return report, _finish(report, verdicts)


def _run_selftest(cfg, out):
    results = run_rule_suite(cfg.data["numerics"]["selftest_instances"], seed=cfg.seed)
    passed = sum(r.passed for r in results)
    report = {
        "rules": [r.as_dict() for r in results],
        "summary": {"total": len(results), "passed": passed, "failed": len(results) - passed},
    }
    return report, _finish(report, {r.name: r.passed for r in results})


_RUNNERS = {
    "verify-linear": _run_verify_linear,
    "synthesize": _run_synthesize,
    "solve": _run_solve,
    "calculus-selftest": _run_selftest,
}


def run(cfg: ScenarioConfig, command: str, out_dir=".") -> RunResult:
    """Execute ``command`` and write the report; returns it with the exit code.

    Wall time is returned separately so the report stays byte-reproducible.
    """
    if command not in _RUNNERS:
        raise ConfigError([f"command: must be one of {COMMANDS}, got {command!r}"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        body, code = _RUNNERS[command](cfg, out)
    except SingularityError as exc:
        body = {"error": str(exc)}
        code = _finish(body, {"synthesis": False}, True)
    report = {"command": command, "seed": cfg.seed, "config": cfg.data, **body}
    (out / cfg.data["output"]["report"]).write_text(dump_report(report), encoding="utf-8")
    return RunResult(report, code, time.perf_counter() - start)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=True) + "\n"


__all__ = [
    "COMMANDS",
    "ConfnullError",
    "RunResult",
    "ScenarioConfig",
    "dump_report",
    "load_config",
    "read_trajectory",
    "run",
    "validate",
    "write_trajectory",
]
