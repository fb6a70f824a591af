"""Semilinear nonlocal problem: mild-solution map, approximants and Picard solver.

The fixed-point map re-synthesizes the null control from the current iterate
on every application, so its fixed point is a mild solution that reaches
zero at the final time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .control import (
    GAUSS_POINTS,
    ControlHorizon,
    HNormEstimate,
    SynthesizedControl,
    control_weights,
    l2_alpha_norm,
    operator_norm_H,
    tables,
)
from .errors import ConvergenceError, DomainError, ShapeError
from .spectral import EvolutionSystem, SpectralState, operator_norm_bound
from .trajectory import Trajectory, interp_weights

log = logging.getLogger(__name__)

NONLINEARITY_KINDS = ("zero", "linear", "scaled_sin", "scaled_tanh")
DELAY_KINDS = ("identity", "constant_lag", "scale")
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class NonlocalSpec:
    """``g(x) = sum_i c_i x(t'_i)``."""

    weights: tuple = ()
    times: tuple = ()

    def __post_init__(self):
        weights = tuple(float(c) for c in self.weights)
        times = tuple(float(t) for t in self.times)
        if len(weights) != len(times):
            raise DomainError("nonlocal weights and times differ in length")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("nonlocal times must be strictly increasing")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "times", times)

    @property
    def growth(self) -> float:
        """``L = sum |c_i|``, so that ``||g(x)|| <= L ||x||``."""
        return float(sum(abs(c) for c in self.weights))

    def validate(self, zeta: float, t_end: float) -> None:
        for i, t in enumerate(self.times):
            if not zeta < t < t_end:
                raise DomainError(f"nonlocal time t'_{i + 1} = {t} must lie in ({zeta}, {t_end})")

    @property
    def delta(self) -> float | None:
        """Earliest measurement time; g only sees the trajectory after it."""
        return self.times[0] if self.times else None


@dataclass(frozen=True)
class NonlinearitySpec:
    """Coefficient-wise ``F(t, x)`` with ``|F| <= c |x|``."""

    kind: str = "zero"
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise DomainError(f"nonlinearity kind must be one of {NONLINEARITY_KINDS}, got {self.kind!r}")
        if self.c < 0:
            raise DomainError("nonlinearity growth constant must be >= 0")
        object.__setattr__(self, "c", float(self.c))

    @property
    def growth(self) -> float:
        return 0.0 if self.kind == "zero" else self.c

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.c * x
        if self.kind == "scaled_sin":
            return self.c * np.sin(x)
        return self.c * np.tanh(x)


@dataclass(frozen=True)
class DelaySpec:
    """Time warp ``b`` mapping the horizon into itself."""

    kind: str = "identity"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in DELAY_KINDS:
            raise DomainError(f"delay kind must be one of {DELAY_KINDS}, got {self.kind!r}")
        if self.kind == "constant_lag" and self.value < 0:
            raise DomainError("constant lag must be >= 0")
        if self.kind == "scale" and not 0.0 <= self.value <= 1.0:
            raise DomainError("delay scale must lie in [0, 1]")
        object.__setattr__(self, "value", float(self.value))

    def __call__(self, t, zeta: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "identity":
            return t
        if self.kind == "constant_lag":
            return np.maximum(zeta, t - self.value)
        return zeta + self.value * (t - zeta)


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Semilinear nonlocal control problem on the system's horizon."""

    system: EvolutionSystem
    horizon: ControlHorizon
    x0: SpectralState
    nonlocal_: NonlocalSpec = NonlocalSpec()
    nonlinearity: NonlinearitySpec = NonlinearitySpec()
    delay: DelaySpec = DelaySpec()

    def __post_init__(self):
        if self.x0.modes != self.system.modes:
            raise ShapeError(f"x0 has {self.x0.modes} modes, system has {self.system.modes}")
        self.nonlocal_.validate(self.horizon.zeta, self.horizon.t_end)
        b = self.delay(self.horizon.qtimes, self.horizon.zeta)
        if np.any(b < self.horizon.zeta) or np.any(b > self.horizon.t_end):
            raise DomainError("delay must map the horizon into itself")

    @classmethod
    def build(cls, system, x0, nonlocal_=None, nonlinearity=None, delay=None, nodes=256, gauss_points=GAUSS_POINTS):
        hor = ControlHorizon.for_system(system, nodes, gauss_points)
        if not isinstance(x0, SpectralState):
            x0 = SpectralState(x0)
        return cls(system, hor, x0, nonlocal_ or NonlocalSpec(), nonlinearity or NonlinearitySpec(), delay or DelaySpec())


@dataclass(frozen=True, eq=False)
class _Plan:
    delay_idx: np.ndarray
    delay_frac: np.ndarray
    g_idx: np.ndarray
    g_frac: np.ndarray
    g_weights: np.ndarray


@lru_cache(maxsize=64)
def _plan(problem: ControlProblem) -> _Plan:
    hor = problem.horizon
    d_idx, d_frac = interp_weights(hor.times, problem.delay(hor.qtimes, hor.zeta))
    g_idx, g_frac = interp_weights(hor.times, np.asarray(problem.nonlocal_.times, dtype=float))
    return _Plan(d_idx, d_frac, g_idx, g_frac, np.asarray(problem.nonlocal_.weights, dtype=float))


def eval_g(spec: NonlocalSpec, x: Trajectory) -> SpectralState:
    """``sum_i c_i x(t'_i)`` with linear interpolation between nodes."""
    if not spec.times:
        return SpectralState.zeros(x.modes)
    vals = x.at(np.asarray(spec.times))
    return SpectralState(np.asarray(spec.weights) @ vals)


def approximant_factor(system: EvolutionSystem, n: int) -> np.ndarray:
    """Per-mode factor of ``Psi((n+1) zeta / n, zeta)`` used by the approximants."""
    if n < 1:
        raise DomainError("approximant index must be >= 1")
    t = (n + 1) * system.zeta / n
    if t > system.t_end:
        raise DomainError(f"(n+1) zeta / n = {t} exceeds t_end")
    return system.factors(t, system.zeta)


def _g_states(plan: _Plan, states: np.ndarray) -> np.ndarray:
    if plan.g_weights.size == 0:
        return np.zeros(states.shape[1])
    return plan.g_weights @ _kernels.interp_rows(states, plan.g_idx, plan.g_frac)


def _apply(problem: ControlProblem, states: np.ndarray, smoothing: np.ndarray | None):
    """One application of the mild-solution map; returns new states and control weights."""
    sys, hor = problem.system, problem.horizon
    tab = tables(sys, hor)
    plan = _plan(problem)
    g = _g_states(plan, states)
    if smoothing is not None:
        g = smoothing * g
    start = problem.x0.coeffs - g
    xb = _kernels.interp_rows(states, plan.delay_idx, plan.delay_frac)
    forcing = problem.nonlinearity(hor.qtimes[..., None], xb)
    target = tab.free[-1] * start + _kernels.weighted_sum(tab.final_qw, np.ascontiguousarray(forcing))
    weights = control_weights(sys, hor, target)
    total = forcing - tab.final_q * weights
    new = _kernels.propagate(np.ascontiguousarray(start), tab.step, tab.inflow, np.ascontiguousarray(total))
    return new, weights


def _check_trajectory(problem: ControlProblem, x: Trajectory) -> None:
    if x.states.shape != (problem.horizon.nodes, problem.system.modes):
        raise ShapeError(f"trajectory shape {x.states.shape} does not match the problem grid")


def apply_Q(problem: ControlProblem, x: Trajectory) -> Trajectory:
    """Mild-solution map with the control re-synthesized from ``x``."""
    _check_trajectory(problem, x)
    states, _ = _apply(problem, x.states, None)
    return Trajectory(problem.horizon.times, states)


def apply_Qn(problem: ControlProblem, n: int, x: Trajectory) -> Trajectory:
    """Approximant map: ``g(x)`` premultiplied by ``Psi((n+1) zeta / n, zeta)``."""
    _check_trajectory(problem, x)
    states, _ = _apply(problem, x.states, approximant_factor(problem.system, n))
    return Trajectory(problem.horizon.times, states)


def control_for(problem: ControlProblem, x: Trajectory, n: int | None = None) -> SynthesizedControl:
    """The control used by one application of the map at ``x``."""
    smoothing = None if n is None else approximant_factor(problem.system, n)
    _, weights = _apply(problem, x.states, smoothing)
    return SynthesizedControl(problem.system, problem.horizon, weights)


def weighted_time_constant(alpha: float, zeta: float, t_end: float) -> float:
    """``(int_zeta^T (s^(alpha-1))^2 ds)^(1/2)``; logarithmic at ``alpha = 1/2``."""
    p = 2.0 * alpha - 1.0
    if abs(p) < 1e-12:
        return float(np.sqrt(np.log(t_end) - np.log(zeta)))
    return float(np.sqrt((t_end**p - zeta**p) / p))


@dataclass(frozen=True)
class Eq8Report:
    """Terms of ``M^2 L + |B| |H| N (M L + gamma) + N M gamma < 1``."""

    M: float
    norm_H: HNormEstimate
    L: float
    gamma_growth: float
    n_alpha: float
    sqrt_t: float
    norm_B: float
    delta: float | None

    def _terms(self, n):
        h = self.norm_H.upper
        return (
            self.M**2 * self.L,
            self.norm_B * h * n * (self.M * self.L + self.gamma_growth),
            n * self.M * self.gamma_growth,
        )

    @property
    def terms(self) -> tuple[float, float, float]:
        return self._terms(self.n_alpha)

    @property
    def value(self) -> float:
        return float(sum(self.terms))

    @property
    def value_sqrt_t(self) -> float:
        return float(sum(self._terms(self.sqrt_t)))

    @property
    def satisfied(self) -> bool:
        return self.value < 1.0

    @property
    def margin(self) -> float:
        return 1.0 - self.value


def check_condition_eq8(problem: ControlProblem, samples: int = 200, rng=42) -> Eq8Report:
    """Sufficiency condition for the semilinear problem.

    The time constant is the weighted one from the boundedness estimate;
    the plain ``sqrt(T)`` variant is reported alongside. ``||H||`` enters
    through its exact discretised value (the sampled estimate is a lower
    bound and is kept for reference).
    """
    sys, hor = problem.system, problem.horizon
    return Eq8Report(
        M=operator_norm_bound(sys),
        norm_H=operator_norm_H(sys, hor, samples=samples, rng=rng),
        L=problem.nonlocal_.growth,
        gamma_growth=problem.nonlinearity.growth,
        n_alpha=weighted_time_constant(sys.alpha, hor.zeta, hor.t_end),
        sqrt_t=float(np.sqrt(hor.t_end)),
        norm_B=1.0,
        delta=problem.nonlocal_.delta,
    )


@dataclass
class SolveReport:
    trajectory: Trajectory
    control: SynthesizedControl | None
    converged: bool
    iterations: int
    residual_history: list = field(default_factory=list)
    final_state_norm: float = float("nan")
    control_norm: float = float("nan")
    fixed_point_residual: float = float("nan")
    nonlocal_residual: float = float("nan")
    omega: float = 1.0
    approximant: int | None = None
    eq8: Eq8Report | None = None


def free_trajectory(problem: ControlProblem) -> Trajectory:
    """Uncontrolled evolution of ``x0``, the solver's starting iterate."""
    tab = tables(problem.system, problem.horizon)
    return Trajectory(problem.horizon.times, tab.free * problem.x0.coeffs)


def solve(
    problem: ControlProblem,
    tol: float = 1e-10,
    max_iter: int = 200,
    omega: float | None = None,
    approximant: int | None = None,
    eq8: Eq8Report | None = None,
) -> SolveReport:
    """Damped Picard iteration ``x <- (1 - omega) x + omega Q(x)``.

    ``approximant=n`` iterates the smoothed map instead. Without an explicit
    ``omega`` the step is 1 when the sufficiency value is at most 0.5 and
    0.5 otherwise. Raises :class:`ConvergenceError` after ``max_iter``
    updates without reaching ``tol``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    if eq8 is None:
        eq8 = check_condition_eq8(problem)
    if omega is None:
        omega = 1.0 if eq8.value <= 0.5 else 0.5
    smoothing = None if approximant is None else approximant_factor(problem.system, approximant)
    times = problem.horizon.times

    x = free_trajectory(problem).states
    history = []
    for it in range(max_iter + 1):
        qx, weights = _apply(problem, x, smoothing)
        res = float(np.max(np.linalg.norm(qx - x, axis=1)))
        history.append(res)
        if not np.isfinite(res) or res > DIVERGENCE_FACTOR * (1.0 + history[0]):
            break
        if res <= tol:
            star = Trajectory(times, qx)
            cert, _ = _apply(problem, qx, smoothing)
            control = SynthesizedControl(problem.system, problem.horizon, weights)
            g = _g_states(_plan(problem), qx)
            if smoothing is not None:
                g = smoothing * g
            log.debug("converged after %d updates, residual %.3e", it, res)
            return SolveReport(
                trajectory=star,
                control=control,
                converged=True,
                iterations=it,
                residual_history=history,
                final_state_norm=star.final.norm(),
                control_norm=l2_alpha_norm(problem.horizon, control),
                fixed_point_residual=float(np.max(np.linalg.norm(cert - qx, axis=1))),
                nonlocal_residual=float(np.linalg.norm(qx[0] + g - problem.x0.coeffs)),
                omega=omega,
                approximant=approximant,
                eq8=eq8,
            )
        if it < max_iter:
            x = (1.0 - omega) * x + omega * qx

    report = SolveReport(
        trajectory=Trajectory(times, x),
        control=None,
        converged=False,
        iterations=len(history) - 1,
        residual_history=history,
        omega=omega,
        approximant=approximant,
        eq8=eq8,
    )
    raise ConvergenceError(
        f"no convergence after {len(history) - 1} of {max_iter} iterations (last residual {history[-1]:.3e}, "
        f"sufficiency value {eq8.value:.3f})",
        report,
    )
