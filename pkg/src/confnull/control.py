"""Linear null controllability: input-to-state map, Gramian and minimum-norm control.

All time integrals use composite Gauss-Legendre panels in alpha-time between
consecutive horizon nodes. The same quadrature drives the input map, the
Gramian and the trajectory propagator, so a synthesized control cancels the
free response at the final time up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .calculus import AlphaGrid, FractionalOrder
from .errors import DomainError, ShapeError, SingularityError
from .spectral import EvolutionSystem, SpectralState
from .trajectory import Trajectory, interp_weights

MIN_NODES = 64
RANK_THRESHOLD = 1e-14
GAUSS_POINTS = 8


@dataclass(frozen=True, eq=False)
class ControlHorizon:
    """Time grid on ``[zeta, t_end]`` uniform in alpha-time, with panel quadrature."""

    order: FractionalOrder
    zeta: float
    t_end: float
    nodes: int = 256
    gauss_points: int = GAUSS_POINTS

    def __post_init__(self):
        if not (0.0 < self.zeta < self.t_end):
            raise DomainError(f"horizon needs 0 < zeta < t_end (got [{self.zeta}, {self.t_end}])")
        if self.nodes < MIN_NODES:
            raise DomainError(f"horizon needs at least {MIN_NODES} nodes, got {self.nodes}")
        if self.gauss_points < 1:
            raise DomainError("gauss_points must be >= 1")
        grid = AlphaGrid(self.order, self.zeta, self.t_end, self.nodes)
        qtimes, qweights = grid.quadrature(self.gauss_points)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "qtimes", qtimes)
        object.__setattr__(self, "qweights", qweights)

    @classmethod
    def for_system(cls, sys: EvolutionSystem, nodes: int = 256, gauss_points: int = GAUSS_POINTS) -> ControlHorizon:
        return cls(sys.order, sys.zeta, sys.t_end, nodes, gauss_points)

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def length(self) -> float:
        return self.t_end - self.zeta


class ControlSignal:
    """Per-mode signal on the horizon, evaluable at any time.

    ``at(times)`` returns an array of shape ``times.shape + (modes,)``. On a
    horizon the node samples are ``on_grid(hor)`` with shape ``(K, modes)``.
    """

    def __init__(self, modes: int, func, label: str = "signal"):
        self.modes = int(modes)
        self._func = func
        self.label = label

    def at(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.asarray(self._func(times), dtype=float)
        if out.shape != times.shape + (self.modes,):
            raise ShapeError(f"{self.label} returned shape {out.shape}, expected {times.shape + (self.modes,)}")
        return out

    def on_grid(self, hor: ControlHorizon) -> np.ndarray:
        return self.at(hor.times)

    def __add__(self, other: ControlSignal) -> ControlSignal:
        if other.modes != self.modes:
            raise ShapeError("signals differ in mode count")
        return ControlSignal(self.modes, lambda t: self.at(t) + other.at(t), f"{self.label}+{other.label}")

    def __neg__(self) -> ControlSignal:
        return self.scaled(-1.0)

    def __sub__(self, other: ControlSignal) -> ControlSignal:
        return self + (-other)

    def scaled(self, c: float) -> ControlSignal:
        return ControlSignal(self.modes, lambda t: c * self.at(t), self.label)

    @classmethod
    def zero(cls, modes: int) -> ControlSignal:
        return cls(modes, lambda t: np.zeros(np.shape(t) + (modes,)), "zero")

    @classmethod
    def constant(cls, values) -> ControlSignal:
        values = np.asarray(values, dtype=float)
        return cls(values.size, lambda t: np.broadcast_to(values, np.shape(t) + values.shape).copy(), "constant")

    @classmethod
    def from_function(cls, func, modes: int) -> ControlSignal:
        """Wrap ``func(times) -> times.shape + (modes,)``."""
        return cls(modes, func, getattr(func, "__name__", "function"))

    @classmethod
    def from_samples(cls, times, values) -> ControlSignal:
        """Linear interpolation of ``values`` (``(K, N)``) at ``times`` (``(K,)``)."""
        tr = Trajectory(times, values)
        return cls(tr.modes, tr.at, "samples")


def _check_pair(sys: EvolutionSystem, hor: ControlHorizon) -> None:
    if hor.order.alpha != sys.order.alpha:
        raise ShapeError("horizon and system use different fractional orders")
    if hor.zeta < sys.zeta * (1 - 1e-12) or hor.t_end > sys.t_end * (1 + 1e-12):
        raise ShapeError("horizon extends beyond the system's time interval")


@dataclass(frozen=True, eq=False)
class _Tables:
    final_q: np.ndarray  # factor(t_end, s_kj), (K-1, q, N)
    final_qw: np.ndarray  # same times quadrature weight, (K-1, q, N)
    step: np.ndarray  # factor(t_{k+1}, t_k), (K-1, N)
    inflow: np.ndarray  # factor(t_{k+1}, s_kj) * w_kj, (K-1, q, N)
    free: np.ndarray  # factor(t_k, zeta), (K, N)
    gram: np.ndarray  # (N,)


@lru_cache(maxsize=64)
def tables(sys: EvolutionSystem, hor: ControlHorizon) -> _Tables:
    """Evolution-factor tables on the horizon's quadrature points (cached)."""
    _check_pair(sys, hor)
    t, tq, wq = hor.times, hor.qtimes, hor.qweights
    final_q = sys.factors(np.full_like(tq, hor.t_end), tq)
    final_qw = final_q * wq[..., None]
    step = sys.factors(t[1:], t[:-1])
    inflow = sys.factors(np.broadcast_to(t[1:, None], tq.shape), tq) * wq[..., None]
    free = sys.factors(t, np.full_like(t, hor.zeta))
    gram = np.einsum("kjn,kjn->n", final_qw, final_q)
    arrays = [np.ascontiguousarray(a) for a in (final_q, final_qw, step, inflow, free, gram)]
    return _Tables(*arrays)


def l2_alpha_inner(hor: ControlHorizon, u: ControlSignal, v: ControlSignal) -> float:
    """``sum_n int u_n v_n d(s, alpha)`` on the horizon."""
    uq, vq = u.at(hor.qtimes), v.at(hor.qtimes)
    return float(np.einsum("kj,kjn,kjn->", hor.qweights, uq, vq))


def l2_alpha_norm(hor: ControlHorizon, u: ControlSignal) -> float:
    return float(np.sqrt(max(l2_alpha_inner(hor, u, u), 0.0)))


def _input_response(sys, hor, values_q) -> np.ndarray:
    tab = tables(sys, hor)
    if values_q.shape != tab.final_qw.shape:
        raise ShapeError(f"signal samples {values_q.shape} do not match horizon {tab.final_qw.shape}")
    return _kernels.weighted_sum(tab.final_qw, np.ascontiguousarray(values_q))


def apply_L(sys: EvolutionSystem, hor: ControlHorizon, u: ControlSignal) -> SpectralState:
    """Final state reached from zero under input ``u``: ``int Psi(T, s) u(s) d(s, alpha)``."""
    if u.modes != sys.modes:
        raise ShapeError(f"signal has {u.modes} modes, system has {sys.modes}")
    return SpectralState(_input_response(sys, hor, u.at(hor.qtimes)))


def apply_L_adjoint(sys: EvolutionSystem, hor: ControlHorizon, z: SpectralState) -> ControlSignal:
    """``s -> Psi*(T, s) z`` (B is the identity)."""
    return AdjointProfile(sys, hor, z.coeffs)


def apply_N(sys: EvolutionSystem, hor: ControlHorizon, z0: SpectralState, h: ControlSignal | None = None) -> SpectralState:
    """Free response at ``T``: ``Psi(T, zeta) z0 + int Psi(T, s) h(s) d(s, alpha)``."""
    if z0.modes != sys.modes:
        raise ShapeError(f"state has {z0.modes} modes, system has {sys.modes}")
    out = tables(sys, hor).free[-1] * z0.coeffs
    if h is not None:
        out = out + _input_response(sys, hor, h.at(hor.qtimes))
    return SpectralState(out)


@dataclass(frozen=True)
class Gramian:
    """Diagonal of the controllability Gramian ``L L*``."""

    diag: np.ndarray

    def check_rank(self, threshold: float = RANK_THRESHOLD) -> None:
        scale = float(np.max(self.diag))
        bad = np.flatnonzero(self.diag < threshold * scale)
        if bad.size or scale <= 0:
            mode = int(bad[0]) + 1 if bad.size else 1
            raise SingularityError(
                f"Gramian entry for mode {mode} is {self.diag[mode - 1]:.3e}, below {threshold:g} x max"
            )


def gramian(sys: EvolutionSystem, hor: ControlHorizon) -> Gramian:
    """``W_nn = int factor(n, T, s)^2 d(s, alpha)``."""
    return Gramian(tables(sys, hor).gram.copy())


def control_weights(sys: EvolutionSystem, hor: ControlHorizon, target: np.ndarray) -> np.ndarray:
    """``W^{-1} target`` after the rank check; the control is ``-Psi*(T, s) W^{-1} target``."""
    gram = gramian(sys, hor)
    gram.check_rank()
    return np.asarray(target, dtype=float) / gram.diag


class AdjointProfile(ControlSignal):
    """``s -> Psi*(T, s) c``; reuses the cached factors at the horizon's quadrature nodes."""

    def __init__(self, sys: EvolutionSystem, hor: ControlHorizon, coeffs, label: str = "adjoint"):
        self.coeffs = np.asarray(coeffs, dtype=float)
        t_end = hor.t_end

        def profile(times):
            return sys.factors(np.full_like(times, t_end), times) * self.coeffs

        super().__init__(sys.modes, profile, label)
        self._sys, self._hor = sys, hor

    def at(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if times.shape == self._hor.qtimes.shape and np.array_equal(times, self._hor.qtimes):
            return tables(self._sys, self._hor).final_q * self.coeffs
        return super().at(times)


class SynthesizedControl(AdjointProfile):
    """Minimum-norm null control ``u(s) = -Psi*(T, s) w`` with ``w = W^{-1} N(z0, h)``."""

    def __init__(self, sys: EvolutionSystem, hor: ControlHorizon, weights: np.ndarray):
        self.weights = np.asarray(weights, dtype=float)
        super().__init__(sys, hor, -self.weights, "null-control")


def synthesize_control(
    sys: EvolutionSystem, hor: ControlHorizon, z0: SpectralState, h: ControlSignal | None = None
) -> SynthesizedControl:
    """Minimum-norm control steering ``z0`` (with forcing ``h``) to zero at ``t_end``."""
    target = apply_N(sys, hor, z0, h).coeffs
    return SynthesizedControl(sys, hor, control_weights(sys, hor, target))


def simulate_linear(
    sys: EvolutionSystem,
    hor: ControlHorizon,
    z0: SpectralState,
    u: ControlSignal | None = None,
    h: ControlSignal | None = None,
) -> Trajectory:
    """Trajectory of the linear system driven by ``u + h`` from ``z0`` at ``zeta``."""
    tab = tables(sys, hor)
    forcing = np.zeros_like(tab.inflow)
    for sig in (u, h):
        if sig is not None:
            forcing += sig.at(hor.qtimes)
    states = _kernels.propagate(np.asarray(z0.coeffs, dtype=float), tab.step, tab.inflow, forcing)
    return Trajectory(hor.times, states)


@dataclass(frozen=True)
class HNormEstimate:
    """Sampled lower estimate of ``||H||`` and the exact block-diagonal value.

    ``value`` is the largest sampled ratio; ``upper`` is the exact norm of the
    discretised operator, ``max_n sqrt(r_n^2 + 1)`` (or ``max_n r_n`` without
    forcing) with ``r_n = factor(n, T, zeta) / sqrt(W_nn)``.
    """

    value: float
    upper: float
    samples: int
    include_forcing: bool


def operator_norm_H(
    sys: EvolutionSystem,
    hor: ControlHorizon,
    samples: int = 200,
    rng: np.random.Generator | int | None = 42,
    include_forcing: bool = True,
) -> HNormEstimate:
    """Estimate ``||H||`` from random unit pairs ``(z0, h)``.

    Only the component of ``h`` along ``Psi*(T, .)`` reaches the output, so
    forcings are sampled in that span (normalised per mode); any orthogonal
    part would only enlarge the input norm.
    """
    rng = np.random.default_rng(rng)
    tab = tables(sys, hor)
    gram = gramian(sys, hor)
    gram.check_rank()
    sqrt_w = np.sqrt(gram.diag)
    ratio = tab.free[-1] / sqrt_w
    best = 0.0
    for _ in range(samples):
        z0 = rng.standard_normal(sys.modes)
        beta = rng.standard_normal(sys.modes) if include_forcing else np.zeros(sys.modes)
        scale = np.sqrt(z0 @ z0 + beta @ beta)
        z0, beta = z0 / scale, beta / scale
        h = None
        if include_forcing:
            h = AdjointProfile(sys, hor, beta / sqrt_w, "probe")
        u = synthesize_control(sys, hor, SpectralState(z0), h)
        best = max(best, l2_alpha_norm(hor, u))
    upper = float(np.max(np.sqrt(ratio**2 + 1.0))) if include_forcing else float(np.max(ratio))
    return HNormEstimate(best, upper, samples, include_forcing)


@dataclass(frozen=True)
class NullControlReport:
    """Gramian inequality ``lhs >= gamma (free + lhs)`` over random unit states."""

    min_margin: float
    gamma: float
    trials: int
    mode_margins: np.ndarray = field(repr=False)

    @property
    def satisfied(self) -> bool:
        return self.min_margin >= 0.0

    @property
    def exact_min_margin(self) -> float:
        """Minimum over the whole unit sphere (the form is diagonal)."""
        return float(np.min(self.mode_margins))


def gramian_gamma(hor: ControlHorizon) -> float:
    """``gamma = L / (L + 1)`` with ``L`` the horizon length."""
    return hor.length / (hor.length + 1.0)


def check_null_controllable(
    sys: EvolutionSystem, hor: ControlHorizon, trials: int = 500, rng: np.random.Generator | int | None = 42
) -> NullControlReport:
    """Check ``int |Psi(T,s) z|^2 >= gamma (|Psi(T,zeta) z|^2 + int |Psi(T,s) z|^2)``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    gamma = gramian_gamma(hor)
    w = gramian(sys, hor).diag
    free2 = tables(sys, hor).free[-1] ** 2
    z = rng.standard_normal((trials, sys.modes))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z2 = z**2
    lhs = z2 @ w
    rhs = gamma * (z2 @ free2 + lhs)
    mode_margins = w - gamma * (free2 + w)
    return NullControlReport(float(np.min(lhs - rhs)), gamma, trials, mode_margins)


def node_weights(hor: ControlHorizon, query) -> tuple[np.ndarray, np.ndarray]:
    """Interpolation weights of ``query`` times on the horizon nodes."""
    return interp_weights(hor.times, query)
