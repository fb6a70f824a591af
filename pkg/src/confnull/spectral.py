"""Sine-basis model of the non-autonomous heat operator on (0, pi).

The generator is diagonal in ``e_n(x) = sqrt(2) sin(n x)``, so the evolution
operator acts on coefficients by the scalar factor

    exp(-n^2 (tau(t) - tau(s)) - int_s^t p(r) r^(alpha-1) dr),

with ``tau(t) = t^alpha / alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .calculus import Constant, FractionalOrder, ScalarFunction, alpha_integral_from, conformable_integral
from .calculus.functions import lower_bound
from .errors import DomainError, OrderingError, ResolutionError, ShapeError

DEFAULT_MODES = 16


@dataclass(frozen=True)
class SpectralState:
    """Coefficients of ``z`` in the orthonormal sine basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ShapeError("spectral state needs a non-empty 1-D coefficient vector")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def modes(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def zeros(cls, modes: int) -> SpectralState:
        return cls(np.zeros(modes))

    @classmethod
    def unit(cls, modes: int, n: int = 1) -> SpectralState:
        c = np.zeros(modes)
        c[n - 1] = 1.0
        return cls(c)


def basis(x, modes: int) -> np.ndarray:
    """``e_n(x)`` for ``n = 1..modes``; shape ``(len(x), modes)``."""
    x = np.asarray(x, dtype=float)
    n = np.arange(1, modes + 1)
    return np.sqrt(2.0) * np.sin(np.multiply.outer(x, n))


def project(samples, modes: int, x=None) -> SpectralState:
    """Sine coefficients of uniformly sampled ``z`` on [0, pi] by the trapezoid rule.

    The inner product is ``(1/pi) int_0^pi f g dx``, under which the basis
    ``sqrt(2) sin(n x)`` is orthonormal.
    """
    samples = np.asarray(samples, dtype=float)
    if x is None:
        x = np.linspace(0.0, np.pi, samples.size)
    x = np.asarray(x, dtype=float)
    if x.shape != samples.shape or x.ndim != 1:
        raise ShapeError("samples and x-grid must be 1-D of equal length")
    if samples.size < 4 * modes:
        raise ResolutionError(f"{samples.size} samples cannot resolve {modes} modes (need >= {4 * modes})")
    if not (np.isclose(x[0], 0.0) and np.isclose(x[-1], np.pi)) or not np.allclose(np.diff(x), x[1] - x[0]):
        raise ShapeError("x-grid must be uniform over [0, pi]")
    return SpectralState(trapezoid(samples[:, None] * basis(x, modes), x, axis=0) / np.pi)


def reconstruct(state: SpectralState, x) -> np.ndarray:
    """Evaluate the truncated series at ``x``."""
    return basis(x, state.modes) @ state.coeffs


@dataclass(frozen=True, eq=False)
class EvolutionSystem:
    """Truncated spectral model with potential ``p(t)`` on the horizon ``[zeta, t_end]``."""

    order: FractionalOrder
    modes: int = DEFAULT_MODES
    potential: ScalarFunction = Constant(0.0)
    zeta: float = 1e-6
    t_end: float = 1.0
    potential_panels: int = 16

    def __post_init__(self):
        if isinstance(self.order, (int, float)):
            object.__setattr__(self, "order", FractionalOrder(self.order))
        if int(self.modes) != self.modes or self.modes < 1:
            raise DomainError("modes must be a positive integer")
        if not (0.0 < self.zeta < self.t_end):
            raise DomainError(f"horizon needs 0 < zeta < t_end (got [{self.zeta}, {self.t_end}])")
        object.__setattr__(self, "modes", int(self.modes))

    @property
    def alpha(self) -> float:
        return self.order.alpha

    @property
    def eigen(self) -> np.ndarray:
        """``n^2`` for ``n = 1..modes``."""
        return np.arange(1, self.modes + 1, dtype=float) ** 2

    def alpha_time(self, t):
        return self.order.transform(t)

    def check_times(self, t, s=None) -> None:
        lo, hi = self.zeta * (1 - 1e-12), self.t_end * (1 + 1e-12)
        for name, v in (("t", t), ("s", s)):
            if v is None:
                continue
            v = np.asarray(v)
            if np.any(v < lo) or np.any(v > hi):
                raise DomainError(f"{name} outside horizon [{self.zeta}, {self.t_end}]")
        if s is not None and np.any(np.asarray(t) < np.asarray(s)):
            raise OrderingError("evolution needs t >= s")

    def potential_integral(self, t) -> np.ndarray:
        """``int_zeta^t p(r) d(r, alpha)`` for an array of ``t``."""
        t = np.asarray(t, dtype=float)
        if isinstance(self.potential, Constant):
            return self.potential.beta * (self.alpha_time(t) - self.alpha_time(self.zeta))
        flat = alpha_integral_from(self.potential, self.order, self.zeta, t.ravel(), self.potential_panels)
        return flat.reshape(t.shape)

    def potential_is_nonnegative(self) -> bool:
        return lower_bound(self.potential, self.zeta, self.t_end) >= 0.0

    def log_factors(self, t, s) -> np.ndarray:
        """Log evolution factors for broadcast arrays ``t``, ``s``; trailing mode axis."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        dtau = self.alpha_time(t) - self.alpha_time(s)
        dpot = self.potential_integral(t) - self.potential_integral(s)
        return -np.multiply.outer(dtau, self.eigen) - dpot[..., None]

    def factors(self, t, s) -> np.ndarray:
        return np.exp(self.log_factors(t, s))


def _exponents(sys: EvolutionSystem, t: float, s: float) -> tuple[float, float]:
    sys.check_times(t, s)
    dtau = float(sys.alpha_time(t) - sys.alpha_time(s))
    if isinstance(sys.potential, Constant):
        return dtau, sys.potential.beta * dtau
    return dtau, conformable_integral(sys.potential, sys.order, s, t, sys.potential_panels)


def evolution_factor(sys: EvolutionSystem, n: int, t: float, s: float) -> float:
    """Scalar factor by which mode ``n`` is propagated from ``s`` to ``t``."""
    if not 1 <= n <= sys.modes:
        raise DomainError(f"mode {n} outside 1..{sys.modes}")
    dtau, dpot = _exponents(sys, t, s)
    return float(np.exp(-(n**2) * dtau - dpot))


def _factor_vector(sys, t, s):
    dtau, dpot = _exponents(sys, t, s)
    return np.exp(-sys.eigen * dtau - dpot)


def apply_evolution(sys: EvolutionSystem, t: float, s: float, z: SpectralState) -> SpectralState:
    """Propagate ``z`` from time ``s`` to time ``t``."""
    if z.modes != sys.modes:
        raise ShapeError(f"state has {z.modes} modes, system has {sys.modes}")
    return SpectralState(_factor_vector(sys, t, s) * z.coeffs)


def apply_evolution_adjoint(sys: EvolutionSystem, t: float, s: float, z: SpectralState) -> SpectralState:
    """Adjoint propagation; the factor matrix is diagonal, hence self-adjoint."""
    if z.modes != sys.modes:
        raise ShapeError(f"state has {z.modes} modes, system has {sys.modes}")
    return SpectralState(np.diag(_factor_vector(sys, t, s)).T @ z.coeffs)


def operator_norm_bound(sys: EvolutionSystem, grid: int = 64) -> float:
    """Uniform bound ``M`` on the evolution factors over ``zeta <= s <= t <= t_end``.

    Scans a ``grid x grid`` lattice. With a nonnegative potential the first
    mode dominates, so only ``n = 1`` is scanned.
    """
    times = np.linspace(sys.zeta, sys.t_end, max(grid, 64))
    tt, ss = np.meshgrid(times, times, indexing="ij")
    mask = tt >= ss
    logs = sys.log_factors(tt[mask], ss[mask])
    if sys.potential_is_nonnegative():
        logs = logs[:, :1]
    return float(np.exp(np.max(logs)))


def continuity_constant(sys: EvolutionSystem, n: int, s: float, h: float, gap: float = 0.1, samples: int = 200) -> float:
    """Empirical Lipschitz constant of ``t -> factor(n, t, s)`` on ``t - s >= gap``.

    Returns ``max |factor(n, t+h, s) - factor(n, t, s)| / h``.
    """
    t0 = s + gap
    t1 = sys.t_end - h
    if t1 <= t0:
        raise DomainError("horizon too short for the requested gap and step")
    t = np.linspace(t0, t1, samples)
    f1 = sys.factors(t + h, np.full_like(t, s))[:, n - 1]
    f0 = sys.factors(t, np.full_like(t, s))[:, n - 1]
    return float(np.max(np.abs(f1 - f0)) / h)


def lipschitz_bound(sys: EvolutionSystem, n: int, s: float, gap: float = 0.1) -> float:
    """Analytic upper bound for :func:`continuity_constant`.

    ``|d/dt factor| <= (n^2 + max|p|) * max t^(alpha-1) * max factor`` on the
    region ``t >= s + gap``.
    """
    times = np.linspace(s + gap, sys.t_end, 257)
    pmax = float(np.max(np.abs(sys.potential(times))))
    wmax = float(np.max(sys.order.weight(times)))
    fmax = float(np.max(sys.factors(times, np.full_like(times, s))[:, n - 1]))
    return (n**2 + pmax) * wmax * fmax
