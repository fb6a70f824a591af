"""Conformable derivative, alpha-integral and their algebraic rules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, RangeError, SingularityError
from .functions import BivariateFunction, MatrixFunction, ScalarFunction, Scaled


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``alpha`` in (0, 1] and the transformed time ``t**alpha / alpha``."""

    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (0.0 < alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0,1], got {self.alpha}")
        object.__setattr__(self, "alpha", alpha)

    def transform(self, t):
        """Map original time to alpha-time, ``t -> t**alpha / alpha``."""
        return np.asarray(t, dtype=float) ** self.alpha / self.alpha

    def inverse(self, tau):
        """Inverse of :meth:`transform`."""
        return (self.alpha * np.asarray(tau, dtype=float)) ** (1.0 / self.alpha)

    def weight(self, t):
        """Density of the alpha-measure, ``t**(alpha - 1)``."""
        return np.asarray(t, dtype=float) ** (self.alpha - 1.0)


@lru_cache(maxsize=32)
def gauss_legendre(points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(points)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class AlphaGrid:
    """Nodes on ``[a, b]`` (``a > 0``) spaced uniformly in alpha-time.

    Uniform alpha-time spacing makes each panel carry equal alpha-measure.
    """

    order: FractionalOrder
    a: float
    b: float
    count: int

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError("alpha grid needs a > 0")
        if not self.b > self.a:
            raise DomainError("alpha grid needs b > a")
        if self.count < 2:
            raise DomainError("alpha grid needs at least two nodes")
        tau = np.linspace(self.order.transform(self.a), self.order.transform(self.b), self.count)
        nodes = self.order.inverse(tau)
        nodes[0], nodes[-1] = self.a, self.b
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("alpha grid nodes are not strictly increasing at this resolution")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "nodes", nodes)

    def quadrature(self, points: int = 4) -> tuple[np.ndarray, np.ndarray]:
        """Per-panel Gauss points in original time and their alpha-measure weights.

        Both arrays have shape ``(count - 1, points)``.
        """
        x, w = gauss_legendre(points)
        lo, hi = self.tau[:-1, None], self.tau[1:, None]
        tq = self.order.inverse(lo + (hi - lo) * x[None, :])
        wq = (hi - lo) * w[None, :]
        return tq, wq


def _check_base(t, base):
    if not t > base:
        raise DomainError(f"conformable derivative needs t > base (t={t}, base={base})")


def conformable_derivative(f: ScalarFunction, order: FractionalOrder, t: float, base: float = 0.0) -> float:
    """Left conformable derivative from ``base``: ``(t - base)**(1-alpha) * f'(t)``."""
    _check_base(t, base)
    return float((t - base) ** (1.0 - order.alpha) * f.derivative(t))


def conformable_derivative_limit(
    f: ScalarFunction, order: FractionalOrder, t: float, base: float = 0.0, epsilon: float = 1e-6
) -> float:
    """Symmetric difference quotient of the limit definition at step ``epsilon``.

    Used as an oracle against :func:`conformable_derivative`.
    """
    _check_base(t, base)
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    shift = epsilon * (t - base) ** (1.0 - order.alpha)
    try:
        hi, lo = f(t + shift), f(t - shift)
    except RangeError as exc:
        raise RangeError(f"limit stencil around t={t} leaves the domain of f") from exc
    return float((hi - lo) / (2.0 * epsilon))


def right_conformable_derivative(f: ScalarFunction, order: FractionalOrder, t: float, end: float) -> float:
    """Right conformable derivative terminating at ``end``: ``-(end - t)**(1-alpha) * f'(t)``."""
    if not t < end:
        raise DomainError(f"right derivative needs t < end (t={t}, end={end})")
    return float(-((end - t) ** (1.0 - order.alpha)) * f.derivative(t))


def conformable_integral(
    f: ScalarFunction, order: FractionalOrder, a: float, b: float, panels: int = 16, points: int = 8
) -> float:
    """``int_a^b f(x) x**(alpha-1) dx`` by composite Gauss-Legendre in alpha-time.

    The substitution ``tau = x**alpha/alpha`` turns the weight into 1, so
    polynomials in ``tau`` are integrated exactly.
    """
    if a <= 0:
        raise DomainError("alpha-integral needs a > 0 (weight is singular at 0)")
    if b < a:
        raise DomainError("alpha-integral needs a <= b")
    if panels < 1:
        raise DomainError("panels must be >= 1")
    if b == a:
        return 0.0
    x, w = gauss_legendre(points)
    edges = np.linspace(order.transform(a), order.transform(b), panels + 1)
    width = np.diff(edges)[:, None]
    tau = edges[:-1, None] + width * x[None, :]
    vals = f(order.inverse(tau))
    return float(np.sum(vals * width * w[None, :]))


def alpha_integral_from(
    f: ScalarFunction, order: FractionalOrder, a: float, b, panels: int = 16, points: int = 8
) -> np.ndarray:
    """Vectorised ``int_a^{b_i} f d(s, alpha)`` for an array of upper limits ``b``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a <= 0:
        raise DomainError("alpha-integral needs a > 0")
    if np.any(b < a - 1e-12 * max(1.0, a)):
        raise DomainError("alpha-integral needs a <= b")
    b = np.maximum(b, a)
    x, w = gauss_legendre(points)
    u = (np.arange(panels)[:, None] + x[None, :]).ravel() / panels
    ta = order.transform(a)
    width = order.transform(b) - ta
    tau = ta + width[:, None] * u[None, :]
    vals = f(order.inverse(tau))
    return vals @ np.tile(w, panels) / panels * width


def leibniz_alpha(
    h: BivariateFunction,
    a_fn: ScalarFunction,
    b_fn: ScalarFunction,
    order: FractionalOrder,
    t: float,
    panels: int = 32,
) -> float:
    """Expanded conformable derivative of ``t -> int_{a(t)}^{b(t)} h(t, s) d(s, alpha)``.

    Interior term plus boundary terms. Each boundary term carries the
    measure density at the moving limit, ``h(t, b) * b**(alpha-1) * T_alpha b``,
    which is what the chain rule gives for a limit of an alpha-integral.
    """
    lo, hi = float(a_fn(t)), float(b_fn(t))
    interior = 0.0
    if hi != lo:
        sign = 1.0 if hi > lo else -1.0
        interior = sign * conformable_integral(
            _scaled_partial(h, order, t), order, min(lo, hi), max(lo, hi), panels
        )
    upper = float(h(t, hi)) * hi ** (order.alpha - 1.0) * conformable_derivative(b_fn, order, t)
    lower = float(h(t, lo)) * lo ** (order.alpha - 1.0) * conformable_derivative(a_fn, order, t)
    return interior + upper - lower


def _scaled_partial(h, order, t):
    return Scaled(t ** (1.0 - order.alpha), h.partial_slice(t))


def alpha_integral_of_bivariate(
    h: BivariateFunction, a_fn: ScalarFunction, b_fn: ScalarFunction, order: FractionalOrder, t: float, panels: int = 32
) -> float:
    """``int_{a(t)}^{b(t)} h(t, s) d(s, alpha)`` (signed when b(t) < a(t))."""
    lo, hi = float(a_fn(t)), float(b_fn(t))
    if hi >= lo:
        return conformable_integral(h.slice(t), order, lo, hi, panels)
    return -conformable_integral(h.slice(t), order, hi, lo, panels)


def matrix_inverse_alpha_derivative(
    U: MatrixFunction, order: FractionalOrder, t: float, base: float = 0.0
) -> np.ndarray:
    """Conformable derivative of ``U(t)^{-1}``: ``-U^{-1} U^{(alpha)} U^{-1}``."""
    _check_base(t, base)
    m = U(t)
    if np.linalg.cond(m) > 1e12:
        raise SingularityError(f"U({t}) is singular (condition number > 1e12)")
    inv = np.linalg.inv(m)
    d_alpha = (t - base) ** (1.0 - order.alpha) * U.derivative(t)
    return -inv @ d_alpha @ inv
