"""Real-valued function descriptors with exact first derivatives.

Every descriptor evaluates on scalars or numpy arrays. Analytic descriptors
return exact derivatives; :class:`Tabulated` uses a cubic spline for values
and a central difference for the derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline

from ..errors import DomainError, RangeError


def central_step(t) -> np.ndarray:
    """Step used for central differences at ``t``."""
    return 1e-6 * np.maximum(1.0, np.abs(t))


class ScalarFunction:
    """Base class for function descriptors.

    Subclasses implement ``_value`` and ``_derivative``; ``check_domain``
    raises :class:`RangeError` for points where the function is undefined.
    """

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        self.check_domain(t)
        return self._value(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        self.check_domain(t)
        return self._derivative(t)

    def check_domain(self, t) -> None:
        pass

    def _value(self, t):
        raise NotImplementedError

    def _derivative(self, t):
        raise NotImplementedError

    def __add__(self, other):
        return Sum(self, _as_function(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum(self, Scaled(-1.0, _as_function(other)))

    def __rsub__(self, other):
        return Sum(_as_function(other), Scaled(-1.0, self))

    def __mul__(self, other):
        if np.isscalar(other):
            return Scaled(float(other), self)
        return Product(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if np.isscalar(other):
            return Scaled(1.0 / float(other), self)
        return Quotient(self, other)

    def compose(self, inner: ScalarFunction) -> Composition:
        """Return ``t -> self(inner(t))``."""
        return Composition(self, inner)


def _as_function(obj) -> ScalarFunction:
    if isinstance(obj, ScalarFunction):
        return obj
    return Constant(float(obj))


@dataclass(frozen=True, eq=False)
class Constant(ScalarFunction):
    beta: float

    def _value(self, t):
        return np.full_like(t, self.beta, dtype=float)

    def _derivative(self, t):
        return np.zeros_like(t, dtype=float)

    def is_nonnegative(self) -> bool:
        return self.beta >= 0.0


@dataclass(frozen=True, eq=False)
class Monomial(ScalarFunction):
    """``(t - shift) ** k``; non-integer ``k`` requires ``t >= shift``."""

    k: float
    shift: float = 0.0

    def check_domain(self, t):
        if float(self.k).is_integer():
            return
        if np.any(t - self.shift < 0):
            raise RangeError(f"(t - {self.shift})^{self.k} undefined for t < {self.shift}")

    def _value(self, t):
        return (t - self.shift) ** self.k

    def _derivative(self, t):
        if self.k == 0:
            return np.zeros_like(t)
        return self.k * (t - self.shift) ** (self.k - 1)


@dataclass(frozen=True, eq=False)
class Polynomial(ScalarFunction):
    """Polynomial with coefficients in ascending order of degree."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise DomainError("polynomial needs at least one coefficient")

    def _value(self, t):
        return npoly.polyval(t, self.coeffs)

    def _derivative(self, t):
        return npoly.polyval(t, npoly.polyder(self.coeffs)) + np.zeros_like(t)


@dataclass(frozen=True, eq=False)
class Sinusoid(ScalarFunction):
    """``a * sin(omega * t)``."""

    a: float
    omega: float

    def _value(self, t):
        return self.a * np.sin(self.omega * t)

    def _derivative(self, t):
        return self.a * self.omega * np.cos(self.omega * t)


@dataclass(frozen=True, eq=False)
class Tabulated(ScalarFunction):
    """Cubic-spline interpolant through ``(grid, values)``."""

    grid: np.ndarray
    values: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise DomainError("tabulated grid and values must be 1-D of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("tabulated grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_spline", CubicSpline(grid, values))

    def check_domain(self, t):
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1]):
            raise RangeError(f"evaluation outside tabulated range [{self.grid[0]}, {self.grid[-1]}]")

    def _value(self, t):
        return self._spline(t)

    def _derivative(self, t):
        h = central_step(t)
        lo, hi = t - h, t + h
        if np.any(lo < self.grid[0]) or np.any(hi > self.grid[-1]):
            raise RangeError("derivative needs t interior to the tabulated grid")
        return (self._spline(hi) - self._spline(lo)) / (2 * h)


@dataclass(frozen=True, eq=False)
class Sum(ScalarFunction):
    left: ScalarFunction
    right: ScalarFunction

    def check_domain(self, t):
        self.left.check_domain(t)
        self.right.check_domain(t)

    def _value(self, t):
        return self.left._value(t) + self.right._value(t)

    def _derivative(self, t):
        return self.left._derivative(t) + self.right._derivative(t)


@dataclass(frozen=True, eq=False)
class Scaled(ScalarFunction):
    factor: float
    inner: ScalarFunction

    def check_domain(self, t):
        self.inner.check_domain(t)

    def _value(self, t):
        return self.factor * self.inner._value(t)

    def _derivative(self, t):
        return self.factor * self.inner._derivative(t)


@dataclass(frozen=True, eq=False)
class Product(ScalarFunction):
    left: ScalarFunction
    right: ScalarFunction

    def check_domain(self, t):
        self.left.check_domain(t)
        self.right.check_domain(t)

    def _value(self, t):
        return self.left._value(t) * self.right._value(t)

    def _derivative(self, t):
        f, g = self.left, self.right
        return f._derivative(t) * g._value(t) + f._value(t) * g._derivative(t)


@dataclass(frozen=True, eq=False)
class Quotient(ScalarFunction):
    num: ScalarFunction
    den: ScalarFunction

    def check_domain(self, t):
        self.num.check_domain(t)
        self.den.check_domain(t)

    def _value(self, t):
        return self.num._value(t) / self.den._value(t)

    def _derivative(self, t):
        f, g = self.num, self.den
        gv = g._value(t)
        return (f._derivative(t) * gv - f._value(t) * g._derivative(t)) / gv**2


@dataclass(frozen=True, eq=False)
class Composition(ScalarFunction):
    """``outer(inner(t))``."""

    outer: ScalarFunction
    inner: ScalarFunction

    def check_domain(self, t):
        self.inner.check_domain(t)
        self.outer.check_domain(self.inner._value(t))

    def _value(self, t):
        return self.outer._value(self.inner._value(t))

    def _derivative(self, t):
        return self.outer._derivative(self.inner._value(t)) * self.inner._derivative(t)


def alpha_power(alpha: float, base: float = 0.0) -> ScalarFunction:
    """``(t - base)**alpha / alpha``, the function whose conformable derivative is 1."""
    return Scaled(1.0 / alpha, Monomial(alpha, base))


def lower_bound(f: ScalarFunction, a: float, b: float, samples: int = 257) -> float:
    """Sampled minimum of ``f`` on ``[a, b]`` (exact for constants)."""
    if isinstance(f, Constant):
        return f.beta
    return float(np.min(f(np.linspace(a, b, samples))))


@dataclass(frozen=True, eq=False)
class BivariateFunction:
    """``h(t, s)`` with an optional analytic partial derivative in ``t``.

    Without ``dt`` the partial derivative is a central difference.
    """

    func: object
    dt: object = None

    def __call__(self, t, s):
        return np.asarray(self.func(t, s), dtype=float)

    def partial_t(self, t, s):
        if self.dt is not None:
            return np.asarray(self.dt(t, s), dtype=float) + np.zeros_like(np.asarray(s, dtype=float))
        h = central_step(t)
        return (self.func(t + h, s) - self.func(t - h, s)) / (2 * h)

    def slice(self, t: float) -> ScalarFunction:
        """The function ``s -> h(t, s)`` as a descriptor."""
        return _Slice(self, float(t), partial=False)

    def partial_slice(self, t: float) -> ScalarFunction:
        """The function ``s -> dh/dt(t, s)`` as a descriptor."""
        return _Slice(self, float(t), partial=True)


@dataclass(frozen=True, eq=False)
class _Slice(ScalarFunction):
    bivariate: BivariateFunction
    t: float
    partial: bool

    def _value(self, s):
        if self.partial:
            return self.bivariate.partial_t(self.t, s)
        return self.bivariate(self.t, s) + np.zeros_like(s)

    def _derivative(self, s):
        h = central_step(s)
        return (self._value(s + h) - self._value(s - h)) / (2 * h)


@dataclass(frozen=True, eq=False)
class MatrixFunction:
    """Square matrix whose entries are scalar descriptors."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(_as_function(e) for e in row) for row in self.entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DomainError("matrix function must be square and non-empty")
        object.__setattr__(self, "entries", rows)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __call__(self, t: float) -> np.ndarray:
        return np.array([[float(e(t)) for e in row] for row in self.entries])

    def derivative(self, t: float) -> np.ndarray:
        return np.array([[float(e.derivative(t)) for e in row] for row in self.entries])
