"""Randomised rule suite for the conformable calculus.

Each rule is checked two ways on randomly drawn descriptors:

* oracle deviation: the limit-definition difference quotient of the
  composite function against the rule's right-hand side;
* analytic deviation: the analytic derivative of an independently expanded
  descriptor (e.g. a multiplied-out polynomial) against the rule's
  right-hand side, where such an expansion exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .core import (
    FractionalOrder,
    alpha_integral_of_bivariate,
    conformable_derivative,
    conformable_derivative_limit,
    conformable_integral,
    leibniz_alpha,
    matrix_inverse_alpha_derivative,
    right_conformable_derivative,
)
from .functions import (
    BivariateFunction,
    Constant,
    MatrixFunction,
    Polynomial,
    ScalarFunction,
    Sinusoid,
    alpha_power,
)

ORACLE_TOL = 1e-4
ANALYTIC_TOL = 1e-8


@dataclass
class RuleResult:
    name: str
    instances: int
    max_oracle_dev: float
    max_analytic_dev: float

    @property
    def passed(self) -> bool:
        return self.max_oracle_dev <= ORACLE_TOL and self.max_analytic_dev <= ANALYTIC_TOL

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "maxOracleDeviation": self.max_oracle_dev,
            "maxAnalyticDeviation": self.max_analytic_dev,
            "passed": self.passed,
        }


class _Draw:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def order(self) -> FractionalOrder:
        return FractionalOrder(self.rng.uniform(0.1, 1.0))

    def poly_coeffs(self, degree=3) -> np.ndarray:
        return self.rng.uniform(-2.0, 2.0, size=degree + 1)

    def point(self):
        base = self.rng.uniform(0.0, 0.5)
        t = base + self.rng.uniform(0.5, 2.5)
        return t, base

    def smooth(self) -> ScalarFunction:
        if self.rng.random() < 0.5:
            return Polynomial(self.poly_coeffs())
        return Sinusoid(self.rng.uniform(-2, 2), self.rng.uniform(0.2, 3.0))


def _poly_derivative(coeffs, order, t, base):
    return conformable_derivative(Polynomial(coeffs), order, t, base)


def _rule_linearity(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        c, d = draw.rng.uniform(-3, 3, size=2)
        p, q = draw.poly_coeffs(), draw.poly_coeffs()
        rhs = c * _poly_derivative(p, order, t, base) + d * _poly_derivative(q, order, t, base)
        dev_a = max(dev_a, abs(_poly_derivative(c * p + d * q, order, t, base) - rhs))
        f, g = draw.smooth(), draw.smooth()
        rhs = c * conformable_derivative(f, order, t, base) + d * conformable_derivative(g, order, t, base)
        dev_o = max(dev_o, abs(conformable_derivative_limit(c * f + d * g, order, t, base, eps) - rhs))
    return dev_o, dev_a


def _rule_constant(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        f = Constant(draw.rng.uniform(-10, 10))
        dev_a = max(dev_a, abs(conformable_derivative(f, order, t, base)))
        dev_o = max(dev_o, abs(conformable_derivative_limit(f, order, t, base, eps)))
    return dev_o, dev_a


def _rule_product(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        p, q = draw.poly_coeffs(), draw.poly_coeffs()
        P, Q = Polynomial(p), Polynomial(q)
        rhs = float(P(t)) * _poly_derivative(q, order, t, base) + float(Q(t)) * _poly_derivative(p, order, t, base)
        dev_a = max(dev_a, abs(_poly_derivative(npoly.polymul(p, q), order, t, base) - rhs))
        f, g = draw.smooth(), draw.smooth()
        rhs = float(f(t)) * conformable_derivative(g, order, t, base) + float(g(t)) * conformable_derivative(
            f, order, t, base
        )
        dev_o = max(dev_o, abs(conformable_derivative_limit(f * g, order, t, base, eps) - rhs))
    return dev_o, dev_a


def _rule_quotient(draw, n, eps):
    dev_o = dev_a = 0.0
    done = 0
    while done < n:
        order, (t, base) = draw.order(), draw.point()
        g = draw.poly_coeffs()
        if abs(float(Polynomial(g)(t))) < 0.1:
            continue
        h = draw.poly_coeffs()
        f = npoly.polymul(g, h)
        F, G = Polynomial(f), Polynomial(g)
        gv = float(G(t))
        rhs = (gv * _poly_derivative(f, order, t, base) - float(F(t)) * _poly_derivative(g, order, t, base)) / gv**2
        dev_a = max(dev_a, abs(_poly_derivative(h, order, t, base) - rhs))
        dev_o = max(dev_o, abs(conformable_derivative_limit(F / G, order, t, base, eps) - rhs))
        done += 1
    return dev_o, dev_a


def _rule_classical(draw, n, eps):
    # (t - a)^{1-alpha} f'(t) against the limit definition.
    dev_o = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        f = draw.smooth()
        dev_o = max(dev_o, abs(conformable_derivative_limit(f, order, t, base, eps) - conformable_derivative(f, order, t, base)))
    return dev_o, 0.0


def _rule_alpha_power(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        f = alpha_power(order.alpha, base)
        dev_a = max(dev_a, abs(conformable_derivative(f, order, t, base) - 1.0))
        dev_o = max(dev_o, abs(conformable_derivative_limit(f, order, t, base, eps) - 1.0))
    return dev_o, dev_a


def _rule_chain(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        # inner function kept strictly above the base point
        c = draw.rng.uniform(0.2, 1.5, size=3)
        inner = Polynomial((base + c[0], c[1], c[2]))
        outer = draw.smooth()
        gt = float(inner(t))
        rhs = (
            conformable_derivative(outer, order, gt, base)
            * conformable_derivative(inner, order, t, base)
            * (gt - base) ** (order.alpha - 1.0)
        )
        comp = outer.compose(inner)
        dev_o = max(dev_o, abs(conformable_derivative_limit(comp, order, t, base, eps) - rhs))
        if isinstance(outer, Polynomial):
            # expand outer(inner(t)) as a polynomial
            expanded = np.zeros(1)
            power = np.ones(1)
            for coef in outer.coeffs:
                expanded = npoly.polyadd(expanded, coef * power)
                power = npoly.polymul(power, inner.coeffs)
            dev_a = max(dev_a, abs(_poly_derivative(expanded, order, t, base) - rhs))
    return dev_o, dev_a


def _rule_leibniz(draw, n, eps):
    dev_o = dev_a = 0.0
    for _ in range(n):
        order = draw.order()
        t = draw.rng.uniform(1.0, 3.0)
        p, q = draw.rng.uniform(-1.5, 1.5, size=(2, 3))
        h = BivariateFunction(
            lambda tt, s, p=p, q=q: npoly.polyval(tt, p) * npoly.polyval(s, q),
            dt=lambda tt, s, p=p, q=q: npoly.polyval(tt, npoly.polyder(p)) * npoly.polyval(s, q),
        )
        la = draw.rng.uniform(0.2, 0.6, size=2)
        lb = draw.rng.uniform(0.3, 0.8, size=2)
        a_fn = Polynomial((la[0], la[1] * 0.2))
        b_fn = Polynomial((1.5 + lb[0], lb[1]))
        expanded = leibniz_alpha(h, a_fn, b_fn, order, t)
        # direct differentiation of the integral by the limit definition
        shift = eps * t ** (1.0 - order.alpha)
        hi = alpha_integral_of_bivariate(h, a_fn, b_fn, order, t + shift, panels=64)
        lo = alpha_integral_of_bivariate(h, a_fn, b_fn, order, t - shift, panels=64)
        dev_o = max(dev_o, abs((hi - lo) / (2 * eps) - expanded))
        # separable h: integral = P(t) * I(t) with I'(t) from the fundamental theorem
        P = Polynomial(p)
        Qs = Polynomial(q)
        I = conformable_integral(Qs, order, float(a_fn(t)), float(b_fn(t)), 64)
        dI = (
            float(Qs(b_fn(t))) * float(b_fn(t)) ** (order.alpha - 1) * float(b_fn.derivative(t))
            - float(Qs(a_fn(t))) * float(a_fn(t)) ** (order.alpha - 1) * float(a_fn.derivative(t))
        )
        direct = t ** (1 - order.alpha) * (float(P.derivative(t)) * I + float(P(t)) * dI)
        dev_a = max(dev_a, abs(direct - expanded))
    return dev_o, dev_a


def _rule_fundamental(draw, n, eps):
    dev_o = 0.0
    for _ in range(n):
        order = draw.order()
        a = draw.rng.uniform(0.2, 0.5)
        t = a + draw.rng.uniform(0.5, 2.0)
        f = draw.smooth()
        shift = eps * t ** (1.0 - order.alpha)
        hi = conformable_integral(f, order, a, t + shift, 32)
        lo = conformable_integral(f, order, a, t - shift, 32)
        dev_o = max(dev_o, abs((hi - lo) / (2 * eps) - float(f(t))))
    return dev_o, 0.0


def _rule_matrix_inverse(draw, n, eps):
    dev_o = 0.0
    for _ in range(n):
        order, (t, base) = draw.order(), draw.point()
        size = int(draw.rng.integers(2, 4))
        entries = [
            [Polynomial(draw.poly_coeffs(2) * 0.3 + (3.0 if i == j else 0.0)) for j in range(size)]
            for i in range(size)
        ]
        U = MatrixFunction(entries)
        got = matrix_inverse_alpha_derivative(U, order, t, base)
        shift = eps * (t - base) ** (1.0 - order.alpha)
        fd = (np.linalg.inv(U(t + shift)) - np.linalg.inv(U(t - shift))) / (2 * eps)
        dev_o = max(dev_o, float(np.max(np.abs(fd - got))))
    return dev_o, 0.0


def _rule_right_derivative(draw, n, eps):
    dev_o = 0.0
    for _ in range(n):
        order = draw.order()
        t = draw.rng.uniform(0.5, 2.0)
        end = t + draw.rng.uniform(0.5, 2.0)
        f = draw.smooth()
        shift = eps * (end - t) ** (1.0 - order.alpha)
        limit = -(float(f(t + shift)) - float(f(t - shift))) / (2 * eps)
        dev_o = max(dev_o, abs(limit - right_conformable_derivative(f, order, t, end)))
    return dev_o, 0.0


RULES = {
    "linearity": _rule_linearity,
    "constant": _rule_constant,
    "product": _rule_product,
    "quotient": _rule_quotient,
    "classical_derivative": _rule_classical,
    "alpha_power": _rule_alpha_power,
    "chain": _rule_chain,
    "leibniz": _rule_leibniz,
    "fundamental_theorem": _rule_fundamental,
    "matrix_inverse": _rule_matrix_inverse,
    "right_derivative": _rule_right_derivative,
}


def run_rule_suite(instances: int = 20, seed: int = 42, epsilon: float = 1e-6) -> list[RuleResult]:
    """Run every rule on ``instances`` random draws and return one result per rule."""
    rng = np.random.default_rng(seed)
    draw = _Draw(rng)
    results = []
    for name, rule in RULES.items():
        dev_o, dev_a = rule(draw, instances, epsilon)
        results.append(RuleResult(name, instances, float(dev_o), float(dev_a)))
    return results

