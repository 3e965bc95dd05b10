"""Truncated multivariate Taylor arithmetic: the forward-mode AD tower.

A :class:`Jet` holds the Taylor coefficients of a smooth complex-valued
function at a point, over ``nvars`` real variables, truncated at total
degree ``order``.  Sums, products, quotients and the analytic primitives
(exp, log, sqrt, sin, cos, integer powers) propagate coefficients exactly,
so every derivative query downstream is exact up to floating-point
rounding.  Finite differences appear only as cross-checks in the test
suite, never as a primary derivative source.

Coefficients are stored densely over the graded-lexicographic monomial
list of a :class:`JetSpace`; multiplication runs through a precomputed
index table so that a product is two ``np.bincount`` calls.  Each jet
carries its own validity ``order``: differentiating lowers it by one, and
reading a coefficient beyond it raises :class:`InsufficientJetOrder`.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np


class InsufficientJetOrder(Exception):
    """A derivative or coefficient was requested beyond a jet's valid order."""


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` real variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        monomials = []
        for deg in range(order + 1):
            batch = set()
            for combo in combinations_with_replacement(range(nvars), deg):
                expo = [0] * nvars
                for v in combo:
                    expo[v] += 1
                batch.add(tuple(expo))
            monomials.extend(sorted(batch))
        self.monomials = tuple(monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        self.degrees = np.array([sum(m) for m in self.monomials], dtype=np.int64)
        self._mul_table = None
        self._diff_tables = {}

    def mul_table(self):
        if self._mul_table is None:
            ii, jj, kk = [], [], []
            for i, mi in enumerate(self.monomials):
                di = sum(mi)
                for j, mj in enumerate(self.monomials):
                    if di + sum(mj) > self.order:
                        continue
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[tuple(a + b for a, b in zip(mi, mj))])
            self._mul_table = (
                np.array(ii, dtype=np.intp),
                np.array(jj, dtype=np.intp),
                np.array(kk, dtype=np.intp),
            )
        return self._mul_table

    def diff_table(self, v: int):
        """Index map realizing d/dx_v on Taylor coefficients."""
        tab = self._diff_tables.get(v)
        if tab is None:
            src, dst, fac = [], [], []
            for i, m in enumerate(self.monomials):
                if m[v] == 0:
                    continue
                lowered = list(m)
                lowered[v] -= 1
                src.append(i)
                dst.append(self.index[tuple(lowered)])
                fac.append(float(m[v]))
            tab = (
                np.array(src, dtype=np.intp),
                np.array(dst, dtype=np.intp),
                np.array(fac, dtype=np.float64),
            )
            self._diff_tables[v] = tab
        return tab

    def __repr__(self):  # pragma: no cover
        return f"JetSpace(nvars={self.nvars}, order={self.order}, size={self.size})"


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


def _mul_coeffs(space: JetSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ii, jj, kk = space.mul_table()
    prod = a[ii] * b[jj]
    out = np.bincount(kk, weights=prod.real, minlength=space.size).astype(np.complex128)
    out += 1j * np.bincount(kk, weights=prod.imag, minlength=space.size)
    return out


class Jet:
    """Truncated Taylor expansion of a smooth function at a fixed point."""

    __slots__ = ("space", "c", "order")

    def __init__(self, space: JetSpace, c: np.ndarray, order: int | None = None):
        self.space = space
        self.c = c
        self.order = space.order if order is None else order

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(space: JetSpace, value, order: int | None = None) -> "Jet":
        c = np.zeros(space.size, dtype=np.complex128)
        c[0] = value
        return Jet(space, c, order)

    @staticmethod
    def variable(space: JetSpace, v: int, value, order: int | None = None) -> "Jet":
        """Coordinate seed: value + (x_v - p_v)."""
        c = np.zeros(space.size, dtype=np.complex128)
        c[0] = value
        if space.order >= 1:
            unit = [0] * space.nvars
            unit[v] = 1
            c[space.index[tuple(unit)]] = 1.0
        return Jet(space, c, order)

    # -- queries ------------------------------------------------------

    @property
    def value(self) -> complex:
        return complex(self.c[0])

    def coefficient(self, mono: tuple) -> complex:
        if sum(mono) > self.order:
            raise InsufficientJetOrder(
                f"coefficient of degree {sum(mono)} requested from an order-{self.order} jet"
            )
        return complex(self.c[self.space.index[mono]])

    def partial(self, mono: tuple) -> complex:
        """Mixed partial derivative (coefficient times factorials)."""
        fac = 1.0
        for m in mono:
            fac *= math.factorial(m)
        return self.coefficient(mono) * fac

    def derivative(self, v: int) -> "Jet":
        """d/dx_v, exact; the result is valid one order lower."""
        if self.order < 1:
            raise InsufficientJetOrder("cannot differentiate an order-0 jet")
        src, dst, fac = self.space.diff_table(v)
        out = np.zeros(self.space.size, dtype=np.complex128)
        out[dst] = self.c[src] * fac
        return Jet(self.space, out, self.order - 1)

    # -- ring operations ----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces cannot be combined")
            return other
        if isinstance(other, (int, float, complex, np.integer, np.floating, np.complexfloating)):
            return Jet.constant(self.space, complex(other), self.order)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.space, self.c + o.c, min(self.order, o.order))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.space, self.c - o.c, min(self.order, o.order))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.space, o.c - self.c, min(self.order, o.order))

    def __neg__(self):
        return Jet(self.space, -self.c, self.order)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * o.c[0], self.order)
        return Jet(self.space, _mul_coeffs(self.space, self.c, o.c), min(self.order, o.order))

    def __rmul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.space, self.c * o.c[0], self.order)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / o.c[0], self.order)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            n = int(n)
            if n < 0:
                return self.reciprocal() ** (-n)
            out = Jet.constant(self.space, 1.0, self.order)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base if n > 1 else base
                n >>= 1
            return out
        return (self.log() * n).exp()

    # -- analytic primitives -------------------------------------------

    def _compose(self, derivs) -> "Jet":
        """Evaluate f(self) where derivs[j] = f^(j)(value)/j! for j = 0..order."""
        hat = self.c.copy()
        hat[0] = 0.0
        k = self.order
        acc = np.zeros(self.space.size, dtype=np.complex128)
        acc[0] = derivs[k]
        for j in range(k - 1, -1, -1):
            acc = _mul_coeffs(self.space, acc, hat)
            acc[0] += derivs[j]
        return Jet(self.space, acc, self.order)

    def reciprocal(self) -> "Jet":
        g0 = self.c[0]
        if g0 == 0:
            raise ZeroDivisionError("jet with zero value has no reciprocal")
        derivs = [(-1.0) ** j / g0 ** (j + 1) for j in range(self.order + 1)]
        return self._compose(derivs)

    def exp(self) -> "Jet":
        e = cmath.exp(self.c[0])
        derivs = [e / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(derivs)

    def log(self) -> "Jet":
        g0 = self.c[0]
        if g0 == 0:
            raise ZeroDivisionError("log of a jet with zero value")
        derivs = [cmath.log(g0)]
        for j in range(1, self.order + 1):
            derivs.append((-1.0) ** (j - 1) / (j * g0 ** j))
        return self._compose(derivs)

    def sqrt(self) -> "Jet":
        g0 = self.c[0]
        if g0 == 0:
            raise ZeroDivisionError("sqrt of a jet with zero value is not smooth")
        r = cmath.sqrt(g0)
        derivs = [r]
        coeff = 0.5
        for j in range(1, self.order + 1):
            derivs.append(coeff * g0 ** (0.5 - j) / math.factorial(j))
            coeff *= 0.5 - j
        return self._compose(derivs)

    def sin(self) -> "Jet":
        g0 = self.c[0]
        cycle = [cmath.sin(g0), cmath.cos(g0), -cmath.sin(g0), -cmath.cos(g0)]
        derivs = [cycle[j % 4] / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(derivs)

    def cos(self) -> "Jet":
        g0 = self.c[0]
        cycle = [cmath.cos(g0), -cmath.sin(g0), -cmath.cos(g0), cmath.sin(g0)]
        derivs = [cycle[j % 4] / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(derivs)

    # -- real-structure helpers (variables are real) --------------------

    def conjugate(self) -> "Jet":
        return Jet(self.space, np.conj(self.c), self.order)

    def real(self) -> "Jet":
        return Jet(self.space, self.c.real.astype(np.complex128), self.order)

    def imag(self) -> "Jet":
        return Jet(self.space, self.c.imag.astype(np.complex128), self.order)

    def abs(self) -> "Jet":
        """|f| = sqrt(f conj f); smooth away from zeros of f."""
        return (self * self.conjugate()).real().sqrt()

    def __repr__(self):  # pragma: no cover
        return f"Jet(order={self.order}, value={self.value:.6g})"


def seed_jets(values, order: int, space: JetSpace | None = None) -> list[Jet]:
    """Coordinate jets for a point: one first-order seed per variable."""
    if space is None:
        space = jet_space(len(values), order)
    return [Jet.variable(space, v, float(x)) for v, x in enumerate(values)]


def wirtinger(jet: Jet, re_idx: int, im_idx: int, bar: bool) -> Jet:
    """d/dz or d/dzbar for the complex variable x[re_idx] + i x[im_idx]."""
    dre = jet.derivative(re_idx)
    dim = jet.derivative(im_idx)
    if bar:
        return (dre + dim * 1j) * 0.5
    return (dre - dim * 1j) * 0.5
