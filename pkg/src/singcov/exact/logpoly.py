"""Exact arithmetic on functions of the form sum a_m x^m + sum b_m x^m log(x)."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterator, Mapping

import numpy as np

__all__ = ["LogPoly", "integrate_op"]

Key = tuple[int, int]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    c = float(c)
    if not np.isfinite(c):
        raise ValueError("coefficients must be finite")
    return Fraction(c)


class LogPoly:
    """Linear combination of ``x^m`` and ``x^m log x`` with exact rational coefficients.

    Integer exponents may be negative (``1/x`` is ``LogPoly({(-1, 0): 1})``).
    Float coefficients are converted exactly via their binary expansion.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Key, object] | None = None):
        clean: dict[Key, Fraction] = {}
        for (power, logdeg), c in (terms or {}).items():
            if logdeg not in (0, 1):
                raise ValueError(f"log degree must be 0 or 1, got {logdeg}")
            c = _as_fraction(c)
            if c:
                key = (int(power), int(logdeg))
                clean[key] = clean.get(key, Fraction(0)) + c
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def monomial(cls, power: int, coef=1) -> LogPoly:
        return cls({(power, 0): coef})

    @classmethod
    def log(cls) -> LogPoly:
        return cls({(0, 1): 1})

    @classmethod
    def from_coeffs(cls, poly_coeffs=(), logpoly_coeffs=()) -> LogPoly:
        terms: dict[Key, object] = {}
        for m, a in enumerate(poly_coeffs):
            terms[(m, 0)] = a
        for m, b in enumerate(logpoly_coeffs):
            terms[(m, 1)] = b
        return cls(terms)

    @property
    def terms(self) -> dict[Key, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Key, Fraction]]:
        return iter(sorted(self._terms.items()))

    def _coeff_vector(self, logdeg: int) -> np.ndarray:
        powers = [p for p, l in self._terms if l == logdeg]
        if any(p < 0 for p in powers):
            raise ValueError("negative powers have no coefficient-vector form")
        top = max(powers, default=-1)
        out = np.zeros(top + 1)
        for (p, l), c in self._terms.items():
            if l == logdeg:
                out[p] = float(c)
        return out

    @property
    def poly_coeffs(self) -> np.ndarray:
        """``a_0..a_p`` of the plain polynomial part."""
        return self._coeff_vector(0)

    @property
    def logpoly_coeffs(self) -> np.ndarray:
        """``b_0..b_q`` of the ``x^m log x`` part."""
        return self._coeff_vector(1)

    def __add__(self, other: LogPoly) -> LogPoly:
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return LogPoly(out)

    def __sub__(self, other: LogPoly) -> LogPoly:
        return self + other.scale(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, LogPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        parts = []
        for (p, l), c in self.items():
            parts.append(f"{c}*x^{p}" + ("*log(x)" if l else ""))
        return "LogPoly(" + (" + ".join(parts) or "0") + ")"

    def __bool__(self) -> bool:
        return bool(self._terms)

    def scale(self, c) -> LogPoly:
        c = _as_fraction(c)
        return LogPoly({k: v * c for k, v in self._terms.items()})

    def shift(self, n: int) -> LogPoly:
        """Multiply by ``x^n``."""
        return LogPoly({(p + n, l): v for (p, l), v in self._terms.items()})

    def integrate(self, p: int = 1) -> LogPoly:
        """Apply ``I^(p)``: p-fold antiderivative with all integration constants zero."""
        if p < 0:
            raise ValueError("p must be non-negative")
        out = self
        for _ in range(p):
            out = out._integrate_once()
        return out

    def _integrate_once(self) -> LogPoly:
        acc: dict[Key, Fraction] = {}

        def add(key, v):
            acc[key] = acc.get(key, Fraction(0)) + v

        for (m, l), c in self._terms.items():
            if l == 0:
                if m == -1:
                    add((0, 1), c)
                else:
                    add((m + 1, 0), c / (m + 1))
            else:
                if m == -1:
                    raise ValueError("antiderivative of log(x)/x leaves the LogPoly basis")
                add((m + 1, 1), c / (m + 1))
                add((m + 1, 0), -c / (m + 1) ** 2)
        return LogPoly(acc)

    def derivative(self) -> LogPoly:
        acc: dict[Key, Fraction] = {}
        for (m, l), c in self._terms.items():
            if m != 0:
                acc[(m - 1, l)] = acc.get((m - 1, l), Fraction(0)) + c * m
            if l == 1:
                acc[(m - 1, 0)] = acc.get((m - 1, 0), Fraction(0)) + c
        return LogPoly(acc)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x <= 0) and any(p < 0 or l for p, l in self._terms):
            raise ValueError("log and negative powers need x > 0")
        out = np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            logx = np.log(x) if any(l for _, l in self._terms) else None
            for (p, l), c in self._terms.items():
                term = float(c) * x**p
                if l:
                    term = term * logx
                out = out + term
        return out if out.ndim else float(out)


def integrate_op(g: LogPoly, p: int) -> LogPoly:
    """``I^(p)(g)``: the p-fold integral with zero constants."""
    return g.integrate(p)
