"""Scalar profiles of one variable: masses and potentials over x, couplings and
trajectories over t.

Three kinds are supported so that derivative and Lipschitz data are always
available in closed form or by exact slope arithmetic:

* ``constant``
* ``table`` -- piecewise-linear through strictly increasing knots, constant
  extrapolation outside
* ``expr`` -- a sum of basis terms (polynomial, sin, cos, exp)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TERM_FIELDS = {
    "poly": {"coeffs"},
    "sin": {"amp", "freq", "phase"},
    "cos": {"amp", "freq", "phase"},
    "exp": {"amp", "rate"},
}


def _term_value(term, x, deriv):
    kind = term["type"]
    if kind == "poly":
        c = np.asarray(term["coeffs"], dtype=float)
        if deriv:
            c = c[1:] * np.arange(1, c.size)
            if c.size == 0:
                return np.zeros_like(x)
        # coeffs are ascending powers
        return np.polynomial.polynomial.polyval(x, c)
    if kind in ("sin", "cos"):
        a, w, p = term["amp"], term["freq"], term.get("phase", 0.0)
        arg = w * x + p
        if kind == "sin":
            return a * w * np.cos(arg) if deriv else a * np.sin(arg)
        return -a * w * np.sin(arg) if deriv else a * np.cos(arg)
    if kind == "exp":
        a, r = term["amp"], term["rate"]
        return a * r * np.exp(r * x) if deriv else a * np.exp(r * x)
    raise ValueError(f"unknown term type {kind!r}")


@dataclass(frozen=True, eq=False)
class ScalarProfile:
    kind: str
    value: float = 0.0
    knots: tuple = ()
    values: tuple = ()
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == "constant":
            if not np.isfinite(self.value):
                raise ValueError("constant profile value must be finite")
        elif self.kind == "table":
            k = np.asarray(self.knots, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if k.ndim != 1 or k.size < 2 or k.shape != v.shape:
                raise ValueError("table profile needs >= 2 knots and matching values")
            if np.any(np.diff(k) <= 0):
                raise ValueError("table knots must be strictly increasing")
            if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
                raise ValueError("table entries must be finite")
            object.__setattr__(self, "knots", tuple(k))
            object.__setattr__(self, "values", tuple(v))
        elif self.kind == "expr":
            if not self.terms:
                raise ValueError("expression profile needs at least one term")
            for term in self.terms:
                kind = term.get("type")
                if kind not in _TERM_FIELDS:
                    raise ValueError(f"unknown term type {kind!r}")
                extra = set(term) - _TERM_FIELDS[kind] - {"type"}
                if extra:
                    raise ValueError(f"unknown fields {sorted(extra)} in {kind} term")
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.full_like(x, self.value)
        elif self.kind == "table":
            out = np.interp(x, self.knots, self.values)
        else:
            out = sum(_term_value(t, x, False) for t in self.terms)
            out = np.asarray(out, dtype=float) + np.zeros_like(x)
        return float(out) if scalar else out

    def derivative(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "table":
            k = np.asarray(self.knots)
            slopes = np.diff(self.values) / np.diff(k)
            # right-continuous slope; zero outside the table
            idx = np.searchsorted(k, x, side="right") - 1
            inside = (idx >= 0) & (idx < slopes.size)
            out = np.where(inside, slopes[np.clip(idx, 0, slopes.size - 1)], 0.0)
        else:
            out = sum(_term_value(t, x, True) for t in self.terms)
            out = np.asarray(out, dtype=float) + np.zeros_like(x)
        return float(out) if scalar else out

    def _samples(self, lo, hi, extra=None):
        pts = np.linspace(lo, hi, 4097)
        if extra is not None:
            pts = np.concatenate([pts, np.asarray(extra, dtype=float)])
        return pts

    def sup(self, lo, hi, extra=None):
        """Supremum over ``[lo, hi]``; exact for constant and table kinds,
        dense sampling (plus any ``extra`` points) for expressions."""
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "table":
            pts = [lo, hi] + [k for k in self.knots if lo <= k <= hi]
            return float(np.max(self(np.asarray(pts))))
        return float(np.max(self(self._samples(lo, hi, extra))))

    def inf(self, lo, hi, extra=None):
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "table":
            pts = [lo, hi] + [k for k in self.knots if lo <= k <= hi]
            return float(np.min(self(np.asarray(pts))))
        return float(np.min(self(self._samples(lo, hi, extra))))

    def lipschitz(self, lo, hi):
        """Bound on ``|f'|`` over ``[lo, hi]`` (exact slope maximum for tables)."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "table":
            k = np.asarray(self.knots)
            slopes = np.abs(np.diff(self.values) / np.diff(k))
            overlap = (k[1:] > lo) & (k[:-1] < hi)
            return float(slopes[overlap].max()) if overlap.any() else 0.0
        return float(np.max(np.abs(self.derivative(self._samples(lo, hi)))))

    @classmethod
    def from_dict(cls, data, path="profile"):
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a table, got {type(data).__name__}")
        data = dict(data)
        kind = data.pop("kind", None)
        allowed = {"constant": {"value"}, "table": {"knots", "values"}, "expr": {"terms"}}
        # shorthand: kind = "poly" with coeffs
        if kind == "poly":
            coeffs = data.pop("coeffs", None)
            if data or coeffs is None:
                raise ValueError(f"{path}: poly profile takes exactly 'coeffs'")
            return poly(*coeffs)
        if kind not in allowed:
            raise ValueError(f"{path}.kind: unknown profile kind {kind!r}")
        extra = set(data) - allowed[kind]
        if extra:
            raise ValueError(f"{path}: unknown key(s) {sorted(extra)}")
        try:
            if kind == "constant":
                return constant(data["value"])
            if kind == "table":
                return table(data["knots"], data["values"])
            return expression([dict(t) for t in data["terms"]])
        except KeyError as exc:
            raise ValueError(f"{path}: missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "table":
            return {"kind": "table", "knots": list(self.knots), "values": list(self.values)}
        return {"kind": "expr", "terms": [dict(t) for t in self.terms]}


def constant(value):
    return ScalarProfile("constant", value=float(value))


def table(knots, values):
    return ScalarProfile("table", knots=tuple(knots), values=tuple(values))


def expression(terms):
    return ScalarProfile("expr", terms=tuple(dict(t) for t in terms))


def poly(*coeffs):
    """Polynomial with ascending coefficients: ``poly(1, 0.1)`` is ``1 + 0.1 x``."""
    return expression([{"type": "poly", "coeffs": [float(c) for c in coeffs]}])
