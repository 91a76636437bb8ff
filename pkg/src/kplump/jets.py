"""Differential polynomials in formal jets of unknown functions.

A jet symbol is (name, a, b) standing for d_x^a d_y^b of the unknown
`name`. Coefficients are RationalSymExpr in (x, y). The Reducer eliminates
the leading jets of a triangular set of constraints together with all of
their x/y derivatives.
"""

from __future__ import annotations

import random

from gmpy2 import mpq

from .numfield import FieldElement
from .symexpr import RationalSymExpr, SymExpr, random_rational

MAX_ORDER = 12


def _shift(sym, var):
    name, a, b = sym
    return (name, a + 1, b) if var == 0 else (name, a, b + 1)


class JetExpr:
    __slots__ = ("terms", "ctx")
    _jet = True

    def __init__(self, terms: dict, ctx):
        self.terms = terms
        self.ctx = ctx

    @classmethod
    def symbol(cls, ctx, name: str, a: int = 0, b: int = 0) -> "JetExpr":
        return cls({((name, a, b),): RationalSymExpr(SymExpr.const(1, ctx))}, ctx)

    @classmethod
    def zero(cls, ctx) -> "JetExpr":
        return cls({}, ctx)

    @classmethod
    def constant(cls, value, ctx) -> "JetExpr":
        c = RationalSymExpr.of(value, ctx)
        return cls({(): c} if not c.is_zero() else {}, ctx)

    # -- inspection --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def symbols(self) -> set:
        return {s for mono in self.terms for s in mono}

    def coefficient(self, *syms) -> RationalSymExpr:
        mono = tuple(sorted(syms))
        return self.terms.get(mono, RationalSymExpr(SymExpr.zero(self.ctx)))

    def __eq__(self, other):
        if not isinstance(other, JetExpr):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return "JetExpr(0)"
        parts = []
        for mono, c in sorted(self.terms.items()):
            label = "*".join(f"{n}_{a}{b}" for n, a, b in mono) or "1"
            parts.append(f"[{len(c.num)} terms]*{label}")
        return "JetExpr(" + " + ".join(parts) + ")"

    # -- arithmetic --------------------------------------------------------
    def _lift(self, other) -> "JetExpr":
        if isinstance(other, JetExpr):
            return other
        return JetExpr.constant(other, self.ctx)

    def __add__(self, other):
        o = self._lift(other)
        out = dict(self.terms)
        for m, c in o.terms.items():
            if m in out:
                s = out[m] + c
                if s.is_zero():
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        return JetExpr(out, self.ctx)

    __radd__ = __add__

    def __neg__(self):
        return JetExpr({m: -c for m, c in self.terms.items()}, self.ctx)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, JetExpr):
            out: dict = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = tuple(sorted(m1 + m2))
                    p = c1 * c2
                    out[m] = out[m] + p if m in out else p
            return JetExpr({m: c for m, c in out.items() if not c.is_zero()}, self.ctx)
        if isinstance(other, (int, mpq, FieldElement)):
            if isinstance(other, FieldElement) and other.is_zero() or not isinstance(other, FieldElement) and not other:
                return JetExpr.zero(self.ctx)
            return JetExpr({m: c * other for m, c in self.terms.items()}, self.ctx)
        c = RationalSymExpr.of(other, self.ctx)
        if c.is_zero():
            return JetExpr.zero(self.ctx)
        out = {}
        for m, v in self.terms.items():
            p = v * c
            if not p.is_zero():
                out[m] = p
        return JetExpr(out, self.ctx)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FieldElement):
            return self * other.inverse()
        if isinstance(other, (SymExpr, RationalSymExpr)):
            inv = RationalSymExpr.of(SymExpr.const(1, self.ctx)) / other
            return self * inv
        return self * (mpq(1) / mpq(other))

    # -- total derivatives -------------------------------------------------
    def d(self, var: int, n: int = 1) -> "JetExpr":
        if var not in (0, 1):
            raise ValueError("jets depend on x and y only")
        out = self
        for _ in range(n):
            out = out._d1(var)
        return out

    def _d1(self, var):
        acc: dict = {}
        for mono, c in self.terms.items():
            dc = c.d(var)
            if not dc.is_zero():
                acc[mono] = acc[mono] + dc if mono in acc else dc
            for j in range(len(mono)):
                m = tuple(sorted(mono[:j] + (_shift(mono[j], var),) + mono[j + 1:]))
                acc[m] = acc[m] + c if m in acc else c
        return JetExpr({m: c for m, c in acc.items() if not c.is_zero()}, self.ctx)

    def dx(self, n=1):
        return self.d(0, n)

    def dy(self, n=1):
        return self.d(1, n)

    # -- normal forms ------------------------------------------------------
    def cleared(self) -> tuple["JetExpr", dict]:
        """Multiply through by the common denominator.

        Returns (expression with polynomial coefficients, lcd as {base: power}).
        """
        lcd: dict = {}
        for c in self.terms.values():
            for b, p in c.dens.items():
                lcd[b] = max(lcd.get(b, 0), p)
        out = {}
        for m, c in self.terms.items():
            out[m] = RationalSymExpr(c._raise(lcd))
        return JetExpr(out, self.ctx), lcd

    def sz_check(self, trials: int, rng: random.Random) -> bool:
        cleared, _ = self.cleared()
        syms = sorted(cleared.symbols())
        for _ in range(trials):
            vals = {s: random_rational(rng) for s in syms}
            pt = [random_rational(rng) for _ in range(3)]
            total: dict = {}
            for mono, c in cleared.terms.items():
                w = mpq(1)
                for s in mono:
                    w *= vals[s]
                for f, v in c.num.at_point(*pt).items():
                    v = v.scale(w)
                    total[f] = total[f] + v if f in total else v
            if any(not v.is_zero() for v in total.values()):
                return False
        return True


class TriangularityError(ValueError):
    pass


class Reducer:
    """Eliminate leading jets and all their derivatives.

    rules maps a leading symbol (name, a0, b0) to a JetExpr equal to it. A jet
    (name, a, b) with a >= a0 and b >= b0 is rewritten through the matching
    derivative of the rule.
    """

    def __init__(self, rules: dict, max_order: int = MAX_ORDER):
        self.rules = dict(rules)
        self.max_order = max_order
        self.by_name = {}
        for lead in self.rules:
            name = lead[0]
            if name in self.by_name:
                raise TriangularityError(f"two rules for {name}")
            self.by_name[name] = lead
        self._check_triangular()
        self._memo: dict = {}

    def _check_triangular(self):
        deps = {}
        for lead, rhs in self.rules.items():
            name, a0, b0 = lead
            deps[name] = set()
            for s in rhs.symbols():
                if s[0] == name:
                    if s[1] >= a0:
                        raise TriangularityError(
                            f"rule for {lead} contains {s}, not lower in the x-order"
                        )
                else:
                    deps[name].add(s[0])
        # cross-name dependencies must be acyclic
        state: dict = {}

        def visit(n):
            if state.get(n) == 1:
                raise TriangularityError(f"cyclic dependency through {n}")
            if state.get(n) == 2:
                return
            state[n] = 1
            for m in deps.get(n, ()):
                visit(m)
            state[n] = 2

        for n in deps:
            visit(n)

    def reducible(self, sym) -> bool:
        lead = self.by_name.get(sym[0])
        return lead is not None and sym[1] >= lead[1] and sym[2] >= lead[2]

    def reduced_symbol(self, sym, ctx) -> JetExpr:
        if sym in self._memo:
            return self._memo[sym]
        if sym[1] + sym[2] > self.max_order:
            raise RuntimeError(f"jet {sym} exceeds the degree bound {self.max_order}")
        if not self.reducible(sym):
            out = JetExpr.symbol(ctx, *sym)
        else:
            name, a, b = sym
            lead = self.by_name[name]
            if sym == lead:
                out = self.reduce(self.rules[lead])
            elif a > lead[1]:
                out = self.reduce(self.reduced_symbol((name, a - 1, b), ctx).dx())
            else:
                out = self.reduce(self.reduced_symbol((name, a, b - 1), ctx).dy())
        self._memo[sym] = out
        return out

    def reduce(self, expr: JetExpr) -> JetExpr:
        total = JetExpr.zero(expr.ctx)
        for mono, c in expr.terms.items():
            if not any(self.reducible(s) for s in mono):
                total = total + JetExpr({mono: c}, expr.ctx)
                continue
            piece = JetExpr.constant(c, expr.ctx)
            for s in mono:
                piece = piece * self.reduced_symbol(s, expr.ctx)
            total = total + piece
        return total


def reduce_jets(expr: JetExpr, constraints) -> JetExpr:
    """Substitute until no constrained jet remains; denominators cleared.

    ``constraints`` is a list of (jet symbol, replacement) pairs or a dict.
    """
    rules = dict(constraints)
    out = Reducer(rules).reduce(expr)
    return out.cleared()[0]

