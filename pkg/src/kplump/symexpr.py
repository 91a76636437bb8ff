"""Exact exp-polynomials in (x, y, t) over the coefficient field.

A SymExpr is a finite sum of c * x^a y^b t^c * exp(alpha x + beta y + gamma t)
with c, alpha, beta, gamma field elements. Exponentials with distinct
frequencies are linearly independent over polynomials, so the canonical
term map gives an exact zero test.
"""

from __future__ import annotations

import random
from functools import lru_cache
from math import comb

from gmpy2 import mpq

from .numfield import (
    FieldContext,
    FieldElement,
    format_rational,
    parse_context,
    rational,
)

VARS = ("x", "y", "t")
_Z8 = (mpq(0),) * 8
ZERO_FREQ = _Z8 * 3


@lru_cache(maxsize=1 << 16)
def _freq_add(f, g):
    if f is ZERO_FREQ:
        return g
    if g is ZERO_FREQ:
        return f
    s = tuple(a + b for a, b in zip(f, g))
    return ZERO_FREQ if not any(s) else s


def _freq_part(f, var: int, ctx) -> FieldElement:
    return FieldElement(f[8 * var: 8 * var + 8], ctx)


class SymExpr:
    __slots__ = ("terms", "ctx", "_hash")

    def __init__(self, terms: dict, ctx: FieldContext):
        self.terms = terms
        self.ctx = ctx
        self._hash = None

    # -- construction ------------------------------------------------------
    @classmethod
    def zero(cls, ctx):
        return cls({}, ctx)

    @classmethod
    def const(cls, value, ctx):
        if not isinstance(value, FieldElement):
            value = FieldElement.from_rational(value, ctx)
        if value.is_zero():
            return cls({}, ctx)
        return cls({(0, 0, 0, ZERO_FREQ): value}, ctx)

    @classmethod
    def monomial(cls, ctx, a=0, b=0, c=0, coeff=1):
        return cls.const(coeff, ctx)._shift_powers(a, b, c)

    @classmethod
    def exp(cls, ctx, alpha=0, beta=0, gamma=0, coeff=1):
        """coeff * exp(alpha x + beta y + gamma t)."""
        parts = []
        for v in (alpha, beta, gamma):
            if not isinstance(v, FieldElement):
                v = FieldElement.from_rational(v, ctx)
            parts.append(v.c)
        f = parts[0] + parts[1] + parts[2]
        if not any(f):
            f = ZERO_FREQ
        base = cls.const(coeff, ctx)
        return cls({(0, 0, 0, f): c for (_, _, _, _), c in base.terms.items()}, ctx)

    def _shift_powers(self, a, b, c):
        return SymExpr({(k[0] + a, k[1] + b, k[2] + c, k[3]): v for k, v in self.terms.items()}, self.ctx)

    def _lift(self, other) -> "SymExpr":
        if isinstance(other, SymExpr):
            if other.ctx != self.ctx:
                raise ValueError(f"context mismatch: {self.ctx.tag} vs {other.ctx.tag}")
            return other
        return SymExpr.const(other, self.ctx)

    # -- predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, SymExpr):
            try:
                other = self._lift(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __len__(self):
        return len(self.terms)

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        if not _scalar_or_sym(other):
            return NotImplemented
        o = self._lift(other)
        out = dict(self.terms)
        for k, v in o.terms.items():
            if k in out:
                s = out[k] + v
                if s.is_zero():
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        return SymExpr(out, self.ctx)

    __radd__ = __add__

    def __neg__(self):
        return SymExpr({k: -v for k, v in self.terms.items()}, self.ctx)

    def __sub__(self, other):
        if not _scalar_or_sym(other):
            return NotImplemented
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not _scalar_or_sym(other):
            return NotImplemented
        if not isinstance(other, SymExpr):
            if isinstance(other, FieldElement):
                if other.is_zero():
                    return SymExpr.zero(self.ctx)
                return SymExpr({k: v * other for k, v in self.terms.items()}, self.ctx)
            q = rational(other)
            if not q:
                return SymExpr.zero(self.ctx)
            return SymExpr({k: v.scale(q) for k, v in self.terms.items()}, self.ctx)
        o = self._lift(other)
        acc: dict = {}
        for k1, c1 in self.terms.items():
            a1, b1, e1, f1 = k1
            for k2, c2 in o.terms.items():
                key = (a1 + k2[0], b1 + k2[1], e1 + k2[2], _freq_add(f1, k2[3]))
                p = c1 * c2
                if key in acc:
                    acc[key] = acc[key] + p
                else:
                    acc[key] = p
        return SymExpr({k: v for k, v in acc.items() if not v.is_zero()}, self.ctx)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not exp-polynomials")
        result = SymExpr.const(1, self.ctx)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, (SymExpr, RationalSymExpr)):
            return RationalSymExpr.of(self) / other
        if isinstance(other, FieldElement):
            return self * other.inverse()
        return self * (1 / rational(other))

    # -- calculus ----------------------------------------------------------
    def d(self, var: int | str, n: int = 1) -> "SymExpr":
        if isinstance(var, str):
            var = VARS.index(var)
        out = self
        for _ in range(n):
            out = out._d1(var)
        return out

    def _d1(self, var: int) -> "SymExpr":
        acc: dict = {}
        ctx = self.ctx
        lo, hi = 8 * var, 8 * var + 8
        for k, c in self.terms.items():
            p = k[var]
            if p:
                nk = list(k)
                nk[var] = p - 1
                nk = tuple(nk)
                v = c.scale(p)
                acc[nk] = acc[nk] + v if nk in acc else v
            fpart = k[3][lo:hi]
            if any(fpart):
                v = c * FieldElement(fpart, ctx)
                acc[k] = acc[k] + v if k in acc else v
        return SymExpr({k: v for k, v in acc.items() if not v.is_zero()}, ctx)

    def dx(self, n=1):
        return self.d(0, n)

    def dy(self, n=1):
        return self.d(1, n)

    def dt(self, n=1):
        return self.d(2, n)

    # -- substitutions -----------------------------------------------------
    def travel(self, speed=1) -> "SymExpr":
        """Compose with x -> x - speed*t (the travelling frame)."""
        speed = rational(speed)
        acc: dict = {}
        ctx = self.ctx
        for (a, b, c, f), coeff in self.terms.items():
            alpha = f[0:8]
            gamma = tuple(g - speed * al for g, al in zip(f[16:24], alpha))
            nf = f[0:16] + gamma
            if not any(nf):
                nf = ZERO_FREQ
            for j in range(a + 1):
                w = comb(a, j) * (-speed) ** (a - j)
                key = (j, b, c + a - j, nf)
                v = coeff.scale(w)
                acc[key] = acc[key] + v if key in acc else v
        return SymExpr({k: v for k, v in acc.items() if not v.is_zero()}, ctx)

    def conjugate(self) -> "SymExpr":
        """Complex conjugate for real x, y, t."""
        out = {}
        for (a, b, c, f), v in self.terms.items():
            nf = tuple(-q if j % 2 else q for j, q in zip(range(24), f)) if f is not ZERO_FREQ else f
            out[(a, b, c, nf)] = v.conjugate()
        return SymExpr(out, self.ctx)

    def map_coeffs(self, fn) -> "SymExpr":
        out = {}
        for k, v in self.terms.items():
            w = fn(v)
            if not w.is_zero():
                out[k] = w
        return SymExpr(out, self.ctx)

    # -- evaluation --------------------------------------------------------
    def at_point(self, x0, y0=0, t0=0) -> dict:
        """Exact value at a rational point with exponentials kept formal.

        Returns {frequency: field element}; the expression vanishes
        identically iff every polynomial part does, so this is the exact
        analogue of point evaluation used by sz_check and witnesses.
        """
        x0, y0, t0 = rational(x0), rational(y0), rational(t0)
        acc: dict = {}
        for (a, b, c, f), coeff in self.terms.items():
            v = coeff.scale(x0 ** a * y0 ** b * t0 ** c)
            acc[f] = acc[f] + v if f in acc else v
        return {f: v for f, v in acc.items() if not v.is_zero()}

    def witness(self, x0, y0=0, t0=0, dps: int = 30):
        """High-precision numeric value at a rational point (reporting only)."""
        import mpmath

        parts = self.at_point(x0, y0, t0)
        with mpmath.workdps(dps):
            total = mpmath.mpc(0)
            pt = [mpmath.mpf(rational(v).numerator) / rational(v).denominator for v in (x0, y0, t0)]
            for f, v in parts.items():
                expo = sum(
                    _freq_part(f, j, self.ctx).to_complex(dps) * pt[j] for j in range(3)
                )
                total += v.to_complex(dps) * mpmath.exp(expo)
            return complex(total)

    def numeric(self, X, Y, T=0.0):
        """Vectorized float evaluation on numpy arrays."""
        import numpy as np

        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        shape = np.broadcast(X, Y, np.asarray(T)).shape
        out = np.zeros(shape, dtype=complex)
        groups: dict = {}
        for (a, b, c, f), coeff in self.terms.items():
            groups.setdefault(f, []).append((a, b, c, coeff.to_complex()))
        for f, items in groups.items():
            poly = np.zeros(shape, dtype=complex)
            for a, b, c, cv in items:
                poly = poly + cv * X ** a * Y ** b * np.asarray(T) ** c
            if f is ZERO_FREQ:
                out += poly
            else:
                al, be, ga = (_freq_part(f, j, self.ctx).to_complex() for j in range(3))
                out += poly * np.exp(al * X + be * Y + ga * np.asarray(T))
        return out

    def max_degree(self) -> int:
        return max((k[0] + k[1] + k[2] for k in self.terms), default=0)

    # -- text form ---------------------------------------------------------
    def serialize(self) -> str:
        lines = [self.ctx.tag]
        for key in sorted(self.terms, key=_sort_key):
            a, b, c, f = key
            coeff = self.terms[key]
            expo = "+".join(
                f"[{FieldElement(f[8 * j: 8 * j + 8], self.ctx).coords_text()}]{VARS[j]}" for j in range(3)
            )
            lines.append(f"[{coeff.coords_text()}] * x^{a} y^{b} t^{c} * exp({expo})")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        if not self.terms:
            return "SymExpr(0)"
        return "SymExpr(" + "; ".join(
            f"{v!r}*x^{k[0]}y^{k[1]}t^{k[2]}" + ("" if k[3] is ZERO_FREQ else "*exp(..)")
            for k, v in sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))
        ) + ")"


def _scalar_or_sym(v) -> bool:
    return isinstance(v, (SymExpr, FieldElement, int, mpq)) or (
        hasattr(v, "denominator") and not isinstance(v, RationalSymExpr)
    )


def _sort_key(key):
    a, b, c, f = key
    return (tuple(f), a, b, c)


def parse_symexpr(text: str) -> SymExpr:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    ctx = parse_context(lines[0])
    terms: dict = {}
    for ln in lines[1:]:
        coeff_txt, mono_txt, exp_txt = (p.strip() for p in ln.split(" * "))
        coeff = _parse_coords(coeff_txt, ctx)
        powers = []
        for tok, name in zip(mono_txt.split(), VARS):
            if not tok.startswith(name + "^"):
                raise ValueError(f"bad monomial {mono_txt!r}")
            powers.append(int(tok[len(name) + 1:]))
        if not (exp_txt.startswith("exp(") and exp_txt.endswith(")")):
            raise ValueError(f"bad exponential {exp_txt!r}")
        pieces = exp_txt[4:-1].split("]")
        f: tuple = ()
        for j, name in enumerate(VARS):
            piece = pieces[j].lstrip("+")
            f += _parse_coords(piece + "]", ctx).c
            if not pieces[j + 1].startswith(name):
                raise ValueError(f"bad exponential {exp_txt!r}")
            pieces[j + 1] = pieces[j + 1][len(name):]
        if not any(f):
            f = ZERO_FREQ
        key = (powers[0], powers[1], powers[2], f)
        if key in terms:
            raise ValueError("duplicate term in serialized SymExpr")
        if coeff.is_zero():
            raise ValueError("zero coefficient in serialized SymExpr")
        terms[key] = coeff
    return SymExpr(terms, ctx)


def _parse_coords(txt: str, ctx) -> FieldElement:
    txt = txt.strip()
    if not (txt.startswith("[") and txt.endswith("]")):
        raise ValueError(f"bad coefficient {txt!r}")
    return FieldElement.from_coords([rational(v) for v in txt[1:-1].split(",")], ctx)


# ---------------------------------------------------------------------------
# rational functions with factored denominators


class RationalSymExpr:
    """num / prod(base^power).

    Denominators are kept as a map from base expression to power so that sums
    over a common base (tau_1, tau_2, iota, ...) never need a gcd.
    """

    __slots__ = ("num", "dens")

    def __init__(self, num: SymExpr, dens: dict | None = None):
        self.num = num
        self.dens = {b: p for b, p in (dens or {}).items() if p}
        for b in self.dens:
            if b.is_zero():
                raise ZeroDivisionError("zero denominator")

    @classmethod
    def of(cls, value, ctx=None) -> "RationalSymExpr":
        if isinstance(value, RationalSymExpr):
            return value
        if isinstance(value, SymExpr):
            return cls(value)
        if ctx is None:
            raise TypeError("need a context to lift a scalar")
        return cls(SymExpr.const(value, ctx))

    @property
    def ctx(self):
        return self.num.ctx

    @property
    def den(self) -> SymExpr:
        out = SymExpr.const(1, self.ctx)
        for b, p in self.dens.items():
            out = out * _power(b, p)
        return out

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def _lift(self, other) -> "RationalSymExpr":
        if isinstance(other, RationalSymExpr):
            return other
        if isinstance(other, SymExpr):
            return RationalSymExpr(other)
        return RationalSymExpr(SymExpr.const(other, self.ctx))

    def __add__(self, other):
        if getattr(other, "_jet", False):
            return NotImplemented
        o = self._lift(other)
        if self.dens == o.dens:
            return RationalSymExpr(self.num + o.num, self.dens)
        bases = set(self.dens) | set(o.dens)
        lcd = {b: max(self.dens.get(b, 0), o.dens.get(b, 0)) for b in bases}
        return RationalSymExpr(self._raise(lcd) + o._raise(lcd), lcd)

    __radd__ = __add__

    def _raise(self, lcd) -> SymExpr:
        n = self.num
        for b, p in lcd.items():
            extra = p - self.dens.get(b, 0)
            if extra:
                n = n * _power(b, extra)
        return n

    def __neg__(self):
        return RationalSymExpr(-self.num, self.dens)

    def __sub__(self, other):
        if getattr(other, "_jet", False):
            return NotImplemented
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if getattr(other, "_jet", False):
            return NotImplemented
        if isinstance(other, (FieldElement, int, mpq)) or hasattr(other, "denominator"):
            return RationalSymExpr(self.num * other, self.dens)
        o = self._lift(other)
        dens = dict(self.dens)
        for b, p in o.dens.items():
            dens[b] = dens.get(b, 0) + p
        return RationalSymExpr(self.num * o.num, dens)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (FieldElement, int, mpq)) or hasattr(other, "denominator"):
            if isinstance(other, FieldElement):
                return RationalSymExpr(self.num * other.inverse(), self.dens)
            return RationalSymExpr(self.num * (1 / rational(other)), self.dens)
        o = self._lift(other)
        if o.num.is_zero():
            raise ZeroDivisionError("division by zero expression")
        dens = dict(self.dens)
        num = self.num
        for b, p in o.dens.items():
            num = num * _power(b, p)
        # a bare constant divides exactly
        if len(o.num.terms) == 1:
            (key, c), = o.num.terms.items()
            if key == (0, 0, 0, ZERO_FREQ):
                return RationalSymExpr(num * c.inverse(), dens)
        dens[o.num] = dens.get(o.num, 0) + 1
        return RationalSymExpr(num, dens)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def d(self, var, n=1) -> "RationalSymExpr":
        out = self
        for _ in range(n):
            out = out._d1(var)
        return out

    def _d1(self, var) -> "RationalSymExpr":
        if not self.dens:
            return RationalSymExpr(self.num.d(var))
        # d(n/prod b^p) = (n' prod b - n sum p b' prod_{j!=i} b_j) / (prod b^(p+1))
        bases = list(self.dens)
        prod_all = SymExpr.const(1, self.ctx)
        for b in bases:
            prod_all = prod_all * b
        new_num = self.num.d(var) * prod_all
        for i, b in enumerate(bases):
            others = SymExpr.const(1, self.ctx)
            for j, c in enumerate(bases):
                if j != i:
                    others = others * c
            new_num = new_num - self.num * b.d(var) * others * self.dens[b]
        return RationalSymExpr(new_num, {b: p + 1 for b, p in self.dens.items()})

    def dx(self, n=1):
        return self.d(0, n)

    def dy(self, n=1):
        return self.d(1, n)

    def dt(self, n=1):
        return self.d(2, n)

    def numeric(self, X, Y, T=0.0):
        return self.num.numeric(X, Y, T) / self.den.numeric(X, Y, T)

    def witness(self, x0, y0=0, t0=0, dps: int = 30):
        return self.num.witness(x0, y0, t0, dps) / self.den.witness(x0, y0, t0, dps)

    def __repr__(self):
        return f"RationalSymExpr({self.num!r} / {list(self.dens.values())})"


@lru_cache(maxsize=4096)
def _power(b: SymExpr, p: int) -> SymExpr:
    return b ** p


# ---------------------------------------------------------------------------
# Hirota calculus


def _partial(f, orders):
    out = f
    for var, n in enumerate(orders):
        if n:
            out = out.d(var, n)
    return out


def hirota(mx: int, my: int, mt: int, f, g):
    """D_x^mx D_y^my D_t^mt f.g through the signed Leibniz expansion.

    Works for any operands with .d(var, n), +, * (SymExpr, RationalSymExpr,
    jet expressions).
    """
    total = None
    for jx in range(mx + 1):
        for jy in range(my + 1):
            for jt in range(mt + 1):
                w = comb(mx, jx) * comb(my, jy) * comb(mt, jt)
                if (mx - jx + my - jy + mt - jt) % 2:
                    w = -w
                term = _partial(f, (jx, jy, jt)) * _partial(g, (mx - jx, my - jy, mt - jt))
                term = term * w
                total = term if total is None else total + term
    return total


def bilinear_kpi_residual(tau: SymExpr) -> SymExpr:
    """(D_x D_t + D_x^4 - D_y^2) tau.tau."""
    return hirota(1, 0, 1, tau, tau) + hirota(4, 0, 0, tau, tau) - hirota(0, 2, 0, tau, tau)


def u_from_tau(tau: SymExpr) -> RationalSymExpr:
    """2 d_x^2 ln tau = 2 (tau_xx tau - tau_x^2) / tau^2."""
    if tau.is_zero():
        raise ZeroDivisionError("tau must be nonzero")
    num = (tau.dx(2) * tau - tau.dx() ** 2) * 2
    return RationalSymExpr(num, {tau: 2})


# ---------------------------------------------------------------------------
# probabilistic zero test


def random_rational(rng: random.Random, bound: int = 10 ** 4) -> mpq:
    return mpq(rng.randint(-bound, bound), rng.randint(1, bound))


def sz_check(expr, trials: int = 3, seed: int = 0) -> bool:
    """True iff expr vanishes at `trials` random rational points.

    Exponentials are kept formal at each point (see SymExpr.at_point); jet
    symbols of a JetExpr become fresh random rationals.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    if isinstance(expr, RationalSymExpr):
        expr = expr.num
    if isinstance(expr, SymExpr):
        for _ in range(trials):
            pt = [random_rational(rng) for _ in range(3)]
            if expr.at_point(*pt):
                return False
        return True
    from .jets import JetExpr

    if isinstance(expr, JetExpr):
        return expr.sz_check(trials, rng)
    raise TypeError(f"cannot test {type(expr).__name__}")


# ---------------------------------------------------------------------------
# convenient builders


class Vars:
    """x, y, t and field constants of a context as SymExprs."""

    def __init__(self, ctx: FieldContext):
        self.ctx = ctx
        self.one = SymExpr.const(1, ctx)
        self.x = SymExpr.monomial(ctx, 1, 0, 0)
        self.y = SymExpr.monomial(ctx, 0, 1, 0)
        self.t = SymExpr.monomial(ctx, 0, 0, 1)
        self.i = ctx.i
        self.s3 = ctx.sqrt3

    def c(self, value, den=1):
        return self.ctx.const(value, den)

    def exp(self, alpha=0, beta=0, gamma=0):
        return SymExpr.exp(self.ctx, alpha, beta, gamma)


def as_fraction_text(q) -> str:
    return format_rational(rational(q))
