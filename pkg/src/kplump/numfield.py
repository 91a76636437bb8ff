"""Exact arithmetic in Q(i, sqrt3)(A).

Elements are stored as 8 rational coordinates over the basis
e_j, j = 0..7, where bit 0 of j selects i, bit 1 selects sqrt3 and bit 2
selects A. Multiplying basis vectors is then an XOR of indices times a
rational factor coming from i^2 = -1, sqrt3^2 = 3 and A^2 = a_squared.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import gmpy2
from gmpy2 import mpq

BASIS_LABELS = ("1", "i", "s3", "i*s3", "A", "i*A", "s3*A", "i*s3*A")
_ZERO = mpq(0)
_ONE = mpq(1)


def rational(value, den=1) -> mpq:
    """Coerce ints, Fractions, mpq or 'p/q' strings to an exact rational."""
    if isinstance(value, float):
        raise TypeError("floats are not accepted in exact arithmetic")
    if isinstance(value, str):
        value = value.strip()
        if "/" in value:
            p, q = value.split("/")
            return mpq(int(p), int(q)) / rational(den)
        return mpq(int(value)) / rational(den)
    if hasattr(value, "numerator") and not isinstance(value, int):
        value = mpq(int(value.numerator), int(value.denominator))
    return mpq(value) / mpq(den) if den != 1 else mpq(value)


def format_rational(q: mpq) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class FieldContext:
    """Coefficient field parameters.

    ``s, t`` is the Pythagorean pair the context came from; the lump context
    has neither and does not adjoin A.
    """

    s: int | None
    t: int | None
    k: mpq | None
    b: mpq | None
    a_squared: mpq | None

    @property
    def is_lump(self) -> bool:
        return self.a_squared is None

    @property
    def tag(self) -> str:
        return "ctx(lump)" if self.is_lump else f"ctx({self.s},{self.t})"

    # constructors for common elements
    def const(self, value, den=1) -> "FieldElement":
        return FieldElement.from_rational(rational(value, den), self)

    def zero(self) -> "FieldElement":
        return FieldElement((_ZERO,) * 8, self)

    def one(self) -> "FieldElement":
        return self.const(1)

    def basis(self, j: int) -> "FieldElement":
        if j >= 4 and self.is_lump:
            raise ValueError("the lump context does not contain A")
        c = [_ZERO] * 8
        c[j] = _ONE
        return FieldElement(tuple(c), self)

    @property
    def i(self) -> "FieldElement":
        return self.basis(1)

    @property
    def sqrt3(self) -> "FieldElement":
        return self.basis(2)

    @property
    def A(self) -> "FieldElement":
        return self.basis(4)

    def kk(self) -> "FieldElement":
        self._need_periodic()
        return self.const(self.k)

    def bb(self) -> "FieldElement":
        self._need_periodic()
        return self.const(self.b)

    def _need_periodic(self):
        if self.is_lump:
            raise ValueError("operation needs a periodic-family context")


LUMP = FieldContext(None, None, None, None, None)


def make_context(s: int, t: int, periodic: bool = True) -> FieldContext:
    """Context with k = 2st/(s^2+t^2), b = (t^2-s^2)/(s^2+t^2)."""
    if not (isinstance(s, int) and isinstance(t, int)):
        raise TypeError("s and t must be integers")
    if not 0 < s < t:
        raise ValueError(f"need 0 < s < t, got ({s},{t})")
    if gcd(s, t) != 1:
        raise ValueError(f"s and t must be coprime, got ({s},{t})")
    h = s * s + t * t
    k = mpq(2 * s * t, h)
    b = mpq(t * t - s * s, h)
    assert k * k + b * b == 1
    if periodic and not 0 < k < mpq(1, 2):
        raise ValueError(f"k = {format_rational(k)} is outside (0, 1/2)")
    a2 = (1 - 4 * k * k) / (1 - k * k)
    return FieldContext(s, t, k, b, a2)


def pythagorean_pair(k) -> tuple[int, int] | None:
    """Return coprime (s,t) with 2st/(s^2+t^2) = k, or None if b is irrational."""
    k = rational(k)
    if not 0 < k < 1:
        return None
    one_minus = 1 - k * k
    num, den = one_minus.numerator, one_minus.denominator
    rn, rd = gmpy2.isqrt(num), gmpy2.isqrt(den)
    if rn * rn != num or rd * rd != den:
        return None
    b = mpq(rn, rd)
    # t/s = (1 + b)/k
    ratio = (1 + b) / k
    s, t = int(ratio.denominator), int(ratio.numerator)
    if gcd(s, t) != 1 or not 0 < s < t:
        return None
    return s, t


class FieldElement:
    __slots__ = ("c", "ctx", "_hash")

    def __init__(self, coords, ctx: FieldContext):
        self.c = coords
        self.ctx = ctx
        self._hash = None

    @classmethod
    def from_rational(cls, q, ctx: FieldContext) -> "FieldElement":
        return cls((rational(q),) + (_ZERO,) * 7, ctx)

    @classmethod
    def from_coords(cls, coords, ctx: FieldContext) -> "FieldElement":
        c = tuple(rational(v) for v in coords)
        if len(c) != 8:
            raise ValueError("need 8 coordinates")
        if ctx.is_lump and any(c[4:]):
            raise ValueError("the lump context has no A coordinates")
        return cls(c, ctx)

    # -- predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.c)

    def is_rational(self) -> bool:
        return not any(self.c[1:])

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.c == other.c and self.ctx == other.ctx
        if isinstance(other, (int, mpq)) or hasattr(other, "denominator"):
            return self.is_rational() and self.c[0] == rational(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.c)
        return self._hash

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise ValueError(f"context mismatch: {self.ctx.tag} vs {other.ctx.tag}")
            return other
        return FieldElement.from_rational(other, self.ctx)

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement(tuple(a + b for a, b in zip(self.c, o.c)), self.ctx)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return FieldElement(tuple(a - b for a, b in zip(self.c, o.c)), self.ctx)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return FieldElement(tuple(-a for a in self.c), self.ctx)

    def scale(self, q) -> "FieldElement":
        q = rational(q)
        return FieldElement(tuple(a * q for a in self.c), self.ctx)

    def __mul__(self, other):
        if not isinstance(other, FieldElement):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        o = self._coerce(other)
        x, y = self.c, o.c
        nx = [j for j in range(8) if x[j]]
        ny = [j for j in range(8) if y[j]]
        if not nx or not ny:
            return self.ctx.zero()
        if nx == [0]:
            q = x[0]
            return FieldElement(tuple(v * q for v in y), self.ctx)
        if ny == [0]:
            q = y[0]
            return FieldElement(tuple(v * q for v in x), self.ctx)
        a2 = self.ctx.a_squared
        out = [_ZERO] * 8
        for a in nx:
            xa = x[a]
            for b in ny:
                s = xa * y[b]
                common = a & b
                if common:
                    if common & 1:
                        s = -s
                    if common & 2:
                        s *= 3
                    if common & 4:
                        s *= a2
                out[a ^ b] += s
        return FieldElement(tuple(out), self.ctx)

    __rmul__ = __mul__

    def conj_bits(self, mask: int) -> "FieldElement":
        """Apply the automorphism negating every basis vector with odd overlap with mask."""
        return FieldElement(
            tuple(-v if bin(j & mask).count("1") % 2 else v for j, v in enumerate(self.c)),
            self.ctx,
        )

    def conjugate(self) -> "FieldElement":
        """Complex conjugation (i -> -i); sqrt3 and A are real."""
        return self.conj_bits(1)

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inversion of zero field element")
        if self.is_rational():
            return FieldElement.from_rational(1 / self.c[0], self.ctx)
        # x^-1 = sA(x) s3(n1) si(n2) / n3 with norms down the tower
        xa = self.conj_bits(4)
        n1 = self * xa
        n1c = n1.conj_bits(2)
        n2 = n1 * n1c
        n2c = n2.conj_bits(1)
        n3 = n2 * n2c
        if not n3.is_rational():
            raise ArithmeticError("norm computation left the base field")
        if not n3.c[0]:
            raise ZeroDivisionError("element is a zero divisor for this a_squared")
        return (xa * n1c * n2c).scale(1 / n3.c[0])

    def __truediv__(self, other):
        if isinstance(other, FieldElement):
            return self * other.inverse()
        return self.scale(1 / rational(other))

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.ctx.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- presentation ------------------------------------------------------
    def serialize(self) -> str:
        return self.ctx.tag + ";" + ",".join(format_rational(v) for v in self.c)

    def coords_text(self) -> str:
        return ",".join(format_rational(v) for v in self.c)

    def __repr__(self):
        parts = []
        for v, lab in zip(self.c, BASIS_LABELS):
            if v:
                parts.append(str(v) if lab == "1" else f"{v}*{lab}")
        return "(" + (" + ".join(parts) if parts else "0") + ")"

    def to_complex(self, dps: int | None = None):
        """Numeric embedding with A the positive square root.

        With ``dps`` set, returns an mpmath complex at that precision.
        """
        if dps is None:
            import cmath

            s3 = 3 ** 0.5
            a = float(self.ctx.a_squared) ** 0.5 if not self.ctx.is_lump else 0.0
            basis = (1, 1j, s3, 1j * s3, a, 1j * a, s3 * a, 1j * s3 * a)
            return complex(sum(float(v) * e for v, e in zip(self.c, basis) if v))
        import mpmath

        with mpmath.workdps(dps):
            s3 = mpmath.sqrt(3)
            a = mpmath.sqrt(mpmath.mpf(self.ctx.a_squared.numerator) / self.ctx.a_squared.denominator) if not self.ctx.is_lump else 0
            basis = (1, 1j, s3, 1j * s3, a, 1j * a, s3 * a, 1j * s3 * a)
            total = mpmath.mpc(0)
            for v, e in zip(self.c, basis):
                if v:
                    total += mpmath.mpf(v.numerator) / v.denominator * e
            return total


def parse_context(tag: str) -> FieldContext:
    tag = tag.strip()
    if not (tag.startswith("ctx(") and tag.endswith(")")):
        raise ValueError(f"bad context header {tag!r}")
    body = tag[4:-1]
    if body == "lump":
        return LUMP
    s, t = (int(v) for v in body.split(","))
    return make_context(s, t, periodic=False)


def parse_element(text: str, ctx: FieldContext | None = None) -> FieldElement:
    """Inverse of FieldElement.serialize; a bare coordinate list needs ``ctx``."""
    if ";" in text:
        head, body = text.split(";", 1)
        ctx = parse_context(head)
    else:
        body = text
        if ctx is None:
            raise ValueError("coordinate list without context header")
    return FieldElement.from_coords([rational(v) for v in body.split(",")], ctx)
