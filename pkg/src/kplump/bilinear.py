"""Tau-functions, Backlund operators and the third-order compatibility identities.

Two chains are covered: the rational chain 1 -> tau1 -> tau2 ending at the
lump, and the periodic chain 1 -> iota -> iota2 (with iota1 a translate of
iota) ending at the y-periodic family. Every Backlund pair is described by
the same two bilinear operators with parameters (mu, lambda, nu).
"""

from __future__ import annotations

from dataclasses import dataclass

from .jets import JetExpr, Reducer
from .numfield import LUMP, FieldContext, FieldElement
from .symexpr import RationalSymExpr, SymExpr, Vars, hirota

# ---------------------------------------------------------------------------
# tau-functions


def lump_taus(ctx: FieldContext = LUMP) -> tuple[SymExpr, SymExpr, SymExpr]:
    """Static tau0 = 1, tau1 = x + iy + sqrt3, tau2 = x^2 + y^2 + 3."""
    v = Vars(ctx)
    tau0 = v.one
    tau1 = v.x + v.y * v.i + v.s3
    tau2 = v.x * v.x + v.y * v.y + 3
    return tau0, tau1, tau2


def travelling(tau: SymExpr) -> SymExpr:
    return tau.travel(1)


def periodic_constants(ctx: FieldContext) -> dict:
    """k, b, p = b i, lambda = k^2/4, mu = -b/sqrt3, mu* = b/sqrt3 and r."""
    ctx._need_periodic()
    k, b = ctx.kk(), ctx.bb()
    s3 = ctx.sqrt3
    mu = -(b * s3) / 3
    mu_star = (b * s3) / 3
    r = mu_star * ctx.A / (k + mu_star)
    return {
        "k": k,
        "b": b,
        "p": b * ctx.i,
        "lam": k * k / 4,
        "mu": mu,
        "mu_star": mu_star,
        "r": r,
    }


def _half_wave(ctx, sign: int, with_t: bool) -> SymExpr:
    """exp(sign * k (x - p y - t) / 2), the t part only when with_t."""
    c = periodic_constants(ctx)
    k, p = c["k"], c["p"]
    alpha = k / 2 * sign
    beta = -(k * p) / 2 * sign
    gamma = -(k / 2) * sign if with_t else 0
    return SymExpr.exp(ctx, alpha, beta, gamma)


def iota(ctx: FieldContext, moving: bool = False) -> SymExpr:
    """e^w + e^-w with w = k(x - py)/2 (and x -> x - t when moving)."""
    return _half_wave(ctx, 1, moving) + _half_wave(ctx, -1, moving)


def iota1(ctx: FieldContext, moving: bool = False, r: FieldElement | None = None) -> SymExpr:
    if r is None:
        r = periodic_constants(ctx)["r"]
    return _half_wave(ctx, 1, moving) * r + _half_wave(ctx, -1, moving)


def iota2(ctx: FieldContext, moving: bool = False) -> SymExpr:
    """e^{k x} + e^{-k x} + A(e^{ikby} + e^{-ikby}), i.e. 2(cosh kx + A cos kby)."""
    c = periodic_constants(ctx)
    k, b = c["k"], c["b"]
    kt = -k if moving else 0
    ky = k * b * ctx.i
    return (
        SymExpr.exp(ctx, k, 0, kt)
        + SymExpr.exp(ctx, -k, 0, -kt if moving else 0)
        + SymExpr.exp(ctx, 0, ky, 0) * ctx.A
        + SymExpr.exp(ctx, 0, -ky, 0) * ctx.A
    )


def gamma_k(ctx: FieldContext) -> SymExpr:
    """cosh(kx) + A cosh(kbiy) as an exp-polynomial (= iota2 / 2)."""
    return iota2(ctx) * (ctx.one() / 2)


# ---------------------------------------------------------------------------
# Backlund operators


def op_first(f, g, mu, lam):
    """(D_x^2 + mu D_x + (i/sqrt3) D_y - lambda) f.g"""
    ctx = _ctx_of(f, g)
    i_over = ctx.i * ctx.sqrt3 / 3
    out = hirota(2, 0, 0, f, g) + hirota(1, 0, 0, f, g) * mu + hirota(0, 1, 0, f, g) * i_over
    if not _is_zero(lam):
        out = out - f * g * lam
    return out


def op_second(f, g, mu, lam, nu, static: bool = False):
    """(D_t + 3 lambda D_x - sqrt3 i mu D_y + D_x^3 - sqrt3 i D_x D_y + nu) f.g

    With static=True the profiles are functions of (x, y) in the travelling
    frame and D_t acts as -D_x.
    """
    ctx = _ctx_of(f, g)
    si = ctx.i * ctx.sqrt3
    dx1 = hirota(1, 0, 0, f, g)
    if static:
        out = dx1 * (lam * 3 - 1)
    else:
        out = hirota(0, 0, 1, f, g) + dx1 * (lam * 3)
    out = out - hirota(0, 1, 0, f, g) * (si * mu) + hirota(3, 0, 0, f, g) - hirota(1, 1, 0, f, g) * si
    if not _is_zero(nu):
        out = out + f * g * nu
    return out


def _is_zero(v) -> bool:
    return v.is_zero() if isinstance(v, FieldElement) else not v


def _ctx_of(*objs):
    for o in objs:
        ctx = getattr(o, "ctx", None)
        if isinstance(ctx, FieldContext):
            return ctx
    raise TypeError("cannot infer a field context")


def kp_bilinear(f, g):
    return hirota(1, 0, 1, f, g) + hirota(4, 0, 0, f, g) - hirota(0, 2, 0, f, g)


def verify_operator_identity_back(f: SymExpr, g: SymExpr, mu, nu, lam) -> SymExpr:
    """LHS - RHS of the bilinear operator identity linking KP-I to the Backlund pair."""
    ctx = _ctx_of(f, g)
    half = FieldElement.from_rational(1, ctx) / 2
    lhs = (kp_bilinear(f, f) * (g * g) - kp_bilinear(g, g) * (f * f)) * half
    fg = f * g
    first = op_first(f, g, mu, lam)
    second = op_second(f, g, mu, lam, nu)
    rhs = (
        hirota(1, 0, 0, second, fg)
        + hirota(1, 0, 0, first, hirota(1, 0, 0, g, f)) * 3
        + hirota(0, 1, 0, first, fg) * (ctx.i * ctx.sqrt3)
    )
    return lhs - rhs


def linearized_kp(eta, tau):
    """(-D_x^2 + D_x^4 - D_y^2) eta.tau in the travelling frame."""
    return -hirota(2, 0, 0, eta, tau) + hirota(4, 0, 0, eta, tau) - hirota(0, 2, 0, eta, tau)


# ---------------------------------------------------------------------------
# Backlund systems


def backlund_params(system_id: str, ctx: FieldContext | None = None) -> dict:
    """Parameters and (moving) tau pair of a named Backlund system."""
    if system_id in ("b1", "b2"):
        c = ctx if ctx is not None else LUMP
        s3 = c.sqrt3
        t0, t1, t2 = (travelling(t) for t in lump_taus(c))
        mu = s3 / 3 if system_id == "b1" else -s3 / 3
        pair = (t0, t1) if system_id == "b1" else (t1, t2)
        zero = c.zero()
        return {"mu": mu, "lam": zero, "nu": zero, "pair": pair}
    if system_id in ("B1", "iota1"):
        if ctx is None or ctx.is_lump:
            raise ValueError(f"system {system_id} needs a periodic context")
        c = periodic_constants(ctx)
        k = c["k"]
        if system_id == "B1":
            mu = c["mu"]
            pair = (SymExpr.const(1, ctx), iota(ctx, moving=True))
        else:
            mu = c["mu_star"]
            pair = (iota1(ctx, moving=True), iota2(ctx, moving=True))
        return {"mu": mu, "lam": c["lam"], "nu": -(k * k * mu * 3) / 4, "pair": pair}
    raise ValueError(f"unknown Backlund system {system_id!r}")


def verify_backlund(system_id: str, ctx: FieldContext | None = None, pair=None) -> list[SymExpr]:
    """Residuals of both equations of the named system (all zero when it holds).

    ``pair`` overrides the (tau_old, tau_new) couple, e.g. for corruption tests.
    """
    p = backlund_params(system_id, ctx)
    f, g = pair if pair is not None else p["pair"]
    return [
        op_first(f, g, p["mu"], p["lam"]),
        op_second(f, g, p["mu"], p["lam"], p["nu"]),
    ]


# ---------------------------------------------------------------------------
# linearized Backlund pairs and the third-order identities


@dataclass(frozen=True)
class BacklundPair:
    """Static Backlund pair tau_old -> tau_new with parameters (mu, lambda, nu).

    Linearizing at (tau_old, tau_new) with tau_old -> tau_old + phi and
    tau_new -> tau_new + eta gives L phi = G eta, M phi = N eta.
    """

    ctx: FieldContext
    mu: FieldElement
    lam: FieldElement
    nu: FieldElement
    tau_old: SymExpr
    tau_new: SymExpr

    def L(self, phi):
        return op_first(phi, self.tau_new, self.mu, self.lam)

    def G(self, eta):
        return -op_first(self.tau_old, eta, self.mu, self.lam)

    def M(self, phi):
        return op_second(phi, self.tau_new, self.mu, self.lam, self.nu, static=True)

    def N(self, eta):
        return -op_second(self.tau_old, eta, self.mu, self.lam, self.nu, static=True)

    def log_dx(self) -> RationalSymExpr:
        return self.tau_new.dx() / self.tau_new

    def eliminate(self, first, second):
        """3 d_x(first) + (3 mu - 6 tau_x/tau) first + second.

        This combination removes d_y phi from the second equation using the
        first one; applied to (L phi, M phi) it is free of y-jets of phi.
        """
        w = RationalSymExpr.of(SymExpr.const(self.mu * 3, self.ctx)) - self.log_dx() * 6
        return first.dx() * 3 + first * w + second

    def phi_rule(self):
        """The third-order ODE for phi solved for phi_xxx."""
        phi = JetExpr.symbol(self.ctx, "phi")
        eta = JetExpr.symbol(self.ctx, "eta")
        residual = self.eliminate(self.L(phi), self.M(phi)) - self.eliminate(self.G(eta), self.N(eta))
        lead = ("phi", 3, 0)
        bad = [s for s in residual.symbols() if s[0] == "phi" and s[2] > 0]
        if bad:
            raise ArithmeticError(f"y-jets of phi survived the elimination: {bad}")
        c3 = residual.coefficient(lead)
        if c3.dens or not (c3.num - self.tau_new * 4).is_zero():
            raise ArithmeticError("unexpected leading coefficient of the third-order ODE")
        rest = residual - JetExpr({(lead,): c3}, self.ctx)
        return lead, rest * (-(FieldElement.from_rational(1, self.ctx) / 4)) / self.tau_new, residual

    def eta_rule(self):
        """Linearized bilinear KP-I at tau_new solved for eta_xxxx."""
        eta = JetExpr.symbol(self.ctx, "eta")
        eq = linearized_kp(eta, self.tau_new)
        lead = ("eta", 4, 0)
        c4 = eq.coefficient(lead)
        if c4.dens or not (c4.num - self.tau_new).is_zero():
            raise ArithmeticError("unexpected leading coefficient of the linearized equation")
        rest = eq - JetExpr({(lead,): c4}, self.ctx)
        return lead, -rest / self.tau_new

    def phi0(self):
        phi = JetExpr.symbol(self.ctx, "phi")
        eta = JetExpr.symbol(self.ctx, "eta")
        return self.L(phi) - self.G(eta)

    def reducer(self) -> Reducer:
        lp, rp, _ = self.phi_rule()
        le, re = self.eta_rule()
        return Reducer({lp: rp, le: re})


def third_order_pair(which: str, ctx: FieldContext | None = None) -> BacklundPair:
    if which in ("p1", "P4"):
        c = LUMP if ctx is None or not ctx.is_lump else ctx
        t0, t1, t2 = lump_taus(c)
        s3 = c.sqrt3
        zero = c.zero()
        if which == "p1":
            return BacklundPair(c, s3 / 3, zero, zero, t0, t1)
        return BacklundPair(c, -s3 / 3, zero, zero, t1, t2)
    if which in ("inh_case", "P5"):
        if ctx is None or ctx.is_lump:
            raise ValueError(f"{which} needs a periodic context")
        pc = periodic_constants(ctx)
        k = pc["k"]
        mu = pc["mu"] if which == "inh_case" else pc["mu_star"]
        nu = -(k * k * mu * 3) / 4
        if which == "inh_case":
            return BacklundPair(ctx, mu, pc["lam"], nu, SymExpr.const(1, ctx), iota(ctx))
        return BacklundPair(ctx, mu, pc["lam"], nu, iota1(ctx), iota2(ctx))
    raise ValueError(f"unknown identity {which!r}")


def third_order_residual(pair: BacklundPair, coeffs) -> JetExpr:
    """d_x^3 Phi0 - a d_x^2 Phi0 - b d_x Phi0 - c Phi0, reduced and cleared."""
    a, b, c = coeffs
    red = pair.reducer()
    p0 = pair.phi0()
    d1 = p0.dx()
    d2 = d1.dx()
    d3 = d2.dx()
    expr = d3 - d2 * a - d1 * b - p0 * c
    return red.reduce(expr).cleared()[0]


def verify_third_order_identity(which: str, ctx: FieldContext | None = None) -> JetExpr:
    """Residual of the stated third-order ODE for Phi0 after jet reduction."""
    from .fixtures import third_order_coefficients

    pair = third_order_pair(which, ctx)
    return third_order_residual(pair, third_order_coefficients(which, pair))
