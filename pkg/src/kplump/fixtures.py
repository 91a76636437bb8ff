"""Displayed formulas, transcribed as text and evaluated exactly.

Each display is a string in a tiny arithmetic language (Python syntax via
``ast``): numbers, + - * / **, names bound by an environment and exp(linear
form). Keeping the transcription as text makes corrupt-one-token mutation
testing straightforward and keeps the fixtures close to the source formulas.

Names available in every environment: x, y, i, s3 (sqrt 3), z = x + iy,
zb = x - iy, tau0, tau1, tau1b (complex conjugate of tau1), tau2. Periodic
environments add k, b, p, lam, mu, mu_s, A, r, w = k(x - py)/2, th = tanh w,
iota, iota1, iota2 and the derivatives iota_x, iota2_xy, ... of the last two.
"""

from __future__ import annotations

import ast
import io
import tokenize
from contextlib import contextmanager
from fractions import Fraction

from .numfield import LUMP, FieldContext, FieldElement
from .symexpr import ZERO_FREQ, RationalSymExpr, SymExpr, Vars

# ---------------------------------------------------------------------------
# evaluator


def _level(v) -> int:
    if isinstance(v, RationalSymExpr):
        return 3
    if isinstance(v, SymExpr):
        return 2
    if isinstance(v, FieldElement):
        return 1
    return 0


def _lift(v, level: int, ctx):
    cur = _level(v)
    if cur >= level:
        return v
    if level == 1:
        return FieldElement.from_rational(v, ctx)
    if level == 2:
        return SymExpr.const(v, ctx)
    return RationalSymExpr.of(_lift(v, 2, ctx))


def _binop(op, a, b, ctx):
    if isinstance(op, ast.Pow):
        if _level(b) != 0 or Fraction(b).denominator != 1:
            raise ValueError("only integer powers are allowed")
        n = int(b)
        if _level(a) == 3:
            out = RationalSymExpr.of(SymExpr.const(1, ctx))
            for _ in range(n):
                out = out * a
            return out
        return a ** n
    lvl = max(_level(a), _level(b))
    if isinstance(op, ast.Div):
        if lvl == 0:
            return Fraction(a) / Fraction(b)
        if _level(b) >= 2:
            return _lift(a, 3, ctx) / _lift(b, 3, ctx)
        return _lift(a, max(lvl, 1), ctx) / _lift(b, 1, ctx)
    if lvl == 0:
        a, b = Fraction(a), Fraction(b)
    else:
        a, b = _lift(a, lvl, ctx), _lift(b, lvl, ctx)
    if isinstance(op, ast.Add):
        return a + b
    if isinstance(op, ast.Sub):
        return a - b
    if isinstance(op, ast.Mult):
        return a * b
    raise ValueError(f"operator {type(op).__name__} not allowed")


def _exp(arg, ctx) -> SymExpr:
    s = _lift(arg, 2, ctx)
    if not isinstance(s, SymExpr):
        raise ValueError("exp needs a polynomial argument")
    coeffs = [FieldElement.from_rational(0, ctx)] * 3
    for (a, b, c, f), v in s.terms.items():
        if f is not ZERO_FREQ or a + b + c != 1:
            raise ValueError("exp argument must be a linear form without constant term")
        coeffs[(a, b, c).index(1)] = v
    return SymExpr.exp(ctx, *coeffs)


def evaluate(text: str, env: dict):
    """Evaluate a display string; the result is normalized to the lowest level."""
    ctx = env["__ctx__"]
    tree = ast.parse(text.strip(), mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ValueError(f"only integer literals allowed, got {node.value!r}")
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env or node.id.startswith("__"):
                raise NameError(f"unknown name {node.id!r} in display")
            return env[node.id]
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
        if isinstance(node, ast.BinOp):
            r = node.right
            if isinstance(node.op, ast.Div) and isinstance(r, ast.BinOp) and isinstance(r.op, ast.Pow):
                # keep base^n factored so denominators share bases
                base, n = ev(r.left), ev(r.right)
                if isinstance(base, SymExpr) and _level(n) == 0 and Fraction(n).denominator == 1:
                    num = _lift(ev(node.left), 3, ctx)
                    return num * RationalSymExpr(SymExpr.const(1, ctx), {base: int(n)})
            return _binop(node.op, ev(node.left), ev(node.right), ctx)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "exp":
            if len(node.args) != 1 or node.keywords:
                raise ValueError("exp takes one argument")
            return _exp(ev(node.args[0]), ctx)
        raise ValueError(f"unsupported syntax: {ast.dump(node)}")

    out = ev(tree)
    if isinstance(out, RationalSymExpr) and not out.dens:
        out = out.num
    return out


def as_rational_expr(v, ctx) -> RationalSymExpr:
    return _lift(v, 3, ctx)


def as_symexpr(v, ctx) -> SymExpr:
    if isinstance(v, RationalSymExpr):
        if v.dens:
            raise ValueError("display is not a polynomial")
        return v.num
    return _lift(v, 2, ctx)


# ---------------------------------------------------------------------------
# environments


def lump_env(ctx: FieldContext = LUMP) -> dict:
    from .bilinear import lump_taus

    v = Vars(ctx)
    tau0, tau1, tau2 = lump_taus(ctx)
    return {
        "__ctx__": ctx,
        "x": v.x,
        "y": v.y,
        "i": ctx.i,
        "s3": ctx.sqrt3,
        "z": v.x + v.y * ctx.i,
        "zb": v.x - v.y * ctx.i,
        "tau0": tau0,
        "tau1": tau1,
        "tau1b": tau1.conjugate(),
        "tau2": tau2,
    }


def _derivative_names(env: dict, name: str, f: SymExpr):
    env[name + "_x"] = f.dx()
    env[name + "_xx"] = f.dx(2)
    env[name + "_xxx"] = f.dx(3)
    env[name + "_y"] = f.dy()
    env[name + "_xy"] = f.dx().dy()


def periodic_env(ctx: FieldContext) -> dict:
    from .bilinear import iota, iota1, iota2, periodic_constants

    env = lump_env(ctx)
    pc = periodic_constants(ctx)
    io = iota(ctx)
    w = (env["x"] - env["y"] * pc["p"]) * (pc["k"] / 2)
    ew = SymExpr.exp(ctx, pc["k"] / 2, -(pc["k"] * pc["p"]) / 2)
    ewm = SymExpr.exp(ctx, -pc["k"] / 2, pc["k"] * pc["p"] / 2)
    env.update(
        k=pc["k"], b=pc["b"], p=pc["p"], lam=pc["lam"], mu=pc["mu"], mu_s=pc["mu_star"],
        A=ctx.A, r=pc["r"], w=w, th=(ew - ewm) / io,
        iota=io, iota1=iota1(ctx), iota2=iota2(ctx),
    )
    _derivative_names(env, "iota", io)
    _derivative_names(env, "iota2", env["iota2"])
    return env


def env_for(ctx: FieldContext | None) -> dict:
    if ctx is None or ctx.is_lump:
        return lump_env()
    return periodic_env(ctx)


# ---------------------------------------------------------------------------
# displays: explicit functions


LUMP_FUNCTIONS = {
    # homogeneous solutions of the second-order equation for g = phi'
    "g1": "tau1 - s3/2*tau1**2",
    # stated as tau1*exp(-(s3/2)*tau1); the constant factor exp(-3/2) is dropped
    "g2": "tau1*exp(-s3/2*(x + i*y))",
    "W": "3/4*tau1**3*exp(-s3/2*(x + i*y))",
    # kernel of (L1, M1)
    "xi0": "1",
    "xi1": "1/2*tau1**2 - s3/6*tau1**3",
    "xi2": "(s3/2*tau1 + 1)*exp(-s3/2*x + s3/4*y*i)",
    # kernel of (L2, M2); zb is x - yi
    "zeta0": "tau1",
    "zeta1": "tau1*(zb**3/3 + zb**2/s3 + 3*x - 11*y*i) - 12*(y - s3*i)*(y + i/s3)",
    "zeta2": "(x**2 - 8/s3*x + y**2 + 4*y*i/s3 + 7)*exp(s3/2*x + s3*y*i)",
    # homogeneous solutions of T(h) = 0, two stated forms of h1
    "h1": "(x - y*i)**2 + 2/s3*(x - y*i) + 3 + 12*(y - s3*i)*(y + i/s3)/tau1**2",
    "h1_alt": "tau2/(3*tau1**2)*(3*tau2 + 4*s3*(x + tau1b))",
    "h2": "tau2/tau1**2*(x + y*i - s3)*exp(s3/2*x)",
    "W_tilde": "exp(s3/2*x)*tau2**3/tau1**3",
    # solutions of the p-equation obtained from eta = tau2 * kappa
    "p1": "((x + y*i)**2 - 3)/tau2**2",
    "p2": "(8*s3*x - 4*i*s3*y + 3*x**2 + 3*y**2 + 21)*exp(-1/2*s3*x)*tau1/tau2**2",
    "p1_antiderivative": "-z/tau2",
}

# ODEs in x as coefficient lists, lowest order first
LUMP_ODES = {
    "g": ["6 - 2*s3*tau1", "(s3*tau1 - 6)*tau1", "2*tau1**2"],
    "T": [
        "2*(-s3/2*tau2 - 6*x) + tau1*(2*s3*x + 12*x**2/tau2)",
        "3*tau2 + (-s3/2*tau2 - 6*x)*tau1",
        "tau1*tau2",
    ],
    "g4": [
        "6*tau1 + 2*x*(s3*tau1 - 6) + (3/tau1 - s3)*tau2",
        "6*x*tau1 + (s3/2*tau1 - 3)*tau2",
        "tau1*tau2",
    ],
    # the eta-equation of the tau1 -> tau2 pair (tau2 solves it)
    "yita": ["s3/tau1", "3/tau1 - s3", "s3/2*tau1 - 3", "tau1"],
    # phi-part of the stated third-order ODEs
    "s2": ["0", "-4*s3 + 12/tau1", "2*s3*tau1 - 12", "4*tau1"],
    "Eq1": ["-2*s3*x/tau2*tau1b", "2*s3*x + 12*x**2/tau2", "-s3/2*tau2 - 6*x", "tau2"],
}

THETA1_VALUES = {"x": "4*s3", "y": "0", "x**2 - y**2": "8*s3*x", "x*y": "2*s3*i*tau1b"}

FJ_RELATIONS = {
    "x": "x*tau1 - s3*z",
    "y": "y*tau1",
    "x**2 - y**2": "2/3*x**3 + 4/3*s3*x**2 - 4*s3/3*y*i*x - 2*i/3*y**3 + 2/3*s3*y**2 - 14*y*i",
    "x*y": (
        "1/2*x**2*y + 5/6*i*s3*x**2 + 1/6*i*x**3 + (y**2/2*i + s3/3*y)*x"
        " + y**3/6 + s3/6*y**2*i + 5*y"
    ),
}

TH_TABLE = {
    ("M2", "y*tau1"): "-2*s3*x*y + 3*x**2*y + 3*x*i + 2*s3*y**2*i - x**3*i + 3*x*y**2*i + 9*y - y**3 - 6*s3*i",
    ("M2", "z**2"): "6*x**2*y*i - 2*s3*x**2 - 2*s3*y**2 + 2*x**3 - 6*x*y**2 + 12*y*i - 2*y**3*i + 6*s3",
    ("L2", "rho1"): (
        "24*x + 12*s3*x*y*i - 4*s3/9*x**3*y*i + 4*x*y**2 + 4*s3/3*x**2*y**2 - 8/3*y**3*i + 22*s3"
        " + 4*s3/3*x**2 + 4*s3/9*x*y**3*i + 4*s3/3*y**2 - 28*y*i + 2*s3/9*x**4 - 4/3*x**3 + 2*s3/9*y**4"
    ),
    ("M2", "rho1"): (
        "-42 + 4*s3/3*y**3*i - 4*s3/3*x**3 + 4*s3*x**2*y*i - 4/3*x*y**3*i + 4/3*y*x**3*i"
        " - 4*x*y*i + 4*s3*x*y**2 - 8*s3*y*i - 2/3*y**4 - 2/3*x**4 - 4*x**2*y**2 + 16*s3*x + 16*y**2 - 24*x**2"
    ),
    ("L2", "rho2"): (
        "13*y + 10*s3*i - 2*s3/9*x**3*y - 4*s3*x*y - x**2*y + x*y**2*i + 5/3*y**3 + 2*s3/9*x**4*i"
        " + 2*s3/9*y**4*i + 2*s3/9*x*y**3 + 4*s3/3*y**2*i - 1/3*x**3*i + 9*x*i - 2*s3/3*x**2*i"
    ),
    ("M2", "rho2"): (
        "7*y**2*i - 3*s3*x**2*y - 2*x*y + 2/3*x**3*y + 5*s3*y - 9*x**2*i + s3*x*y**2*i"
        " - 15*i - 2/3*y**4*i - 2/3*x**4*i - 2/3*x*y**3 + s3*x*i - s3/3*i*x**3 - s3/3*y**3"
    ),
}

# coefficient triples (a, b, c) of d_x^3 Phi0 = a d_x^2 Phi0 + b d_x Phi0 + c Phi0
THIRD_ORDER = {
    "p1": (
        "-s3/2 + 6/tau1",
        "1/tau1*(2*s3 - 15/tau1)",
        "1/tau1**2*(15/tau1 - 2*s3)",
    ),
    "P4": (
        "12*x/tau2 + s3/2",
        "6/tau2 - 4*s3*x/tau2 - 60*x**2/tau2**2",
        "2*s3*x*tau1b/tau2**2 - s3/tau2 - 36*x/tau2**2 + 8*s3*x**2/tau2**2 + 120*x**3/tau2**3",
    ),
    "inh_case": (
        "-3*mu/2 + 6/iota*iota_x",
        "1/4*k**2 + 6*mu*iota_x/iota + 3*iota_xx/iota - 15*(iota_x/iota)**2",
        (
            "-1/4*k**2*iota_x/iota - 6*mu*(iota_x/iota)**2 + 3*mu/2*iota_xx/iota + 15*(iota_x/iota)**3"
            " - 9*iota_x*iota_xx/iota**2 + iota_xxx/iota"
        ),
    ),
    "P5": (
        "-3*mu_s/2 + 6/iota2*iota2_x",
        "1/4*k**2 + 6*mu_s*iota2_x/iota2 + 3*iota2_xx/iota2 - 15*(iota2_x/iota2)**2",
        (
            "-15*mu_s/2*(iota2_x/iota2)**2 - 1/2*k**2*iota2_x/iota2 + 3/2*mu_s*lam + s3*i/2*iota2_xy/iota2"
            " - s3*i/(2*iota2**2)*iota2_x*iota2_y + 3*mu_s/2*iota2_xx/iota2 + 1/2*iota2_xxx/iota2"
            " - 15/2*iota2_x*iota2_xx/iota2**2 + 15*(iota2_x/iota2)**3"
        ),
    ),
}

PERIODIC_FUNCTIONS = {
    # (ode) solutions rewritten through z = tanh w: 1/(z^2 - 1) = -iota^2/4,
    # z iota^2 = e^{2w} - e^{-2w}, ((z-1)/(z+1))^{3mu/2k} = const * e^{-3mu w/k};
    # constant factors dropped
    "doe3_xi1": "exp(2*w) - exp(-2*w) - 3*mu/k*iota**2",
    "doe3_xi2": "iota*exp(-3*mu/2*(x - p*y))",
    "r": "mu_s*A/(k + mu_s)",
}

PERIODIC_ODES = {
    # homogeneous equation for g = phi' at iota, tanh form
    "tau1": ["-k**2 - 6*mu*k*th + 3*k**2*th**2", "6*mu - 6*k*th", "4"],
    # phi-part of the stated ODE at iota (stated form divided by iota)
    "inh": [
        "0",
        "iota*(3*mu**2 - 1 - 12*mu*iota_x/iota + 12*iota_x**2/iota**2)",
        "iota*(6*mu - 12*iota_x/iota)",
        "4*iota",
    ],
    # phi-part of the stated ODE at iota2, including its zeroth-order coefficient B
    "tau2": [
        (
            "2*iota2_xxx - 6*iota2_x/iota2*iota2_xx + k**2*iota2_x"
            " + 2*s3*i*(-s3*i*mu_s*iota2_x + iota2_y)/iota2*iota2_x - 2*s3*i*iota2_xy - 6*mu_s*lam*iota2"
        ),
        "-k**2*iota2 - 12*mu_s*iota2_x + 12*iota2_x**2/iota2",
        "6*mu_s*iota2 - 12*iota2_x",
        "4*iota2",
    ],
}

# the two stated sums of the reverse system
NG_CLAIMS = {
    "minus": "-k**2/8*(3*k*exp(3/2*k*(x - p*y)) + (9*k - 96*mu)*exp(1/2*k*(x - p*y)))",
    "plus": "-k**2/8*((3*k + 96*mu)*exp(k/2*(3*x + p*y)) + 9*k*exp(k/2*(x + 3*p*y)))",
}
NG_XI = {"minus": "exp(k*(x - p*y))", "plus": "exp(k*(x + p*y))"}


# weights of Theta2 = (1/4)(a G eta / tau1 + b d_x(G eta) + c N eta + d G eta) for the
# tau1 -> tau2 pair; its image should equal the eta-operator of LUMP_ODES["yita"]
THETA2 = {"G/tau1": "6", "dxG": "-3", "N": "1", "G": "s3"}

# Minimal corrections of displays that fail as stated, written as a one-place
# patch (old, new) of the stated text. A mutated display no longer contains
# `old`, so mutations cannot hide behind a correction.
CORRECTIONS = {
    "fn:xi1": ("s3/6*tau1**3", "s3/6*tau1**3 - s3*i*y"),
    "fn:zeta2": ("s3*y*i)", "s3/4*y*i)"),
    "fn:W_tilde": ("exp(s3/2*x)", "s3/2*exp(s3/2*x)"),
    "theta2:G": ("s3", "-s3"),
}


def fixture(text: str, ctx: FieldContext | None = None):
    return evaluate(text, env_for(ctx))


def third_order_coefficients(which: str, pair) -> tuple:
    env = env_for(pair.ctx)
    return tuple(as_rational_expr(evaluate(t, env), pair.ctx) for t in THIRD_ORDER[which])


def all_display_strings() -> list[tuple[str, str]]:
    """(fixture id, text) for every transcribed display; used by mutation tests."""
    out = []
    for k, v in LUMP_FUNCTIONS.items():
        out.append((f"fn:{k}", v))
    for k, vs in LUMP_ODES.items():
        out += [(f"ode:{k}:{j}", v) for j, v in enumerate(vs)]
    for k, v in THETA1_VALUES.items():
        out.append((f"theta1:{k}", v))
    for k, v in FJ_RELATIONS.items():
        out.append((f"fj:{k}", v))
    for k, v in TH_TABLE.items():
        out.append((f"th:{k[0]}:{k[1]}", v))
    for k, vs in THIRD_ORDER.items():
        out += [(f"third:{k}:{j}", v) for j, v in enumerate(vs)]
    for k, v in PERIODIC_FUNCTIONS.items():
        out.append((f"pfn:{k}", v))
    for k, vs in PERIODIC_ODES.items():
        out += [(f"pode:{k}:{j}", v) for j, v in enumerate(vs)]
    for k, v in NG_CLAIMS.items():
        out.append((f"ng:{k}", v))
    for k, v in THETA2.items():
        out.append((f"theta2:{k}", v))
    return out


_TABLES = {
    "fn": LUMP_FUNCTIONS,
    "ode": LUMP_ODES,
    "theta1": THETA1_VALUES,
    "fj": FJ_RELATIONS,
    "th": TH_TABLE,
    "third": THIRD_ORDER,
    "pfn": PERIODIC_FUNCTIONS,
    "pode": PERIODIC_ODES,
    "ng": NG_CLAIMS,
    "theta2": THETA2,
}
_INDEXED = {"ode", "third", "pode"}


def _slot(display_id: str):
    prefix, rest = display_id.split(":", 1)
    table = _TABLES[prefix]
    if prefix in _INDEXED:
        key, idx = rest.rsplit(":", 1)
        return table, key, int(idx)
    if prefix == "th":
        return table, tuple(rest.split(":", 1)), None
    return table, rest, None


def display(display_id: str) -> str:
    table, key, idx = _slot(display_id)
    return table[key] if idx is None else table[key][idx]


def set_display(display_id: str, text: str) -> None:
    table, key, idx = _slot(display_id)
    if idx is None:
        table[key] = text
    else:
        seq = list(table[key])
        seq[idx] = text
        table[key] = type(table[key])(seq) if isinstance(table[key], tuple) else seq


def corrected(display_id: str) -> str | None:
    """The stated display with its documented correction applied, if it still applies."""
    old, new = CORRECTIONS[display_id]
    text = display(display_id)
    return text.replace(old, new, 1) if old in text else None


_SWAPS = {"x": "y", "y": "x", "z": "zb", "zb": "z", "tau1": "tau1b", "tau1b": "tau1",
          "tau2": "tau1", "iota": "iota2", "iota1": "iota", "iota2": "iota",
          "mu": "mu_s", "mu_s": "mu", "k": "b"}


def corrupt(text: str) -> str:
    """Change one token: bump the first integer literal, else swap a variable name.

    A display that is a single token is replaced by a different variable.
    """
    toks = [t for t in tokenize.generate_tokens(io.StringIO(text).readline)
            if t.type in (tokenize.NAME, tokenize.NUMBER, tokenize.OP)]
    if len(toks) == 1:
        return "y" if text.strip() == "x" else "x"
    for t in toks:
        if t.type == tokenize.NUMBER:
            a, b = t.start[1], t.end[1]
            return text[:a] + str(int(t.string) + 1) + text[b:]
    for t in toks:
        if t.type == tokenize.NAME and t.string in _SWAPS:
            a, b = t.start[1], t.end[1]
            return text[:a] + _SWAPS[t.string] + text[b:]
    raise ValueError(f"no mutable token in {text!r}")


@contextmanager
def mutated(display_id: str):
    """Temporarily replace one display by its corrupted form."""
    original = display(display_id)
    set_display(display_id, corrupt(original))
    try:
        yield
    finally:
        set_display(display_id, original)
