"""Scalar (lowered) formulas.

Lowering a group formula replaces each group variable x by one scalar
variable per coordinate (x.1 most significant).  Every atom of a lowered
formula lives entirely inside a single coordinate, so each atom is a
linear constraint over variables of one sort: a discrete coordinate
behaves like the integers with congruences, a dense one like the
rationals without them.

Atoms are kept in a canonical homogeneous form (expr < 0, expr = 0,
expr ~ 0 mod m) and the smart constructors normalize aggressively:
ground atoms evaluate away, contents are divided out, discrete strict
bounds are tightened to integers.  The constructors also charge an
optional node budget so quantifier elimination can fail fast instead of
blowing up.

All expression and formula nodes are hash-consed: structurally equal
terms are the same object, equality and hashing are identity, and each
node caches its free-variable set.  Elimination output is therefore a
DAG with heavy sharing, and the traversals here (substitution,
evaluation, size) memoize on node identity so they run in DAG size, not
tree size.
"""

from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import BudgetExceeded, FormulaError
from .groups import GroupSpec


@dataclass(frozen=True)
class SVar:
    base: str
    coord: int  # 1-based coordinate index within the group

    def __str__(self) -> str:
        return f"{self.base}.{self.coord}"


def _var_key(item):
    v, _ = item
    return (v.base, v.coord)


class LinExpr:
    """Integer-coefficient linear expression plus a rational constant.
    Interned: equal coefficient tuples and constants yield the same
    object."""

    __slots__ = ("coeffs", "const", "vars_set", "__weakref__")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, coeffs, const):
        coeffs = tuple(coeffs)
        const = Fraction(const)
        key = (coeffs, const)
        obj = cls._table.get(key)
        if obj is None:
            obj = super().__new__(cls)
            object.__setattr__(obj, "coeffs", coeffs)
            object.__setattr__(obj, "const", const)
            object.__setattr__(obj, "vars_set",
                               frozenset(v for v, _ in coeffs))
            cls._table[key] = obj
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("LinExpr is immutable")

    def is_ground(self) -> bool:
        return not self.coeffs

    def coeff(self, v: SVar) -> int:
        for w, c in self.coeffs:
            if w == v:
                return c
        return 0

    def vars(self) -> tuple:
        return tuple(v for v, _ in self.coeffs)

    def __repr__(self) -> str:
        parts = [f"{c}*{v}" for v, c in self.coeffs]
        parts.append(str(self.const))
        return " + ".join(parts)


def lin(coeffs: Mapping[SVar, int] | Iterable, const=0) -> LinExpr:
    if isinstance(coeffs, Mapping):
        items = coeffs.items()
    else:
        items = coeffs
    merged: dict[SVar, int] = {}
    for v, c in items:
        merged[v] = merged.get(v, 0) + c
    cleaned = tuple(sorted(((v, c) for v, c in merged.items() if c != 0),
                           key=_var_key))
    return LinExpr(cleaned, const)


def lin_var(v: SVar) -> LinExpr:
    return LinExpr(((v, 1),), 0)


def lin_const(q) -> LinExpr:
    return LinExpr((), q)


def lin_add(a: LinExpr, b: LinExpr) -> LinExpr:
    m = dict(a.coeffs)
    for v, c in b.coeffs:
        m[v] = m.get(v, 0) + c
    return lin(m, a.const + b.const)


def lin_neg(a: LinExpr) -> LinExpr:
    return LinExpr(tuple((v, -c) for v, c in a.coeffs), -a.const)


def lin_sub(a: LinExpr, b: LinExpr) -> LinExpr:
    return lin_add(a, lin_neg(b))


def lin_scale(k, a: LinExpr) -> LinExpr:
    if k == 0:
        return lin_const(0)
    return LinExpr(tuple((v, k * c) for v, c in a.coeffs),
                   Fraction(k) * a.const)


def lin_subst(e: LinExpr, v: SVar, repl: LinExpr) -> LinExpr:
    c = e.coeff(v)
    if c == 0:
        return e
    rest = LinExpr(tuple((w, k) for w, k in e.coeffs if w != v), e.const)
    return lin_add(rest, lin_scale(c, repl))


# --- formula nodes ----------------------------------------------------------


class _Node:
    """Interned immutable formula node: equality is identity."""

    __slots__ = ("fv", "__weakref__")

    def __init__(self, *args, **kwargs):
        pass

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def _intern(cls, key, build):
        table = cls._table
        obj = table.get(key)
        if obj is None:
            obj = super().__new__(cls)
            build(obj)
            table[key] = obj
        return obj

    @staticmethod
    def _set(obj, **fields):
        for k, v in fields.items():
            object.__setattr__(obj, k, v)


class SBool(_Node):
    __slots__ = ("value",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, value):
        value = bool(value)
        return cls._intern(value, lambda o: cls._set(
            o, value=value, fv=frozenset()))

    def __repr__(self):
        return "TRUE" if self.value else "FALSE"


class SLt(_Node):
    __slots__ = ("expr",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, expr):
        return cls._intern(expr, lambda o: cls._set(
            o, expr=expr, fv=expr.vars_set))

    def __repr__(self):
        return f"({self.expr!r} < 0)"


class SEq(_Node):
    __slots__ = ("expr",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, expr):
        return cls._intern(expr, lambda o: cls._set(
            o, expr=expr, fv=expr.vars_set))

    def __repr__(self):
        return f"({self.expr!r} = 0)"


class SCongr(_Node):
    __slots__ = ("modulus", "expr")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, modulus, expr):
        modulus = int(modulus)
        return cls._intern((modulus, expr), lambda o: cls._set(
            o, modulus=modulus, expr=expr, fv=expr.vars_set))

    def __repr__(self):
        return f"({self.expr!r} ~ 0 mod {self.modulus})"


class SNot(_Node):
    __slots__ = ("body",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, body):
        return cls._intern(body, lambda o: cls._set(
            o, body=body, fv=body.fv))

    def __repr__(self):
        return f"~{self.body!r}"


def _union_fv(items):
    out = frozenset()
    for it in items:
        out |= it.fv
    return out


class SAnd(_Node):
    __slots__ = ("items",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, items):
        items = tuple(items)
        return cls._intern(items, lambda o: cls._set(
            o, items=items, fv=_union_fv(items)))

    def __repr__(self):
        return "(" + " & ".join(map(repr, self.items)) + ")"


class SOr(_Node):
    __slots__ = ("items",)
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, items):
        items = tuple(items)
        return cls._intern(items, lambda o: cls._set(
            o, items=items, fv=_union_fv(items)))

    def __repr__(self):
        return "(" + " | ".join(map(repr, self.items)) + ")"


class SExists(_Node):
    __slots__ = ("var", "body")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, var, body):
        return cls._intern((var, body), lambda o: cls._set(
            o, var=var, body=body, fv=body.fv - {var}))

    def __repr__(self):
        return f"(E {self.var} . {self.body!r})"


class SForall(_Node):
    __slots__ = ("var", "body")
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, var, body):
        return cls._intern((var, body), lambda o: cls._set(
            o, var=var, body=body, fv=body.fv - {var}))

    def __repr__(self):
        return f"(A {self.var} . {self.body!r})"


SFormula = Union[SBool, SLt, SEq, SCongr, SNot, SAnd, SOr, SExists, SForall]

TRUE = SBool(True)
FALSE = SBool(False)


# --- node budget ------------------------------------------------------------

_local = threading.local()


class budget_scope:
    """Context manager charging scalar-node construction against a limit."""

    def __init__(self, limit: Optional[int]) -> None:
        self.limit = limit
        self.used = 0

    def __enter__(self):
        self.prev = getattr(_local, "budget", None)
        _local.budget = self
        return self

    def __exit__(self, *exc):
        _local.budget = self.prev
        return False

    def charge(self, amount: int = 1) -> None:
        self.used += amount
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(
                f"node budget exhausted ({self.used} > {self.limit})")


def _charge(amount: int = 1) -> None:
    b = getattr(_local, "budget", None)
    if b is not None:
        b.charge(amount)


# --- sorts ------------------------------------------------------------------


def kind_of(g: GroupSpec, v: SVar) -> str:
    if not 1 <= v.coord <= g.n:
        raise FormulaError(f"scalar variable {v} outside group of rank {g.n}")
    return g.kinds[v.coord - 1]


def atom_kind(g: GroupSpec, expr: LinExpr) -> str:
    """The common sort of an atom's variables.  Atoms never mix sorts
    because lowering keeps every atom inside one coordinate."""
    kinds = {kind_of(g, v) for v in expr.vars_set}
    if len(kinds) != 1:
        raise FormulaError(f"atom mixes sorts: {expr!r}")
    return kinds.pop()


# --- smart constructors -----------------------------------------------------


def _content(e: LinExpr) -> int:
    return math.gcd(*(abs(c) for _, c in e.coeffs)) if e.coeffs else 0


def mk_lt(g: GroupSpec, e: LinExpr) -> SFormula:
    _charge()
    if e.is_ground():
        return SBool(e.const < 0)
    d = _content(e)
    if atom_kind(g, e) == "Z":
        # integer variables: divide out the content and tighten, using
        # sum(a/d * v) < -c/d  iff  sum(a/d * v) <= ceil(-c/d) - 1
        assert e.const.denominator == 1
        t = math.ceil(Fraction(-int(e.const), d)) - 1
        coeffs = tuple((v, c // d) for v, c in e.coeffs)
        return SLt(LinExpr(coeffs, -(t + 1)))
    coeffs = tuple((v, c // d) for v, c in e.coeffs)
    return SLt(LinExpr(coeffs, e.const / d))


def mk_le(g: GroupSpec, e: LinExpr) -> SFormula:
    # e <= 0  ==  not (0 < e); dense sorts need the disjunction with equality
    if e.is_ground():
        return SBool(e.const <= 0)
    if atom_kind(g, e) == "Z":
        return mk_lt(g, lin_add(e, lin_const(-1)))
    return mk_or([mk_lt(g, e), mk_eq(g, e)])


def mk_eq(g: GroupSpec, e: LinExpr) -> SFormula:
    _charge()
    if e.is_ground():
        return SBool(e.const == 0)
    d = _content(e)
    if atom_kind(g, e) == "Z":
        assert e.const.denominator == 1
        if int(e.const) % d != 0:
            return FALSE
    coeffs = tuple((v, c // d) for v, c in e.coeffs)
    const = e.const / d
    if coeffs[0][1] < 0:
        coeffs = tuple((v, -c) for v, c in coeffs)
        const = -const
    return SEq(LinExpr(coeffs, const))


def mk_congr(g: GroupSpec, m: int, e: LinExpr) -> SFormula:
    _charge()
    if m < 1:
        raise FormulaError(f"congruence modulus {m} must be >= 1")
    if e.is_ground():
        if e.const.denominator != 1:
            return FALSE
        return SBool(int(e.const) % m == 0)
    if atom_kind(g, e) == "Q":
        # dense coordinates are divisible: every congruence is trivial
        return TRUE
    assert e.const.denominator == 1
    if m == 1:
        return TRUE
    d = math.gcd(_content(e), m)
    c = int(e.const)
    if d > 1:
        if c % d != 0:
            return FALSE
        e = LinExpr(tuple((v, k // d) for v, k in e.coeffs), c // d)
        m = m // d
        if m == 1:
            return TRUE
        c = int(e.const)
    coeffs = tuple((v, k % m) for v, k in e.coeffs)
    reduced = lin(coeffs, c % m)
    if reduced.is_ground():
        return SBool(int(reduced.const) % m == 0)
    return SCongr(m, reduced)


def mk_not(f: SFormula) -> SFormula:
    _charge()
    if isinstance(f, SBool):
        return SBool(not f.value)
    if isinstance(f, SNot):
        return f.body
    return SNot(f)


def _flatten(items, cls, absorb: SBool):
    out = []
    seen = set()
    for it in items:
        if isinstance(it, SBool):
            if it.value == absorb.value:
                return None
            continue
        sub = it.items if isinstance(it, cls) else (it,)
        for s in sub:
            if s not in seen:
                seen.add(s)
                out.append(s)
    return out


def mk_and(items: Iterable[SFormula]) -> SFormula:
    _charge()
    out = _flatten(items, SAnd, FALSE)
    if out is None:
        return FALSE
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return SAnd(out)


def mk_or(items: Iterable[SFormula]) -> SFormula:
    _charge()
    out = _flatten(items, SOr, TRUE)
    if out is None:
        return TRUE
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return SOr(out)


def mk_exists(v: SVar, body: SFormula) -> SFormula:
    _charge()
    if isinstance(body, SBool):
        return body
    return SExists(v, body)


def mk_forall(v: SVar, body: SFormula) -> SFormula:
    _charge()
    if isinstance(body, SBool):
        return body
    return SForall(v, body)


# --- traversal --------------------------------------------------------------


def s_free_vars(f: SFormula) -> frozenset:
    return f.fv


def s_subst(g: GroupSpec, f: SFormula, v: SVar, repl: LinExpr,
            _memo: Optional[dict] = None) -> SFormula:
    """Substitute a linear expression for a variable, renormalizing
    atoms.  Subtrees not mentioning the variable are shared, not
    copied."""
    if v not in f.fv:
        return f
    if _memo is None:
        _memo = {}
    hit = _memo.get(f)
    if hit is not None:
        return hit
    if isinstance(f, SLt):
        out = mk_lt(g, lin_subst(f.expr, v, repl))
    elif isinstance(f, SEq):
        out = mk_eq(g, lin_subst(f.expr, v, repl))
    elif isinstance(f, SCongr):
        out = mk_congr(g, f.modulus, lin_subst(f.expr, v, repl))
    elif isinstance(f, SNot):
        out = mk_not(s_subst(g, f.body, v, repl, _memo))
    elif isinstance(f, SAnd):
        out = mk_and(s_subst(g, it, v, repl, _memo) for it in f.items)
    elif isinstance(f, SOr):
        out = mk_or(s_subst(g, it, v, repl, _memo) for it in f.items)
    elif isinstance(f, (SExists, SForall)):
        if f.var == v or f.var in repl.vars_set:
            raise FormulaError("substitution under a capturing quantifier")
        body = s_subst(g, f.body, v, repl, _memo)
        ctor = mk_exists if isinstance(f, SExists) else mk_forall
        out = ctor(f.var, body)
    else:
        raise FormulaError(f"unknown scalar node {f!r}")
    _memo[f] = out
    return out


def s_is_qf(f: SFormula) -> bool:
    if isinstance(f, (SBool, SLt, SEq, SCongr)):
        return True
    if isinstance(f, SNot):
        return s_is_qf(f.body)
    if isinstance(f, (SAnd, SOr)):
        return all(s_is_qf(it) for it in f.items)
    return False


def expr_value(e: LinExpr, env: Mapping[SVar, object]) -> Fraction:
    total = e.const
    for v, c in e.coeffs:
        if v not in env:
            raise FormulaError(f"no value for {v} in evaluation environment")
        total += c * Fraction(env[v])
    return total


def s_eval(g: GroupSpec, f: SFormula, env: Mapping[SVar, object]) -> bool:
    """Evaluate a quantifier-free scalar formula pointwise.  Shared
    subformulas are evaluated once."""
    memo: dict = {}

    def ev(node) -> bool:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, SBool):
            out = node.value
        elif isinstance(node, SLt):
            out = expr_value(node.expr, env) < 0
        elif isinstance(node, SEq):
            out = expr_value(node.expr, env) == 0
        elif isinstance(node, SCongr):
            val = expr_value(node.expr, env)
            out = val.denominator == 1 and int(val) % node.modulus == 0
        elif isinstance(node, SNot):
            out = not ev(node.body)
        elif isinstance(node, SAnd):
            out = all(ev(it) for it in node.items)
        elif isinstance(node, SOr):
            out = any(ev(it) for it in node.items)
        else:
            raise FormulaError("s_eval requires a quantifier-free formula")
        memo[node] = out
        return out

    return ev(f)


def _print_expr_sides(e: LinExpr) -> tuple:
    parts = []
    for v, c in e.coeffs:
        parts.append(str(v) if c == 1 else f"(* {c} {v})")
    lhs = parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"
    return lhs, -e.const


def print_scalar(f: SFormula) -> str:
    """Readable s-expression form, scalar variables printed base.coord
    and the constant moved to the right-hand side."""
    if isinstance(f, SBool):
        return "true" if f.value else "false"
    if isinstance(f, (SLt, SEq)):
        lhs, rhs = _print_expr_sides(f.expr)
        op = "<" if isinstance(f, SLt) else "="
        return f"({op} {lhs} (c {rhs}))"
    if isinstance(f, SCongr):
        lhs, rhs = _print_expr_sides(f.expr)
        r = int(rhs) % f.modulus
        return f"(congr {f.modulus} {lhs} (c {r}))"
    if isinstance(f, SNot):
        return f"(not {print_scalar(f.body)})"
    if isinstance(f, (SAnd, SOr)):
        op = "and" if isinstance(f, SAnd) else "or"
        return f"({op} " + " ".join(print_scalar(x) for x in f.items) + ")"
    if isinstance(f, (SExists, SForall)):
        op = "exists" if isinstance(f, SExists) else "forall"
        return f"({op} ({f.var}) {print_scalar(f.body)})"
    raise FormulaError(f"unknown scalar node {f!r}")


def s_size(f: SFormula, _seen: Optional[set] = None) -> int:
    """Number of distinct nodes in the formula DAG."""
    if _seen is None:
        _seen = set()
    if f in _seen:
        return 0
    _seen.add(f)
    if isinstance(f, (SBool, SLt, SEq, SCongr)):
        return 1
    if isinstance(f, SNot):
        return 1 + s_size(f.body, _seen)
    if isinstance(f, (SAnd, SOr)):
        return 1 + sum(s_size(it, _seen) for it in f.items)
    if isinstance(f, (SExists, SForall)):
        return 1 + s_size(f.body, _seen)
    raise FormulaError(f"unknown scalar node {f!r}")
