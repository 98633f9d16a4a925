"""Quantifier elimination and the decision procedures built on it.

A group formula is lowered to per-coordinate scalar form, then
quantifiers are eliminated innermost first: Cooper's method on discrete
coordinates (coefficient normalization by the lcm, divisibility
literals, the minus-infinity rows, and the smaller of the two bound
sides), and virtual-substitution over test points (minus infinity, each
root, each root plus epsilon) on dense coordinates, which carry no
congruences.

Everything else in the package funnels through `decide`: satisfiable,
equivalent and entails close a formula and decide it, and `witness`
digs a concrete element out of a satisfiable one-variable formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import formulas as fm
from . import scalars as sc
from .errors import FormulaError
from .groups import Element, GroupSpec, element
from .scalars import (
    SAnd, SBool, SCongr, SEq, SExists, SForall, SFormula, SLt, SNot, SOr,
    SVar, budget_scope, kind_of, lin_add, lin_const, lin_neg, lin_var,
    mk_and, mk_congr, mk_eq, mk_exists, mk_le, mk_lt, mk_not, mk_or,
    s_eval, s_free_vars, s_is_qf, s_subst,
)


@dataclass(frozen=True)
class QfFormula:
    """Elimination result: a quantifier-free scalar formula together
    with the group and the surviving free group variables."""

    group: GroupSpec
    free: tuple
    body: SFormula


# --- negation normal form ---------------------------------------------------


def nnf(g: GroupSpec, f: SFormula, positive: bool = True,
        _memo: Optional[dict] = None) -> SFormula:
    """Push negations to literals.  Positive output contains SLt, SEq,
    SCongr and negated SCongr only; discrete sorts absorb the
    trichotomy rewrites exactly, dense sorts split into disjunctions."""
    if _memo is None:
        _memo = {}
    hit = _memo.get((f, positive))
    if hit is not None:
        return hit
    if isinstance(f, SBool):
        out = SBool(f.value == positive)
    elif isinstance(f, SLt):
        out = f if positive else mk_le(g, lin_neg(f.expr))
    elif isinstance(f, SEq):
        if positive:
            out = f
        else:
            out = mk_or([mk_lt(g, f.expr), mk_lt(g, lin_neg(f.expr))])
    elif isinstance(f, SCongr):
        out = f if positive else SNot(f)
    elif isinstance(f, SNot):
        out = nnf(g, f.body, not positive, _memo)
    elif isinstance(f, SAnd):
        ctor = mk_and if positive else mk_or
        out = ctor(nnf(g, it, positive, _memo) for it in f.items)
    elif isinstance(f, SOr):
        ctor = mk_or if positive else mk_and
        out = ctor(nnf(g, it, positive, _memo) for it in f.items)
    else:
        raise FormulaError("negation normal form expects a quantifier-free "
                           f"formula, got {type(f).__name__}")
    _memo[(f, positive)] = out
    return out


def _map_literals(f: SFormula, fn, skip: Optional[SVar] = None,
                  _memo: Optional[dict] = None) -> SFormula:
    """Rebuild an NNF formula, transforming each literal (atom or
    negated congruence) through fn.  Subtrees without the skip variable
    are shared untouched; shared subtrees are rewritten once."""
    if skip is not None and skip not in f.fv:
        return f
    if _memo is None:
        _memo = {}
    hit = _memo.get(f)
    if hit is not None:
        return hit
    if isinstance(f, SBool):
        out = f
    elif isinstance(f, (SLt, SEq, SCongr)):
        out = fn(f, True)
    elif isinstance(f, SNot):
        assert isinstance(f.body, SCongr)
        out = fn(f.body, False)
    elif isinstance(f, SAnd):
        out = mk_and(_map_literals(it, fn, skip, _memo) for it in f.items)
    elif isinstance(f, SOr):
        out = mk_or(_map_literals(it, fn, skip, _memo) for it in f.items)
    else:
        raise FormulaError(
            f"unexpected node in literal map: {type(f).__name__}")
    _memo[f] = out
    return out


def _literals(f: SFormula, out: list, _seen: Optional[set] = None) -> None:
    if _seen is None:
        _seen = set()
    if f in _seen:
        return
    _seen.add(f)
    if isinstance(f, (SLt, SEq, SCongr)):
        out.append((f, True))
    elif isinstance(f, SNot):
        out.append((f.body, False))
    elif isinstance(f, (SAnd, SOr)):
        for it in f.items:
            _literals(it, out, _seen)


# --- Cooper elimination on a discrete coordinate ----------------------------


def _cooper(g: GroupSpec, v: SVar, f: SFormula) -> SFormula:
    # equations on v become conjunctions of bounds so that only strict
    # inequalities and congruence literals mention v
    def split_eq(lit, pos):
        if isinstance(lit, SEq) and lit.expr.coeff(v) != 0:
            assert pos
            return mk_and([mk_le(g, lit.expr), mk_le(g, lin_neg(lit.expr))])
        return lit if pos else mk_not(lit)

    f = _map_literals(f, split_eq, skip=v)

    lits: list = []
    _literals(f, lits)
    delta = 1
    for lit, _ in lits:
        a = lit.expr.coeff(v)
        if a:
            delta = math.lcm(delta, abs(a))

    # substitute y = delta * v: every coefficient of y becomes +-1
    def rescale(lit, pos):
        a = lit.expr.coeff(v)
        if a == 0:
            return lit if pos else mk_not(lit)
        lam = delta // abs(a)
        coeffs = tuple((w, lam * c) if w != v else (w, 1 if a > 0 else -1)
                       for w, c in lit.expr.coeffs)
        expr = sc.LinExpr(coeffs, lam * lit.expr.const)
        if isinstance(lit, SLt):
            out = SLt(expr)
        else:
            out = mk_congr(g, lam * lit.modulus, expr)
        return out if pos else mk_not(out)

    f = _map_literals(f, rescale, skip=v)
    f = mk_and([f, mk_congr(g, delta, lin_var(v))])

    lits = []
    _literals(f, lits)
    lowers, uppers = [], []
    period = 1
    for lit, _ in lits:
        a = lit.expr.coeff(v)
        if isinstance(lit, SCongr):
            if a:
                period = math.lcm(period, lit.modulus)
            continue
        if a == 0:
            continue
        rest = sc.LinExpr(tuple((w, c) for w, c in lit.expr.coeffs
                                if w != v), lit.expr.const)
        if a == 1:
            uppers.append(lin_neg(rest))  # y + r < 0  means  y < -r
        else:
            lowers.append(rest)  # -y + r < 0  means  r < y

    use_lowers = len(lowers) <= len(uppers)

    def at_infinity(lit, pos):
        a = lit.expr.coeff(v)
        if a == 0:
            return lit if pos else mk_not(lit)
        if isinstance(lit, SLt):
            # at -inf every upper bound holds and every lower fails;
            # dually at +inf
            return SBool((a == 1) == use_lowers)
        return lit if pos else mk_not(lit)

    row = _map_literals(f, at_infinity, skip=v)
    bounds = lowers if use_lowers else uppers
    pieces = []
    for j in range(1, period + 1):
        shift = lin_const(j if use_lowers else -j)
        pieces.append(s_subst(g, row, v, shift))
        for b in bounds:
            t = lin_add(b, shift)
            pieces.append(s_subst(g, f, v, t))
    return mk_or(pieces)


# --- dense elimination on a divisible coordinate ----------------------------


def _dense(g: GroupSpec, v: SVar, f: SFormula) -> SFormula:
    lits: list = []
    _literals(f, lits)
    roots = {}
    for lit, _ in lits:
        a = lit.expr.coeff(v)
        if a == 0:
            continue
        assert not isinstance(lit, SCongr), \
            "dense coordinates carry no congruences"
        rest = sc.LinExpr(tuple((w, c) for w, c in lit.expr.coeffs
                                if w != v), lit.expr.const)
        key = (tuple((w, Fraction(c, a)) for w, c in rest.coeffs),
               rest.const / a)
        roots.setdefault(key, (a, rest))

    def subst_at(a, rest, eps):
        # the test point is -rest/a, optionally nudged right by an
        # infinitesimal
        def per_lit(lit, pos):
            c2 = lit.expr.coeff(v)
            if c2 == 0:
                return lit if pos else mk_not(lit)
            assert pos
            rest2 = sc.LinExpr(tuple((w, c) for w, c in lit.expr.coeffs
                                     if w != v), lit.expr.const)
            numer = lin_add(sc.lin_scale(a, rest2), sc.lin_scale(-c2, rest))
            if a < 0:
                numer = lin_neg(numer)
            if isinstance(lit, SEq):
                return SBool(False) if eps else mk_eq(g, numer)
            if not eps:
                return mk_lt(g, numer)
            if c2 < 0:
                return mk_or([mk_lt(g, numer), mk_eq(g, numer)])
            return mk_lt(g, numer)

        return _map_literals(f, per_lit, skip=v)

    def at_minus_inf(lit, pos):
        c2 = lit.expr.coeff(v)
        if c2 == 0:
            return lit if pos else mk_not(lit)
        assert pos
        if isinstance(lit, SEq):
            return SBool(False)
        return SBool(c2 > 0)

    pieces = [_map_literals(f, at_minus_inf, skip=v)]
    for a, rest in roots.values():
        pieces.append(subst_at(a, rest, eps=False))
        pieces.append(subst_at(a, rest, eps=True))
    return mk_or(pieces)


# --- the driver -------------------------------------------------------------


def _eliminate_var(g: GroupSpec, v: SVar, body: SFormula) -> SFormula:
    return _miniscope(g, v, nnf(g, body))


def _eliminate_block(g: GroupSpec, block: list, body: SFormula) -> SFormula:
    """Existentially project a run of variables.  Projection order is free
    inside one block, so variables pinned to a small window go first:
    substituting them folds guard atoms to constants, which usually
    uncovers windows for the remaining coordinates."""
    remaining = list(block)
    body = nnf(g, body)
    while remaining:
        best = None
        for v in remaining:
            if kind_of(g, v) != "Z" or v not in body.fv:
                continue
            w = _constant_window(v, body)
            if w is not None and (best is None or w[1] - w[0] < best[2]):
                best = (v, w, w[1] - w[0])
        if best is not None:
            v, (lo, hi), _ = best
            remaining.remove(v)
            body = mk_or(s_subst(g, body, v, lin_const(t))
                         for t in range(lo, hi + 1))
        else:
            v = remaining.pop()
            body = _miniscope(g, v, body)
    return body


def _miniscope(g: GroupSpec, v: SVar, body: SFormula) -> SFormula:
    # shrink the scope before projecting: the existential distributes
    # over disjunction, and conjuncts without v move outside untouched;
    # each slice then rescales by its own, usually much smaller, lcm
    if v not in body.fv:
        return body
    if isinstance(body, SOr):
        return mk_or(_miniscope(g, v, it) for it in body.items)
    if isinstance(body, SAnd):
        inside = [it for it in body.items if v in it.fv]
        outside = [it for it in body.items if v not in it.fv]
        if outside:
            return mk_and(outside + [_miniscope(g, v, mk_and(inside))])
    if kind_of(g, v) == "Z":
        window = _constant_window(v, body)
        if window is not None:
            lo, hi = window
            return mk_or(s_subst(g, body, v, lin_const(t))
                         for t in range(lo, hi + 1))
        return _cooper(g, v, body)
    return _dense(g, v, body)


_WINDOW_CAP = 64

_UNBOUNDED = (None, None)
_VOID = (0, -1)


def _range_empty(r) -> bool:
    return r[0] is not None and r[1] is not None and r[0] > r[1]


def _var_range(v: SVar, f: SFormula, memo: dict):
    """Integer interval (lo, hi) containing every satisfying value of v,
    None on a side meaning unbounded.  Over-approximate, so always
    sound; only constant-side atoms contribute."""
    hit = memo.get(f)
    if hit is not None:
        return hit
    out = _UNBOUNDED
    if isinstance(f, SBool):
        out = _VOID if not f.value else _UNBOUNDED
    elif isinstance(f, (SLt, SEq)):
        a = f.expr.coeff(v)
        if a != 0 and all(w == v for w, _ in f.expr.coeffs):
            q = Fraction(-f.expr.const, a)
            if isinstance(f, SEq):
                out = (int(q), int(q)) if q.denominator == 1 else _VOID
            elif a > 0:
                out = (None, int(q) - 1 if q.denominator == 1
                       else math.floor(q))
            else:
                out = (int(q) + 1 if q.denominator == 1
                       else math.ceil(q), None)
    elif isinstance(f, SAnd):
        lo = hi = None
        for it in f.items:
            r = _var_range(v, it, memo)
            if _range_empty(r):
                lo, hi = _VOID
                break
            if r[0] is not None:
                lo = r[0] if lo is None else max(lo, r[0])
            if r[1] is not None:
                hi = r[1] if hi is None else min(hi, r[1])
        out = (lo, hi)
    elif isinstance(f, SOr):
        parts = [_var_range(v, it, memo) for it in f.items]
        parts = [r for r in parts if not _range_empty(r)]
        if not parts:
            out = _VOID
        else:
            out = (None if any(r[0] is None for r in parts)
                   else min(r[0] for r in parts),
                   None if any(r[1] is None for r in parts)
                   else max(r[1] for r in parts))
    memo[f] = out
    return out


def _constant_window(v: SVar, body: SFormula):
    """Closed integer interval that constant-side bounds pin v into,
    when it has at most _WINDOW_CAP points; None otherwise."""
    r = _var_range(v, body, {})
    if _range_empty(r):
        return _VOID
    lo, hi = r
    if lo is None or hi is None or hi - lo + 1 > _WINDOW_CAP:
        return None
    return (lo, hi)


def eliminate_scalar(g: GroupSpec, f: SFormula, _memo=None) -> SFormula:
    """Quantifier-free equivalent of an arbitrary scalar formula."""
    if _memo is None:
        _memo = {}
    hit = _memo.get(f)
    if hit is not None:
        return hit
    if isinstance(f, (SBool, SLt, SEq, SCongr)):
        out = f
    elif isinstance(f, SNot):
        out = mk_not(eliminate_scalar(g, f.body, _memo))
    elif isinstance(f, SAnd):
        out = mk_and(eliminate_scalar(g, it, _memo) for it in f.items)
    elif isinstance(f, SOr):
        out = mk_or(eliminate_scalar(g, it, _memo) for it in f.items)
    elif isinstance(f, SExists):
        block, inner = [f.var], f.body
        while isinstance(inner, SExists):
            block.append(inner.var)
            inner = inner.body
        out = _eliminate_block(g, block, eliminate_scalar(g, inner, _memo))
    elif isinstance(f, SForall):
        block, inner = [f.var], f.body
        while isinstance(inner, SForall):
            block.append(inner.var)
            inner = inner.body
        inner = eliminate_scalar(g, inner, _memo)
        out = mk_not(_eliminate_block(g, block, mk_not(inner)))
    else:
        raise FormulaError(f"unknown scalar node {f!r}")
    _memo[f] = out
    return out


def eliminate(g: GroupSpec, f: fm.Formula,
              budget: Optional[int] = None) -> QfFormula:
    """Lower a group formula and eliminate all its quantifiers."""
    free = tuple(sorted(fm.free_vars(f)))
    with budget_scope(budget):
        body = eliminate_scalar(g, fm.lower(g, f))
    assert s_is_qf(body)
    return QfFormula(g, free, body)


def decide(g: GroupSpec, f: fm.Formula, budget: Optional[int] = None) -> bool:
    """Truth value of a sentence."""
    free = fm.free_vars(f)
    if free:
        raise FormulaError(
            f"decide needs a sentence; free variables: {sorted(free)}")
    out = eliminate(g, f, budget).body
    assert isinstance(out, SBool), "closed elimination must ground out"
    return out.value


def _close(f: fm.Formula, ctor) -> fm.Formula:
    for v in sorted(fm.free_vars(f), reverse=True):
        f = ctor(v, f)
    return f


def satisfiable(g: GroupSpec, f: fm.Formula,
                budget: Optional[int] = None) -> bool:
    return decide(g, _close(f, fm.Exists), budget)


def equivalent(g: GroupSpec, a: fm.Formula, b: fm.Formula,
               budget: Optional[int] = None) -> bool:
    """Universal closure of the biconditional."""
    return decide(g, _close(fm.Iff(a, b), fm.Forall), budget)


def entails(g: GroupSpec, a: fm.Formula, b: fm.Formula,
            budget: Optional[int] = None) -> bool:
    return decide(g, _close(fm.Implies(a, b), fm.Forall), budget)


# --- witness extraction -----------------------------------------------------


def _one_var_atoms(f: SFormula, v: SVar) -> list:
    # negations here may wrap arbitrary subformulas, not just literals
    out: list = []
    seen: set = set()

    def walk(node):
        if node in seen:
            return
        seen.add(node)
        if isinstance(node, (SLt, SEq, SCongr)):
            if node.expr.coeff(v) != 0:
                out.append(node)
        elif isinstance(node, SNot):
            walk(node.body)
        elif isinstance(node, (SAnd, SOr)):
            for it in node.items:
                walk(it)

    walk(f)
    return out


def _candidates_z(f: SFormula, v: SVar) -> list:
    period = 1
    bases = {0}
    for atom in _one_var_atoms(f, v):
        if isinstance(atom, SCongr):
            period = math.lcm(period, atom.modulus)
            continue
        a = atom.expr.coeff(v)
        c = atom.expr.const
        root = Fraction(-c, a)
        bases.add(math.floor(root))
        bases.add(math.ceil(root))
    out = set()
    for b in bases:
        for t in range(-period, period + 1):
            out.add(b + t)
    return sorted(out, key=lambda q: (abs(q), q < 0))


def _candidates_q(f: SFormula, v: SVar) -> list:
    roots = set()
    for atom in _one_var_atoms(f, v):
        a = atom.expr.coeff(v)
        roots.add(Fraction(-atom.expr.const, a))
    if not roots:
        return [Fraction(0)]
    rs = sorted(roots)
    cands = set(rs)
    cands.add(rs[0] - 1)
    cands.add(rs[-1] + 1)
    for x, y in zip(rs, rs[1:]):
        cands.add(Fraction(x + y, 2))
    cands.add(Fraction(0))
    return sorted(cands, key=lambda q: (abs(q), q < 0))


def witness(g: GroupSpec, f: fm.Formula,
            budget: Optional[int] = None) -> Optional[Element]:
    """A satisfying element of an existential with one named variable:
    input Exists(x, phi) where phi has exactly the free variable x.
    Coordinates are fixed most significant first, each from a finite
    candidate window derived from the eliminated formula's literals."""
    if not isinstance(f, fm.Exists):
        raise FormulaError("witness expects an existential formula")
    var, phi = f.var, f.body
    if fm.free_vars(phi) - {var}:
        raise FormulaError(
            f"witness body must have exactly the free variable '{var}'")
    with budget_scope(budget):
        low = fm.lower(g, phi)
        svars = [SVar(var, j) for j in range(1, g.n + 1)]
        picked: dict = {}
        current = low
        for j, v in enumerate(svars):
            tail = current
            for w in reversed(svars[j + 1:]):
                tail = mk_exists(w, tail)
            psi = eliminate_scalar(g, tail)
            if isinstance(psi, SBool):
                if not psi.value:
                    return None
                cands = [0]
            elif kind_of(g, v) == "Z":
                cands = _candidates_z(psi, v)
            else:
                cands = _candidates_q(psi, v)
            chosen = None
            for cand in cands:
                if s_eval(g, psi, {v: cand}):
                    chosen = cand
                    break
            if chosen is None:
                if j == 0:
                    return None
                raise AssertionError(
                    "candidate window missed a witness coordinate")
            picked[v] = chosen
            current = s_subst(g, current, v, lin_const(chosen))
        check = eliminate_scalar(g, current)
        assert isinstance(check, SBool)
        if g.n == 0:
            return () if check.value else None
        assert check.value
        return element(g, [picked[v] for v in svars])


def s_subst_all(g: GroupSpec, f: SFormula, env: dict) -> SFormula:
    out = f
    for v, q in env.items():
        out = s_subst(g, out, v, lin_const(q))
    return out
