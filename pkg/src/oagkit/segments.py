"""Normal forms for unary definable sets.

A definable subset of a lex product splits into finitely many "nice"
pieces: a convex stretch cut out by an upper and a lower divisibility
segment, intersected with congruence conditions.  This module detects
end segments, computes their stabilizing convex subgroup, reduces them
to divisibility form, and produces a canonical nice decomposition whose
shape depends only on the defined set, never on the input formula.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Union

from . import formulas as fm
from .errors import SegmentError
from .groups import (
    ConvexSubgroup,
    Element,
    GroupSpec,
    add,
    element,
    scale,
    unit,
    zero,
)
from .qe import (
    decide,
    eliminate_scalar,
    entails,
    equivalent,
    satisfiable,
    s_subst_all,
    witness,
)
from .scalars import (
    FALSE,
    LinExpr,
    SAnd,
    SCongr,
    SEq,
    SLt,
    SNot,
    SOr,
    SVar,
    mk_and,
    mk_exists,
    mk_not,
    mk_or,
)

END = "end"
INITIAL = "initial"
GE = "ge"
GT = "gt"
PLUS_INF = "+inf"
MINUS_INF = "-inf"

Bound = Union[Element, str]


def _is_inf(b) -> bool:
    return b == PLUS_INF or b == MINUS_INF


@dataclass(frozen=True)
class DivSegment:
    """One-sided divisibility condition on multiples of the variable.

    direction "end" denotes {x : n*x rel bound at the given level};
    direction "initial" denotes the order dual ({x : n*x <= bound} for
    rel "ge", strict for "gt").  A bound of "-inf"/"+inf" is a sentinel
    for the whole group or the empty set, depending on direction.
    """

    direction: str
    n: int
    level: int
    bound: Bound
    rel: str

    def check(self, g: GroupSpec) -> None:
        if self.direction not in (END, INITIAL):
            raise SegmentError(f"unknown segment direction '{self.direction}'")
        if self.rel not in (GE, GT):
            raise SegmentError(f"unknown segment relation '{self.rel}'")
        if self.n < 1:
            raise SegmentError("segment multiplier must be at least 1")
        if not 0 <= self.level <= g.n:
            raise SegmentError(
                f"segment level {self.level} out of range 0..{g.n}")
        if isinstance(self.bound, str):
            if not _is_inf(self.bound):
                raise SegmentError(f"bad segment bound '{self.bound}'")
        else:
            element(g, self.bound)

    def is_full(self) -> bool:
        want = MINUS_INF if self.direction == END else PLUS_INF
        return self.bound == want

    def is_empty(self) -> bool:
        want = PLUS_INF if self.direction == END else MINUS_INF
        return self.bound == want

    def denote(self, g: GroupSpec, var: str = "x") -> fm.Formula:
        self.check(g)
        if self.is_full():
            return fm.BoolConst(True)
        if self.is_empty():
            return fm.BoolConst(False)
        t = fm.t_var(g, var)
        if self.n != 1:
            t = fm.t_scale(g, self.n, t)
        b = fm.t_const(element(g, self.bound))
        rel = fm.LE if self.rel == GE else fm.LT
        if self.direction == END:
            return fm.RelCmp(self.level, rel, b, t)
        return fm.RelCmp(self.level, rel, t, b)


def full_end_segment() -> DivSegment:
    return DivSegment(END, 1, 0, MINUS_INF, GE)


def empty_end_segment() -> DivSegment:
    return DivSegment(END, 1, 0, PLUS_INF, GE)


def full_initial_segment() -> DivSegment:
    return DivSegment(INITIAL, 1, 0, PLUS_INF, GE)


def empty_initial_segment() -> DivSegment:
    return DivSegment(INITIAL, 1, 0, MINUS_INF, GE)


def dual_div_segment(seg: DivSegment) -> DivSegment:
    """The complement, expressed as a segment of the other direction."""
    direction = INITIAL if seg.direction == END else END
    if _is_inf(seg.bound):
        return DivSegment(direction, seg.n, seg.level, seg.bound, GE)
    rel = GT if seg.rel == GE else GE
    return DivSegment(direction, seg.n, seg.level, seg.bound, rel)


@dataclass(frozen=True)
class CongrLiteral:
    """One congruence condition z*x = beta + offset (mod level, modulus).

    sign +1 asserts the congruence, -1 its negation.  The condition
    constrains the discrete coordinates among the first `level` of z*x
    modulo the modulus; offset counts steps by the unit of coordinate
    `level` and is folded into beta by canonical().
    """

    sign: int
    z: int
    level: int
    modulus: int
    beta: Element
    offset: int = 0

    def check(self, g: GroupSpec) -> None:
        if self.sign not in (1, -1):
            raise SegmentError("congruence literal sign must be +1 or -1")
        if self.modulus < 2:
            raise SegmentError("congruence modulus must be at least 2")
        if not 1 <= self.level <= g.n:
            raise SegmentError(
                f"congruence level {self.level} out of range 1..{g.n}")
        if self.z % self.modulus == 0:
            raise SegmentError(
                "congruence multiplier divisible by the modulus is degenerate")
        element(g, self.beta)

    def denote(self, g: GroupSpec, var: str = "x") -> fm.Formula:
        self.check(g)
        t = fm.t_var(g, var)
        if self.z != 1:
            t = fm.t_scale(g, self.z, t)
        b = element(g, self.beta)
        if self.offset:
            b = add(g, b, scale(g, self.offset, unit(g, self.level)))
        atom = fm.RelCongr(self.level, self.modulus, t, fm.t_const(b))
        return atom if self.sign > 0 else fm.Not(atom)

    def canonical(self, g: GroupSpec) -> "CongrLiteral":
        self.check(g)
        m = self.modulus
        z = self.z % m
        b = element(g, self.beta)
        if self.offset:
            b = add(g, b, scale(g, self.offset, unit(g, self.level)))
        vals = []
        for i, kind in enumerate(g.kinds, start=1):
            if i <= self.level and kind == "Z":
                vals.append(int(b[i - 1]) % m)
            else:
                vals.append(0)
        return CongrLiteral(self.sign, z, self.level, m, element(g, vals), 0)


CongruenceRestriction = tuple


def _lit_key(lit: CongrLiteral):
    return (lit.level, lit.modulus, lit.z, 0 if lit.sign > 0 else 1,
            tuple(Fraction(x) for x in lit.beta), lit.offset)


def canonical_restriction(g: GroupSpec, lits) -> tuple:
    """Deduplicated, canonically ordered congruence literals."""
    seen = {}
    for lit in lits:
        c = lit.canonical(g)
        seen[c] = None
    return tuple(sorted(seen, key=_lit_key))


@dataclass(frozen=True)
class NiceSet:
    """A convex stretch (upper and lower segment) meeting congruences."""

    upper: DivSegment
    lower: DivSegment
    congr: tuple

    @property
    def mid(self) -> tuple:
        return (self.upper, self.lower)

    def check(self, g: GroupSpec) -> None:
        if self.upper.direction != END:
            raise SegmentError("upper part of a nice set must face upward")
        if self.lower.direction != INITIAL:
            raise SegmentError("lower part of a nice set must face downward")
        self.upper.check(g)
        self.lower.check(g)
        for lit in self.congr:
            lit.check(g)

    def denote(self, g: GroupSpec, var: str = "x") -> fm.Formula:
        self.check(g)
        parts = [self.upper.denote(g, var), self.lower.denote(g, var)]
        parts += [lit.denote(g, var) for lit in self.congr]
        parts = [p for p in parts
                 if not (isinstance(p, fm.BoolConst) and p.value)]
        if not parts:
            return fm.BoolConst(True)
        if any(isinstance(p, fm.BoolConst) and not p.value for p in parts):
            return fm.BoolConst(False)
        if len(parts) == 1:
            return parts[0]
        return fm.And(tuple(parts))


def _the_var(g: GroupSpec, phi: fm.Formula, var: Optional[str]) -> str:
    fv = fm.free_vars(phi)
    if var is not None:
        if not fv <= {var}:
            raise SegmentError(
                f"formula must have no free variables besides '{var}'")
        return var
    if len(fv) != 1:
        raise SegmentError("operation needs a formula with exactly one "
                           f"free variable, got {len(fv)}")
    return next(iter(fv))


def _fresh_names(phi: fm.Formula, avoid, count: int) -> list:
    taken = set(fm.all_names(phi)) | set(avoid)
    out = []
    for i in itertools.count():
        if len(out) == count:
            break
        cand = "_t%d" % i
        if cand not in taken:
            taken.add(cand)
            out.append(cand)
    return out


def is_end_segment(g: GroupSpec, phi: fm.Formula,
                   var: Optional[str] = None) -> bool:
    """Whether the defined set is closed upward."""
    v = _the_var(g, phi, var)
    (y,) = _fresh_names(phi, [v], 1)
    phi_y = fm.substitute(g, phi, v, fm.t_var(g, y))
    body = fm.Implies(
        fm.And((phi, fm.Cmp(fm.LT, fm.t_var(g, v), fm.t_var(g, y)))), phi_y)
    return decide(g, fm.Forall(v, fm.Forall(y, body)))


def _has_minimum(g: GroupSpec, phi: fm.Formula, v: str) -> bool:
    (y,) = _fresh_names(phi, [v], 1)
    phi_y = fm.substitute(g, phi, v, fm.t_var(g, y))
    least = fm.Forall(
        y, fm.Implies(phi_y, fm.Cmp(fm.LE, fm.t_var(g, v), fm.t_var(g, y))))
    return decide(g, fm.Exists(v, fm.And((phi, least))))


def end_hull(g: GroupSpec, phi: fm.Formula,
             var: Optional[str] = None) -> fm.Formula:
    """The smallest end segment the defined set is co-initial in.

    The input set must be nonempty and have no minimum; the hull keeps
    every point that fails to bound the set strictly from below.
    """
    v = _the_var(g, phi, var)
    if not satisfiable(g, phi):
        raise SegmentError("end hull of an empty set is undefined")
    if _has_minimum(g, phi, v):
        raise SegmentError("set has a minimum; use the minimum directly "
                           "instead of an end hull")
    (y,) = _fresh_names(phi, [v], 1)
    phi_y = fm.substitute(g, phi, v, fm.t_var(g, y))
    below = fm.Cmp(fm.LE, fm.t_var(g, y), fm.t_var(g, v))
    hull = fm.Not(fm.Forall(y, fm.Implies(below, fm.Not(phi_y))))
    assert is_end_segment(g, hull, v)
    assert entails(g, phi, hull)
    coinit = fm.Forall(
        v, fm.Implies(hull, fm.Exists(y, fm.And((phi_y, below)))))
    assert decide(g, coinit)
    return hull


def stabilizer(g: GroupSpec, phi: fm.Formula,
               var: Optional[str] = None) -> ConvexSubgroup:
    """The largest tail subgroup whose translates preserve the set."""
    v = _the_var(g, phi, var)
    if not is_end_segment(g, phi, v):
        raise SegmentError("stabilizer is defined for end segments only")
    (d,) = _fresh_names(phi, [v], 1)
    td, tv = fm.t_var(g, d), fm.t_var(g, v)
    shifted = fm.substitute(g, phi, v, fm.t_add(g, tv, td))
    for k in range(g.n + 1):
        insub = fm.RelEq(k, td, fm.t_const(zero(g)))
        sent = fm.Forall(d, fm.Forall(
            v, fm.Implies(fm.And((insub, phi)), shifted)))
        if decide(g, sent):
            return ConvexSubgroup(k)
    raise AssertionError("the zero subgroup must stabilize any set")


def _pad(g: GroupSpec, vals) -> Element:
    vals = list(vals)
    return element(g, vals + [0] * (g.n - len(vals)))


def _scalar_atoms(f) -> list:
    out: list = []
    seen: set = set()

    def walk(node):
        if node in seen:
            return
        seen.add(node)
        if isinstance(node, (SLt, SEq, SCongr)):
            out.append(node)
        elif isinstance(node, SNot):
            walk(node.body)
        elif isinstance(node, (SAnd, SOr)):
            for it in node.items:
                walk(it)

    walk(f)
    return out


def _pinned_scalar(g: GroupSpec, phi: fm.Formula, v: str, prefix, k: int,
                   zero_tail: bool = True):
    """Eliminate quantifiers, then fix coordinates below k to the given
    prefix; optionally zero out the coordinates above k as well."""
    qf = eliminate_scalar(g, fm.lower(g, phi))
    env = {}
    for i in range(1, g.n + 1):
        if i < k:
            env[SVar(v, i)] = prefix[i - 1]
        elif i > k and zero_tail:
            env[SVar(v, i)] = 0
    return s_subst_all(g, qf, env)


def _coordinate_roots(psi, v: str, k: int) -> list:
    xk = SVar(v, k)
    roots = set()
    for atom in _scalar_atoms(psi):
        if isinstance(atom, SCongr):
            continue
        a = atom.expr.coeff(xk)
        if a:
            roots.add(Fraction(-atom.expr.const, a))
    return sorted(roots)


def to_div_segment(g: GroupSpec, phi: fm.Formula,
                   var: Optional[str] = None) -> DivSegment:
    """The canonical divisibility form of a definable end segment.

    The level is the stabilizer level; the multiplier is always the
    minimal 1 because the bound lives in the quotient by the stabilizer,
    where the set is principal.  Empty and full sets come back as the
    sentinel segments.
    """
    v = _the_var(g, phi, var)
    if not is_end_segment(g, phi, v):
        raise SegmentError("divisibility form is defined for end "
                           "segments only")
    if not satisfiable(g, phi):
        return empty_end_segment()
    if decide(g, fm.Forall(v, phi)):
        return full_end_segment()
    k = stabilizer(g, phi, v).level
    assert k >= 1, "a proper nonempty end segment has a proper stabilizer"
    (y,) = _fresh_names(phi, [v], 1)
    tv, ty = fm.t_var(g, v), fm.t_var(g, y)
    phi_y = fm.substitute(g, phi, v, ty)

    least_k = fm.Forall(y, fm.Implies(phi_y, fm.RelCmp(k, fm.LE, tv, ty)))
    has_min = fm.Exists(v, fm.And((phi, least_k)))
    if decide(g, has_min):
        w = witness(g, has_min)
        assert w is not None
        return DivSegment(END, 1, k, _pad(g, w[:k]), GE)

    # No minimum modulo the stabilizer: the cut coordinate must be dense.
    assert g.kinds[k - 1] == "Q"
    if k == 1:
        prefix: tuple = ()
    else:
        least_pre = fm.Forall(
            y, fm.Implies(phi_y, fm.RelCmp(k - 1, fm.LE, tv, ty)))
        want = fm.Exists(v, fm.And((phi, least_pre)))
        w = witness(g, want)
        assert w is not None, "projection below the cut must have a minimum"
        prefix = tuple(w[:k - 1])
    psi = _pinned_scalar(g, phi, v, prefix, k)
    xk = SVar(v, k)
    for c in _coordinate_roots(psi, v, k):
        above = SLt(LinExpr(((xk, -1),), c))
        differ = mk_or([mk_and([psi, mk_not(above)]),
                        mk_and([mk_not(psi), above])])
        if eliminate_scalar(g, mk_exists(xk, differ)) is FALSE:
            return DivSegment(END, 1, k, _pad(g, prefix + (c,)), GT)
    raise AssertionError("open cut value must be a root of some atom")


def is_initial_segment(g: GroupSpec, phi: fm.Formula,
                       var: Optional[str] = None) -> bool:
    """Whether the defined set is closed downward."""
    v = _the_var(g, phi, var)
    (y,) = _fresh_names(phi, [v], 1)
    phi_y = fm.substitute(g, phi, v, fm.t_var(g, y))
    body = fm.Implies(
        fm.And((phi, fm.Cmp(fm.LT, fm.t_var(g, y), fm.t_var(g, v)))), phi_y)
    return decide(g, fm.Forall(v, fm.Forall(y, body)))


def to_div_segment_initial(g: GroupSpec, phi: fm.Formula,
                           var: Optional[str] = None) -> DivSegment:
    """Divisibility form of an initial segment, via its complement."""
    v = _the_var(g, phi, var)
    if not is_initial_segment(g, phi, v):
        raise SegmentError("expected a downward closed set")
    return dual_div_segment(to_div_segment(g, fm.Not(phi), v))


class _RawPiece:
    """Partial piece during decomposition: missing sides are inherited
    from the enclosing pins when the recursion unwinds."""

    __slots__ = ("upper", "lower", "lits")

    def __init__(self, upper, lower, lits):
        self.upper = upper
        self.lower = lower
        self.lits = lits


def nice_decompose(g: GroupSpec, phi: fm.Formula,
                   var: Optional[str] = None) -> tuple:
    """Canonical decomposition of a unary definable set into nice pieces.

    Works coordinate by coordinate, most significant first.  A discrete
    coordinate is split into residue classes modulo the minimal eventual
    period (refined by the moduli of the limiting fibers); each class
    contributes two constant rays plus finitely many exceptional values.
    A dense coordinate is split at the cut points where the fiber
    actually changes.  All thresholds and cut points are found
    semantically, so equivalent inputs produce identical output.
    """
    v = _the_var(g, phi, var)
    if not satisfiable(g, phi):
        return ()
    if g.n == 0:
        return (NiceSet(full_end_segment(), full_initial_segment(), ()),)

    tv = fm.t_var(g, v)
    y, zname = _fresh_names(phi, [v], 2)
    ty, tz = fm.t_var(g, y), fm.t_var(g, zname)
    phi_of: dict = {}

    def at(name):
        f = phi_of.get(name)
        if f is None:
            f = phi if name == v else fm.substitute(g, phi, v, fm.t_var(g, name))
            phi_of[name] = f
        return f

    dcache: dict = {}

    def dec(f) -> bool:
        hit = dcache.get(f)
        if hit is None:
            hit = decide(g, f)
            dcache[f] = hit
        return hit

    wcache: dict = {}

    def wit(f) -> Element:
        w = wcache.get(f)
        if w is None:
            w = witness(g, f)
            assert w is not None
            wcache[f] = w
        return w

    def shifted(name, delta: Element) -> fm.Formula:
        t = fm.t_add(g, fm.t_var(g, name), fm.t_const(delta))
        return fm.substitute(g, phi, v, t)

    def pin_formula(name, j: int, pin) -> fm.Formula:
        return fm.RelEq(j - 1, fm.t_var(g, name), fm.t_const(_pad(g, pin)))

    def class_formula(name, j: int, m: int, rep) -> fm.Formula:
        if m == 1:
            return fm.BoolConst(True)
        return fm.RelCongr(j, m, fm.t_var(g, name), fm.t_const(_pad(g, rep)))

    def fiber_equal(j: int, pin, v1, v2) -> bool:
        # Fibers over two concrete coordinate-j values agree exactly when
        # the set is invariant under the constant shift between them.
        vals = [0] * g.n
        vals[j - 1] = v2 - v1
        delta = element(g, vals)
        anchor = fm.RelEq(j, tv, fm.t_const(_pad(g, pin + (v1,))))
        return dec(fm.Forall(
            v, fm.Implies(anchor, fm.Iff(phi, shifted(v, delta)))))

    memo: dict = {}

    def rec(j: int, pin) -> list:
        key = (j, pin)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if j > g.n:
            member = dec(fm.substitute(g, phi, v, fm.t_const(_pad(g, pin))))
            out = [_RawPiece(None, None, ())] if member else []
        else:
            region = fm.And((pin_formula(v, j, pin), phi))
            if not dec(fm.Exists(v, region)):
                out = []
            elif g.kinds[j - 1] == "Z":
                out = rec_discrete(j, pin)
            else:
                out = rec_dense(j, pin)
        memo[key] = out
        return out

    def eventual_period_holds(j: int, pin, m: int) -> bool:
        e = scale(g, m, unit(g, j))
        up = fm.Implies(fm.RelCmp(j, fm.LE, tz, ty),
                        fm.Iff(at(y), shifted(y, e)))
        down = fm.Implies(fm.RelCmp(j, fm.LE, ty, tz),
                          fm.Iff(at(y), shifted(y, scale(g, -1, e))))
        # One sentence per tail: a threshold above which shifting by m
        # changes nothing, and one below.  The threshold itself must lie
        # in the pinned region, else the tail condition can hold vacuously.
        sent_up = fm.Exists(zname, fm.And((
            pin_formula(zname, j, pin),
            fm.Forall(y, fm.Implies(pin_formula(y, j, pin), up)))))
        sent_down = fm.Exists(zname, fm.And((
            pin_formula(zname, j, pin),
            fm.Forall(y, fm.Implies(pin_formula(y, j, pin), down)))))
        return dec(sent_up) and dec(sent_down)

    def minimal_period(j: int, pin) -> int:
        qf = eliminate_scalar(g, fm.lower(
            g, fm.And((pin_formula(v, j, pin), phi))))
        cap = 1
        for atom in _scalar_atoms(qf):
            if isinstance(atom, SCongr):
                cap = lcm(cap, atom.modulus)
        for m in range(1, cap + 1):
            if cap % m == 0 and eventual_period_holds(j, pin, m):
                return m
        raise AssertionError("eventual period must divide the modulus lcm")

    def class_constant(j: int, pin, m: int, r: int) -> bool:
        e = scale(g, m, unit(g, j))
        guard = fm.And((pin_formula(v, j, pin), class_formula(v, j, m, pin + (r,))))
        return dec(fm.Forall(v, fm.Implies(guard, fm.Iff(phi, shifted(v, e)))))

    def tail_ok(name, j: int, pin, m: int, r: int, upward: bool) -> fm.Formula:
        # All fibers from `name` on (towards the tail) equal their shift.
        e = scale(g, m if upward else -m, unit(g, j))
        tn = fm.t_var(g, name)
        if upward:
            side = fm.RelCmp(j, fm.LE, tn, ty)
        else:
            side = fm.RelCmp(j, fm.LE, ty, tn)
        guard = fm.And((pin_formula(y, j, pin),
                        class_formula(y, j, m, pin + (r,)), side))
        return fm.Forall(y, fm.Implies(guard, fm.Iff(at(y), shifted(y, e))))

    def threshold(j: int, pin, m: int, r: int, upward: bool) -> int:
        mine = fm.And((pin_formula(v, j, pin),
                       class_formula(v, j, m, pin + (r,)),
                       tail_ok(v, j, pin, m, r, upward)))
        others = fm.And((pin_formula(zname, j, pin),
                         class_formula(zname, j, m, pin + (r,)),
                         tail_ok(zname, j, pin, m, r, upward)))
        if upward:
            extreme = fm.RelCmp(j, fm.LE, tv, tz)
        else:
            extreme = fm.RelCmp(j, fm.LE, tz, tv)
        best = fm.Exists(v, fm.And(
            (mine, fm.Forall(zname, fm.Implies(others, extreme)))))
        assert dec(best), "threshold must exist in a non-constant class"
        return int(wit(best)[j - 1])

    def check_ray_lits(fps, m: int) -> None:
        for fp in fps:
            assert fp.upper is None and fp.lower is None, \
                "limiting fibers carry no bounds"
            for lit in fp.lits:
                assert m % lit.modulus == 0, \
                    "fiber moduli must divide the class modulus"

    def rec_discrete(j: int, pin) -> list:
        m_star = minimal_period(j, pin)
        moduli = m_star
        for r in range(m_star):
            if class_constant(j, pin, m_star, r):
                fps = rec(j + 1, pin + (r,))
            else:
                a_hat = threshold(j, pin, m_star, r, True)
                b_hat = threshold(j, pin, m_star, r, False)
                fps = rec(j + 1, pin + (a_hat,)) + rec(j + 1, pin + (b_hat,))
            for fp in fps:
                for lit in fp.lits:
                    moduli = lcm(moduli, lit.modulus)
        m_d = moduli
        out: list = []
        for r in range(m_d):
            cls_lit = []
            if m_d > 1:
                cls_lit = [CongrLiteral(1, 1, j, m_d, _pad(g, pin + (r,)), 0)]
            if class_constant(j, pin, m_d, r):
                fps = rec(j + 1, pin + (r,))
                check_ray_lits(fps, m_d)
                for fp in fps:
                    out.append(_RawPiece(
                        None, None, tuple(cls_lit) + fp.lits))
                continue
            a_hat = threshold(j, pin, m_d, r, True)
            b_hat = threshold(j, pin, m_d, r, False)
            assert a_hat > b_hat
            fps = rec(j + 1, pin + (a_hat,))
            check_ray_lits(fps, m_d)
            for fp in fps:
                out.append(_RawPiece((j, _pad(g, pin + (a_hat,)), GE),
                                     None, tuple(cls_lit) + fp.lits))
            fps = rec(j + 1, pin + (b_hat,))
            check_ray_lits(fps, m_d)
            for fp in fps:
                out.append(_RawPiece(None, (j, _pad(g, pin + (b_hat,)), GE),
                                     tuple(cls_lit) + fp.lits))
            a = b_hat + m_d
            while a < a_hat:
                for fp in rec(j + 1, pin + (a,)):
                    up = fp.upper or (j, _pad(g, pin + (a,)), GE)
                    low = fp.lower or (j, _pad(g, pin + (a,)), GE)
                    out.append(_RawPiece(up, low, fp.lits))
                a += m_d
        return out

    def rec_dense(j: int, pin) -> list:
        # Deeper coordinates stay free here: zeroing them could collapse
        # atoms to constants and hide genuine coordinate-j cut points.
        psi = _pinned_scalar(g, phi, v, pin, j, zero_tail=False)
        roots = _coordinate_roots(psi, v, j)

        def interval_rep(lo, hi):
            if lo is None and hi is None:
                return Fraction(0)
            if lo is None:
                return hi - 1
            if hi is None:
                return lo + 1
            return (lo + hi) / 2

        survivors = []
        for i, c in enumerate(roots):
            left = roots[i - 1] if i > 0 else None
            right = roots[i + 1] if i + 1 < len(roots) else None
            lrep = interval_rep(left, c)
            rrep = interval_rep(c, right)
            if not (fiber_equal(j, pin, lrep, c)
                    and fiber_equal(j, pin, c, rrep)):
                survivors.append(c)

        out: list = []
        cuts = [None] + survivors + [None]
        for lo, hi in zip(cuts, cuts[1:]):
            w = interval_rep(lo, hi)
            fps = rec(j + 1, pin + (w,))
            for fp in fps:
                assert fp.upper is None and fp.lower is None, \
                    "interval fibers carry no bounds"
                up = None if lo is None else (j, _pad(g, pin + (lo,)), GT)
                low = None if hi is None else (j, _pad(g, pin + (hi,)), GT)
                out.append(_RawPiece(up, low, fp.lits))
        for c in survivors:
            for fp in rec(j + 1, pin + (c,)):
                up = fp.upper or (j, _pad(g, pin + (c,)), GE)
                low = fp.lower or (j, _pad(g, pin + (c,)), GE)
                out.append(_RawPiece(up, low, fp.lits))
        return out

    raw = rec(1, ())
    pieces = []
    for rp in raw:
        if rp.upper is None:
            upper = full_end_segment()
        else:
            upper = DivSegment(END, 1, rp.upper[0], rp.upper[1], rp.upper[2])
        if rp.lower is None:
            lower = full_initial_segment()
        else:
            lower = DivSegment(
                INITIAL, 1, rp.lower[0], rp.lower[1], rp.lower[2])
        pieces.append(NiceSet(upper, lower, canonical_restriction(g, rp.lits)))

    def prune(ns: NiceSet) -> NiceSet:
        lits = list(ns.congr)
        i = 0
        while i < len(lits):
            trimmed = NiceSet(ns.upper, ns.lower,
                              tuple(lits[:i] + lits[i + 1:]))
            if equivalent(g, trimmed.denote(g, v),
                          NiceSet(ns.upper, ns.lower, tuple(lits)).denote(g, v)):
                del lits[i]
            else:
                i += 1
        return NiceSet(ns.upper, ns.lower, tuple(lits))

    def seg_key(s: DivSegment):
        if s.bound == MINUS_INF:
            b = (0, ())
        elif s.bound == PLUS_INF:
            b = (2, ())
        else:
            b = (1, tuple(Fraction(x) for x in s.bound))
        return (b, s.level, s.n, 0 if s.rel == GE else 1)

    def piece_key(ns: NiceSet):
        return (seg_key(ns.upper), seg_key(ns.lower),
                tuple(_lit_key(l) for l in ns.congr))

    def try_merge(a: NiceSet, b: NiceSet):
        if a.congr != b.congr:
            return None
        union = fm.Or((a.denote(g, v), b.denote(g, v)))
        for up, low in ((a.upper, b.lower), (b.upper, a.lower)):
            cand = NiceSet(up, low, a.congr)
            if equivalent(g, union, cand.denote(g, v)):
                return cand
        return None

    while True:
        pieces = [prune(p) for p in pieces]
        pieces.sort(key=piece_key)
        merged_any = False
        i = 0
        while i < len(pieces) - 1:
            cand = try_merge(pieces[i], pieces[i + 1])
            if cand is not None:
                pieces[i:i + 2] = [cand]
                merged_any = True
                i = max(i - 1, 0)
            else:
                i += 1
        if not merged_any:
            break

    for p in pieces:
        assert satisfiable(g, p.denote(g, v)), "nice pieces must be nonempty"
    if pieces:
        union = fm.Or(tuple(p.denote(g, v) for p in pieces)) \
            if len(pieces) > 1 else pieces[0].denote(g, v)
        assert equivalent(g, union, phi), "decomposition must cover the set"
    return tuple(pieces)
