"""Tests for end segments, stabilizers, divisibility form, and the
canonical nice decomposition."""

from fractions import Fraction

import numpy as np
import pytest

import oagkit.formulas as fm
from oagkit import segments as sg
from oagkit.errors import SegmentError
from oagkit.groups import ConvexSubgroup, element, parse_group
from oagkit.oracle import FuzzLimits, evaluate, fuzz_corpus, grid_axes, grid_eval
from oagkit.qe import decide, entails, equivalent, satisfiable

Z = parse_group("Z")
ZZ = parse_group("Z*Z")
Q = parse_group("Q")
QZ = parse_group("Q*Z")
ZQ = parse_group("Z*Q")

LIM = FuzzLimits(max_coeff=3, max_modulus=4, max_depth=2, window=6, max_den=2)


def union_formula(g, pieces):
    if not pieces:
        return fm.BoolConst(False)
    fs = tuple(p.denote(g, "x") for p in pieces)
    return fs[0] if len(fs) == 1 else fm.Or(fs)


class TestDivSegment:
    def test_end_ge_denotation(self):
        seg = sg.DivSegment(sg.END, 1, 1, (3,), sg.GE)
        f = seg.denote(Z)
        assert [evaluate(Z, f, {"x": (v,)}) for v in (2, 3, 4)] == \
            [False, True, True]

    def test_end_gt_with_multiplier(self):
        seg = sg.DivSegment(sg.END, 2, 1, (3,), sg.GT)
        f = seg.denote(Z)
        # 2x > 3 over the integers: x >= 2
        assert [evaluate(Z, f, {"x": (v,)}) for v in (1, 2, 5)] == \
            [False, True, True]

    def test_initial_directions(self):
        seg = sg.DivSegment(sg.INITIAL, 1, 1, (3,), sg.GE)
        f = seg.denote(Z)
        assert [evaluate(Z, f, {"x": (v,)}) for v in (2, 3, 4)] == \
            [True, True, False]
        strict = sg.DivSegment(sg.INITIAL, 1, 1, (3,), sg.GT)
        f2 = strict.denote(Z)
        assert [evaluate(Z, f2, {"x": (v,)}) for v in (2, 3, 4)] == \
            [True, False, False]

    def test_level_relativization(self):
        seg = sg.DivSegment(sg.END, 1, 1, (1, 0), sg.GE)
        f = seg.denote(ZZ)
        # level 1 compares only the first coordinate
        assert evaluate(ZZ, f, {"x": (1, -9)})
        assert not evaluate(ZZ, f, {"x": (0, 9)})

    def test_sentinels(self):
        assert sg.full_end_segment().denote(Z) == fm.BoolConst(True)
        assert sg.empty_end_segment().denote(Z) == fm.BoolConst(False)
        assert sg.full_initial_segment().denote(Z) == fm.BoolConst(True)
        assert sg.empty_initial_segment().denote(Z) == fm.BoolConst(False)
        assert sg.full_end_segment().is_full()
        assert sg.empty_end_segment().is_empty()

    def test_dual_is_complement(self):
        for g, seg in [
            (Z, sg.DivSegment(sg.END, 1, 1, (3,), sg.GE)),
            (Z, sg.DivSegment(sg.END, 2, 1, (3,), sg.GT)),
            (Q, sg.DivSegment(sg.END, 1, 1, (Fraction(1, 2),), sg.GT)),
            (ZZ, sg.DivSegment(sg.INITIAL, 1, 1, (2, 0), sg.GE)),
        ]:
            dual = sg.dual_div_segment(seg)
            assert equivalent(g, dual.denote(g), fm.Not(seg.denote(g)))

    def test_validation(self):
        with pytest.raises(SegmentError):
            sg.DivSegment("sideways", 1, 1, (0,), sg.GE).denote(Z)
        with pytest.raises(SegmentError):
            sg.DivSegment(sg.END, 0, 1, (0,), sg.GE).denote(Z)
        with pytest.raises(SegmentError):
            sg.DivSegment(sg.END, 1, 5, (0,), sg.GE).denote(Z)
        with pytest.raises(SegmentError):
            sg.DivSegment(sg.END, 1, 1, (0,), "gte").denote(Z)


class TestCongrLiteral:
    def test_denotation(self):
        lit = sg.CongrLiteral(1, 2, 1, 3, (1,))
        f = lit.denote(Z)
        # 2x = 1 mod 3 holds at x = 2, 5, ...
        assert [evaluate(Z, f, {"x": (v,)}) for v in (0, 1, 2, 5)] == \
            [False, False, True, True]
        neg = sg.CongrLiteral(-1, 2, 1, 3, (1,))
        assert evaluate(Z, neg.denote(Z), {"x": (0,)})

    def test_offset_folds_into_beta(self):
        lit = sg.CongrLiteral(1, 1, 1, 4, (1,), offset=2)
        canon = lit.canonical(Z)
        assert canon.offset == 0 and canon.beta == (3,)
        assert equivalent(Z, lit.denote(Z), canon.denote(Z))

    def test_canonical_reduces_coordinates(self):
        lit = sg.CongrLiteral(1, 5, 1, 3, (7, 9))
        canon = lit.canonical(ZZ)
        assert canon.z == 2 and canon.beta == (1, 0)
        assert equivalent(ZZ, lit.denote(ZZ), canon.denote(ZZ))

    def test_dense_coordinates_unconstrained(self):
        lit = sg.CongrLiteral(1, 1, 2, 2, (1, Fraction(1, 2)))
        canon = lit.canonical(ZQ)
        assert canon.beta == (1, 0)
        f = lit.denote(ZQ)
        assert evaluate(ZQ, f, {"x": (3, Fraction(7, 3))})
        assert not evaluate(ZQ, f, {"x": (2, 0)})

    def test_degenerate_multiplier_rejected(self):
        with pytest.raises(SegmentError):
            sg.CongrLiteral(1, 3, 1, 3, (0,)).canonical(Z)
        with pytest.raises(SegmentError):
            sg.CongrLiteral(1, 1, 1, 1, (0,)).denote(Z)

    def test_restriction_dedupes_and_sorts(self):
        a = sg.CongrLiteral(1, 1, 1, 3, (4,))
        b = sg.CongrLiteral(1, 1, 1, 3, (1,))
        c = sg.CongrLiteral(1, 1, 1, 2, (0,))
        out = sg.canonical_restriction(Z, [a, b, c])
        assert out == (c.canonical(Z), b.canonical(Z))


class TestIsEndSegment:
    def test_double_multiple_bound(self):
        phi = fm.parse(ZZ, "(<= (c 1 1) (* 2 x))")
        assert sg.is_end_segment(ZZ, phi)

    def test_congruence_class_is_not(self):
        phi = fm.parse(Z, "(congr 2 x (c 0))")
        assert not sg.is_end_segment(Z, phi)

    def test_whole_group(self):
        assert sg.is_end_segment(Z, fm.parse(Z, "true"), "x")
        assert sg.is_end_segment(ZZ, fm.parse(ZZ, "true"), "x")

    def test_arity_checked(self):
        two = fm.parse(Z, "(< x y)")
        with pytest.raises(SegmentError):
            sg.is_end_segment(Z, two)


class TestEndHull:
    def test_open_ray_is_its_own_hull(self):
        phi = fm.parse(Q, "(< (c 0) x)")
        hull = sg.end_hull(Q, phi)
        assert equivalent(Q, hull, phi)

    def test_mixed_group_open_ray(self):
        phi = fm.parse(ZQ, "(< (c 0 0) x)")
        assert equivalent(ZQ, sg.end_hull(ZQ, phi), phi)

    def test_congruence_thinned_ray(self):
        # Even-by-even points above (1,1) doubled: the first coordinate
        # of any member is an even number >= 2, so the hull is the set
        # of points at least (2, anything).
        X = fm.parse(ZZ, "(and (<= (c 1 1) (* 2 x)) (congr@ 2 2 x (c 0 0)))")
        hull = sg.end_hull(ZZ, X)
        want = fm.parse(ZZ, "(le@ 1 (c 2 0) x)")
        assert equivalent(ZZ, hull, want)
        # box derivation: containment and co-initiality both hold
        pts = [(a, b) for a in range(-8, 9) for b in range(-8, 9)]
        xm = [p for p in pts if evaluate(ZZ, X, {"x": p})]
        hm = [p for p in pts if evaluate(ZZ, want, {"x": p})]
        assert set(xm) <= set(hm)
        lex_le = lambda u, s: u[0] < s[0] or (u[0] == s[0] and u[1] <= s[1])
        assert all(any(lex_le(u, s) for u in xm) for s in hm)

    def test_empty_set_rejected(self):
        with pytest.raises(SegmentError):
            sg.end_hull(Z, fm.parse(Z, "false"), "x")

    def test_set_with_minimum_rejected(self):
        with pytest.raises(SegmentError):
            sg.end_hull(Z, fm.parse(Z, "(<= (c 3) x)"))


class TestStabilizer:
    def test_double_multiple_bound_level_one(self):
        phi = fm.parse(ZZ, "(<= (c 1 1) (* 2 x))")
        assert sg.stabilizer(ZZ, phi) == ConvexSubgroup(1)

    def test_brute_force_agreement(self):
        # derivation for the previous case: among tail subgroups, find
        # the largest whose box translates preserve membership.
        phi = fm.parse(ZZ, "(<= (c 1 1) (* 2 x))")
        box = [(a, b) for a in range(-6, 7) for b in range(-6, 7)]
        small = [(a, b) for a in range(-3, 4) for b in range(-3, 4)]
        best = None
        for k in range(ZZ.n + 1):
            shifts = [d for d in box if all(d[i] == 0 for i in range(k))]
            ok = True
            for x in small:
                if not evaluate(ZZ, phi, {"x": x}):
                    continue
                for d in shifts:
                    y = (x[0] + d[0], x[1] + d[1])
                    if max(map(abs, y)) <= 6 and not evaluate(ZZ, phi, {"x": y}):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                best = k
                break
        assert best == 1

    def test_discrete_minimum_gives_zero_subgroup(self):
        phi = fm.parse(Z, "(<= (c 3) x)")
        assert sg.stabilizer(Z, phi) == ConvexSubgroup(1)

    def test_whole_group_stabilized_by_itself(self):
        for g in (Z, ZZ, QZ):
            assert sg.stabilizer(g, fm.parse(g, "true"), "x") == \
                ConvexSubgroup(0)

    def test_level_is_tight(self):
        # the stabilization sentence holds at the returned level and
        # fails one level up the chain
        for g, text in [
            (ZZ, "(<= (c 1 1) (* 2 x))"),
            (Z, "(<= (c 3) x)"),
            (QZ, "(lt@ 1 (c 1 0) x)"),
        ]:
            phi = fm.parse(g, text)
            k = sg.stabilizer(g, phi).level
            d, v = "d", "x"
            td, tv = fm.t_var(g, d), fm.t_var(g, v)
            shifted = fm.substitute(g, phi, v, fm.t_add(g, tv, td))

            def holds(level):
                insub = fm.RelEq(level, td, fm.t_const(element(g, [0] * g.n)))
                return decide(g, fm.Forall(d, fm.Forall(
                    v, fm.Implies(fm.And((insub, phi)), shifted))))

            assert holds(k)
            if k >= 1:
                assert not holds(k - 1)

    def test_requires_end_segment(self):
        with pytest.raises(SegmentError):
            sg.stabilizer(Z, fm.parse(Z, "(congr 2 x (c 0))"))


class TestToDivSegment:
    def test_doubled_bound_on_pairs(self):
        phi = fm.parse(ZZ, "(<= (c 1 1) (* 2 x))")
        seg = sg.to_div_segment(ZZ, phi)
        assert seg == sg.DivSegment(sg.END, 1, 1, (1, 0), sg.GE)
        assert equivalent(ZZ, seg.denote(ZZ), phi)

    def test_integer_ray(self):
        seg = sg.to_div_segment(Z, fm.parse(Z, "(<= (c 4) x)"))
        assert seg == sg.DivSegment(sg.END, 1, 1, (4,), sg.GE)

    def test_rational_open_ray(self):
        seg = sg.to_div_segment(Q, fm.parse(Q, "(< (c 1) (* 2 x))"))
        assert seg == sg.DivSegment(sg.END, 1, 1, (Fraction(1, 2),), sg.GT)

    def test_trivial_sets_get_sentinels(self):
        assert sg.to_div_segment(Z, fm.parse(Z, "false"), "x") == \
            sg.empty_end_segment()
        assert sg.to_div_segment(Z, fm.parse(Z, "true"), "x") == \
            sg.full_end_segment()

    def test_requires_end_segment(self):
        with pytest.raises(SegmentError):
            sg.to_div_segment(Z, fm.parse(Z, "(congr 2 x (c 0))"))

    def test_mixed_group_open_cut(self):
        phi = fm.parse(ZQ, "(< (c 0 4) (* 3 x))")
        seg = sg.to_div_segment(ZQ, phi)
        assert seg.level == 2 and seg.rel == sg.GT
        assert seg.bound == (0, Fraction(4, 3))
        assert equivalent(ZQ, seg.denote(ZQ), phi)

    @pytest.mark.parametrize("gname", ["Z", "Z*Z", "Q*Z", "Z*Q"])
    def test_fuzzed_round_trips(self, gname):
        g = parse_group(gname)
        corpus = fuzz_corpus(g, seed=11, count=10,
                             template="end-segment", limits=LIM)
        for f in corpus:
            seg = sg.to_div_segment(g, f, "x")
            assert equivalent(g, seg.denote(g, "x"), f)
            if not seg.is_full() and not seg.is_empty():
                assert seg.n == 1
                assert seg.level == sg.stabilizer(g, f, "x").level

    def test_initial_segments_via_duality(self):
        for g, text in [
            (Z, "(< x (c 3))"),
            (Q, "(< (* 2 x) (c 1))"),
            (ZZ, "(lt@ 1 x (c 2 0))"),
        ]:
            phi = fm.parse(g, text)
            seg = sg.to_div_segment_initial(g, phi)
            assert seg.direction == sg.INITIAL
            assert equivalent(g, seg.denote(g), phi)


class TestNiceDecompose:
    def test_shifted_congruence_ray(self):
        phi = fm.parse(Z, "(and (< (c 5) x) (congr 3 x (c 1)))")
        pieces = sg.nice_decompose(Z, phi)
        assert len(pieces) == 1
        p = pieces[0]
        assert p.upper == sg.DivSegment(sg.END, 1, 1, (7,), sg.GE)
        assert p.lower == sg.full_initial_segment()
        assert p.congr == (sg.CongrLiteral(1, 1, 1, 3, (1,)),)
        # derivation: same extension as the input on a wide window
        f = union_formula(Z, pieces)
        for v in range(-20, 41):
            assert evaluate(Z, f, {"x": (v,)}) == \
                evaluate(Z, phi, {"x": (v,)})

    def test_doubled_bound_single_piece(self):
        phi = fm.parse(ZZ, "(<= (c 1 1) (* 2 x))")
        pieces = sg.nice_decompose(ZZ, phi)
        assert len(pieces) == 1
        p = pieces[0]
        assert p.congr == ()
        assert p.upper == sg.DivSegment(sg.END, 1, 1, (1, 0), sg.GE)
        assert p.lower == sg.full_initial_segment()
        assert equivalent(ZZ, union_formula(ZZ, pieces), phi)

    def test_false_gives_empty_sequence(self):
        for g in (Z, ZZ, Q):
            assert sg.nice_decompose(g, fm.parse(g, "false"), "x") == ()

    def test_trivial_group(self):
        g0 = parse_group("1")
        out = sg.nice_decompose(g0, fm.parse(g0, "true"), "x")
        assert len(out) == 1 and out[0].upper.is_full()
        assert sg.nice_decompose(g0, fm.parse(g0, "false"), "x") == ()

    def test_canonical_across_presentations(self):
        pairs = [
            (Z, "(and (< (c 5) x) (congr 3 x (c 1)))",
             "(and (<= (c 7) x) (or (congr 6 x (c 1)) (congr 6 x (c 4))))"),
            (ZZ,
             "(and (le@ 1 (c 0 0) x) (or (congr@ 2 2 x (c 0 0)) "
             "(congr@ 2 2 x (c 1 0))))",
             "(and (not (lt@ 1 x (c 0 0))) (not (and "
             "(not (congr@ 2 2 x (c 0 0))) (not (congr@ 2 2 x (c 1 0))))))"),
            (Q, "(< (c 1) (* 2 x))", "(< (c 2) (* 4 x))"),
        ]
        for g, s1, s2 in pairs:
            f1, f2 = fm.parse(g, s1), fm.parse(g, s2)
            assert equivalent(g, f1, f2)
            assert sg.nice_decompose(g, f1) == sg.nice_decompose(g, f2)

    def test_modulus_refinement_along_rays(self):
        # first coordinate unbounded with a parity condition deeper in:
        # class literals must refine to the fiber modulus
        phi = fm.parse(ZZ, "(and (le@ 1 (c 0 0) x) (congr@ 2 2 x (c 1 0)))")
        pieces = sg.nice_decompose(ZZ, phi)
        assert equivalent(ZZ, union_formula(ZZ, pieces), phi)
        for p in pieces:
            assert satisfiable(ZZ, p.denote(ZZ))

    def test_dense_point_and_interval_pieces(self):
        phi = fm.parse(QZ, "(or (lt@ 1 (c 1 0) x) (and (eq@ 1 x (c 1 0)) "
                           "(congr@ 2 2 x (c 1 0))))")
        pieces = sg.nice_decompose(QZ, phi)
        assert len(pieces) == 2
        assert equivalent(QZ, union_formula(QZ, pieces), phi)

    def test_piece_shapes_and_invariants(self):
        corpus = []
        for gname in ("Z", "Z*Z"):
            g = parse_group(gname)
            for f in fuzz_corpus(g, seed=5, count=8, template="qf",
                                 limits=LIM):
                if fm.free_vars(f) == frozenset({"x"}):
                    corpus.append((g, f))
        assert corpus
        for g, f in corpus:
            pieces = sg.nice_decompose(g, f, "x")
            assert equivalent(g, union_formula(g, pieces), f)
            for p in pieces:
                assert p.upper.direction == sg.END
                assert p.lower.direction == sg.INITIAL
                assert satisfiable(g, p.denote(g, "x"))
                for lit in p.congr:
                    assert lit == lit.canonical(g)

    def test_box_agreement_with_oracle(self):
        for gname, text in [
            ("Z", "(or (< x (c -3)) (and (congr 4 x (c 2)) (< (c 0) x)))"),
            ("Z*Z", "(or (lt@ 1 (c 1 0) x) (and (congr@ 2 2 x (c 0 1)) "
                    "(le@ 2 (c 0 2) x)))"),
        ]:
            g = parse_group(gname)
            f = fm.parse(g, text)
            union = union_formula(g, sg.nice_decompose(g, f))
            env = grid_axes(g, ["x"], 10)
            got = grid_eval(g, union, env)
            want = grid_eval(g, f, env)
            assert np.array_equal(
                np.broadcast_to(got, want.shape if hasattr(want, "shape")
                                else ()), want)

    def test_quantified_input(self):
        # membership defined through a quantifier still decomposes
        phi = fm.parse(Z, "(exists (y) (and (= x (* 2 y)) (<= (c 0) y)))")
        pieces = sg.nice_decompose(Z, phi)
        assert equivalent(Z, union_formula(Z, pieces), phi)
        assert pieces[0].congr and pieces[0].congr[0].modulus == 2

    def test_arity_error(self):
        with pytest.raises(SegmentError):
            sg.nice_decompose(Z, fm.parse(Z, "(< x y)"))
