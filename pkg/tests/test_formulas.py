"""Parser, printer, substitution and lowering tests."""

from fractions import Fraction

import pytest

from oagkit import formulas as fm
from oagkit import oracle as orc
from oagkit import scalars as sc
from oagkit.errors import ParseError
from oagkit.groups import box_elements, parse_group

Z1 = parse_group("Z")
Z2 = parse_group("Z*Z")
Q1 = parse_group("Q")
ZQ = parse_group("Z*Q")
QZ = parse_group("Q*Z")


class TestParse:
    def test_exists_with_equation(self):
        f = fm.parse(Z2, "(exists (x) (= (* 2 x) (c 1 1)))")
        assert isinstance(f, fm.Exists)
        assert f.var == "x"
        body = f.body
        assert isinstance(body, fm.Cmp) and body.rel == fm.EQ
        assert body.left == fm.Term((("x", 2),), (0, 0))
        assert body.right == fm.Term((), (1, 1))

    def test_relative_congruence(self):
        f = fm.parse(Z2, "(congr@ 1 2 x (c 1 0))")
        assert f == fm.RelCongr(1, 2, fm.t_var(Z2, "x"),
                                fm.t_const((1, 0)))

    def test_constant_arity_error(self):
        with pytest.raises(ParseError):
            fm.parse(Z2, "(< x (c 1))")

    def test_fraction_in_discrete_coordinate(self):
        with pytest.raises(ParseError):
            fm.parse(Z2, "(= x (c 1/2 0))")
        f = fm.parse(ZQ, "(= x (c 1 1/2))")
        assert f.right.const == (1, Fraction(1, 2))

    def test_modulus_and_level_validation(self):
        with pytest.raises(ParseError):
            fm.parse(Z2, "(congr 1 x x)")
        with pytest.raises(ParseError):
            fm.parse(Z2, "(lt@ 3 x x)")
        fm.parse(Z2, "(lt@ 0 x x)")

    def test_error_position(self):
        try:
            fm.parse(Z2, "(and (< x x)\n  (congr 1 x x))")
        except ParseError as e:
            assert e.line == 2 and e.column == 10
        else:
            pytest.fail("expected a parse error")

    def test_literals(self):
        assert fm.parse(Z1, "true") == fm.BoolConst(True)
        assert fm.parse(Z1, "(and false (< x x))").items[0] == \
            fm.BoolConst(False)

    def test_insub_sugar(self):
        f = fm.parse(Z2, "(insub 1 x)")
        assert f == fm.RelEq(1, fm.t_var(Z2, "x"), fm.t_const((0, 0)))
        assert fm.print_formula(f) == "(insub 1 x)"

    def test_term_arithmetic_folds(self):
        f = fm.parse(Z1, "(< (+ x (- x x) (* 3 x)) (c 0))")
        assert f.left == fm.Term((("x", 4),), (0,))

    def test_nested_and_flattens(self):
        f = fm.parse(Z1, "(and (< x x) (and (= x x) (<= x x)))")
        assert isinstance(f, fm.And) and len(f.items) == 3

    def test_shadowing_renamed(self):
        f = fm.parse(
            Z1, "(exists (x) (and (< x (c 0)) (exists (x) (< x (c 1)))))")
        inner = f.body.items[1]
        assert f.var == "x" and inner.var == "x_2"
        assert inner.body.left.vars() == ("x_2",)

    def test_binder_before_free_use(self):
        f = fm.parse(Z1, "(and (exists (x) (< x (c 0))) (< x (c 0)))")
        assert fm.free_vars(f) == {"x"}
        assert f.items[0].var != "x"

    def test_syntax_errors(self):
        for bad in ["", "(< x", "(< x x) junk", "(frob x x)", "(< 3 x)",
                    "(exists x (< x x))", "(* 1/2 x)", ")"]:
            with pytest.raises(ParseError):
                fm.parse(Z1, bad)


class TestPrintRoundTrip:
    def test_fixpoint_corpus(self):
        corpus = []
        for g in (Z1, Z2, Q1, ZQ, QZ):
            corpus += [(g, f) for f in orc.fuzz_corpus(g, 11, 8,
                                                       template="qf")]
            corpus += [(g, f) for f in orc.fuzz_corpus(g, 12, 5,
                                                       template="bounded")]
        corpus += [
            (Z2, fm.parse(Z2, "(exists (x) (= (* 2 x) (c 1 1)))")),
            (Z2, fm.parse(Z2, "(iff (insub 1 x) (le@ 1 x (c 0 0)))")),
            (Q1, fm.parse(Q1, "(forall (x) (implies (< x y) true))")),
        ]
        assert len(corpus) >= 50
        for g, f in corpus:
            s1 = fm.print_formula(f)
            f1 = fm.parse(g, s1)
            s2 = fm.print_formula(f1)
            assert fm.parse(g, s2) == f1
            assert fm.print_formula(fm.parse(g, s2)) == s2

    def test_term_printing(self):
        f = fm.parse(Z2, "(< (+ (* 2 x) y (c 0 1)) (c 0 0))")
        assert fm.print_formula(f) == "(< (+ (* 2 x) y (c 0 1)) (c 0 0))"
        f = fm.parse(Z1, "(= (* -1 x) (c 0))")
        assert fm.print_formula(f) == "(= (* -1 x) (c 0))"


class TestStructural:
    def test_free_vars_under_binder(self):
        f = fm.parse(Z1, "(exists (x) (< x y))")
        assert fm.free_vars(f) == {"y"}

    def test_substitute_example(self):
        f = fm.parse(Z1, "(< x y)")
        repl = fm.term({"y": 1}, (1,))
        out = fm.substitute(Z1, f, "x", repl)
        assert fm.print_formula(out) == "(< (+ y (c 1)) y)"

    def test_substitute_capture_avoiding(self):
        f = fm.parse(Z1, "(exists (x) (< x y))")
        out = fm.substitute(Z1, f, "y", fm.t_var(Z1, "x"))
        assert isinstance(out, fm.Exists) and out.var != "x"
        assert fm.free_vars(out) == {"x"}

    def test_substitute_bound_var_is_noop(self):
        f = fm.parse(Z1, "(exists (x) (< x y))")
        assert fm.substitute(Z1, f, "x", fm.t_const((5,))) == f

    def test_substitute_then_evaluate(self):
        pts = box_elements(Z2, 2)
        corpus = orc.fuzz_corpus(Z2, 21, 12, template="qf")
        for f in corpus:
            names = sorted(fm.free_vars(f))
            for a in pts[::7]:
                bound = f
                for v in names:
                    bound = fm.substitute(Z2, bound, v, fm.t_const(a))
                env = {v: a for v in names}
                assert orc.evaluate(Z2, bound, {}) == orc.evaluate(Z2, f, env)


class TestLower:
    def test_lex_expansion_shape(self):
        f = fm.parse(Z2, "(< x y)")
        low = fm.lower(Z2, f)
        assert isinstance(low, sc.SOr) and len(low.items) == 2

    def test_relative_congruence_lowering(self):
        low = fm.lower(Z2, fm.parse(Z2, "(congr@ 1 2 x (c 1 0))"))
        x1 = sc.SVar("x", 1)
        assert low == sc.SCongr(2, sc.lin({x1: 1}, 1))

    def test_dense_congruence_trivial(self):
        low = fm.lower(Q1, fm.parse(Q1, "(congr 3 x (c 0))"))
        assert low == sc.TRUE

    def test_level_zero_atoms(self):
        assert fm.lower(Z2, fm.parse(Z2, "(lt@ 0 x y)")) == sc.FALSE
        assert fm.lower(Z2, fm.parse(Z2, "(le@ 0 x y)")) == sc.TRUE
        assert fm.lower(Z2, fm.parse(Z2, "(insub 0 x)")) == sc.TRUE

    def test_quantifier_becomes_block(self):
        low = fm.lower(Z2, fm.parse(Z2, "(exists (x) (= x y))"))
        assert isinstance(low, sc.SExists) and low.var == sc.SVar("x", 1)
        assert isinstance(low.body, sc.SExists)
        assert low.body.var == sc.SVar("x", 2)

    def test_mixed_group_congruence_only_on_discrete(self):
        low = fm.lower(QZ, fm.parse(QZ, "(congr 5 x (c 0 0))"))
        x2 = sc.SVar("x", 2)
        assert low == sc.SCongr(5, sc.lin({x2: 1}))


class TestLowerAgreesWithDirectSemantics:
    def check(self, g, formulas, bound, stride):
        pts = box_elements(g, bound, denominators=(1, 2))
        for f in formulas:
            names = sorted(fm.free_vars(f))
            low = fm.lower(g, f)
            if not names:
                continue
            if len(names) == 1:
                combos = [(a,) for a in pts]
            else:
                combos = [(a, b) for a in pts[::stride] for b in pts[::stride]]
            for combo in combos:
                env = dict(zip(names, combo))
                want = orc.evaluate(g, f, env)
                got = sc.s_eval(g, low, fm.scalarize(g, env))
                assert got == want, (str(g), fm.print_formula(f), env)

    def test_on_z2(self):
        self.check(Z2, orc.fuzz_corpus(Z2, 31, 25, template="qf"), 2, 3)

    def test_on_mixed_groups(self):
        for g, seed in ((Z1, 32), (Q1, 33), (ZQ, 34), (QZ, 35)):
            self.check(g, orc.fuzz_corpus(g, seed, 20, template="qf"), 2, 3)

    def test_on_wide_window(self):
        self.check(Z1, orc.fuzz_corpus(Z1, 36, 15, template="qf"), 6, 1)
