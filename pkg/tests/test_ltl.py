import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltlshaping.ltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    CoSafetyError,
    Eventually,
    FormulaError,
    LTLSyntaxError,
    NegAtom,
    Next,
    Or,
    UnknownAtomError,
    Until,
    atoms,
    evaluate_propositional,
    letter_from_props,
    normal_form,
    parse,
    progress,
    props_from_letter,
    simplify,
    temporal_depth,
)
from ltlshaping.envs import EXAMPLE_AP, EXAMPLE_FORMULA

from oracles import good_prefix, random_formula

a, b, c = Atom("a"), Atom("b"), Atom("c")


class TestParser:
    def test_atoms_and_constants(self):
        assert parse("a") == a
        assert parse("true") == TRUE
        assert parse("False") == FALSE
        assert parse("!a") == NegAtom("a")
        assert parse("!true") == FALSE

    def test_precedence(self):
        # ! binds tighter than X/F, which bind tighter than U, then &, then |
        assert parse("a | b & c") == Or(a, And(b, c))
        assert parse("a & b U c") == And(a, Until(b, c))
        assert parse("F a U b") == Until(Eventually(a), b)
        assert parse("X !a") == Next(NegAtom("a"))
        assert parse("(a | b) & c") == And(Or(a, b), c)

    def test_until_is_right_associative(self):
        assert parse("a U b U c") == Until(a, Until(b, c))

    def test_aliases(self):
        assert parse("a ∧ b") == parse("a && b") == parse("a & b")
        assert parse("a ∨ b") == parse("a || b") == parse("a | b")
        assert parse("¬a") == parse("~a") == parse("!a")
        assert parse("○ ◇ a") == parse("X F a")

    def test_str_round_trip(self):
        f = parse(EXAMPLE_FORMULA, EXAMPLE_AP)
        assert parse(str(f)) == f

    @pytest.mark.parametrize(
        "text, pos",
        [("a &", 3), ("(a | b", 6), ("a b", 2), ("", 0), ("a $ b", 2), (")", 0)],
    )
    def test_syntax_errors_carry_position(self, text, pos):
        with pytest.raises(LTLSyntaxError) as exc:
            parse(text)
        assert exc.value.position == pos
        assert f"position {pos}" in str(exc.value)

    def test_negating_a_temporal_formula_is_rejected(self):
        with pytest.raises(CoSafetyError):
            parse("!F a")
        with pytest.raises(CoSafetyError):
            parse("!(a & b)")

    def test_unknown_atom(self):
        with pytest.raises(UnknownAtomError, match="'z'"):
            parse("F z", ["a", "b"])

    def test_bad_proposition_lists(self):
        with pytest.raises(FormulaError):
            parse("a", [])
        with pytest.raises(FormulaError):
            parse("a", ["a", "a"])


class TestLetters:
    def test_bitmask_encoding(self):
        ap = ("o", "b", "y")
        assert letter_from_props({"o", "y"}, ap) == 0b101
        assert props_from_letter(0b110, ap) == {"b", "y"}
        with pytest.raises(UnknownAtomError):
            letter_from_props({"q"}, ap)

    @given(st.integers(0, 7))
    def test_round_trip(self, letter):
        ap = ("o", "b", "y")
        assert letter_from_props(props_from_letter(letter, ap), ap) == letter


class TestSimplify:
    def test_constant_folding(self):
        assert simplify(And(a, FALSE)) == FALSE
        assert simplify(Or(a, TRUE)) == TRUE
        assert simplify(And(a, NegAtom("a"))) == FALSE
        assert simplify(Or(a, NegAtom("a"))) == TRUE
        assert simplify(Until(a, TRUE)) == TRUE
        assert simplify(Until(TRUE, b)) == Eventually(b)
        assert simplify(Eventually(Eventually(a))) == Eventually(a)
        assert simplify(Next(FALSE)) == FALSE

    def test_absorption_and_order(self):
        assert simplify(And(a, Or(a, b))) == a
        assert simplify(And(b, a)) == simplify(And(a, b))
        assert simplify(And(a, And(b, c))) == simplify(And(And(a, b), c))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_idempotent(self, seed):
        f = random_formula(random.Random(seed), ("a", "b"), 4)
        once = simplify(f)
        assert simplify(once) == once

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 7))
    def test_propositional_meaning_preserved(self, seed, letter):
        rng = random.Random(seed)
        f = _propositional(rng, 3)
        props = props_from_letter(letter, ("a", "b", "c"))
        assert evaluate_propositional(simplify(f), props) == evaluate_propositional(f, props)
        assert evaluate_propositional(normal_form(f), props) == evaluate_propositional(f, props)


def _propositional(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        name = rng.choice("abc")
        return Atom(name) if rng.random() < 0.5 else NegAtom(name)
    parts = [_propositional(rng, depth - 1) for _ in range(rng.randint(2, 3))]
    return And(*parts) if rng.random() < 0.5 else Or(*parts)


class TestProgression:
    def test_textbook_cases(self):
        assert progress(parse("F a"), {"a"}) == TRUE
        assert progress(parse("F a"), set()) == parse("F a")
        assert progress(parse("a U b"), {"a"}) == parse("a U b")
        assert progress(parse("a U b"), set()) == FALSE
        assert progress(parse("X a"), set()) == a
        assert progress(parse("!y U b"), {"y"}) == FALSE

    def test_example_formula_orders(self):
        f = parse(EXAMPLE_FORMULA, EXAMPLE_AP)
        g = progress(f, {"o"})
        assert g not in (TRUE, FALSE)
        assert progress(g, {"b"}) == TRUE
        assert progress(g, {"y"}) == FALSE
        assert progress(progress(f, {"b"}), {"o"}) == TRUE
        assert progress(f, {"o", "b"}) == TRUE

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 3), max_size=4))
    def test_residual_true_means_good_prefix(self, seed, word):
        # a TRUE residual means every continuation satisfies f; depth-3 formulas
        # need at most 3 more letters to witness pending X obligations
        ap = ("a", "b")
        f = random_formula(random.Random(seed), ap, 3)
        g = simplify(f)
        for i, letter in enumerate(word):
            g = progress(g, props_from_letter(letter, ap))
            if g == TRUE:
                assert good_prefix(f, ap, word[: i + 1], 3)
                break
            if g == FALSE:
                assert not good_prefix(f, ap, word[: i + 1], 4)
                break

    def test_normal_form_is_canonical_for_reordering(self):
        f = Or(And(Eventually(a), b), And(b, Eventually(a)), And(Eventually(a), b, c))
        assert normal_form(f) == normal_form(And(b, Eventually(a))) == And(Eventually(a), b)


def test_helpers():
    f = parse("F (a & X b) | c U b")
    assert atoms(f) == {"a", "b", "c"}
    assert temporal_depth(f) == 2
