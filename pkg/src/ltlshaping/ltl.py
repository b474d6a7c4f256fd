"""Co-safe LTL formulas: parsing, simplification and formula progression.

Formulas are immutable trees built from the node classes below.  ``And`` and
``Or`` are n-ary; after :func:`simplify` their children are deduplicated and
sorted by canonical text, so two formulas with the same ``str()`` are the
same automaton state.

Surface syntax (ASCII, unicode aliases accepted)::

    !a  ~a  ¬a        negation (atoms only)
    a & b   a ∧ b     conjunction
    a | b   a ∨ b     disjunction
    X f     ○ f       next
    F f     ◇ f       eventually
    f U g             until (right associative)
    true  false

Precedence, tightest first: ``!`` then ``X``/``F`` then ``U`` then ``&`` then ``|``.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Sequence

MAX_TRUTH_TABLE_ATOMS = 16


class FormulaError(ValueError):
    pass


class LTLSyntaxError(FormulaError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownAtomError(FormulaError):
    pass


class CoSafetyError(FormulaError):
    """Negation applied to something other than an atomic proposition."""


class Formula:
    __slots__ = ("_key", "_hash")

    precedence = 100

    def _init_key(self, key):
        self._key = key
        self._hash = hash(key)

    def __eq__(self, other):
        return isinstance(other, Formula) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"

    @property
    def children(self) -> tuple[Formula, ...]:
        return ()

    def _wrap(self, child, strict=False):
        text = str(child)
        if child.precedence < self.precedence or (strict and child.precedence == self.precedence):
            return f"({text})"
        return text


class Const(Formula):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = bool(value)
        self._init_key(("const", self.value))

    def __str__(self):
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


class Atom(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._init_key(("atom", name))

    def __str__(self):
        return self.name


class NegAtom(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._init_key(("neg", name))

    def __str__(self):
        return f"!{self.name}"


class And(Formula):
    __slots__ = ("args",)
    precedence = 20

    def __init__(self, *args: Formula):
        if len(args) == 1 and isinstance(args[0], (tuple, list)):
            args = tuple(args[0])
        self.args = tuple(args)
        self._init_key(("and",) + tuple(a._key for a in self.args))

    @property
    def children(self):
        return self.args

    def __str__(self):
        return " & ".join(self._wrap(a, strict=True) for a in self.args)


class Or(Formula):
    __slots__ = ("args",)
    precedence = 10

    def __init__(self, *args: Formula):
        if len(args) == 1 and isinstance(args[0], (tuple, list)):
            args = tuple(args[0])
        self.args = tuple(args)
        self._init_key(("or",) + tuple(a._key for a in self.args))

    @property
    def children(self):
        return self.args

    def __str__(self):
        return " | ".join(self._wrap(a, strict=True) for a in self.args)


class Next(Formula):
    __slots__ = ("sub",)
    precedence = 40

    def __init__(self, sub: Formula):
        self.sub = sub
        self._init_key(("next", sub._key))

    @property
    def children(self):
        return (self.sub,)

    def __str__(self):
        return f"X {self._wrap(self.sub)}"


class Eventually(Formula):
    __slots__ = ("sub",)
    precedence = 40

    def __init__(self, sub: Formula):
        self.sub = sub
        self._init_key(("eventually", sub._key))

    @property
    def children(self):
        return (self.sub,)

    def __str__(self):
        return f"F {self._wrap(self.sub)}"


class Until(Formula):
    __slots__ = ("lhs", "rhs")
    precedence = 30

    def __init__(self, lhs: Formula, rhs: Formula):
        self.lhs = lhs
        self.rhs = rhs
        self._init_key(("until", lhs._key, rhs._key))

    @property
    def children(self):
        return (self.lhs, self.rhs)

    def __str__(self):
        # right associative: a U (b U c) prints as a U b U c
        return f"{self._wrap(self.lhs, strict=True)} U {self._wrap(self.rhs)}"


TEMPORAL = (Next, Eventually, Until)


def atoms(f: Formula) -> frozenset[str]:
    if isinstance(f, (Atom, NegAtom)):
        return frozenset([f.name])
    out = frozenset()
    for c in f.children:
        out |= atoms(c)
    return out


def is_temporal(f: Formula) -> bool:
    if isinstance(f, TEMPORAL):
        return True
    return any(is_temporal(c) for c in f.children)


def temporal_depth(f: Formula) -> int:
    inner = max((temporal_depth(c) for c in f.children), default=0)
    return inner + 1 if isinstance(f, TEMPORAL) else inner


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in f.children)


# ---------------------------------------------------------------------------
# letters


def letter_from_props(props: Iterable[str], ap: Sequence[str]) -> int:
    """Encode a set of true propositions as a bitmask over ``ap`` (bit i = ap[i])."""
    mask = 0
    index = {p: i for i, p in enumerate(ap)}
    for p in props:
        if p not in index:
            raise UnknownAtomError(f"proposition {p!r} not in {list(ap)}")
        mask |= 1 << index[p]
    return mask


def props_from_letter(letter: int, ap: Sequence[str]) -> frozenset[str]:
    return frozenset(p for i, p in enumerate(ap) if letter >> i & 1)


def format_letter(letter: int, ap: Sequence[str]) -> str:
    return "{" + ",".join(p for i, p in enumerate(ap) if letter >> i & 1) + "}"


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>&&|\|\||[!~¬&∧|∨()○◇])|(?P<ident>[A-Za-z_][A-Za-z0-9_]*))"
)
_ALIASES = {"&&": "&", "∧": "&", "||": "|", "∨": "|", "~": "!", "¬": "!", "○": "X", "◇": "F"}
_KEYWORDS = {"X", "F", "U", "true", "false", "True", "False"}


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise LTLSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = "op" if m.group("op") else "ident"
        value = m.group(kind)
        start = m.start(kind)
        value = _ALIASES.get(value, value)
        if kind == "ident" and value in _KEYWORDS:
            kind = "op"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, props):
        self.tokens = _tokenize(text)
        self.i = 0
        self.props = props

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            raise LTLSyntaxError(f"unexpected {val or 'end of input'!r}", pos, [repr(value)])

    def parse(self):
        f = self.disjunction()
        kind, val, pos = self.peek()
        if kind != "end":
            raise LTLSyntaxError(f"unexpected {val!r}", pos, ["'&'", "'|'", "'U'", "end of input"])
        return f

    def disjunction(self):
        args = [self.conjunction()]
        while self.peek()[1] == "|" and self.peek()[0] == "op":
            self.take()
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(*args)

    def conjunction(self):
        args = [self.until()]
        while self.peek()[1] == "&" and self.peek()[0] == "op":
            self.take()
            args.append(self.until())
        return args[0] if len(args) == 1 else And(*args)

    def until(self):
        lhs = self.unary()
        if self.peek()[:2] == ("op", "U"):
            self.take()
            return Until(lhs, self.until())
        return lhs

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val == "!":
            self.take()
            sub = self.unary()
            if isinstance(sub, Atom):
                return NegAtom(sub.name)
            if isinstance(sub, Const):
                return Const(not sub.value)
            raise CoSafetyError(
                f"negation at position {pos} applies to '{sub}'; only atomic propositions may be negated"
            )
        if kind == "op" and val == "X":
            self.take()
            return Next(self.unary())
        if kind == "op" and val == "F":
            self.take()
            return Eventually(self.unary())
        return self.primary()

    def primary(self):
        kind, val, pos = self.take()
        if kind == "op" and val == "(":
            f = self.disjunction()
            self.expect(")")
            return f
        if kind == "op" and val in ("true", "True"):
            return TRUE
        if kind == "op" and val in ("false", "False"):
            return FALSE
        if kind == "ident":
            if self.props is not None and val not in self.props:
                raise UnknownAtomError(f"unknown atom {val!r} at position {pos}; declared: {sorted(self.props)}")
            return Atom(val)
        raise LTLSyntaxError(
            f"unexpected {val or 'end of input'!r}", pos, ["atom", "'('", "'!'", "'X'", "'F'", "'true'", "'false'"]
        )


def parse(text: str, props: Sequence[str] | None = None) -> Formula:
    """Parse a co-safe LTL formula.

    When ``props`` is given every atom must be one of its names.
    """
    if not text or not text.strip():
        raise LTLSyntaxError("empty formula", 0, ["formula"])
    if props is not None:
        if not props:
            raise FormulaError("proposition list must be non-empty")
        if len(set(props)) != len(props):
            raise FormulaError(f"duplicate proposition names in {list(props)}")
        props = frozenset(props)
    return _Parser(text, props).parse()


# ---------------------------------------------------------------------------
# propositional evaluation and simplification


def evaluate_propositional(f: Formula, true_props) -> bool:
    """Truth value of a temporal-free formula under one assignment."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.name in true_props
    if isinstance(f, NegAtom):
        return f.name not in true_props
    if isinstance(f, And):
        return all(evaluate_propositional(a, true_props) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate_propositional(a, true_props) for a in f.args)
    raise FormulaError(f"temporal formula {f} has no propositional value")


def _truth_constant(f: Formula):
    """Return TRUE/FALSE if temporal-free ``f`` is valid/unsatisfiable, else None."""
    names = sorted(atoms(f))
    if len(names) > MAX_TRUTH_TABLE_ATOMS:
        return None
    seen = set()
    for bits in itertools.product((False, True), repeat=len(names)):
        seen.add(evaluate_propositional(f, {n for n, b in zip(names, bits) if b}))
        if len(seen) == 2:
            return None
    return TRUE if True in seen else FALSE


def _sort_key(f):
    return str(f)


def _complement(f):
    if isinstance(f, Atom):
        return NegAtom(f.name)
    if isinstance(f, NegAtom):
        return Atom(f.name)
    return None


def _junction(cls, args):
    unit, zero = (TRUE, FALSE) if cls is And else (FALSE, TRUE)
    flat = []
    for a in args:
        if isinstance(a, cls):
            flat.extend(a.args)
        else:
            flat.append(a)
    kept = {}
    for a in flat:
        if a == zero:
            return zero
        if a == unit:
            continue
        kept[a] = None
    for a in kept:
        comp = _complement(a)
        if comp is not None and comp in kept:
            return zero
    dual = Or if cls is And else And
    # absorption: x & (x | y) = x, x | (x & y) = x
    items = list(kept)
    items = [
        a for a in items
        if not (isinstance(a, dual) and any(b in a.args for b in items if b is not a))
    ]
    # temporal-free members are decided together by truth table
    plain = [a for a in items if not is_temporal(a)]
    if len(plain) > 1 or (plain and len(items) > 1):
        const = _truth_constant(cls(*plain))
        if const == zero:
            return zero
        if const == unit:
            items = [a for a in items if is_temporal(a)]
    if not items:
        return unit
    if len(items) == 1:
        return items[0]
    return cls(*sorted(items, key=_sort_key))


def _simplify_once(f: Formula) -> Formula:
    if isinstance(f, (Const, Atom, NegAtom)):
        return f
    if isinstance(f, Next):
        sub = _simplify_once(f.sub)
        return sub if isinstance(sub, Const) else Next(sub)
    if isinstance(f, Eventually):
        sub = _simplify_once(f.sub)
        if isinstance(sub, (Const, Eventually)):
            return sub
        return Eventually(sub)
    if isinstance(f, Until):
        lhs, rhs = _simplify_once(f.lhs), _simplify_once(f.rhs)
        if isinstance(rhs, Const):
            return rhs
        if lhs == FALSE or lhs == rhs:
            return rhs
        if lhs == TRUE:
            return Eventually(rhs) if not isinstance(rhs, Eventually) else rhs
        return Until(lhs, rhs)
    if isinstance(f, (And, Or)):
        result = _junction(type(f), [_simplify_once(a) for a in f.args])
    else:
        raise FormulaError(f"unknown formula node {f!r}")
    if not is_temporal(result) and not isinstance(result, Const):
        const = _truth_constant(result)
        if const is not None:
            return const
    return result


def simplify(f: Formula) -> Formula:
    """Canonical simplification; the result is a fixpoint of this function."""
    prev = None
    while prev != f:
        prev, f = f, _simplify_once(f)
    if not is_temporal(f) and not isinstance(f, Const):
        const = _truth_constant(f)
        if const is not None:
            return const
    return f


def _progress(f: Formula, letter) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return TRUE if f.name in letter else FALSE
    if isinstance(f, NegAtom):
        return FALSE if f.name in letter else TRUE
    if isinstance(f, And):
        return And(*[_progress(a, letter) for a in f.args])
    if isinstance(f, Or):
        return Or(*[_progress(a, letter) for a in f.args])
    if isinstance(f, Next):
        return f.sub
    if isinstance(f, Until):
        return Or(_progress(f.rhs, letter), And(_progress(f.lhs, letter), f))
    if isinstance(f, Eventually):
        return Or(_progress(f.sub, letter), f)
    raise FormulaError(f"unknown formula node {f!r}")


MAX_DNF_CLAUSES = 4096


def _clauses(f: Formula):
    """Disjunctive normal form as a set of clauses (frozensets of literals).

    Literals are atoms, negated atoms and temporal subformulas, which are kept
    whole.  Returns None past ``MAX_DNF_CLAUSES``.
    """
    if isinstance(f, Const):
        return {frozenset()} if f.value else set()
    if isinstance(f, Or):
        out = set()
        for a in f.args:
            sub = _clauses(a)
            if sub is None:
                return None
            out |= sub
        return out if len(out) <= MAX_DNF_CLAUSES else None
    if isinstance(f, And):
        out = {frozenset()}
        for a in f.args:
            sub = _clauses(a)
            if sub is None:
                return None
            out = {c | d for c in out for d in sub}
            if len(out) > MAX_DNF_CLAUSES:
                return None
        return out
    return {frozenset([f])}


def normal_form(f: Formula) -> Formula:
    """Canonical DNF: contradictory clauses dropped, subsumed clauses absorbed.

    Temporal subformulas are treated as opaque literals.  Residuals reached by
    progression are positive combinations of subformulas of the original
    formula, so in this form there are only finitely many of them.
    """
    clauses = _clauses(f)
    if clauses is None:
        return f
    kept = [c for c in clauses if not any(_complement(x) in c for x in c)]
    kept = [c for c in kept if not any(d < c for d in kept)]
    if not kept:
        return FALSE
    if frozenset() in kept:
        return TRUE
    terms = []
    for c in kept:
        lits = sorted(c, key=_sort_key)
        terms.append(lits[0] if len(lits) == 1 else And(*lits))
    terms.sort(key=_sort_key)
    result = terms[0] if len(terms) == 1 else Or(*terms)
    if not is_temporal(result):
        const = _truth_constant(result)
        if const is not None:
            return const
    return result


def progress(f: Formula, letter: Iterable[str]) -> Formula:
    """Residual obligation after reading one letter (the set of true propositions)."""
    return normal_form(simplify(_progress(f, frozenset(letter))))
