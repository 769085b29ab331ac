"""Formal systems as alphabets plus decidable four-valence rules.

Three rule kinds are supported:

``truth-table``
    Propositional formulas. Tautologies are theorems, contradictions are
    antitheorems and contingent formulas are *undecidable* (a modeling
    choice: their status is not settled by the rules alone).
``arithmetic-eval``
    Equalities and inequalities between sums/differences of single-digit
    numerals, evaluated over the integers.
``explicit-table``
    A finite table of base strings plus a default valence. Leading NOT
    symbols flip theorem and antitheorem.

Every system draws its symbols from one shared symbol table, so ``~`` is
the logical NOT in every system that uses it.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Mapping

from .errors import ConfigError, SymbolNotInAlphabet, UnknownSystem

NOT = "~"

# Shared symbol table. Any system using one of these symbols uses it with this meaning.
SYMBOLS: dict[str, str] = {
    NOT: "logical NOT",
    "∧": "AND",
    "∨": "OR",
    "→": "implies",
    "(": "open group",
    ")": "close group",
    "+": "plus",
    "-": "minus",
    "=": "equals",
    "<": "less than",
    **{str(d): f"numeral {d}" for d in range(10)},
}


class Valence(str, Enum):
    THEOREM = "t"
    ANTITHEOREM = "a"
    NOT_WFF = "n"
    UNDECIDABLE = "u"

    @property
    def code(self) -> int:
        return _CODE[self]

    @classmethod
    def from_code(cls, code: int) -> "Valence":
        return VALENCES[code]

    def __str__(self):
        return self.value


VALENCES: tuple[Valence, ...] = tuple(Valence)
_CODE = {v: i for i, v in enumerate(VALENCES)}


@dataclass(frozen=True, order=True)
class Question:
    system: str
    formula: str

    # claims sets are hashed heavily; cache the hash (rebuilt on unpickle)
    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.system, self.formula)))

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return Question, (self.system, self.formula)

    def __str__(self):
        return f"{self.system}:{self.formula}"


@dataclass(frozen=True, order=True)
class Claim:
    question: Question
    valence: Valence

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.question._hash, self.valence)))

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return Claim, (self.question, self.valence)

    def __str__(self):
        return f"({self.question}, {self.valence.value})"


def claim(system: str, formula: str, valence: Valence | str) -> Claim:
    return Claim(Question(system, formula), Valence(valence))


@dataclass(frozen=True, eq=False)
class FormalSystem:
    """An alphabet plus a total, deterministic valence rule.

    ``rule`` is only ever called on strings already checked against the
    alphabet. Well-formedness is derived from it, so a string is a WFF
    exactly when its valence is not ``NOT_WFF``.
    """

    id: str
    alphabet: tuple[str, ...]
    rule: Callable[[str], Valence]
    kind: str = "custom"
    params: Mapping = field(default_factory=dict)
    not_symbol: str = NOT
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError(f"{self.id}: duplicate symbols in alphabet")
        for sym in self.alphabet:
            if len(sym) != 1:
                raise ValueError(f"{self.id}: symbol {sym!r} is not a single character")
        if self.not_symbol not in self.alphabet:
            raise ValueError(f"{self.id}: alphabet lacks the NOT symbol {self.not_symbol!r}")
        object.__setattr__(self, "_symbols", frozenset(self.alphabet))

    def classify(self, s: str) -> Valence:
        v = self._cache.get(s)
        if v is None:
            for ch in s:
                if ch not in self._symbols:
                    raise SymbolNotInAlphabet(f"{ch!r} is not in the alphabet of {self.id}")
            v = self.rule(s)
            self._cache[s] = v
        return v

    def is_wff(self, s: str) -> bool:
        return self.classify(s) is not Valence.NOT_WFF

    def negate(self, s: str) -> str:
        """Return the string expressing NOT s in this system."""
        if self.kind == "truth-table":
            return f"{self.not_symbol}({s})"
        return self.not_symbol + s

    def enumerate_strings(self, max_len: int) -> Iterator[str]:
        return enumerate_strings(self.alphabet, max_len)

    def count_strings(self, max_len: int) -> int:
        a = len(self.alphabet)
        return sum(a**n for n in range(max_len + 1))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "alphabet": list(self.alphabet),
            "not_symbol": self.not_symbol,
            "rule": self.kind,
            "params": _jsonable_params(self.params),
        }

    def __repr__(self):
        return f"FormalSystem(id={self.id!r}, kind={self.kind!r}, alphabet={''.join(self.alphabet)!r})"


def classify(system: FormalSystem, s: str) -> Valence:
    return system.classify(s)


def is_wff(system: FormalSystem, s: str) -> bool:
    return system.is_wff(s)


def enumerate_strings(alphabet, max_len: int) -> Iterator[str]:
    """Yield every string of length <= max_len, shortest first, then in alphabet order."""
    if isinstance(alphabet, FormalSystem):
        alphabet = alphabet.alphabet
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    for n in range(max_len + 1):
        for tup in itertools.product(alphabet, repeat=n):
            yield "".join(tup)


# -- propositional logic ------------------------------------------------------

class _ParseError(Exception):
    pass


class _PropParser:
    # impl := disj ('→' impl)? ; disj := conj ('∨' conj)* ; conj := unary ('∧' unary)*
    # unary := '~' unary | VAR | '(' impl ')'

    def __init__(self, text: str, variables: frozenset[str]):
        self.text = text
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else None

    def take(self, ch):
        if self.peek() != ch:
            raise _ParseError(self.pos)
        self.pos += 1

    def parse(self):
        node = self.impl()
        if self.pos != len(self.text):
            raise _ParseError(self.pos)
        return node

    def impl(self):
        left = self.disj()
        if self.peek() == "→":
            self.pos += 1
            return ("→", left, self.impl())
        return left

    def disj(self):
        node = self.conj()
        while self.peek() == "∨":
            self.pos += 1
            node = ("∨", node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.peek() == "∧":
            self.pos += 1
            node = ("∧", node, self.unary())
        return node

    def unary(self):
        ch = self.peek()
        if ch == NOT:
            self.pos += 1
            return ("~", self.unary())
        if ch == "(":
            self.pos += 1
            node = self.impl()
            self.take(")")
            return node
        if ch is not None and ch in self.variables:
            self.pos += 1
            return ch
        raise _ParseError(self.pos)


def _eval_prop(node, env) -> bool:
    if isinstance(node, str):
        return env[node]
    op = node[0]
    if op == "~":
        return not _eval_prop(node[1], env)
    a = _eval_prop(node[1], env)
    b = _eval_prop(node[2], env)
    if op == "∧":
        return a and b
    if op == "∨":
        return a or b
    return (not a) or b


def _prop_vars(node, acc: set):
    if isinstance(node, str):
        acc.add(node)
    else:
        for child in node[1:]:
            _prop_vars(child, acc)
    return acc


def truth_table_rule(variables) -> Callable[[str], Valence]:
    variables = frozenset(variables)

    def rule(s: str) -> Valence:
        try:
            tree = _PropParser(s, variables).parse()
        except _ParseError:
            return Valence.NOT_WFF
        names = sorted(_prop_vars(tree, set()))
        seen = set()
        for values in itertools.product((False, True), repeat=len(names)):
            seen.add(_eval_prop(tree, dict(zip(names, values))))
            if len(seen) == 2:
                return Valence.UNDECIDABLE
        return Valence.THEOREM if True in seen else Valence.ANTITHEOREM

    return rule


# -- modular arithmetic over single digits -----------------------------------

def arithmetic_rule(digit_bound: int) -> Callable[[str], Valence]:
    digits = {str(d): d for d in range(digit_bound + 1)}

    def expr(s: str):
        # digit (('+'|'-') digit)*
        if not s or len(s) % 2 == 0:
            return None
        if s[0] not in digits:
            return None
        total = digits[s[0]]
        for i in range(1, len(s), 2):
            op, d = s[i], s[i + 1]
            if d not in digits or op not in "+-":
                return None
            total = total + digits[d] if op == "+" else total - digits[d]
        return total

    def rule(s: str) -> Valence:
        flips = 0
        while flips < len(s) and s[flips] == NOT:
            flips += 1
        body = s[flips:]
        rel = [i for i, ch in enumerate(body) if ch in "=<"]
        if len(rel) != 1:
            return Valence.NOT_WFF
        i = rel[0]
        left, right = expr(body[:i]), expr(body[i + 1:])
        if left is None or right is None:
            return Valence.NOT_WFF
        truth = left == right if body[i] == "=" else left < right
        truth ^= flips % 2 == 1
        return Valence.THEOREM if truth else Valence.ANTITHEOREM

    return rule


# -- explicit table ------------------------------------------------------------

def explicit_table_rule(table: Mapping[str, Valence], default: Valence,
                        not_symbol: str = NOT) -> Callable[[str], Valence]:
    table = {k: Valence(v) for k, v in table.items()}
    default = Valence(default)
    if "" in table:
        raise ValueError("the empty string cannot carry a valence")

    def rule(s: str) -> Valence:
        flips = 0
        while flips < len(s) and s[flips] == not_symbol:
            flips += 1
        base = s[flips:]
        if not base:
            return Valence.NOT_WFF
        v = table.get(base, default)
        if flips % 2 and v in (Valence.THEOREM, Valence.ANTITHEOREM):
            v = Valence.ANTITHEOREM if v is Valence.THEOREM else Valence.THEOREM
        return v

    return rule


# -- construction and registry -------------------------------------------------

def _jsonable_params(params: Mapping) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, Mapping):
            out[k] = {kk: (vv.value if isinstance(vv, Valence) else vv) for kk, vv in v.items()}
        elif isinstance(v, Valence):
            out[k] = v.value
        else:
            out[k] = list(v) if isinstance(v, (tuple, frozenset, set)) else v
    return out


RULE_KINDS = ("truth-table", "arithmetic-eval", "explicit-table")


def make_system(id: str, alphabet, rule: str, params: Mapping | None = None,
                not_symbol: str = NOT) -> FormalSystem:
    params = dict(params or {})
    alphabet = tuple(alphabet)
    for sym in alphabet:
        known = SYMBOLS.get(sym)
        if known is None:
            continue
        if sym == not_symbol and known != "logical NOT":
            raise ValueError(f"{sym!r} is {known} in the shared symbol table")
    if rule == "truth-table":
        variables = tuple(params.get("variables", ()))
        if not variables:
            raise ValueError("truth-table systems need at least one variable")
        fn = truth_table_rule(variables)
        params["variables"] = variables
    elif rule == "arithmetic-eval":
        bound = int(params.get("digit_bound", 9))
        if not 0 <= bound <= 9:
            raise ValueError("digit_bound must lie in 0..9")
        fn = arithmetic_rule(bound)
        params["digit_bound"] = bound
    elif rule == "explicit-table":
        table = {k: Valence(v) for k, v in params.get("table", {}).items()}
        default = Valence(params.get("default", "n"))
        fn = explicit_table_rule(table, default, not_symbol)
        params["table"] = table
        params["default"] = default
    else:
        raise ValueError(f"unknown rule kind {rule!r}; expected one of {RULE_KINDS}")
    return FormalSystem(id=id, alphabet=alphabet, rule=fn, kind=rule, params=params,
                        not_symbol=not_symbol)


def system_from_dict(data: Mapping, source: str = "<dict>") -> FormalSystem:
    try:
        return make_system(
            id=data["id"],
            alphabet=data["alphabet"],
            rule=data["rule"],
            params=data.get("params", {}),
            not_symbol=data.get("not_symbol", NOT),
        )
    except KeyError as exc:
        raise ConfigError(f"{source}: missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_system_file(path) -> FormalSystem:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return system_from_dict(data, str(path))


PROP = make_system(
    "PROP",
    ("p", "q", "r", NOT, "∧", "∨", "→", "(", ")"),
    "truth-table",
    {"variables": ("p", "q", "r")},
)

MODARITH = make_system(
    "MODARITH",
    tuple("0123456789") + ("+", "-", "=", "<", NOT),
    "arithmetic-eval",
    {"digit_bound": 9},
)

SYNTHU = make_system(
    "SYNTHU",
    (NOT, "t", "a", "u", "0", "1"),
    "explicit-table",
    {
        "table": {"t0": "t", "t1": "t", "a0": "a", "a1": "a", "u0": "u", "u1": "u"},
        "default": "n",
    },
)

BUILTIN_SYSTEMS = {s.id: s for s in (PROP, MODARITH, SYNTHU)}
_registry: dict[str, FormalSystem] = dict(BUILTIN_SYSTEMS)


def register_system(system: FormalSystem, replace: bool = False) -> FormalSystem:
    existing = _registry.get(system.id)
    if existing is not None and existing is not system and not replace:
        if existing.to_dict() != system.to_dict():
            raise ValueError(f"a different system is already registered as {system.id!r}")
        return existing
    _registry[system.id] = system
    return system


def get_system(system_id: str, oracles: Mapping[str, FormalSystem] | None = None) -> FormalSystem:
    table = _registry if oracles is None else oracles
    try:
        return table[system_id]
    except KeyError:
        raise UnknownSystem(system_id) from None


def registry() -> Mapping[str, FormalSystem]:
    return dict(_registry)


def true_valence(q: Question, oracles: Mapping[str, FormalSystem] | None = None) -> Valence:
    return get_system(q.system, oracles).classify(q.formula)
