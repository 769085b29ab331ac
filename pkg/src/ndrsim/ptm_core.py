"""Single-tape Turing machines, their probabilistic generalization, and the
coin-flipping distribution over a prefix-free halting set.

The head position is called ``head`` throughout (it starts at 0, on the
first input cell). Every enumeration here is truncated by a step budget,
so halting sets are under-approximations and are labeled as such.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol

import numpy as np

from . import _kernels
from .errors import BudgetExhaustedError, ConfigError, NotPrefixFree

MOVES = (-1, 0, 1)


@dataclass(frozen=True)
class TapeMachine:
    """Deterministic machine. ``rules[(state, symbol)] = (state', write, move)``.

    Rules for the halt state are ignored; halt-state IDs are fixed points.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    blank: str
    start: str
    halt: str
    rules: Mapping[tuple[str, str], tuple[str, str, int]]
    name: str = ""

    def __post_init__(self):
        _validate_frame(self)
        for (r, a), (r2, w, mv) in self.rules.items():
            _validate_transition(self, r, a, r2, w, mv)
        missing = [(r, a) for r in self.states if r != self.halt for a in self.alphabet
                   if (r, a) not in self.rules]
        if missing:
            raise ValueError(f"{self.name or 'machine'}: update is not total, missing {missing[:3]}")

    @property
    def deterministic(self) -> bool:
        return True

    def transitions(self, state: str, symbol: str):
        return ((self.rules[state, symbol], 1.0),)

    def tables(self):
        """Integer transition tables used by the compiled run kernel."""
        cached = self.__dict__.get("_tables")
        if cached is None:
            si = {r: i for i, r in enumerate(self.states)}
            ai = {a: i for i, a in enumerate(self.alphabet)}
            shape = (len(self.states), len(self.alphabet))
            ns = np.zeros(shape, dtype=np.int32)
            wr = np.zeros(shape, dtype=np.int32)
            mv = np.zeros(shape, dtype=np.int32)
            for r in self.states:
                for a in self.alphabet:
                    if r == self.halt:
                        r2, w, m = r, a, 0
                    else:
                        r2, w, m = self.rules[r, a]
                    ns[si[r], ai[a]] = si[r2]
                    wr[si[r], ai[a]] = ai[w]
                    mv[si[r], ai[a]] = m
            cached = (ns, wr, mv, si, ai)
            object.__setattr__(self, "_tables", cached)
        return cached


@dataclass(frozen=True)
class StochasticMachine:
    """Probabilistic machine: each (state, symbol) maps to a finite distribution
    over (state', write, move) triples."""

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    blank: str
    start: str
    halt: str
    kernel: Mapping[tuple[str, str], tuple[tuple[tuple[str, str, int], float], ...]]
    name: str = ""

    def __post_init__(self):
        _validate_frame(self)
        for (r, a), dist in self.kernel.items():
            total = 0.0
            for (r2, w, mv), p in dist:
                _validate_transition(self, r, a, r2, w, mv)
                if p < 0:
                    raise ValueError(f"negative probability at {(r, a)}")
                total += p
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"kernel at {(r, a)} sums to {total!r}, not 1")
        missing = [(r, a) for r in self.states if r != self.halt for a in self.alphabet
                   if (r, a) not in self.kernel]
        if missing:
            raise ValueError(f"{self.name or 'machine'}: kernel is not total, missing {missing[:3]}")

    @property
    def deterministic(self) -> bool:
        return False

    def transitions(self, state: str, symbol: str):
        return self.kernel[state, symbol]


def _validate_frame(m):
    if len(m.alphabet) < 3:
        raise ValueError("alphabet needs at least three symbols")
    if m.blank not in m.alphabet:
        raise ValueError("blank symbol must be in the alphabet")
    for r in (m.start, m.halt):
        if r not in m.states:
            raise ValueError(f"state {r!r} is not declared")


def _validate_transition(m, r, a, r2, w, mv):
    if r not in m.states or r2 not in m.states:
        raise ValueError(f"undeclared state in rule {(r, a)}")
    if a not in m.alphabet or w not in m.alphabet:
        raise ValueError(f"undeclared symbol in rule {(r, a)}")
    if mv not in MOVES:
        raise ValueError(f"head move {mv!r} in rule {(r, a)} is not -1, 0 or +1")


@dataclass(frozen=True)
class ID:
    """Instantaneous description. ``tape`` lists the non-blank cells as sorted
    (position, symbol) pairs; every other cell is blank."""

    state: str
    head: int
    tape: tuple[tuple[int, str], ...] = ()

    def cells(self) -> dict[int, str]:
        return dict(self.tape)

    def read(self, pos: int, blank: str) -> str:
        for p, s in self.tape:
            if p == pos:
                return s
        return blank


def initial_id(m, input: str) -> ID:
    for ch in input:
        if ch not in m.alphabet or ch == m.blank:
            raise ValueError(f"input symbol {ch!r} is not a non-blank symbol of the machine")
    return ID(m.start, 0, tuple((i, ch) for i, ch in enumerate(input)))


def _apply(m, id: ID, r2: str, w: str, mv: int) -> ID:
    cells = id.cells()
    if w == m.blank:
        cells.pop(id.head, None)
    else:
        cells[id.head] = w
    return ID(r2, id.head + mv, tuple(sorted(cells.items())))


def step(m, id: ID, rng: np.random.Generator | None = None) -> ID:
    """Apply the update once. Halt-state IDs are returned unchanged."""
    if id.state == m.halt:
        return id
    options = m.transitions(id.state, id.read(id.head, m.blank))
    if len(options) == 1:
        (r2, w, mv), _ = options[0]
    else:
        if rng is None:
            raise ValueError("a stochastic step needs an rng")
        u = rng.random()
        acc = 0.0
        for (r2, w, mv), p in options:
            acc += p
            if u < acc:
                break
    return _apply(m, id, r2, w, mv)


@dataclass(frozen=True)
class Halted:
    output: str
    steps: int
    final: ID | None = field(default=None, compare=False)


@dataclass(frozen=True)
class BudgetExhausted:
    steps: int
    final: ID | None = field(default=None, compare=False)


def output_of(cells: Mapping[int, str], head: int, blank: str) -> str:
    """Largest blank-delimited block of cells containing the head."""
    if cells.get(head, blank) == blank:
        return ""
    lo = head
    while cells.get(lo - 1, blank) != blank:
        lo -= 1
    hi = head
    while cells.get(hi + 1, blank) != blank:
        hi += 1
    return "".join(cells[i] for i in range(lo, hi + 1))


def trace(m, input: str, budget: int, rng: np.random.Generator | None = None) -> Iterator[ID]:
    """Yield the initial ID and each successor until halting or ``budget`` steps."""
    cur = initial_id(m, input)
    yield cur
    for _ in range(budget):
        if cur.state == m.halt:
            return
        cur = step(m, cur, rng)
        yield cur


def run(m, input: str, budget: int, rng: np.random.Generator | None = None):
    """Run from the blank-padded input until halting or ``budget`` steps.

    Deterministic machines go through the compiled kernel; stochastic ones
    step in Python with ``rng``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if m.deterministic:
        initial_id(m, input)
        ns, wr, mv, si, ai = m.tables()
        halted, steps, state, head, lo, codes = _kernels.tm_run(
            ns, wr, mv, si[m.start], si[m.halt], ai[m.blank], [ai[ch] for ch in input], budget)
        cells = {lo + i: m.alphabet[c] for i, c in enumerate(codes) if m.alphabet[c] != m.blank}
        final = ID(m.states[state], head, tuple(sorted(cells.items())))
        if halted:
            return Halted(output_of(cells, head, m.blank), steps, final)
        return BudgetExhausted(steps, final)
    cur = initial_id(m, input)
    steps = 0
    while cur.state != m.halt and steps < budget:
        cur = step(m, cur, rng)
        steps += 1
    if cur.state == m.halt:
        return Halted(output_of(cur.cells(), cur.head, m.blank), steps, cur)
    return BudgetExhausted(steps, cur)


@dataclass(frozen=True)
class HaltingSet:
    """Inputs of length <= max_len seen to halt within ``budget`` steps.

    Always an under-approximation of the true halting set when ``truncated``.
    """

    strings: frozenset[str]
    max_len: int
    budget: int
    truncated: bool = True

    def __iter__(self):
        return iter(sorted(self.strings, key=lambda s: (len(s), s)))

    def __len__(self):
        return len(self.strings)

    def __contains__(self, s):
        return s in self.strings


def halting_set(m: TapeMachine, max_len: int, budget: int,
                input_alphabet: Iterable[str] | None = None) -> HaltingSet:
    if max_len < 0 or budget < 1:
        raise ValueError("max_len must be >= 0 and budget >= 1")
    if not m.deterministic:
        raise TypeError("halting sets are defined for deterministic machines")
    from .formal_system import enumerate_strings

    symbols = tuple(input_alphabet) if input_alphabet is not None else tuple(
        a for a in m.alphabet if a != m.blank)
    halts = {s for s in enumerate_strings(symbols, max_len)
             if isinstance(run(m, s, budget), Halted)}
    return HaltingSet(frozenset(halts), max_len, budget, True)


def check_prefix_free(strings: Iterable[str]) -> bool:
    ordered = sorted(set(strings))
    # a proper prefix sorts immediately before some extension of itself
    return not any(b.startswith(a) for a, b in zip(ordered, ordered[1:]))


@dataclass(frozen=True)
class CoinFlipDistribution:
    probs: Mapping[str, float]
    omega: Fraction
    max_len: int | None = None
    budget: int | None = None

    def __getitem__(self, s):
        return self.probs[s]


def coin_flip_distribution(source, max_len: int | None = None, budget: int | None = None,
                           base: int = 2) -> CoinFlipDistribution:
    """Weight each halting string by base**-len and normalize by Omega.

    ``source`` is a deterministic machine (its halting set is enumerated with
    ``max_len``/``budget``), a :class:`HaltingSet`, or any iterable of strings.
    """
    if isinstance(source, (TapeMachine, StochasticMachine)):
        if max_len is None or budget is None:
            raise ValueError("max_len and budget are required when passing a machine")
        source = halting_set(source, max_len, budget)
    if isinstance(source, HaltingSet):
        max_len, budget = source.max_len, source.budget
        strings = source.strings
    else:
        strings = frozenset(source)
    if not check_prefix_free(strings):
        raise NotPrefixFree(f"halting set {sorted(strings)} is not prefix-free")
    weights = {s: Fraction(1, base ** len(s)) for s in strings}
    omega = sum(weights.values(), Fraction(0))
    ordered = sorted(strings, key=lambda s: (len(s), s))
    probs = {s: float(weights[s] / omega) for s in ordered}
    return CoinFlipDistribution(probs, omega, max_len, budget)


# -- emulation ------------------------------------------------------------------

class Encoding(Protocol):
    def encode(self, s: str) -> str: ...
    def decode(self, s: str) -> str: ...


@dataclass(frozen=True)
class HeaderEncoding:
    """Prefix a machine description and a separator: ``header + sep + input``."""

    header: str
    sep: str = "#"

    def encode(self, s: str) -> str:
        return self.header + self.sep + s

    def decode(self, s: str) -> str:
        prefix = self.header + self.sep
        if not s.startswith(prefix):
            raise ValueError(f"{s!r} is not in the image of the encoding")
        return s[len(prefix):]


def emulate(universal: TapeMachine, target: TapeMachine, encoding: Encoding, input: str,
            budget: int, check: bool = False) -> str:
    """Run ``universal`` on ``encoding.encode(input)`` and decode its output.

    With ``check`` the target is also run directly and the two outputs must agree.
    """
    res = run(universal, encoding.encode(input), budget)
    if isinstance(res, BudgetExhausted):
        raise BudgetExhaustedError(f"universal machine did not halt within {budget} steps")
    out = encoding.decode(res.output)
    if check:
        direct = run(target, input, budget)
        if isinstance(direct, BudgetExhausted):
            raise BudgetExhaustedError(f"target machine did not halt within {budget} steps")
        if direct.output != out:
            raise AssertionError(f"emulation mismatch: {out!r} != {direct.output!r}")
    return out


# -- machine files ----------------------------------------------------------------

def machine_from_dict(data: Mapping, source: str = "<dict>"):
    try:
        states = tuple(data["states"])
        alphabet = tuple(data["alphabet"])
        frame = dict(states=states, alphabet=alphabet, blank=data["blank"],
                     start=data["start"], halt=data["halt"], name=data.get("name", ""))
        default = data.get("default")
        if "kernel" in data:
            kernel = {}
            for entry in data["kernel"]:
                r, a, options = entry
                kernel[r, a] = tuple(((r2, w if w is not None else a, int(mv)), float(p))
                                     for r2, w, mv, p in options)
            _fill_default(kernel, states, alphabet, data["halt"], default, stochastic=True)
            return StochasticMachine(kernel=kernel, **frame)
        rules = {}
        for r, a, r2, w, mv in data["rules"]:
            rules[r, a] = (r2, w if w is not None else a, int(mv))
        _fill_default(rules, states, alphabet, data["halt"], default, stochastic=False)
        return TapeMachine(rules=rules, **frame)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{source}: malformed machine definition ({exc})") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _fill_default(table, states, alphabet, halt, default, stochastic):
    if default is None:
        return
    r2, w, mv = default
    for r in states:
        if r == halt:
            continue
        for a in alphabet:
            if (r, a) not in table:
                t = (r2 if r2 is not None else r, w if w is not None else a, int(mv))
                table[r, a] = ((t, 1.0),) if stochastic else t


def machine_to_dict(m) -> dict:
    data = {"name": m.name, "states": list(m.states), "alphabet": list(m.alphabet),
            "blank": m.blank, "start": m.start, "halt": m.halt}
    if m.deterministic:
        data["rules"] = [[r, a, r2, w, mv] for (r, a), (r2, w, mv) in m.rules.items()]
    else:
        data["kernel"] = [[r, a, [[r2, w, mv, p] for (r2, w, mv), p in opts]]
                          for (r, a), opts in m.kernel.items()]
    return data


def load_machine(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return machine_from_dict(data, str(path))
