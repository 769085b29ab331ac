"""The NDR machine: a stochastic add / answer / commit loop over a questions
tape Q and a claims tape C.

Each iteration
  1. the question policy adds questions to the end of Q;
  2. every open question is attempted by the answer kernel;
  3. each answer found is appended to C (in Q order) and its question leaves
     Q; then the removal policy may delete claims from C.

Answer kernel: with probability ``1 - solve_rate`` nothing is found. Otherwise
the true valence is returned with probability ``1 - noise_rate`` and one of the
three wrong valences, uniformly, with probability ``noise_rate``. The
``propagating`` kernel adds one coupling: when a question's dependency parent
already has a claim on C, then with probability ``propagation`` the answer
copies whether that parent claim was right or wrong.

A question is never on Q while C holds a claim for it at an iteration
boundary. Without ``enforce_non_repeating`` a policy may re-pose an already
claimed question; it is attempted once in that iteration and dropped if
unanswered, which is the only way a repeating claims list can arise.
"""
from __future__ import annotations

import itertools
import json
import os
from collections import Counter
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, IndexOutOfRange
from .formal_system import (
    VALENCES,
    Claim,
    FormalSystem,
    Question,
    Valence,
    get_system,
    load_system_file,
    register_system,
)

POLICIES = ("none", "fixed", "exhaustive", "uniform", "wff_biased", "breakthrough")
KERNELS = ("uniform-wrong", "propagating")


@dataclass(frozen=True)
class QuestionPolicy:
    kind: str = "uniform"
    emit_prob: float = 1.0
    wff_weight: float = 1.0
    wff_only: bool = False
    schedule: tuple[tuple[Question, ...], ...] = ()


@dataclass(frozen=True)
class AnswerKernel:
    kind: str = "uniform-wrong"
    solve_rate: float = 1.0
    noise_rate: float = 0.0
    propagation: float = 0.0


@dataclass(frozen=True)
class RemovalPolicy:
    kind: str = "independent"
    rate: float = 0.0


@dataclass(frozen=True)
class NDRConfig:
    systems: tuple[str, ...]
    question_policy: QuestionPolicy = QuestionPolicy()
    answer_kernel: AnswerKernel = AnswerKernel()
    removal_policy: RemovalPolicy = RemovalPolicy()
    dependencies: tuple[tuple[str, tuple[str, ...]], ...] = ()
    max_string_len: int = 12
    enforce_non_repeating: bool = False
    system_files: tuple[str, ...] = ()
    pool_limit: int = 200_000

    def __post_init__(self):
        if not self.systems:
            raise ConfigError("at least one formal system is required")
        qp, ak, rp = self.question_policy, self.answer_kernel, self.removal_policy
        for name, value in (("emit_prob", qp.emit_prob), ("wff_weight", qp.wff_weight),
                            ("solve_rate", ak.solve_rate), ("noise_rate", ak.noise_rate),
                            ("propagation", ak.propagation), ("removal rate", rp.rate)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value!r}")
        if self.max_string_len < 1:
            raise ConfigError("max_string_len must be >= 1")
        if qp.kind not in POLICIES:
            raise ConfigError(f"unknown question policy {qp.kind!r}; expected one of {POLICIES}")
        if ak.kind not in KERNELS:
            raise ConfigError(f"unknown answer kernel {ak.kind!r}; expected one of {KERNELS}")
        if ak.kind == "uniform-wrong" and ak.propagation:
            raise ConfigError("propagation needs the 'propagating' answer kernel")
        if rp.kind != "independent":
            raise ConfigError(f"unknown removal policy {rp.kind!r}")

    @property
    def solve_rate(self):
        return self.answer_kernel.solve_rate

    @property
    def noise_rate(self):
        return self.answer_kernel.noise_rate

    @property
    def removal_rate(self):
        return self.removal_policy.rate

    def oracles(self) -> dict[str, FormalSystem]:
        for path in self.system_files:
            register_system(load_system_file(path))
        return {sid: get_system(sid) for sid in self.systems}

    def to_dict(self) -> dict:
        qp = asdict(self.question_policy)
        qp["schedule"] = [[[q.system, q.formula] for q in batch] for batch in self.question_policy.schedule]
        return {
            "systems": list(self.systems),
            "system_files": list(self.system_files),
            "question_policy": qp,
            "answer_kernel": asdict(self.answer_kernel),
            "removal_policy": asdict(self.removal_policy),
            "dependencies": {parent: list(children) for parent, children in self.dependencies},
            "max_string_len": self.max_string_len,
            "enforce_non_repeating": self.enforce_non_repeating,
            "pool_limit": self.pool_limit,
        }

    @classmethod
    def from_dict(cls, data: Mapping, source: str = "config") -> "NDRConfig":
        known = {"systems", "system_files", "question_policy", "answer_kernel", "removal_policy",
                 "dependencies", "max_string_len", "enforce_non_repeating", "pool_limit"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"{source}: unknown field(s) {sorted(extra)}")
        if "systems" not in data:
            raise ConfigError(f"{source}: missing field 'systems'")
        systems = tuple(data["systems"])
        try:
            qp_data = dict(data.get("question_policy", {}))
            schedule = qp_data.pop("schedule", None) or ()
            if "questions" in qp_data:
                schedule = [qp_data.pop("questions")]
            qp = QuestionPolicy(schedule=_parse_schedule(schedule, systems), **qp_data)
            ak = AnswerKernel(**data.get("answer_kernel", {}))
            rp = RemovalPolicy(**data.get("removal_policy", {}))
        except TypeError as exc:
            raise ConfigError(f"{source}: {exc}") from None
        deps = data.get("dependencies", {}) or {}
        return cls(
            systems=systems,
            question_policy=qp,
            answer_kernel=ak,
            removal_policy=rp,
            dependencies=tuple((p, tuple(c)) for p, c in deps.items()),
            max_string_len=int(data.get("max_string_len", 12)),
            enforce_non_repeating=bool(data.get("enforce_non_repeating", False)),
            system_files=tuple(data.get("system_files", ())),
            pool_limit=int(data.get("pool_limit", 200_000)),
        )


def _parse_schedule(schedule, systems) -> tuple[tuple[Question, ...], ...]:
    out = []
    for batch in schedule:
        qs = []
        for item in batch:
            if isinstance(item, Question):
                qs.append(item)
            elif isinstance(item, str):
                qs.append(Question(systems[0], item))
            else:
                system, formula = item
                qs.append(Question(system, formula))
        out.append(tuple(qs))
    return tuple(out)


@dataclass(frozen=True)
class NDRState:
    questions: tuple[Question, ...] = ()
    claims: tuple[Claim, ...] = ()
    iteration: int = 0


QUESTION_ADDED = "QuestionAdded"
CLAIM_ADDED = "ClaimAdded"
CLAIM_REMOVED = "ClaimRemoved"


@dataclass(frozen=True)
class TraceEvent:
    iteration: int
    seq: int
    kind: str
    payload: Question | Claim
    position: int | None = None

    def record(self, replica: int | None = None) -> dict:
        q = self.payload if isinstance(self.payload, Question) else self.payload.question
        valence = self.payload.valence.value if isinstance(self.payload, Claim) else None
        rec = {"replica": replica, "iteration": self.iteration, "seq": self.seq, "kind": self.kind,
               "system": q.system, "formula": q.formula, "valence": valence,
               "position": self.position}
        if replica is None:
            del rec["replica"]
        return rec


def event_from_record(rec: Mapping) -> TraceEvent:
    q = Question(rec["system"], rec["formula"])
    payload = q if rec["valence"] is None else Claim(q, Valence(rec["valence"]))
    return TraceEvent(rec["iteration"], rec["seq"], rec["kind"], payload, rec.get("position"))


# -- question pools -------------------------------------------------------------

@lru_cache(maxsize=64)
def _pool(cfg: NDRConfig):
    """Every (system, string) question of length <= max_string_len, or None when
    the pool exceeds ``pool_limit``."""
    oracles = cfg.oracles()
    total = sum(oracles[s].count_strings(cfg.max_string_len) for s in cfg.systems)
    if total > cfg.pool_limit:
        return None
    items = []
    for sid in cfg.systems:
        system = oracles[sid]
        items.extend(Question(sid, s) for s in system.enumerate_strings(cfg.max_string_len))
    wff = tuple(oracles[q.system].is_wff(q.formula) for q in items)
    return tuple(items), wff


def _require_pool(cfg):
    pool = _pool(cfg)
    if pool is None:
        raise ConfigError(
            f"question pool exceeds pool_limit={cfg.pool_limit}; lower max_string_len "
            f"or use the uniform policy")
    return pool


@lru_cache(maxsize=64)
def _dependency_maps(cfg: NDRConfig):
    """(children-of, parents-of) keyed by Question, within each configured system."""
    oracles = cfg.oracles()
    children: dict[Question, tuple[Question, ...]] = {}
    parents: dict[Question, list[Question]] = {}
    for sid in cfg.systems:
        alphabet = set(oracles[sid].alphabet)
        for p, cs in cfg.dependencies:
            if not set(p) <= alphabet:
                continue
            pq = Question(sid, p)
            kids = tuple(Question(sid, c) for c in cs if set(c) <= alphabet)
            children[pq] = kids
            for c in kids:
                parents.setdefault(c, []).append(pq)
    return children, {k: tuple(v) for k, v in parents.items()}


def breakthrough_candidates(cfg: NDRConfig) -> tuple[Question, ...]:
    children, parents = _dependency_maps(cfg)
    return tuple(sorted(set(children) | set(parents)))


class _RankedSet:
    """Subset of a fixed universe, sampled by rank in universe order.

    Draws depend only on which items are present, never on the order of
    earlier adds and discards, so stepping from a state is path independent.
    A Fenwick tree over presence bits gives O(log n) updates and rank lookup.
    """

    __slots__ = ("universe", "index", "present", "tree", "count")

    def __init__(self, universe, index, initial=()):
        self.universe = universe
        self.index = index
        n = len(universe)
        self.present = bytearray(n)
        for x in initial:
            self.present[index[x]] = 1
        self.count = sum(self.present)
        # linear-time Fenwick build
        tree = [0] + list(self.present)
        for i in range(1, n + 1):
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self.tree = tree

    def _bump(self, i, d):
        i += 1
        tree = self.tree
        while i < len(tree):
            tree[i] += d
            i += i & -i

    def add(self, x):
        i = self.index[x]
        if not self.present[i]:
            self.present[i] = 1
            self.count += 1
            self._bump(i, 1)

    def discard(self, x):
        i = self.index.get(x)
        if i is not None and self.present[i]:
            self.present[i] = 0
            self.count -= 1
            self._bump(i, -1)

    def pick(self, j):
        """The item of rank ``j`` (0-based) among those present."""
        pos, tree = 0, self.tree
        step = 1 << (len(tree) - 1).bit_length()
        while step:
            nxt = pos + step
            if nxt < len(tree) and tree[nxt] <= j:
                pos = nxt
                j -= tree[nxt]
            step >>= 1
        return self.universe[pos]

    @property
    def items(self):
        return [x for x, b in zip(self.universe, self.present) if b]

    def __len__(self):
        return self.count

    def __contains__(self, x):
        i = self.index.get(x)
        return i is not None and bool(self.present[i])


@lru_cache(maxsize=64)
def _wff_lookup(cfg: NDRConfig) -> dict:
    items, wff = _pool(cfg)
    return dict(zip(items, wff))


@lru_cache(maxsize=64)
def _bucket_universes(cfg: NDRConfig):
    """Pool questions per bucket (WFF first for wff_biased), each with a position index."""
    items, wff = _pool(cfg)
    if cfg.question_policy.kind == "uniform":
        return [(items, {q: i for i, q in enumerate(items)})]
    out = []
    for want in (True, False):
        uni = tuple(q for q, w in zip(items, wff) if w is want)
        out.append((uni, {q: i for i, q in enumerate(uni)}))
    return out


# -- the engine -------------------------------------------------------------------

class _Engine:
    """Mutable working copy of an NDRState plus the indexes needed to step it fast."""

    def __init__(self, cfg: NDRConfig, state: NDRState, oracles=None):
        self.cfg = cfg
        self.oracles = oracles or cfg.oracles()
        self.Q = list(state.questions)
        self.C = list(state.claims)
        self.k = state.iteration
        self.open = set(self.Q)
        self.claimed = Counter(c.question for c in self.C)
        self.kind = cfg.question_policy.kind
        self.children, self.parents = _dependency_maps(cfg)
        self.track_parents = cfg.answer_kernel.propagation > 0 and bool(self.parents)
        self.buckets = None
        self.implicit = False
        if self.kind in ("uniform", "wff_biased"):
            pool = _pool(cfg) if self.kind == "uniform" else _require_pool(cfg)
            if pool is None:
                self.implicit = True
            else:
                items, wff = pool
                self.buckets = [_RankedSet(uni, index, [q for q in uni if self._available(q)])
                                for uni, index in _bucket_universes(cfg)]
                self.is_wff_q = _wff_lookup(cfg)
        elif self.kind == "exhaustive":
            _require_pool(cfg)

    def _available(self, q):
        return q not in self.open and not (self.cfg.enforce_non_repeating and self.claimed[q])

    def _bucket_of(self, q, wff=None):
        if self.kind == "uniform":
            return 0
        if wff is None:
            wff = self.is_wff_q[q]
        return 0 if wff else 1

    def _refresh(self, q):
        if self.buckets is None or q not in self.is_wff_q:
            return
        b = self.buckets[self._bucket_of(q)]
        if self._available(q):
            b.add(q)
        else:
            b.discard(q)

    # step 1
    def _emit(self, rng) -> list[Question]:
        cfg = self.cfg
        qp = cfg.question_policy
        kind = self.kind
        if kind == "none":
            return []
        if kind == "fixed":
            if self.k < len(qp.schedule):
                return [q for q in dict.fromkeys(qp.schedule[self.k]) if self._available(q)]
            return []
        if kind == "exhaustive":
            if self.k != 0:
                return []
            items, wff = _require_pool(cfg)
            return [q for q, w in zip(items, wff) if (w or not qp.wff_only) and self._available(q)]
        if qp.emit_prob < 1.0 and not rng.random() < qp.emit_prob:
            return []
        if kind == "breakthrough":
            best = _breakthrough_pick(breakthrough_candidates(cfg), self.children,
                                      self._available, self.open)
            return [best] if best is not None else []
        if self.implicit:
            q = self._rejection_sample(rng)
            return [q] if q is not None else []
        if kind == "uniform":
            bucket = self.buckets[0]
        else:
            w_mass = qp.wff_weight if len(self.buckets[0]) else 0.0
            n_mass = (1.0 - qp.wff_weight) if len(self.buckets[1]) else 0.0
            if w_mass + n_mass <= 0.0:
                return []
            bucket = self.buckets[0] if rng.random() * (w_mass + n_mass) < w_mass else self.buckets[1]
        if not len(bucket):
            return []
        return [bucket.pick(int(rng.integers(len(bucket))))]

    def _rejection_sample(self, rng, max_tries=10_000):
        cfg = self.cfg
        systems = [self.oracles[s] for s in cfg.systems]
        sizes = np.array([s.count_strings(cfg.max_string_len) for s in systems], dtype=float)
        for _ in range(max_tries):
            system = systems[int(rng.choice(len(systems), p=sizes / sizes.sum()))]
            a = len(system.alphabet)
            lens = np.array([a**n for n in range(cfg.max_string_len + 1)], dtype=float)
            n = int(rng.choice(len(lens), p=lens / lens.sum()))
            s = "".join(system.alphabet[i] for i in rng.integers(a, size=n))
            q = Question(system.id, s)
            if self._available(q):
                return q
        return None

    def _parent_status(self, q: Question) -> int:
        ps = self.parents.get(q)
        if not ps:
            return -1
        # most recent claim on C about any parent
        for c in reversed(self.C):
            if c.question in ps:
                truth = self.oracles[c.question.system].classify(c.question.formula)
                return 0 if c.valence is truth else 1
        return -1

    def step(self, rng: np.random.Generator, events: list | None = None) -> None:
        k = self.k + 1
        seq = itertools.count()
        emitted = self._emit(rng)
        for q in emitted:
            self.Q.append(q)
            self.open.add(q)
            self._refresh(q)
            if events is not None:
                events.append(TraceEvent(k, next(seq), QUESTION_ADDED, q))

        ak = self.cfg.answer_kernel
        if self.Q and ak.solve_rate > 0.0:
            truth = [self.oracles[q.system].classify(q.formula).code for q in self.Q]
            if self.track_parents:
                parent = [self._parent_status(q) for q in self.Q]
            else:
                parent = [-1] * len(self.Q)
            u = rng.random((len(self.Q), 4))
            codes = _kernels.answer_codes(truth, parent, u, ak.solve_rate, ak.noise_rate,
                                          ak.propagation)
            remaining = []
            for q, code in zip(self.Q, codes):
                if code < 0:
                    remaining.append(q)
                    continue
                c = Claim(q, VALENCES[code])
                self.C.append(c)
                self.claimed[q] += 1
                self.open.discard(q)
                if events is not None:
                    events.append(TraceEvent(k, next(seq), CLAIM_ADDED, c, len(self.C) - 1))
            if len(remaining) != len(self.Q):
                for q in self.Q:
                    if q not in self.open:
                        self._refresh(q)
            self.Q = remaining
        # re-posed questions that already have a claim leave Q at the iteration boundary
        if self.Q and not self.cfg.enforce_non_repeating:
            dropped = [q for q in self.Q if self.claimed[q]]
            if dropped:
                self.Q = [q for q in self.Q if not self.claimed[q]]
                for q in dropped:
                    self.open.discard(q)
                    self._refresh(q)

        r = self.cfg.removal_policy.rate
        if r > 0.0 and self.C:
            u = rng.random(len(self.C))
            gone = np.flatnonzero(u < r)
            for i in gone[::-1].tolist():
                c = self.C.pop(i)
                self.claimed[c.question] -= 1
                if not self.claimed[c.question]:
                    del self.claimed[c.question]
                self._refresh(c.question)
                if events is not None:
                    events.append(TraceEvent(k, next(seq), CLAIM_REMOVED, c, i))
        self.k = k

    def state(self) -> NDRState:
        return NDRState(tuple(self.Q), tuple(self.C), self.k)


def _breakthrough_pick(candidates, children, available, open_set):
    best, best_score = None, -1
    for q in candidates:  # sorted, so the first maximum wins ties
        if not available(q):
            continue
        score = sum(1 for c in children.get(q, ()) if c in open_set)
        if score > best_score:
            best, best_score = q, score
    return best


def iterate(state: NDRState, cfg: NDRConfig, rng: np.random.Generator,
            oracles: Mapping[str, FormalSystem] | None = None) -> tuple[NDRState, list[TraceEvent]]:
    """One add / answer / commit iteration. Returns the new state and its trace events."""
    eng = _Engine(cfg, state, oracles)
    events: list[TraceEvent] = []
    eng.step(rng, events)
    return eng.state(), events


def generate_questions(cfg: NDRConfig, state: NDRState, rng: np.random.Generator) -> list[Question]:
    """Step 1 alone: the questions the policy would add to ``state``."""
    return _Engine(cfg, state)._emit(rng)


def attempt_answer(kernel: AnswerKernel, q: Question, oracle: FormalSystem,
                   rng: np.random.Generator, parent_status: int = -1) -> Valence | None:
    """Step 2 for a single question."""
    truth = oracle.classify(q.formula).code
    code = _kernels.answer_codes([truth], [parent_status], rng.random((1, 4)), kernel.solve_rate,
                                 kernel.noise_rate, kernel.propagation)[0]
    return None if code < 0 else VALENCES[code]


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Independent stream for one replica. Counter-based: stream i depends only on (seed, i)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


@dataclass
class ReplicaRun:
    replica: int
    final: NDRState
    events: list[TraceEvent] | None = None
    passed: tuple[bool, ...] = ()
    history: list[tuple[Claim, ...]] | None = None


def run_replica(cfg: NDRConfig, k: int, seed: int, replica: int = 0, *, record_events=False,
                watch: Sequence[tuple[Claim, ...]] = (), record_history=False) -> ReplicaRun:
    """Run one replica for ``k`` iterations from blank tapes.

    ``watch`` lists claims lists to test for passage: entry i of ``passed`` is
    true when the claims tape equaled ``watch[i]`` at some iteration < k.
    """
    rng = replica_rng(seed, replica)
    eng = _Engine(cfg, NDRState())
    events = [] if record_events else None
    watch = [tuple(w) for w in watch]
    passed = [False] * len(watch)
    history = [] if record_history else None
    for _ in range(k):
        if watch:
            cur = tuple(eng.C)
            for i, w in enumerate(watch):
                if not passed[i] and len(w) == len(cur) and w == cur:
                    passed[i] = True
        if history is not None:
            history.append(tuple(eng.C))
        eng.step(rng, events)
    if history is not None:
        history.append(tuple(eng.C))
    return ReplicaRun(replica, eng.state(), events, tuple(passed), history)


def _run_chunk(args):
    cfg, k, seed, lo, hi, kwargs = args
    return [run_replica(cfg, k, seed, i, **kwargs) for i in range(lo, hi)]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("NDRSIM_THREADS", "1")))
    except ValueError:
        return 1


def run_replicas(cfg: NDRConfig, k: int, n: int, seed: int, workers: int | None = None,
                 **kwargs) -> list[ReplicaRun]:
    """Run replicas 0..n-1. Results come back in replica order whatever ``workers`` is."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or n < 2 * workers:
        return [run_replica(cfg, k, seed, i, **kwargs) for i in range(n)]
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, n, workers + 1).astype(int)
    jobs = [(cfg, k, seed, int(a), int(b), kwargs) for a, b in zip(bounds, bounds[1:]) if b > a]
    with ProcessPoolExecutor(workers) as pool:
        chunks = list(pool.map(_run_chunk, jobs))
    return [run for chunk in chunks for run in chunk]


# -- claims-list predicates ---------------------------------------------------------

def is_mistake_free(claims: Iterable[Claim], oracles: Mapping[str, FormalSystem] | None = None) -> bool:
    for c in claims:
        if get_system(c.question.system, oracles).classify(c.question.formula) is not c.valence:
            return False
    return True


def count_mistakes(claims: Iterable[Claim], oracles: Mapping[str, FormalSystem] | None = None) -> int:
    return sum(get_system(c.question.system, oracles).classify(c.question.formula) is not c.valence
               for c in claims)


def is_non_repeating(claims: Iterable[Claim]) -> bool:
    seen = set()
    for c in claims:
        if c.question in seen:
            return False
        seen.add(c.question)
    return True


def prefix(claims: Sequence[Claim], n: int) -> tuple[Claim, ...]:
    if n < 0 or n > len(claims):
        raise IndexOutOfRange(f"prefix length {n} outside 0..{len(claims)}")
    return tuple(claims[:n])


# -- exact transition kernel ---------------------------------------------------------

def emission_distribution(cfg: NDRConfig, state: NDRState) -> list[tuple[tuple[Question, ...], float]]:
    """Exact distribution of the questions added in step 1 from ``state``."""
    qp = cfg.question_policy
    eng = _Engine(cfg, state)
    kind = cfg.question_policy.kind
    if kind in ("none", "fixed", "exhaustive"):
        return [(tuple(eng._emit(None)), 1.0)]
    out = []
    p_emit = qp.emit_prob
    if p_emit < 1.0:
        out.append(((), 1.0 - p_emit))
    if p_emit > 0.0:
        if kind == "breakthrough":
            picked = eng._emit(_AlwaysEmit())
            out.append((tuple(picked), p_emit))
        else:
            if eng.implicit:
                raise ConfigError("exact transitions need an enumerable question pool")
            if kind == "uniform":
                classes = [(1.0, eng.buckets[0])]
            else:
                w_mass = qp.wff_weight if len(eng.buckets[0]) else 0.0
                n_mass = (1.0 - qp.wff_weight) if len(eng.buckets[1]) else 0.0
                tot = w_mass + n_mass
                classes = [] if tot <= 0 else [(w_mass / tot, eng.buckets[0]), (n_mass / tot, eng.buckets[1])]
            mass = 0.0
            for w, bucket in classes:
                if w <= 0 or not len(bucket):
                    continue
                for q in sorted(bucket.items):
                    out.append(((q,), p_emit * w / len(bucket)))
                mass += w
            if mass == 0.0:
                out.append(((), p_emit))
    merged: dict = {}
    for qs, p in out:
        merged[qs] = merged.get(qs, 0.0) + p
    return [(qs, p) for qs, p in merged.items() if p > 0.0]


class _AlwaysEmit:
    def random(self):
        return 0.0


def answer_outcomes(cfg: NDRConfig, q: Question, claims: Sequence[Claim],
                    oracles) -> list[tuple[Valence | None, float]]:
    """Exact outcome distribution of attempting ``q`` with ``claims`` on C."""
    ak = cfg.answer_kernel
    truth = oracles[q.system].classify(q.formula)
    wrong_rate = ak.noise_rate
    if ak.propagation > 0:
        children, parents = _dependency_maps(cfg)
        ps = parents.get(q, ())
        for c in reversed(claims):
            if c.question in ps:
                ptruth = oracles[c.question.system].classify(c.question.formula)
                parent_wrong = 0.0 if c.valence is ptruth else 1.0
                wrong_rate = ak.propagation * parent_wrong + (1 - ak.propagation) * ak.noise_rate
                break
    s = ak.solve_rate
    outs = [(None, 1.0 - s), (truth, s * (1.0 - wrong_rate))]
    outs += [(v, s * wrong_rate / 3.0) for v in VALENCES if v is not truth]
    return [(v, p) for v, p in outs if p > 0.0]


def transition_distribution(cfg: NDRConfig, state: NDRState,
                            oracles=None) -> dict[NDRState, float]:
    """Exact one-iteration successor distribution, mirroring ``iterate``."""
    oracles = oracles or cfg.oracles()
    result: dict[NDRState, float] = {}
    r = cfg.removal_policy.rate
    for emitted, p_emit in emission_distribution(cfg, state):
        Q = list(state.questions) + list(emitted)
        per_q = [answer_outcomes(cfg, q, state.claims, oracles) for q in Q] if cfg.solve_rate > 0 else []
        combos = itertools.product(*per_q) if per_q else [()]
        for combo in combos:
            p = p_emit
            C = list(state.claims)
            remaining = []
            for q, (v, pv) in zip(Q, combo):
                p *= pv
                if v is None:
                    remaining.append(q)
                else:
                    C.append(Claim(q, v))
            if not per_q:
                remaining = Q
            if p == 0.0:
                continue
            if not cfg.enforce_non_repeating:
                claimed = {c.question for c in C}
                remaining = [q for q in remaining if q not in claimed]
            if r > 0.0 and C:
                n = len(C)
                for keep in itertools.product((True, False), repeat=n):
                    n_gone = keep.count(False)
                    pr = p * (r ** n_gone) * ((1 - r) ** (n - n_gone))
                    if pr == 0.0:
                        continue
                    st = NDRState(tuple(remaining), tuple(c for c, kp in zip(C, keep) if kp),
                                  state.iteration + 1)
                    result[st] = result.get(st, 0.0) + pr
            else:
                st = NDRState(tuple(remaining), tuple(C), state.iteration + 1)
                result[st] = result.get(st, 0.0) + p
    return result


def is_absorbing(cfg: NDRConfig, state: NDRState) -> bool:
    """True when no further iteration can change the claims tape."""
    if cfg.removal_policy.rate > 0.0 and state.claims:
        return False
    if state.questions and cfg.solve_rate > 0.0:
        return False
    kind = cfg.question_policy.kind
    if kind == "fixed":
        later = cfg.question_policy.schedule[state.iteration:]
        eng = _Engine(cfg, state)
        return not any(eng._available(q) for batch in later for q in batch) or cfg.solve_rate == 0.0
    if kind == "exhaustive":
        return state.iteration > 0 or cfg.solve_rate == 0.0
    if kind == "none" or cfg.solve_rate == 0.0:
        return True
    if cfg.question_policy.emit_prob == 0.0:
        return True
    try:
        return all(not qs for qs, _ in emission_distribution(cfg, state))
    except ConfigError:
        return False


# -- serialization of claims lists ----------------------------------------------------

def encode_claims(claims: Iterable[Claim]) -> str:
    """Canonical one-line encoding of a claims list."""
    return json.dumps([[c.question.system, c.question.formula, c.valence.value] for c in claims],
                      separators=(",", ":"), ensure_ascii=False)


def decode_claims(text: str) -> tuple[Claim, ...]:
    return tuple(Claim(Question(s, f), Valence(v)) for s, f, v in json.loads(text))
