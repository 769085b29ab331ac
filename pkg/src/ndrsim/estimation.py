"""Monte Carlo estimates of the limiting claims and answer distributions, and
an exact finite-chain oracle for small configurations.

Limits over iterations are approximated at an explicit horizon ``k``; every
estimate carries that horizon. Intervals are Wilson 95% score intervals.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    ConditioningEventNeverObserved,
    ConditioningListNeverReached,
    QuestionNeverAnswered,
    StateSpaceTooLarge,
)
from .formal_system import VALENCES, Claim, Question, Valence
from .ndr_machine import NDRConfig, NDRState, ReplicaRun, encode_claims, run_replicas, transition_distribution

Z95 = 1.959963984540054


def wilson_interval(count: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = count / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo, hi = centre - half, centre + half
    # the score interval always contains 0 at count 0 and 1 at count n
    if count == 0:
        lo = 0.0
    if count == n:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


@dataclass(frozen=True)
class Short:
    """Outcome for a replica whose claims list is shorter than the requested prefix."""

    claims: tuple[Claim, ...]


def outcome_key(outcome) -> str:
    if isinstance(outcome, Short):
        return "SHORT" + encode_claims(outcome.claims)
    if isinstance(outcome, Valence):
        return outcome.value
    return encode_claims(outcome)


@dataclass(frozen=True)
class Estimate:
    count: int
    total: int
    estimate: float
    lo: float
    hi: float
    horizon: int
    label: str = ""

    @classmethod
    def of(cls, count, total, horizon, label=""):
        lo, hi = wilson_interval(count, total)
        return cls(count, total, count / total if total else float("nan"), lo, hi, horizon, label)

    def covers(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass
class EmpiricalDistribution:
    """Counts of outcomes over ``replicas`` runs truncated at ``horizon``."""

    counts: dict
    replicas: int
    horizon: int
    n: int | None = None

    def prob(self, outcome) -> float:
        return self.counts.get(outcome, 0) / self.replicas

    def interval(self, outcome) -> tuple[float, float]:
        return wilson_interval(self.counts.get(outcome, 0), self.replicas)

    def estimate(self, outcome) -> Estimate:
        return Estimate.of(self.counts.get(outcome, 0), self.replicas, self.horizon)

    def support(self):
        return sorted(self.counts, key=outcome_key)

    def total_probability(self) -> float:
        return sum(self.counts.values()) / self.replicas

    def rows(self):
        for o in self.support():
            c = self.counts[o]
            lo, hi = wilson_interval(c, self.replicas)
            yield outcome_key(o), c, c / self.replicas, lo, hi


def run_batch(cfg: NDRConfig, k: int, replicas: int, seed: int, watch=(), workers=None) -> list[ReplicaRun]:
    if k < 1 or replicas < 1:
        raise ValueError("horizon and replica count must be >= 1")
    return run_replicas(cfg, k, replicas, seed, workers=workers, watch=tuple(tuple(w) for w in watch))


def tabulate_prefixes(lists: Iterable[Sequence[Claim]], n: int, horizon: int) -> EmpiricalDistribution:
    counts: dict = {}
    total = 0
    for claims in lists:
        claims = tuple(claims)
        key = claims[:n] if len(claims) >= n else Short(claims)
        counts[key] = counts.get(key, 0) + 1
        total += 1
    return EmpiricalDistribution(counts, total, horizon, n)


def simulate_pk(cfg: NDRConfig, k: int, n: int, replicas: int, seed: int,
                runs: Sequence[ReplicaRun] | None = None) -> EmpiricalDistribution:
    """Empirical distribution of the first ``n`` claims after ``k`` iterations."""
    runs = runs if runs is not None else run_batch(cfg, k, replicas, seed)
    return tabulate_prefixes((r.final.claims for r in runs), n, k)


# -- exact oracle ------------------------------------------------------------------

@dataclass
class ExactChain:
    """Exact distribution over (state, passed-watch-list) after ``horizon`` iterations."""

    states: dict
    horizon: int
    watch: tuple[Claim, ...] | None = None
    max_states: int = 0

    def lists(self) -> dict[tuple[Claim, ...], float]:
        out: dict = {}
        for (st, _), p in self.states.items():
            out[st.claims] = out.get(st.claims, 0.0) + p
        return out

    def total(self) -> float:
        return math.fsum(self.states.values())

    def prefix_distribution(self, n: int) -> dict:
        out: dict = {}
        for claims, p in self.lists().items():
            key = claims[:n] if len(claims) >= n else Short(claims)
            out[key] = out.get(key, 0.0) + p
        return out

    def passage_probability(self) -> float:
        return math.fsum(p for (_, passed), p in self.states.items() if passed)

    def conditioned(self) -> "ExactChain":
        """Restrict to paths that passed through the watch list, renormalized."""
        mass = self.passage_probability()
        if mass == 0.0:
            raise ConditioningListNeverReached("the conditioning list is never reached")
        states = {key: p / mass for key, p in self.states.items() if key[1]}
        return ExactChain(states, self.horizon, self.watch, self.max_states)


def exact_chain(cfg: NDRConfig, k: int, bound: int = 100_000,
                watch: Sequence[Claim] | None = None) -> ExactChain:
    """Propagate probability mass through the chain of NDR states for ``k`` iterations."""
    oracles = cfg.oracles()
    watch_t = tuple(watch) if watch is not None else None
    start = NDRState()
    dist = {(start, False): 1.0}
    peak = 1
    cache: dict = {}
    for _ in range(k):
        nxt: dict = {}
        for (st, passed), p in dist.items():
            passed_now = passed or (watch_t is not None and st.claims == watch_t)
            succ = cache.get(st)
            if succ is None:
                succ = transition_distribution(cfg, st, oracles)
                cache[st] = succ
            for st2, p2 in succ.items():
                key = (st2, passed_now)
                nxt[key] = nxt.get(key, 0.0) + p * p2
            if len(nxt) > bound:
                raise StateSpaceTooLarge(f"more than {bound} reachable states")
        peak = max(peak, len(nxt))
        dist = nxt
        cache = {}
    return ExactChain(dist, k, watch_t, peak)


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in keys)


def convergence_profile(cfg: NDRConfig, n: int, horizons: Sequence[int],
                        bound: int = 100_000) -> list[tuple[int, float]]:
    """Total-variation distance between the prefix distributions at k and 2k."""
    out = []
    for k in horizons:
        a = exact_chain(cfg, k, bound).prefix_distribution(n)
        b = exact_chain(cfg, 2 * k, bound).prefix_distribution(n)
        out.append((k, total_variation(a, b)))
    return out


# -- claims and answer distributions ------------------------------------------------------

def _contains(claim_set: frozenset, needed: Iterable[Claim]) -> bool:
    return all(c in claim_set for c in needed)


def _window(claims, n):
    return claims if n is None else claims[:n]


def estimate_claims_distribution(cfg: NDRConfig, c: Iterable[Claim], k_max: int, replicas: int,
                                 seed: int, n: int | None = None,
                                 runs: Sequence[ReplicaRun] | None = None) -> Estimate:
    """Fraction of replicas whose claims list at ``k_max`` contains every claim of ``c``.

    With ``n`` only the first n claims are searched (the prefix-window ordering
    of the two limits); without it the whole list is.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    runs = runs if runs is not None else run_batch(cfg, k_max, replicas, seed)
    needed = tuple(c)
    hits = sum(_contains(frozenset(_window(r.final.claims, n)), needed) for r in runs)
    label = f"horizon={k_max}" + ("" if n is None else f",prefix={n}")
    return Estimate.of(hits, len(runs), k_max, label)


@dataclass
class AnswerDistribution:
    question: Question
    probs: dict[Valence, float]
    counts: dict[Valence, int] = field(default_factory=dict)
    denominator: int = 0
    intervals: dict[Valence, tuple[float, float]] = field(default_factory=dict)
    conditioning: tuple = ()
    conditioning_list: tuple | None = None
    horizon: int | None = None

    def vector(self) -> tuple[float, ...]:
        return tuple(self.probs[v] for v in VALENCES)

    def rows(self):
        for v in VALENCES:
            lo, hi = self.intervals.get(v, (self.probs[v], self.probs[v]))
            yield v.value, self.counts.get(v, 0), self.probs[v], lo, hi


def answer_from_sets(q: Question, sets: Iterable[frozenset], given: Sequence[Claim],
                      horizon, conditioning_list=None) -> AnswerDistribution:
    counts = {v: 0 for v in VALENCES}
    for s in sets:
        if given and not _contains(s, given):
            continue
        for v in VALENCES:
            if Claim(q, v) in s:
                counts[v] += 1
    # denominator sums containment counts over v', exactly as in the ratio definition
    denom = sum(counts.values())
    if denom == 0:
        if given:
            raise ConditioningEventNeverObserved(f"no replica contains {q} together with the conditioning claims")
        raise QuestionNeverAnswered(f"no replica ever answered {q}")
    probs = {v: counts[v] / denom for v in VALENCES}
    intervals = {v: wilson_interval(counts[v], denom) for v in VALENCES}
    return AnswerDistribution(q, probs, counts, denom, intervals, tuple(given), conditioning_list, horizon)


def generalized_answer_distribution(cfg: NDRConfig, q: Question, c: Iterable[Claim], k_max: int,
                                    replicas: int, seed: int,
                                    runs: Sequence[ReplicaRun] | None = None) -> AnswerDistribution:
    runs = runs if runs is not None else run_batch(cfg, k_max, replicas, seed)
    sets = (frozenset(r.final.claims) for r in runs)
    return answer_from_sets(q, sets, tuple(c), k_max)


def answer_distribution(cfg: NDRConfig, q: Question, k_max: int, replicas: int, seed: int,
                        runs: Sequence[ReplicaRun] | None = None) -> AnswerDistribution:
    return generalized_answer_distribution(cfg, q, (), k_max, replicas, seed, runs)


def list_conditioned_distribution(cfg: NDRConfig, conditioning_list: Sequence[Claim], query,
                                  k_max: int, replicas: int, seed: int, given: Sequence[Claim] = (),
                                  runs: Sequence[ReplicaRun] | None = None):
    """Estimate over replicas whose claims tape equaled ``conditioning_list`` at some
    iteration before ``k_max``.

    ``query`` is a :class:`Question` (gives a list-conditioned answer
    distribution, optionally generalized by ``given``) or an iterable of claims
    (gives the list-conditioned probability of containing them all).
    """
    watch = tuple(conditioning_list)
    if runs is None:
        runs = run_batch(cfg, k_max, replicas, seed, watch=[watch])
        idx = 0
    else:
        idx = _watch_index(runs, watch)
    kept = [r for r in runs if r.passed[idx]]
    if not kept:
        raise ConditioningListNeverReached(f"no replica passed through {encode_claims(watch)}")
    if isinstance(query, Question):
        sets = (frozenset(r.final.claims) for r in kept)
        return answer_from_sets(query, sets, tuple(given), k_max, watch)
    needed = tuple(query)
    hits = sum(_contains(frozenset(r.final.claims), needed) for r in kept)
    return Estimate.of(hits, len(kept), k_max, f"horizon={k_max},list-conditioned")


def _watch_index(runs, watch):
    # replicas carry no record of which list they watched, so callers pass the
    # list first in ``watch``; a precomputed batch must be built that way
    if not runs or not runs[0].passed:
        raise ValueError("precomputed runs were not recorded with a watch list")
    return 0


# -- exact counterparts used as oracles ----------------------------------------------------

def exact_answer_distribution(chain: ExactChain, q: Question, given: Sequence[Claim] = ()) -> dict[Valence, float]:
    num = {v: 0.0 for v in VALENCES}
    for claims, p in chain.lists().items():
        s = frozenset(claims)
        if given and not _contains(s, given):
            continue
        for v in VALENCES:
            if Claim(q, v) in s:
                num[v] += p
    denom = math.fsum(num.values())
    if denom == 0.0:
        raise QuestionNeverAnswered(f"{q} is answered with probability 0")
    return {v: num[v] / denom for v in VALENCES}


def exact_claims_probability(chain: ExactChain, c: Iterable[Claim]) -> float:
    needed = tuple(c)
    return math.fsum(p for claims, p in chain.lists().items() if _contains(frozenset(claims), needed))


# -- consistency and maximality ---------------------------------------------------------------

@dataclass
class MarginalReport:
    max_discrepancy: float
    max_z: float
    per_prefix: dict
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_discrepancy <= self.tol

    def within_sigma(self, k: float = 3.0) -> bool:
        return self.max_z <= k


def _marginal_key(outcome, n):
    if isinstance(outcome, Short):
        return outcome.claims[:n] if len(outcome.claims) >= n else outcome
    return outcome[:n]


def check_marginal_consistency(dist_n: EmpiricalDistribution, dist_n1: EmpiricalDistribution,
                               tol: float = 0.0) -> MarginalReport:
    """Compare P(C(n)) with the (n+1)-prefix distribution summed over its last claim."""
    n = dist_n.n
    if dist_n1.n is not None and n is not None and dist_n1.n != n + 1:
        raise ValueError("second distribution must be over prefixes one claim longer")
    marg: dict = {}
    for o, c in dist_n1.counts.items():
        key = _marginal_key(o, n)
        marg[key] = marg.get(key, 0) + c
    per = {}
    worst, worst_z = 0.0, 0.0
    for key in set(dist_n.counts) | set(marg):
        p1 = dist_n.counts.get(key, 0) / dist_n.replicas
        p2 = marg.get(key, 0) / dist_n1.replicas
        diff = abs(p1 - p2)
        var = p1 * (1 - p1) / dist_n.replicas + p2 * (1 - p2) / dist_n1.replicas
        z = 0.0 if diff == 0.0 else (diff / math.sqrt(var) if var > 0 else math.inf)
        per[key] = (p1, p2, diff, z)
        worst = max(worst, diff)
        worst_z = max(worst_z, z)
    return MarginalReport(worst, worst_z, per, tol)


@dataclass
class MaximalReport:
    lists: frozenset
    horizon: int
    truncated: bool = True


def maximal_lists(lists: Iterable[Sequence[Claim]]) -> frozenset:
    observed = {tuple(x) for x in lists}
    by_len = sorted(observed, key=len)
    out = set()
    for a in by_len:
        if not any(len(b) > len(a) and b[:len(a)] == a for b in observed):
            out.add(a)
    return frozenset(out)


def detect_maximal(cfg: NDRConfig, k_max: int, replicas: int, seed: int,
                   runs: Sequence[ReplicaRun] | None = None) -> MaximalReport:
    """Observed horizon-k lists that are not a proper prefix of another observed list."""
    runs = runs if runs is not None else run_batch(cfg, k_max, replicas, seed)
    return MaximalReport(maximal_lists(r.final.claims for r in runs), k_max, True)


# -- export -------------------------------------------------------------------------------------

CSV_HEADER = ("outcome", "count", "estimate", "lo", "hi")


def to_csv(rows, header=CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
