"""Bayesian checks over joint distributions of claims sets.

A :class:`ClaimJoint` assigns probability to finite claims sets (outcomes of
an NDR machine, exact or sampled). Belief that a question ``q`` is a theorem is
the answer-distribution ratio ``P(contains (q,t) and C) / sum_v P(contains (q,v) and C)``.
Two results are checked here: abduction (belief in ``q`` rises on learning that
``q'`` is a theorem exactly when the converse holds) and the product formula
for posterior growth along several proof paths.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import ConditioningUndefined, InvalidWeights, PrecedenceViolated, ZeroDenominator
from .formal_system import VALENCES, Claim, Question, Valence

T = Valence.THEOREM
NOT_T = tuple(v for v in VALENCES if v is not T)

EXACT_TOL = 1e-12
OCCURRENCE_TOL = 1e-9


class ClaimJoint:
    """Immutable probability table over claims sets."""

    def __init__(self, outcomes: Mapping[Iterable[Claim], float], provenance: str = "exact"):
        merged: dict[frozenset, float] = {}
        for claims, p in outcomes.items():
            p = float(p)
            if not math.isfinite(p) or p < 0:
                raise InvalidWeights(f"outcome weight {p!r} is negative or not finite")
            key = frozenset(claims)
            merged[key] = merged.get(key, 0.0) + p
        total = math.fsum(merged.values())
        if total > 1 + 1e-9:
            raise InvalidWeights(f"outcome weights sum to {total!r} > 1")
        if provenance not in ("exact", "empirical"):
            raise ValueError("provenance must be 'exact' or 'empirical'")
        self.provenance = provenance
        self.total = total
        self._outcomes = merged
        claims = sorted({c for key in merged for c in key})
        self._bit = {c: i for i, c in enumerate(claims)}
        keys = list(merged)
        self._weights = np.array([merged[k] for k in keys], dtype=np.float64)
        if len(claims) <= 64:
            self._masks = np.array([self._mask(k) for k in keys], dtype=np.uint64)
            self._sum = _kernels.contains_sum
        else:
            # wider than a machine word: big-int masks through the reference loop
            self._masks = [self._mask(k) for k in keys]
            self._sum = _kernels.backends()["python"].contains_sum

    def _mask(self, claims) -> int:
        m = 0
        for c in claims:
            m |= 1 << self._bit[c]
        return m

    @property
    def outcomes(self) -> dict[frozenset, float]:
        return dict(self._outcomes)

    @property
    def claims(self) -> tuple[Claim, ...]:
        return tuple(self._bit)

    def prob(self, claims: Iterable[Claim] = ()) -> float:
        """Probability that an outcome contains every claim given."""
        claims = tuple(claims)
        if any(c not in self._bit for c in claims):
            return 0.0
        return self._sum(self._masks, self._weights, self._mask(claims))

    def conditional(self, event: Iterable[Claim], given: Iterable[Claim] = ()) -> float:
        given = tuple(given)
        den = self.prob(given)
        if den == 0.0:
            raise ConditioningUndefined("conditioning event has probability 0")
        return self.prob(tuple(event) + given) / den

    def occurrence(self, q: Question) -> float:
        return math.fsum(p for key, p in self._outcomes.items() if any(c.question == q for c in key))

    def valence_weight(self, q: Question, valences: Sequence[Valence], given: Iterable[Claim] = ()) -> float:
        given = tuple(given)
        return math.fsum(self.prob((Claim(q, v),) + given) for v in valences)

    def answer_prob(self, q: Question, v: Valence = T, given: Iterable[Claim] = ()) -> float:
        """Answer-distribution probability of ``v`` for ``q``, conditioned on a claims set."""
        given = tuple(given)
        den = self.valence_weight(q, VALENCES, given)
        if den == 0.0:
            raise ConditioningUndefined(f"{q} is never answered alongside the conditioning claims")
        return self.prob((Claim(q, v),) + given) / den

    @classmethod
    def from_lists(cls, lists: Mapping[Sequence[Claim], float], provenance="exact") -> "ClaimJoint":
        return cls({frozenset(k): p for k, p in lists.items()}, provenance)

    @classmethod
    def from_chain(cls, chain) -> "ClaimJoint":
        return cls.from_lists(chain.lists(), "exact")

    @classmethod
    def from_runs(cls, runs) -> "ClaimJoint":
        counts: dict = {}
        for r in runs:
            key = frozenset(r.final.claims)
            counts[key] = counts.get(key, 0) + 1
        n = len(runs)
        return cls({k: c / n for k, c in counts.items()}, "empirical")

    def __repr__(self):
        return f"ClaimJoint({len(self._outcomes)} outcomes, {self.provenance})"


# -- abduction -------------------------------------------------------------------------

@dataclass(frozen=True)
class AbductionReport:
    q: Question
    q2: Question
    prior_q: float
    posterior_q: float
    prior_q2: float
    posterior_q2: float
    premise_holds: bool
    conclusion_holds: bool
    tol: float

    @property
    def margin(self) -> tuple[float, float]:
        return self.posterior_q - self.prior_q, self.posterior_q2 - self.prior_q2

    @property
    def consistent(self) -> bool:
        return self.premise_holds == self.conclusion_holds


def check_abduction(joint: ClaimJoint, q: Question, q2: Question, tol: float | None = None,
                    occurrence_tol: float = OCCURRENCE_TOL) -> AbductionReport:
    """Compare belief shifts in both directions between ``q`` and ``q2``.

    The premise is that learning ``(q2, t)`` raises belief in ``q``; the
    conclusion is that learning ``(q, t)`` raises belief in ``q2``. Each side is
    computed from its own conditional, and counts as holding only when the rise
    exceeds ``tol``.
    """
    if tol is None:
        tol = EXACT_TOL if joint.provenance == "exact" else 0.0
    for x in (q, q2):
        occ = joint.occurrence(x)
        if occ < 1 - occurrence_tol:
            raise PrecedenceViolated(f"{x} occurs with probability {occ!r} < 1")
    prior_q = joint.answer_prob(q, T)
    prior_q2 = joint.answer_prob(q2, T)
    post_q = joint.answer_prob(q, T, (Claim(q2, T),))
    post_q2 = joint.answer_prob(q2, T, (Claim(q, T),))
    return AbductionReport(q, q2, prior_q, post_q, prior_q2, post_q2,
                           post_q - prior_q > tol, post_q2 - prior_q2 > tol, tol)


# -- proof paths ---------------------------------------------------------------------------

@dataclass
class ProofPathReport:
    q: Question
    paths: tuple[frozenset, ...]
    given: tuple[Claim, ...]
    prior: float
    trajectory: list[float]
    # alpha, beta and epsilon are indexed by path number i = 2..n
    alpha: list[float] = field(default_factory=list)
    beta: list[float] = field(default_factory=list)
    epsilon: list[float] = field(default_factory=list)
    direct: float = float("nan")
    exact: bool = True

    @property
    def n(self) -> int:
        return len(self.paths)

    def is_proof_path_set(self) -> bool:
        return all(a >= b for a, b in zip(self.alpha, self.beta))

    def odds_ratio_residuals(self) -> list[float]:
        """|alpha_i/beta_i - odds_i/odds_{i-1}|, the Bayes-factor form of the ratio."""
        out = []
        for i, (a, b) in enumerate(zip(self.alpha, self.beta)):
            p0, p1 = self.trajectory[i], self.trajectory[i + 1]
            out.append(abs(a / b - (p1 / (1 - p1)) / (p0 / (1 - p0))))
        return out

    def posterior_odds_residuals(self) -> list[float]:
        """|alpha_i/beta_i - odds of a theorem given the first i-1 paths|."""
        out = []
        for i, (a, b) in enumerate(zip(self.alpha, self.beta)):
            p = self.trajectory[i]
            out.append(abs(a / b - p / (1 - p)) if p < 1 else math.inf)
        return out


def _split_weights(joint: ClaimJoint, q: Question, claims: tuple) -> tuple[float, float]:
    """(weight with (q,t), summed weight with (q,v) for v != t), both intersected with ``claims``."""
    return joint.prob((Claim(q, T),) + claims), joint.valence_weight(q, NOT_T, claims)


def proof_path_coefficients(joint: ClaimJoint, q: Question, paths: Sequence[Iterable[Claim]],
                            given: Sequence[Claim] = ()) -> ProofPathReport:
    paths = tuple(frozenset(p) for p in paths)
    given = tuple(given)
    if not paths:
        raise ValueError("at least one path is required")
    clash = [c for p in paths for c in p if c in given]
    if clash:
        raise ValueError(f"path claim {clash[0]} is already in the conditioning list")
    b0, a0 = _split_weights(joint, q, given)
    if a0 + b0 == 0.0:
        raise ZeroDenominator(f"{q} is never answered under the conditioning list")
    prior = b0 / (a0 + b0)
    acc: tuple = given
    prev = None
    traj, alpha, beta, eps = [], [], [], []
    for i, path in enumerate(paths):
        acc = acc + tuple(sorted(path - set(acc)))
        b, a = _split_weights(joint, q, acc)
        if a + b == 0.0:
            raise ZeroDenominator(f"paths 1..{i + 1} never occur together with an answer to {q}")
        traj.append(b / (a + b))
        if prev is not None:
            pb, pa = prev
            if pb == 0.0 or pa == 0.0:
                raise ZeroDenominator(f"likelihood ratio for path {i + 1} has a zero denominator")
            # likelihoods given v=t and v!=t, each relative to the first i-1 paths
            al, be = b / pb, a / pa
            if be == 0.0:
                raise ZeroDenominator(f"beta for path {i + 1} is zero")
            # priors cancel in the displayed ratio; unnormalized weights suffice
            r = al / be
            eps.append(r * (pa + pb) / (pa + r * pb))
            alpha.append(al)
            beta.append(be)
        prev = (b, a)
    direct = joint.answer_prob(q, T, acc)
    return ProofPathReport(q, paths, given, prior, traj, alpha, beta, eps, direct,
                           joint.provenance == "exact")


def posterior_product(report: ProofPathReport) -> float:
    out = report.trajectory[0]
    for e in report.epsilon:
        out *= e
    return out


def monotonicity_check(report: ProofPathReport, tol: float = EXACT_TOL) -> bool | None:
    """True when the proof-path condition holds and the trajectory never drops;
    None when the condition fails, so no claim is made."""
    if report.n == 1:
        return True
    if not report.is_proof_path_set():
        return None
    traj = report.trajectory
    return all(b >= a - tol for a, b in zip(traj, traj[1:]))


def strictly_increasing(report: ProofPathReport) -> bool:
    traj = report.trajectory
    return all(b > a for a, b in zip(traj, traj[1:]))


# -- randomized joints -----------------------------------------------------------------------

def _questions(m: int, system="SYNTHU"):
    return [Question(system, f"q{i}") for i in range(m)]


def random_abduction_joint(rng: np.random.Generator, m: int, skew: float | None = None):
    """A joint on ``m`` questions, each answered exactly once in every outcome.

    Weights are uniform draws raised to ``skew`` (random by default), which
    spreads the draws between near-uniform and sharply peaked tables.
    Returns ``(joint, questions)``.
    """
    if not 1 <= m <= 6:
        raise ValueError("m must lie in 1..6")
    qs = _questions(m)
    skew = float(rng.uniform(0.5, 6.0)) if skew is None else skew
    w = rng.random(4 ** m) ** skew
    w = w / w.sum()
    per_q = [[Claim(q, v) for v in VALENCES] for q in reversed(qs)]
    # product order makes the first question vary fastest, matching w's indexing
    outcomes = {frozenset(combo): float(p) for combo, p in zip(itertools.product(*per_q), w)}
    return ClaimJoint(outcomes), qs


def random_proofpath_joint(rng: np.random.Generator, n_paths: int, claims_per_path: int = 1,
                           boost: bool | None = None):
    """A joint over ``(q, v)`` crossed with inclusion of each path's claims.

    With ``boost`` the weight of outcomes containing ``(q,t)`` and a path is
    multiplied by a per-path factor, making proof paths common.
    Returns ``(joint, q, paths)``.
    """
    q = Question("SYNTHU", "q")
    paths = []
    for i in range(n_paths):
        paths.append(frozenset(Claim(Question("SYNTHU", f"c{i}_{j}"), VALENCES[int(rng.integers(4))])
                               for j in range(claims_per_path)))
    boost = bool(rng.random() < 0.5) if boost is None else boost
    factors = rng.uniform(1.0, 4.0, n_paths) if boost else np.ones(n_paths)
    w = rng.random(4 * 2 ** n_paths) + 1e-3
    outcomes = {}
    j = 0
    for v in VALENCES:
        for inc in range(2 ** n_paths):
            claims = {Claim(q, v)}
            weight = w[j]
            for i in range(n_paths):
                if inc >> i & 1:
                    claims |= paths[i]
                    if v is T:
                        weight *= factors[i]
            outcomes[frozenset(claims)] = weight
            j += 1
    total = math.fsum(outcomes.values())
    return ClaimJoint({k: p / total for k, p in outcomes.items()}), q, paths


# -- suites -----------------------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    trials: int
    violations: int
    stats: dict
    lines: list[str]

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def report(self) -> str:
        head = [f"suite: {self.name}", f"trials: {self.trials}", f"violations: {self.violations}"]
        head += [f"{k}: {v}" for k, v in self.stats.items()]
        head.append("result: " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(head + self.lines) + "\n"


def abduction_suite(trials: int = 10_000, seed: int = 0, sizes=(2, 3, 4)) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bad, held, lines = 0, 0, []
    for t in range(trials):
        m = sizes[t % len(sizes)]
        joint, qs = random_abduction_joint(rng, m)
        i, j = rng.choice(m, size=2, replace=False)
        rep = check_abduction(joint, qs[i], qs[j])
        held += rep.premise_holds
        if not rep.consistent:
            bad += 1
            lines.append(f"violation trial={t} m={m} margin={rep.margin}")
    return SuiteResult("abduction", trials, bad, {"premise_holds": held}, lines)


def proofpath_suite(trials: int = 1000, seed: int = 0, max_paths: int = 4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    bad, worst, all_up, sign_bad, lines = 0, 0.0, 0, 0, []
    for t in range(trials):
        n = int(rng.integers(1, max_paths + 1))
        joint, q, paths = random_proofpath_joint(rng, n, int(rng.integers(1, 3)))
        rep = proof_path_coefficients(joint, q, paths)
        err = abs(posterior_product(rep) - rep.direct)
        worst = max(worst, err)
        if err >= 1e-10:
            bad += 1
            lines.append(f"product mismatch trial={t} n={n} err={err!r}")
        for a, b, e in zip(rep.alpha, rep.beta, rep.epsilon):
            if (e >= 1 - EXACT_TOL) != (a >= b - EXACT_TOL):
                sign_bad += 1
                lines.append(f"epsilon sign violation trial={t} alpha={a!r} beta={b!r} eps={e!r}")
        if rep.epsilon and all(e > 1 for e in rep.epsilon):
            all_up += 1
            if not strictly_increasing(rep):
                bad += 1
                lines.append(f"trajectory not increasing trial={t} {rep.trajectory}")
    stats = {"max_product_error": repr(worst), "all_epsilon_above_one": all_up,
             "epsilon_sign_violations": sign_bad}
    return SuiteResult("proofpath", trials, bad + sign_bad, stats, lines)


def format_proofpath_report(rep: ProofPathReport) -> str:
    lines = [f"question: {rep.q}", f"paths: {rep.n}", f"prior: {rep.prior!r}"]
    for i, p in enumerate(rep.trajectory, 1):
        lines.append(f"posterior after {i}: {p!r}")
    for i, (a, b, e) in enumerate(zip(rep.alpha, rep.beta, rep.epsilon), 2):
        lines.append(f"path {i}: alpha={a!r} beta={b!r} epsilon={e!r}")
    lines.append(f"product: {posterior_product(rep)!r}")
    lines.append(f"direct: {rep.direct!r}")
    lines.append(f"monotone: {monotonicity_check(rep)}")
    return "\n".join(lines) + "\n"
