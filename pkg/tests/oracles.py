"""Independent reference implementations used to freeze expected values.

Nothing here calls into ndrsim's simulation or chain code; only the value
types and the formal-system oracles are shared.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from ndrsim.formal_system import VALENCES, Claim, Question, get_system


def enumerate_fixed_schedule(schedule, k, s, eta, rho=0.0, deps=None, r=0.0, watch=None):
    """Exact law of (claims list, passed watch) after k iterations of a fixed schedule.

    ``schedule`` is a list of batches of Questions; ``deps`` maps a parent
    Question to its child Questions. Probabilities are Fractions when the
    rates are, so the oracle can be run exactly.
    """
    deps = deps or {}
    parents = {}
    for p, kids in deps.items():
        for c in kids:
            parents.setdefault(c, []).append(p)

    def truth(q):
        return get_system(q.system).classify(q.formula)

    def wrong_rate(q, claims):
        for c in reversed(claims):
            if c.question in parents.get(q, ()):
                return rho * (c.valence is not truth(c.question)) + (1 - rho) * eta
        return eta

    dist = {((), (), False): 1}
    for step in range(k):
        out = {}
        for (Q, C, passed), p in dist.items():
            passed = passed or (watch is not None and C == tuple(watch))
            batch = schedule[step] if step < len(schedule) else ()
            Q = list(Q)
            for q in batch:
                if q not in Q:
                    Q.append(q)
            branches = []
            for q in Q:
                w = wrong_rate(q, C)
                opts = [(None, 1 - s), (truth(q), s * (1 - w))]
                opts += [(v, s * w / 3) for v in VALENCES if v is not truth(q)]
                branches.append(opts)
            for combo in itertools.product(*branches):
                pc = p
                newC = list(C)
                left = []
                for q, (v, pv) in zip(Q, combo):
                    pc *= pv
                    if v is None:
                        left.append(q)
                    else:
                        newC.append(Claim(q, v))
                if pc == 0:
                    continue
                have = {c.question for c in newC}
                left = tuple(q for q in left if q not in have)
                for keep in itertools.product((True, False), repeat=len(newC)):
                    gone = keep.count(False)
                    pk = pc * r ** gone * (1 - r) ** (len(newC) - gone)
                    if pk == 0:
                        continue
                    key = (left, tuple(c for c, kp in zip(newC, keep) if kp), passed)
                    out[key] = out.get(key, 0) + pk
        dist = out
    return dist


def claims_law(dist):
    out = {}
    for (_, C, _), p in dist.items():
        out[C] = out.get(C, 0) + p
    return out


def answer_law(dist, q, given=(), require_passed=False):
    num = {v: 0 for v in VALENCES}
    for (_, C, passed), p in dist.items():
        if require_passed and not passed:
            continue
        s = set(C)
        if not all(g in s for g in given):
            continue
        for v in VALENCES:
            if Claim(q, v) in s:
                num[v] += p
    tot = sum(num.values())
    return {v: num[v] / tot for v in VALENCES}


def single_question_law(s, eta, k, truth):
    """Closed form for one question posed at iteration 1 with no removal."""
    s, eta = Fraction(s), Fraction(eta)
    answered = 1 - (1 - s) ** k
    out = {(): (1 - s) ** k}
    for v in VALENCES:
        out[(v,)] = answered * ((1 - eta) if v is truth else eta / 3)
    return out


def sq(f, system="SYNTHU"):
    return Question(system, f)
