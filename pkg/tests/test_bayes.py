import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndrsim.bayes import (
    ClaimJoint,
    abduction_suite,
    check_abduction,
    format_proofpath_report,
    monotonicity_check,
    posterior_product,
    proof_path_coefficients,
    proofpath_suite,
    random_abduction_joint,
    random_proofpath_joint,
    strictly_increasing,
)
from ndrsim.errors import ConditioningUndefined, InvalidWeights, PrecedenceViolated, ZeroDenominator
from ndrsim.estimation import exact_chain, run_batch
from ndrsim.formal_system import VALENCES, Claim, Question, Valence
from ndrsim.ndr_machine import AnswerKernel, NDRConfig, QuestionPolicy

T, A, N, U = Valence.THEOREM, Valence.ANTITHEOREM, Valence.NOT_WFF, Valence.UNDECIDABLE
Q1, Q2 = Question("SYNTHU", "t0"), Question("SYNTHU", "t1")


def table_joint(weights):
    """Joint over (Q1, Q2) answers from {(v1, v2): weight}."""
    return ClaimJoint({frozenset({Claim(Q1, a), Claim(Q2, b)}): w for (a, b), w in weights.items()})


def brute_conditional(joint, event, given):
    num = den = 0.0
    for s, p in joint.outcomes.items():
        if all(c in s for c in given):
            den += p
            if all(c in s for c in event):
                num += p
    return num / den


# -- the joint -----------------------------------------------------------------------

def test_joint_queries_match_brute_force():
    rng = np.random.default_rng(3)
    joint, qs = random_abduction_joint(rng, 3)
    claims = joint.claims
    for _ in range(200):
        ev = tuple(rng.choice(len(claims), size=int(rng.integers(1, 3)), replace=False))
        gv = tuple(rng.choice(len(claims), size=int(rng.integers(0, 2)), replace=False))
        event, given_ = [claims[i] for i in ev], [claims[i] for i in gv]
        if joint.prob(given_) == 0.0:
            continue
        assert joint.conditional(event, given_) == pytest.approx(brute_conditional(joint, event, given_),
                                                                 abs=1e-14)


def test_joint_validation():
    with pytest.raises(InvalidWeights):
        ClaimJoint({frozenset(): -0.1, frozenset({Claim(Q1, T)}): 1.1})
    with pytest.raises(InvalidWeights):
        ClaimJoint({frozenset(): 0.7, frozenset({Claim(Q1, T)}): 0.7})
    with pytest.raises(InvalidWeights):
        ClaimJoint({frozenset(): math.nan})
    j = ClaimJoint({frozenset({Claim(Q1, T)}): 1.0})
    with pytest.raises(ConditioningUndefined):
        j.conditional([Claim(Q1, T)], [Claim(Q1, A)])


def test_large_claim_universe_uses_wide_masks():
    qs = [Question("SYNTHU", f"t{i}") for i in range(2)] + [Question("MODARITH", f"{i}=={i}") for i in range(70)]
    s1 = frozenset(Claim(q, T) for q in qs)
    s2 = frozenset(Claim(q, A) for q in qs)
    j = ClaimJoint({s1: 0.25, s2: 0.75})
    assert len(j.claims) == 144
    assert j.prob([Claim(qs[-1], A)]) == 0.75
    assert j.conditional([Claim(qs[0], T)], [Claim(qs[-1], T)]) == 1.0


# -- abduction ------------------------------------------------------------------------

def test_hand_example():
    j = table_joint({(T, T): 0.4, (T, A): 0.1, (A, T): 0.1, (A, A): 0.4})
    rep = check_abduction(j, Q1, Q2)
    assert rep.premise_holds and rep.conclusion_holds
    assert rep.posterior_q == pytest.approx(0.8, abs=1e-15)
    assert rep.prior_q == pytest.approx(0.5, abs=1e-15)
    assert rep.margin == pytest.approx((0.3, 0.3), abs=1e-15)


def test_independent_questions_give_zero_shift():
    pa = {T: 0.6, A: 0.2, N: 0.1, U: 0.1}
    pb = {T: 0.25, A: 0.25, N: 0.25, U: 0.25}
    j = table_joint({(a, b): pa[a] * pb[b] for a in VALENCES for b in VALENCES})
    rep = check_abduction(j, Q1, Q2)
    assert not rep.premise_holds and not rep.conclusion_holds and rep.consistent
    assert max(abs(m) for m in rep.margin) < 1e-15


def test_precedence_required():
    j = ClaimJoint({frozenset({Claim(Q1, T), Claim(Q2, T)}): 0.5, frozenset({Claim(Q1, T)}): 0.5})
    with pytest.raises(PrecedenceViolated):
        check_abduction(j, Q1, Q2)


def test_abduction_suite_has_no_violations():
    res = abduction_suite(trials=2000, seed=11)
    assert res.ok and res.violations == 0
    assert 0 < res.stats["premise_holds"] < res.trials


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=16, max_size=16).filter(lambda w: sum(w) > 0))
def test_abduction_equivalence_on_rational_tables(ws):
    # integer weights make exact ties common, which exercises the boundary handling
    tot = sum(ws)
    pairs = list(itertools.product(VALENCES, VALENCES))
    j = table_joint({pv: w / tot for pv, w in zip(pairs, ws)})
    try:
        rep = check_abduction(j, Q1, Q2)
    except ConditioningUndefined:
        return
    # exact rational reference
    fw = {pv: Fraction(w, tot) for pv, w in zip(pairs, ws)}
    pt1 = sum(w for (a, _), w in fw.items() if a is T)
    pt2 = sum(w for (_, b), w in fw.items() if b is T)
    both = fw[T, T]
    if pt1 == 0 or pt2 == 0:
        return
    assert rep.premise_holds == (both / pt2 > pt1)
    assert rep.consistent


@pytest.mark.parametrize("eta", [0.0, 0.1, 0.5])
def test_abduction_holds_for_noisy_machines(eta):
    for rho in (0.0, 0.4, 0.9):
        kind = "propagating" if rho else "uniform-wrong"
        cfg = NDRConfig(("SYNTHU",), QuestionPolicy("fixed", schedule=((Q1,), (Q2,))),
                        AnswerKernel(kind, 1.0, eta, rho), dependencies=(("t0", ("t1",)),))
        j = ClaimJoint.from_chain(exact_chain(cfg, 2))
        rep = check_abduction(j, Q1, Q2)
        assert rep.consistent
        if eta > 0 and rho > 0:
            assert rep.premise_holds


def test_empirical_joint_is_report_only():
    cfg = NDRConfig(("SYNTHU",), QuestionPolicy("fixed", schedule=((Q1,), (Q2,))),
                    AnswerKernel("propagating", 1.0, 0.3, 0.6), dependencies=(("t0", ("t1",)),))
    j = ClaimJoint.from_runs(run_batch(cfg, 2, 3000, 4))
    assert j.provenance == "empirical"
    rep = check_abduction(j, Q1, Q2)
    assert rep.tol == 0.0 and rep.premise_holds and rep.conclusion_holds


# -- proof paths -------------------------------------------------------------------------------

def test_single_path_report():
    rng = np.random.default_rng(0)
    joint, q, paths = random_proofpath_joint(rng, 1)
    rep = proof_path_coefficients(joint, q, paths)
    assert rep.epsilon == [] and rep.alpha == []
    assert rep.trajectory == [pytest.approx(joint.answer_prob(q, T, tuple(paths[0])), abs=1e-15)]
    assert posterior_product(rep) == rep.trajectory[0]
    assert monotonicity_check(rep) is True


def test_neutral_paths_keep_posterior_constant():
    # the answer to q and each path claim are independent, so every epsilon is 1
    q = Question("SYNTHU", "u0")
    px = {T: 0.3, A: 0.3, N: 0.2, U: 0.2}
    paths_q = [Question("SYNTHU", f) for f in ("t1", "a1")]
    outcomes = {}
    for v in VALENCES:
        for bits in itertools.product((T, A), repeat=2):
            s = frozenset([Claim(q, v)] + [Claim(pq, b) for pq, b in zip(paths_q, bits)])
            outcomes[s] = px[v] * 0.5 * 0.5
    j = ClaimJoint(outcomes)
    rep = proof_path_coefficients(j, q, [{Claim(paths_q[0], T)}, {Claim(paths_q[1], T)}])
    assert rep.epsilon == [pytest.approx(1.0, abs=1e-14)]
    assert rep.trajectory[0] == pytest.approx(rep.trajectory[1], abs=1e-14) == pytest.approx(0.3)


def test_conditionally_independent_paths_reduce_to_per_path_likelihood():
    q = Question("SYNTHU", "t0")
    prior = {T: 0.4, A: 0.3, N: 0.2, U: 0.1}
    lik = [{T: 0.9, A: 0.2, N: 0.3, U: 0.25}, {T: 0.7, A: 0.6, N: 0.1, U: 0.5}, {T: 0.8, A: 0.1, N: 0.5, U: 0.5}]
    pq = [Question("SYNTHU", f) for f in ("a0", "a1", "u1")]
    outcomes = {}
    for v in VALENCES:
        for bits in itertools.product((True, False), repeat=3):
            w = prior[v]
            claims = [Claim(q, v)]
            for i, b in enumerate(bits):
                w *= lik[i][v] if b else 1 - lik[i][v]
                claims.append(Claim(pq[i], T if b else A))
            outcomes[frozenset(claims)] = w
    j = ClaimJoint(outcomes)
    rep = proof_path_coefficients(j, q, [{Claim(x, T)} for x in pq])
    for i in (1, 2):
        assert rep.alpha[i - 1] == pytest.approx(lik[i][T], abs=1e-12)
        # beta mixes the non-theorem likelihoods by their posterior weight given earlier paths
        w = {v: prior[v] * math.prod(lik[m][v] for m in range(i)) for v in VALENCES if v is not T}
        assert rep.beta[i - 1] == pytest.approx(sum(w[v] * lik[i][v] for v in w) / sum(w.values()), abs=1e-12)


def _synthu_two_path_joint():
    qs = [Question("SYNTHU", f) for f in ("t1", "a0", "t0")]
    cfg = NDRConfig(("SYNTHU",), QuestionPolicy("fixed", schedule=tuple((x,) for x in qs)),
                    AnswerKernel("propagating", 1.0, 0.3, 0.6),
                    dependencies=(("t1", ("t0",)), ("a0", ("t0",))))
    return ClaimJoint.from_chain(exact_chain(cfg, 3)), qs


def test_exact_chain_two_paths_hand_values():
    joint, (t1, a0, t0) = _synthu_two_path_joint()
    rep = proof_path_coefficients(joint, t0, [{Claim(t1, T)}, {Claim(a0, A)}])
    # a0 is the most recent parent claim when t0 is answered: right with prob 0.7,
    # and t0's noise is 0.6*[a0 wrong] + 0.4*0.3
    assert rep.trajectory[0] == pytest.approx(0.7, abs=1e-12)
    assert rep.alpha[0] == pytest.approx(0.88, abs=1e-12)
    assert rep.beta[0] == pytest.approx(0.28, abs=1e-12)
    assert rep.trajectory[1] == pytest.approx(0.88, abs=1e-12)
    assert rep.epsilon[0] == pytest.approx(0.88 / 0.7, abs=1e-12)
    assert posterior_product(rep) == pytest.approx(rep.direct, abs=1e-12)
    assert strictly_increasing(rep) and monotonicity_check(rep)
    assert "epsilon" in format_proofpath_report(rep)


def test_ratio_is_a_bayes_factor_not_the_posterior_odds():
    joint, (t1, a0, t0) = _synthu_two_path_joint()
    rep = proof_path_coefficients(joint, t0, [{Claim(t1, T)}, {Claim(a0, A)}])
    assert max(rep.odds_ratio_residuals()) < 1e-12
    # odds given the first path are 0.7/0.3, while alpha/beta = 0.88/0.28
    assert rep.alpha[0] / rep.beta[0] == pytest.approx(0.88 / 0.28, abs=1e-12)
    assert rep.posterior_odds_residuals()[0] == pytest.approx(0.88 / 0.28 - 0.7 / 0.3, abs=1e-12)


def test_path_claim_in_conditioning_list_rejected():
    joint, (t1, a0, t0) = _synthu_two_path_joint()
    with pytest.raises(ValueError):
        proof_path_coefficients(joint, t0, [{Claim(t1, T)}], given=[Claim(t1, T)])


def test_zero_denominator():
    joint, (t1, a0, t0) = _synthu_two_path_joint()
    bad = Claim(Question("SYNTHU", "u0"), T)
    with pytest.raises(ZeroDenominator):
        proof_path_coefficients(joint, t0, [{Claim(t1, T)}, {bad}])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 2))
def test_proof_path_laws_on_random_exact_joints(seed, n, per_path):
    joint, q, paths = random_proofpath_joint(np.random.default_rng(seed), n, per_path)
    try:
        rep = proof_path_coefficients(joint, q, paths)
    except ZeroDenominator:
        return
    assert abs(posterior_product(rep) - rep.direct) < 1e-10
    assert all(0.0 <= p <= 1.0 for p in rep.trajectory)
    for a, b, e in zip(rep.alpha, rep.beta, rep.epsilon):
        if abs(a - b) > 1e-12:
            assert (e >= 1.0) == (a >= b)
    assert all(r < 1e-9 for r in rep.odds_ratio_residuals())
    mono = monotonicity_check(rep)
    if rep.is_proof_path_set():
        assert mono is True
    elif n > 1:
        assert mono is None
    if rep.epsilon and all(e > 1 for e in rep.epsilon):
        assert strictly_increasing(rep)


def test_proofpath_suite():
    res = proofpath_suite(trials=300, seed=5)
    assert res.ok and float(res.stats["max_product_error"]) < 1e-10
