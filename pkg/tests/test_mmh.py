import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndrsim.errors import (
    ConfigError,
    DeltaConditionViolated,
    InvalidWeights,
    NotPrefixFree,
    UnknownSystem,
    WffNeverAnswered,
    ZeroDenominator,
)
from ndrsim.formal_system import SYNTHU, VALENCES, Claim, Question, Valence
from ndrsim.machines import fixture
from ndrsim.mmh import (
    MMHMeasure,
    NDRWorldInstance,
    build_mmh_measure,
    classify_mistake_free,
    coinflip_fraction_weights,
    coinflip_measure,
    dumps,
    explicit_measure,
    instance_from_dict,
    make_world,
    measure_statistics,
    rejection_sample_mistake_free,
    restrict_mistake_free,
    sample_world_instance,
    sampled_measure,
    world_wffs,
)
from ndrsim.ndr_machine import AnswerKernel, NDRConfig, QuestionPolicy

T, A, N, U = Valence.THEOREM, Valence.ANTITHEOREM, Valence.NOT_WFF, Valence.UNDECIDABLE


def exhaustive(eta, s=1.0, max_len=3, wff_only=True, systems=("SYNTHU",)):
    return NDRConfig(systems, QuestionPolicy("exhaustive", wff_only=wff_only),
                     AnswerKernel(solve_rate=s, noise_rate=eta), max_string_len=max_len)


def inst(*pairs, system="SYNTHU"):
    return NDRWorldInstance(system, frozenset(Claim(Question(system, f), v) for f, v in pairs))


GOOD = inst(("t0", T), ("a1", A))
BAD = inst(("t0", A))


# -- worlds ---------------------------------------------------------------------------------

def test_zero_noise_world_is_point_masses():
    w = make_world(exhaustive(0.0), 3, k_max=2, replicas=20, seed=0)
    assert set(w.answers) == set(world_wffs("SYNTHU", 3))
    for f, dist in w.answers.items():
        truth = SYNTHU.classify(f)
        assert dist[truth] == 1.0 and sum(dist.values()) == 1.0
    assert classify_mistake_free(w)


def test_noisy_world_exact_answers():
    w = make_world(exhaustive(0.5, s=0.7), 2, k_max=4, method="exact")
    for f, dist in w.answers.items():
        truth = SYNTHU.classify(f)
        # answers never couple under this kernel, so each is the single-question law
        assert dist[truth] == pytest.approx(0.5, abs=1e-14)
        for v in VALENCES:
            if v is not truth:
                assert dist[v] == pytest.approx(1 / 6, abs=1e-14)
        assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert not classify_mistake_free(w)


def test_noisy_world_monte_carlo_sums_to_one():
    w = make_world(exhaustive(0.5, max_len=2), 2, k_max=2, replicas=300, seed=1)
    for dist in w.answers.values():
        assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-9)
    assert not classify_mistake_free(w)


def test_world_errors():
    with pytest.raises(DeltaConditionViolated):
        make_world(exhaustive(0.0, systems=("SYNTHU", "PROP")), 2)
    with pytest.raises(WffNeverAnswered):
        make_world(exhaustive(0.0, s=0.0), 2, k_max=2, replicas=5)
    with pytest.raises(WffNeverAnswered):
        make_world(exhaustive(0.0, max_len=1), 2, k_max=2, method="exact")
    prop = NDRConfig(("SYNTHU",), QuestionPolicy("exhaustive"), AnswerKernel("propagating", 1.0, 0.1, 0.5))
    with pytest.raises(ConfigError):
        make_world(prop, 1, method="exact")


# -- instances --------------------------------------------------------------------------------

def test_deterministic_instance_is_unique_and_maximal():
    cfg = exhaustive(0.0, max_len=2)
    a = sample_world_instance(cfg, 3, seed=0)
    b = sample_world_instance(cfg, 3, seed=99)
    assert a == b and a.maximal and a.horizon == 3
    assert {c.question.formula for c in a.claims} == set(world_wffs("SYNTHU", 2))


def test_instances_with_noise_replay():
    cfg = exhaustive(0.4, s=0.8, max_len=2)
    a1, a2 = sample_world_instance(cfg, 5, 1), sample_world_instance(cfg, 5, 1)
    b = sample_world_instance(cfg, 5, 2)
    assert a1 == a2 and a1.horizon == b.horizon == 5
    assert a1.claims != b.claims


def test_no_solving_gives_empty_instance():
    x = sample_world_instance(exhaustive(0.3, s=0.0), 4, 0)
    assert x.claims == frozenset() and classify_mistake_free(x)


def test_mistake_free_instance_from_noisy_world():
    cfg = exhaustive(0.5, max_len=2)
    x, tries = rejection_sample_mistake_free(cfg, 2, seed=0)
    assert x is not None and tries >= 1 and classify_mistake_free(x)
    assert len(x.claims) == len(world_wffs("SYNTHU", 2)) > 0
    assert not classify_mistake_free(make_world(cfg, 2, k_max=2, method="exact"))


def test_zero_noise_instances_always_mistake_free():
    cfg = NDRConfig(("SYNTHU",), QuestionPolicy("uniform"), AnswerKernel(solve_rate=0.7), max_string_len=2)
    for i in range(1000):
        assert classify_mistake_free(sample_world_instance(cfg, 15, seed=3, replica=i))


def test_classify_unknown_system():
    with pytest.raises(UnknownSystem):
        classify_mistake_free(inst(("x", T), system="NOPE"))
    with pytest.raises(TypeError):
        classify_mistake_free(object())


def test_instance_dict_roundtrip():
    assert instance_from_dict(json.loads(json.dumps(GOOD.to_dict()))) == GOOD
    with pytest.raises(ConfigError):
        instance_from_dict({"system": "SYNTHU", "claims": [["t0", "maybe"]]})


# -- measures -----------------------------------------------------------------------------------

def test_explicit_measure_and_statistics():
    m = explicit_measure([(GOOD, 0.5), (BAD, 0.5)])
    assert dict((x, w) for x, w in m.support) == {GOOD: 0.5, BAD: 0.5}
    s = measure_statistics(m)
    assert s.mistake_free_mass == 0.5 and s.entropy_bits == pytest.approx(1.0)
    assert s.mass_per_system == {"SYNTHU": 1.0}
    assert measure_statistics(explicit_measure([(GOOD, 1.0)])).mistake_free_mass == 1.0


def test_explicit_duplicates_merge():
    m = explicit_measure([(GOOD, 0.25), (GOOD, 0.25), (BAD, 0.5)])
    assert len(m.support) == 2


def test_measure_validation():
    with pytest.raises(InvalidWeights):
        explicit_measure([(GOOD, 0.5), (BAD, 0.6)])
    with pytest.raises(InvalidWeights):
        explicit_measure([(GOOD, 1.5), (BAD, -0.5)])
    with pytest.raises(ConfigError):
        MMHMeasure(((GOOD, 1.0),), "wishful")
    with pytest.raises(ConfigError):
        build_mmh_measure({"generator": "nope"})


def test_coinflip_measure_fixture():
    decoding = {"0": GOOD, "10": inst(("t0", T)), "11": BAD}
    m = coinflip_measure(fixture("prefix_0_10_11"), decoding, 4, 50)
    assert coinflip_fraction_weights(m) == {"0": Fraction(1, 2), "10": Fraction(1, 4), "11": Fraction(1, 4)}
    assert measure_statistics(m).mistake_free_mass == 0.75
    with pytest.raises(NotPrefixFree):
        coinflip_measure(fixture("non_prefix_0_01"), {"0": GOOD, "01": BAD}, 4, 50)
    with pytest.raises(ConfigError):
        coinflip_measure(fixture("prefix_0_10_11"), {"0": GOOD}, 4, 50)


def test_sampled_measure():
    point = sampled_measure(exhaustive(0.0, max_len=2), 2, 50, 0)
    assert len(point.support) == 1 and point.support[0][1] == 1.0 and point.support[0][0].claims
    noisy = sampled_measure(exhaustive(0.3, s=0.8, max_len=2), 3, 400, 2)
    assert abs(noisy.total - 1.0) <= 1e-9 and len(noisy.support) > 1


def test_build_from_spec_matches_direct():
    desc = {"generator": "explicit-weights",
            "instances": [dict(GOOD.to_dict(), weight=0.3), dict(BAD.to_dict(), weight=0.7)]}
    assert build_mmh_measure(desc) == explicit_measure([(GOOD, 0.3), (BAD, 0.7)])
    with pytest.raises(ConfigError):
        build_mmh_measure({"generator": "explicit-weights", "instances": [GOOD.to_dict()]})


def test_restriction_recovers_conventional_measure():
    m = explicit_measure([(GOOD, 0.2), (BAD, 0.5), (inst(("u0", U)), 0.3)])
    r = restrict_mistake_free(m)
    assert all(classify_mistake_free(x) for x, _ in r.support)
    assert r.total == pytest.approx(1.0, abs=1e-12)
    assert dict(r.support)[GOOD] == pytest.approx(0.4)
    assert r.metadata["mistake_free_mass"] == pytest.approx(0.5)
    with pytest.raises(ZeroDenominator):
        restrict_mistake_free(explicit_measure([(BAD, 1.0)]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["t0", "t1", "a0", "u0", "0"]), st.sampled_from(VALENCES),
                          st.floats(0.01, 10)), min_size=1, max_size=8))
def test_restriction_and_normalization_property(items):
    raw = [(inst((f, v)), w) for f, v, w in items]
    tot = math.fsum(w for _, w in raw)
    m = explicit_measure([(x, w / tot) for x, w in raw])
    assert abs(m.total - 1.0) <= 1e-9
    stats = measure_statistics(m)
    assert 0.0 <= stats.mistake_free_mass <= 1.0
    if stats.mistake_free_mass == 0.0:
        return
    r = restrict_mistake_free(m)
    assert abs(r.total - 1.0) <= 1e-9 and all(classify_mistake_free(x) for x, _ in r.support)


def test_dumps_is_stable():
    m = explicit_measure([(BAD, 0.5), (GOOD, 0.5)])
    assert dumps(m) == dumps(explicit_measure([(GOOD, 0.5), (BAD, 0.5)]))
    assert json.loads(dumps(m))["generator"] == "explicit-weights"
