import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndrsim.errors import ConfigError, SymbolNotInAlphabet, UnknownSystem
from ndrsim.formal_system import (
    MODARITH,
    PROP,
    SYNTHU,
    VALENCES,
    Valence,
    classify,
    enumerate_strings,
    get_system,
    is_wff,
    load_system_file,
    make_system,
    system_from_dict,
)

T, A, N, U = Valence.THEOREM, Valence.ANTITHEOREM, Valence.NOT_WFF, Valence.UNDECIDABLE


@pytest.mark.parametrize("s, v", [("1+1=2", T), ("1+1=3", A), ("+4-", N)])
def test_modarith_worked_examples(s, v):
    assert classify(MODARITH, s) is v


def test_is_wff_examples():
    assert is_wff(MODARITH, "1+1=2")
    assert not is_wff(MODARITH, "+4-")
    assert not is_wff(PROP, "")


@pytest.mark.parametrize("s, v", [
    ("p∨~p", T), ("p∧~p", A), ("p", U), ("p→p", T), ("~(p→p)", A),
    ("(p∧q)→p", T), ("p∨", N), ("()", N), ("pq", N), ("~~p", U),
])
def test_prop_truth_tables(s, v):
    assert PROP.classify(s) is v


@pytest.mark.parametrize("s, v", [("t0", T), ("a1", A), ("u0", U), ("~t0", A), ("~~t0", T),
                                  ("~u1", U), ("0", N), ("", N), ("~", N)])
def test_synthu_table(s, v):
    assert SYNTHU.classify(s) is v


@pytest.mark.parametrize("s, v", [("2<3", T), ("3<2", A), ("9-9=0", T), ("~1=2", T),
                                  ("~~1=2", A), ("1+=2", N), ("1=2=3", N), ("12=12", N)])
def test_modarith_more(s, v):
    assert MODARITH.classify(s) is v


def test_foreign_symbol_rejected():
    with pytest.raises(SymbolNotInAlphabet):
        classify(MODARITH, "1+x=2")
    with pytest.raises(SymbolNotInAlphabet):
        is_wff(PROP, "p&q")


def test_enumeration_order_and_counts():
    assert list(enumerate_strings(("0", "1"), 1)) == ["", "0", "1"]
    assert len(list(enumerate_strings(("0", "1"), 2))) == 7
    a = len(MODARITH.alphabet)
    assert len(list(MODARITH.enumerate_strings(2))) == 1 + a + a * a == MODARITH.count_strings(2)
    assert list(enumerate_strings(("1", "0"), 2))[3:5] == ["11", "10"]


def test_exactly_four_valences():
    assert len(VALENCES) == 4 and len(set(VALENCES)) == 4
    assert [v.code for v in VALENCES] == [0, 1, 2, 3]
    assert all(Valence.from_code(v.code) is v for v in VALENCES)


@pytest.mark.parametrize("system, bound", [(PROP, 4), (SYNTHU, 3), (MODARITH, 3)])
def test_totality_partition_determinism(system, bound):
    for s in system.enumerate_strings(bound):
        v = system.classify(s)
        assert v in VALENCES
        assert system.classify(s) is v
        assert (v is not N) == system.is_wff(s)


def test_prop_not_consistency_exhaustive():
    for s in PROP.enumerate_strings(4):
        v = PROP.classify(s)
        if v in (T, A):
            neg = PROP.negate(s)
            assert PROP.classify(neg) is (A if v is T else T), s


prop_atoms = st.sampled_from(["p", "q", "r"])
prop_formulas = st.recursive(
    prop_atoms,
    lambda sub: st.one_of(
        sub.map(lambda x: f"~{x}"),
        st.tuples(sub, st.sampled_from(["∧", "∨", "→"]), sub).map(lambda t: f"({t[0]}{t[1]}{t[2]})"),
    ),
    max_leaves=6,
)


@settings(max_examples=200, deadline=None)
@given(prop_formulas)
def test_generated_prop_formulas_are_wffs_and_negation_flips(f):
    v = PROP.classify(f)
    assert v is not N
    nv = PROP.classify(PROP.negate(f))
    assert nv is {T: A, A: T, U: U}[v]


def test_registry_and_unknown():
    assert get_system("PROP") is PROP
    with pytest.raises(UnknownSystem):
        get_system("NOPE")


def test_system_file_roundtrip(tmp_path):
    from importlib import resources
    path = resources.files("ndrsim") / "data" / "systems" / "synthu_example.json"
    sys_ = load_system_file(str(path))
    assert sys_.classify("t2") is T and sys_.classify("u2") is U and sys_.classify("~a0") is T
    assert sys_.classify("u1") is N
    again = system_from_dict(json.loads(json.dumps(sys_.to_dict())))
    assert all(again.classify(s) is sys_.classify(s) for s in sys_.enumerate_strings(3))


def test_system_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"id": "X",\n "alphabet": [}', encoding="utf-8")
    with pytest.raises(ConfigError, match=r"bad.json:2:"):
        load_system_file(bad)
    with pytest.raises(ConfigError, match="missing field 'rule'"):
        system_from_dict({"id": "X", "alphabet": ["~", "a"]})
    with pytest.raises(ValueError):
        make_system("X", ["~", "p"], "truth-table", {})
