"""Fixture machines shipped with the package.

The JSON files under ``data/machines`` are generated from the builders here
(``python -m ndrsim.machines`` rewrites them); tests check the two agree.
"""
import json
from importlib import resources
from pathlib import Path

from .ptm_core import HeaderEncoding, StochasticMachine, TapeMachine, load_machine, machine_to_dict

BITS = ("0", "1", "_")


def identity_machine():
    rules = {("start", a): ("halt", a, 0) for a in BITS}
    return TapeMachine(("start", "halt"), BITS, "_", "start", "halt", rules, "identity")


def loop_machine():
    rules = {("loop", a): ("loop", a, 0) for a in BITS}
    return TapeMachine(("loop", "halt"), BITS, "_", "loop", "halt", rules, "loop")


def bit_flipper():
    rules = {
        ("flip", "0"): ("flip", "1", 1),
        ("flip", "1"): ("flip", "0", 1),
        ("flip", "_"): ("halt", "_", -1),
    }
    return TapeMachine(("flip", "halt"), BITS, "_", "flip", "halt", rules, "bit_flipper")


def prefix_machine():
    """Halts exactly on 0, 10 and 11, leaving the head on the last input cell."""
    rules = {
        ("r0", "0"): ("c", "0", 1),
        ("r0", "1"): ("r1", "1", 1),
        ("r1", "0"): ("c", "0", 1),
        ("r1", "1"): ("c", "1", 1),
        ("c", "_"): ("halt", "_", -1),
    }
    return _with_loop(("r0", "r1", "c", "loop", "halt"), "r0", rules, "prefix_0_10_11")


def non_prefix_machine():
    """Halts exactly on 0 and 01; 0 is a proper prefix of 01."""
    rules = {
        ("r0", "0"): ("c0", "0", 1),
        ("c0", "_"): ("halt", "_", -1),
        ("c0", "1"): ("c1", "1", 1),
        ("c1", "_"): ("halt", "_", -1),
    }
    return _with_loop(("r0", "c0", "c1", "loop", "halt"), "r0", rules, "non_prefix_0_01")


def _with_loop(states, start, rules, name, alphabet=BITS):
    rules = dict(rules)
    for r in states:
        if r == "halt":
            continue
        for a in alphabet:
            rules.setdefault((r, a), ("loop", a, 0))
    return TapeMachine(tuple(states), tuple(alphabet), "_", start, "halt", rules, name)


def coin_writer():
    """Writes fair random bits rightwards; halts with probability 0.1 per step."""
    kernel = {
        ("w", "_"): ((("w", "0", 1), 0.45), (("w", "1", 1), 0.45), (("halt", "_", -1), 0.1)),
        ("w", "0"): ((("w", "0", 1), 1.0),),
        ("w", "1"): ((("w", "1", 1), 1.0),),
    }
    return StochasticMachine(("w", "halt"), BITS, "_", "w", "halt", kernel, "coin_writer")


SCAN = ("0", "1", "x")


def toy_universal():
    """Interpreter for scanner machines: two-rule machines that rewrite each input bit
    through a map g and halt at the first blank.

    Tape layout: ``g(0) g(1) # input``. A ``g`` entry of ``x`` means the scanner
    loops forever on that bit.
    """
    alphabet = ("0", "1", "x", "#", "_")
    states = ["start"] + [f"h{a}" for a in SCAN] + [f"p{a}{b}" for a in SCAN for b in SCAN]
    states += [f"s{a}{b}" for a in SCAN for b in SCAN] + ["loop", "halt"]
    rules = {}
    for a in SCAN:
        rules["start", a] = (f"h{a}", a, 1)
        for b in SCAN:
            rules[f"h{a}", b] = (f"p{a}{b}", b, 1)
            rules[f"p{a}{b}", "#"] = (f"s{a}{b}", "#", 1)
            g = {"0": a, "1": b}
            for bit, out in g.items():
                rules[f"s{a}{b}", bit] = ("loop", bit, 0) if out == "x" else (f"s{a}{b}", out, 1)
            rules[f"s{a}{b}", "_"] = ("halt", "_", -1)
    return _with_loop(states, "start", rules, "toy_universal", alphabet)


def scanner_encoding(target_name: str) -> HeaderEncoding:
    """Encoding that lets :func:`toy_universal` emulate a named fixture."""
    headers = {"bit_flipper": "10", "identity": "01", "loop": "xx"}
    return HeaderEncoding(headers[target_name])


BUILDERS = {
    "identity": identity_machine,
    "loop": loop_machine,
    "bit_flipper": bit_flipper,
    "prefix_0_10_11": prefix_machine,
    "non_prefix_0_01": non_prefix_machine,
    "coin_writer": coin_writer,
    "toy_universal": toy_universal,
}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("ndrsim") / "data" / "machines" / f"{name}.json"))


def fixture(name: str):
    return load_machine(fixture_path(name))


def write_fixtures(directory=None):
    directory = Path(directory) if directory else fixture_path("x").parent
    directory.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        text = json.dumps(machine_to_dict(build()), indent=1, ensure_ascii=False)
        (directory / f"{name}.json").write_text(text + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_fixtures()
