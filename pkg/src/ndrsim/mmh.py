"""NDR worlds, world instances and measures over them.

A world pairs one formal system with an answer distribution for each of its
WFFs up to a length bound. An instance pairs the system with one claims set an
NDR machine produced. A measure is a finite weighted support of either.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    ConfigError,
    DeltaConditionViolated,
    InvalidWeights,
    QuestionNeverAnswered,
    WffNeverAnswered,
    ZeroDenominator,
)
from .estimation import answer_distribution, exact_answer_distribution, exact_chain, run_batch
from .formal_system import Claim, Question, Valence, get_system
from .ndr_machine import NDRConfig, QuestionPolicy, is_absorbing, is_mistake_free, run_replica
from .ptm_core import coin_flip_distribution, load_machine

NORM_TOL = 1e-9


@dataclass(frozen=True)
class NDRWorld:
    system: str
    bound: int
    answers: Mapping[str, Mapping[Valence, float]]
    method: str = "mc"
    horizon: int | None = None

    def answer(self, formula: str) -> Mapping[Valence, float]:
        return self.answers[formula]

    def to_dict(self) -> dict:
        return {
            "kind": "world",
            "system": self.system,
            "bound": self.bound,
            "method": self.method,
            "horizon": self.horizon,
            "answers": {f: {v.value: p for v, p in dist.items()} for f, dist in self.answers.items()},
        }


@dataclass(frozen=True)
class NDRWorldInstance:
    system: str
    claims: frozenset
    maximal: bool = True
    horizon: int | None = None

    def sorted_claims(self) -> list[Claim]:
        return sorted(self.claims)

    def key(self) -> tuple:
        return self.system, tuple(self.sorted_claims())

    def to_dict(self) -> dict:
        return {
            "kind": "instance",
            "system": self.system,
            "claims": [[c.question.formula, c.valence.value] for c in self.sorted_claims()],
            "maximal": self.maximal,
            "horizon": self.horizon,
        }


def instance_from_dict(data: Mapping) -> NDRWorldInstance:
    try:
        system = data["system"]
        claims = frozenset(Claim(Question(system, f), Valence(v)) for f, v in data["claims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad instance entry {data!r}: {exc}") from None
    return NDRWorldInstance(system, claims, bool(data.get("maximal", True)), data.get("horizon"))


# -- worlds ------------------------------------------------------------------------------

def _delta_system(cfg: NDRConfig) -> str:
    if len(cfg.systems) != 1:
        raise DeltaConditionViolated(f"configuration names {len(cfg.systems)} systems; a world needs exactly one")
    sid = cfg.systems[0]
    for batch in cfg.question_policy.schedule:
        for q in batch:
            if q.system != sid:
                raise DeltaConditionViolated(f"scheduled question {q} is outside system {sid}")
    return sid


def world_wffs(system_id: str, bound: int) -> list[str]:
    system = get_system(system_id)
    return [s for s in system.enumerate_strings(bound) if system.is_wff(s)]


def _can_pose(cfg: NDRConfig, q: Question) -> bool:
    qp = cfg.question_policy
    if qp.kind == "none" or cfg.solve_rate == 0.0:
        return False
    if qp.kind == "fixed":
        return any(q in batch for batch in qp.schedule)
    if len(q.formula) > cfg.max_string_len:
        return False
    if qp.kind == "wff_biased":
        return qp.wff_weight > 0.0
    return qp.kind != "breakthrough" or q.formula in {p for p, _ in cfg.dependencies} | {
        c for _, cs in cfg.dependencies for c in cs}


def make_world(cfg: NDRConfig, bound: int, k_max: int = 200, replicas: int = 1000, seed: int = 0,
               method: str = "mc") -> NDRWorld:
    """Answer distribution for every WFF of the config's single system up to ``bound``.

    ``method="mc"`` estimates all of them from one batch of replicas.
    ``method="exact"`` runs the exact chain for a machine posing only that
    question with the same kernel and removal; answers never couple across
    questions under the uniform-wrong kernel, so this gives the exact
    per-question limit at horizon ``k_max``.
    """
    sid = _delta_system(cfg)
    wffs = world_wffs(sid, bound)
    answers: dict[str, dict[Valence, float]] = {}
    if method == "exact":
        if cfg.answer_kernel.kind != "uniform-wrong":
            raise ConfigError("exact worlds need the uniform-wrong kernel")
        for f in wffs:
            q = Question(sid, f)
            if not _can_pose(cfg, q):
                raise WffNeverAnswered(f"{q} is never posed under this question policy")
            single = dataclasses.replace(cfg, question_policy=QuestionPolicy("fixed", schedule=((q,),)),
                                         dependencies=())
            try:
                answers[f] = exact_answer_distribution(exact_chain(single, k_max), q)
            except QuestionNeverAnswered:
                raise WffNeverAnswered(f"{q} is never answered within {k_max} iterations") from None
    elif method == "mc":
        runs = run_batch(cfg, k_max, replicas, seed)
        for f in wffs:
            q = Question(sid, f)
            try:
                answers[f] = answer_distribution(cfg, q, k_max, replicas, seed, runs=runs).probs
            except QuestionNeverAnswered:
                raise WffNeverAnswered(f"{q} was never answered in {replicas} replicas "
                                       f"of {k_max} iterations") from None
    else:
        raise ValueError(f"unknown method {method!r}")
    return NDRWorld(sid, bound, answers, method, k_max)


# -- instances ---------------------------------------------------------------------------

def sample_world_instance(cfg: NDRConfig, k_max: int, seed: int, replica: int = 0) -> NDRWorldInstance:
    """One replica's claims set; flagged maximal when the run has absorbed by ``k_max``."""
    sid = _delta_system(cfg)
    final = run_replica(cfg, k_max, seed, replica).final
    return NDRWorldInstance(sid, frozenset(final.claims), is_absorbing(cfg, final), k_max)


def classify_mistake_free(x, oracles: Mapping | None = None) -> bool:
    if not isinstance(x, (NDRWorld, NDRWorldInstance)):
        raise TypeError(f"expected a world or an instance, got {type(x).__name__}")
    system = get_system(x.system, oracles)
    if isinstance(x, NDRWorldInstance):
        return is_mistake_free(x.claims, {x.system: system})
    if isinstance(x, NDRWorld):
        for f, dist in x.answers.items():
            truth = system.classify(f)
            if dist.get(truth, 0.0) != 1.0:
                return False
        return True


def rejection_sample_mistake_free(cfg: NDRConfig, k_max: int, seed: int, max_tries: int = 10_000):
    """First replica whose instance is mistake-free, with the number of draws used.

    Returns ``(instance, tries)``; ``(None, max_tries)`` if none was found.
    """
    for i in range(max_tries):
        inst = sample_world_instance(cfg, k_max, seed, replica=i)
        if classify_mistake_free(inst):
            return inst, i + 1
    return None, max_tries


# -- measures ------------------------------------------------------------------------------

GENERATORS = ("explicit-weights", "ndr-machine-sampled", "coinflip-program-induced")


@dataclass(frozen=True)
class MMHMeasure:
    support: tuple
    generator: str
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS + ("restricted",):
            raise ConfigError(f"unknown generator {self.generator!r}")
        for _, w in self.support:
            if not math.isfinite(w) or w < 0:
                raise InvalidWeights(f"negative or non-finite weight {w!r}")
        total = math.fsum(w for _, w in self.support)
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidWeights(f"weights sum to {total!r}, not 1")

    @property
    def total(self) -> float:
        return math.fsum(w for _, w in self.support)

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "metadata": dict(self.metadata),
            "support": [dict(item.to_dict(), weight=w) for item, w in self.support],
        }


def _merge(pairs: Iterable[tuple[NDRWorldInstance, float]]) -> tuple:
    acc: dict = {}
    first: dict = {}
    for inst, w in pairs:
        k = inst.key()
        acc[k] = acc.get(k, 0) + w
        first.setdefault(k, inst)
    return tuple((first[k], acc[k]) for k in sorted(acc, key=_sort_key))


def _sort_key(key):
    system, claims = key
    return system, [(c.question.formula, c.valence.value) for c in claims]


def explicit_measure(pairs: Iterable[tuple[NDRWorldInstance, float]]) -> MMHMeasure:
    return MMHMeasure(_merge(pairs), "explicit-weights")


def sampled_measure(cfg: NDRConfig, k_max: int, replicas: int, seed: int) -> MMHMeasure:
    sid = _delta_system(cfg)
    pairs = []
    for r in run_batch(cfg, k_max, replicas, seed):
        inst = NDRWorldInstance(sid, frozenset(r.final.claims), is_absorbing(cfg, r.final), k_max)
        pairs.append((inst, 1))
    merged = _merge(pairs)
    meta = {"k_max": k_max, "replicas": replicas, "seed": seed}
    return MMHMeasure(tuple((i, c / replicas) for i, c in merged), "ndr-machine-sampled", meta)


def coinflip_measure(machine, decoding: Mapping[str, NDRWorldInstance], max_len: int,
                     budget: int) -> MMHMeasure:
    """Weight each halting program by 2^-|program| / Omega and map it to its instance."""
    dist = coin_flip_distribution(machine, max_len, budget)
    missing = [p for p in dist.probs if p not in decoding]
    if missing:
        raise ConfigError(f"no decoding for halting program(s) {missing}")
    pairs = [(decoding[p], dist.probs[p]) for p in sorted(dist.probs)]
    merged = _merge(pairs)
    meta = {"omega": str(dist.omega), "max_len": max_len, "budget": budget,
            "programs": {p: str(Fraction(1, 2 ** len(p)) / dist.omega) for p in sorted(dist.probs)}}
    return MMHMeasure(tuple((i, float(w)) for i, w in merged), "coinflip-program-induced", meta)


def build_mmh_measure(desc: Mapping, base_dir: str | Path | None = None) -> MMHMeasure:
    """Build a measure from a generator description (the parsed JSON measure file)."""
    gen = desc.get("generator")
    base = Path(base_dir) if base_dir else Path.cwd()
    if gen == "explicit-weights":
        pairs = []
        for entry in desc.get("instances", ()):
            if "weight" not in entry:
                raise ConfigError(f"instance entry without weight: {entry!r}")
            pairs.append((instance_from_dict(entry), float(entry["weight"])))
        return explicit_measure(pairs)
    if gen == "ndr-machine-sampled":
        cfg = NDRConfig.from_dict(desc["config"])
        return sampled_measure(cfg, int(desc["k_max"]), int(desc["replicas"]), int(desc.get("seed", 0)))
    if gen == "coinflip-program-induced":
        machine = desc["machine"]
        path = Path(machine) if Path(machine).suffix == ".json" else None
        if path is None:
            from .machines import fixture
            m = fixture(machine)
        else:
            m = load_machine(path if path.is_absolute() else base / path)
        decoding = {p: instance_from_dict(d) for p, d in desc["decoding"].items()}
        return coinflip_measure(m, decoding, int(desc["max_len"]), int(desc["budget"]))
    raise ConfigError(f"unknown generator {gen!r}; expected one of {GENERATORS}")


def restrict_mistake_free(m: MMHMeasure, oracles: Mapping | None = None) -> MMHMeasure:
    """Condition the measure on mistake-free support and renormalize."""
    kept = [(x, w) for x, w in m.support if classify_mistake_free(x, oracles)]
    mass = math.fsum(w for _, w in kept)
    if mass == 0.0:
        raise ZeroDenominator("the measure puts no mass on mistake-free items")
    meta = dict(m.metadata, source_generator=m.generator, mistake_free_mass=mass)
    return MMHMeasure(tuple((x, w / mass) for x, w in kept), "restricted", meta)


@dataclass(frozen=True)
class MeasureStatistics:
    mistake_free_mass: float
    mass_per_system: Mapping[str, float]
    entropy_bits: float

    def lines(self) -> list[str]:
        out = [f"mistake_free_mass: {self.mistake_free_mass!r}"]
        out += [f"mass[{s}]: {w!r}" for s, w in sorted(self.mass_per_system.items())]
        out.append(f"entropy_bits: {self.entropy_bits!r}")
        return out


def measure_statistics(m: MMHMeasure, oracles: Mapping | None = None) -> MeasureStatistics:
    mf = math.fsum(w for x, w in m.support if classify_mistake_free(x, oracles))
    per: dict[str, list[float]] = {}
    for x, w in m.support:
        per.setdefault(x.system, []).append(w)
    entropy = -math.fsum(w * math.log2(w) for _, w in m.support if w > 0)
    return MeasureStatistics(min(1.0, mf), {s: math.fsum(ws) for s, ws in per.items()}, entropy + 0.0)


# -- files ---------------------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(obj.to_dict(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def load_measure_file(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def coinflip_fraction_weights(m: MMHMeasure) -> dict[str, Fraction]:
    return {p: Fraction(w) for p, w in m.metadata.get("programs", {}).items()}
