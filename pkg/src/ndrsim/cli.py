"""Command-line front end.

Every subcommand reads an experiment file (JSON) given with ``--config``;
``@name`` selects a file shipped in ``ndrsim/data/configs``. Outputs go to
``--out`` and never embed timestamps, so identical inputs give identical bytes.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import click

from . import bayes, estimation, mmh
from .errors import ConfigError, NDRError
from .formal_system import Claim, Question, Valence
from .ndr_machine import (
    CLAIM_ADDED,
    CLAIM_REMOVED,
    QUESTION_ADDED,
    NDRConfig,
    count_mistakes,
    encode_claims,
    is_non_repeating,
    run_replicas,
)
from .ptm_core import check_prefix_free, coin_flip_distribution, halting_set, load_machine, run as ptm_run

EXIT_VIOLATION = 1
EXIT_ERROR = 2

EXPERIMENT_FIELDS = ("ndr", "k_max", "n", "replicas", "seed", "trace", "estimate", "check", "mmh")


@dataclass(frozen=True)
class ExperimentConfig:
    ndr: NDRConfig | None = None
    k_max: int = 100
    n: int = 1
    replicas: int = 1
    seed: int = 0
    trace: bool = True
    estimate: Mapping[str, Any] = field(default_factory=dict)
    check: Mapping[str, Any] = field(default_factory=dict)
    mmh: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ndr": self.ndr.to_dict() if self.ndr else None,
            "k_max": self.k_max,
            "n": self.n,
            "replicas": self.replicas,
            "seed": self.seed,
            "trace": self.trace,
            "estimate": dict(self.estimate),
            "check": dict(self.check),
            "mmh": dict(self.mmh),
        }

    @classmethod
    def from_dict(cls, data: Mapping, source: str = "config") -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError(f"{source}: top level must be an object")
        extra = set(data) - set(EXPERIMENT_FIELDS)
        if extra:
            raise ConfigError(f"{source}: unknown field(s) {sorted(extra)}")
        ndr = None
        if data.get("ndr") is not None:
            try:
                ndr = NDRConfig.from_dict(data["ndr"], f"{source}: ndr")
            except ConfigError as exc:
                msg = str(exc)
                raise ConfigError(msg if msg.startswith(source) else f"{source}: ndr: {msg}") from None
        out = {}
        for name, kind in (("k_max", int), ("n", int), ("replicas", int), ("seed", int)):
            if name in data:
                value = data[name]
                if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                    raise ConfigError(f"{source}: field '{name}' must be a non-negative integer, got {value!r}")
                out[name] = value
        for name in ("estimate", "check", "mmh"):
            if name in data and not isinstance(data[name], Mapping):
                raise ConfigError(f"{source}: field '{name}' must be an object")
        return cls(ndr=ndr, trace=bool(data.get("trace", True)),
                   estimate=data.get("estimate", {}), check=data.get("check", {}),
                   mmh=data.get("mmh", {}), **out)


def fixture_config_path(name: str) -> Path:
    return Path(str(resources.files("ndrsim") / "data" / "configs" / f"{name}.json"))


def _resolve(path_text: str) -> Path:
    if path_text.startswith("@"):
        return fixture_config_path(path_text[1:])
    return Path(path_text)


def _rebase_paths(data: dict, base: Path) -> dict:
    """Make file references inside an experiment file relative to that file."""
    data = json.loads(json.dumps(data))
    ndr = data.get("ndr") or {}
    if ndr.get("system_files"):
        ndr["system_files"] = [str(base / p) if not Path(p).is_absolute() else p for p in ndr["system_files"]]
    for section, key in (("check", "joint_file"), ("mmh", "measure_file")):
        value = (data.get(section) or {}).get(key)
        if value and not Path(value).is_absolute():
            data[section][key] = str(base / value)
    return data


def load_experiment(path_text: str) -> tuple[ExperimentConfig, Path]:
    path = _resolve(path_text)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path_text}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path_text}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if isinstance(data, dict):
        data = _rebase_paths(data, path.parent)
    return ExperimentConfig.from_dict(data, path_text), path.parent


# -- output helpers ----------------------------------------------------------------------

def _fmt(x):
    return repr(x) if isinstance(x, float) else ("" if x is None else str(x))


def render_table(header, rows, fmt: str) -> str:
    rows = [[_fmt(x) for x in row] for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


class Output:
    """Single writer for every file a command produces."""

    def __init__(self, directory: Path, fmt: str):
        self.dir = directory
        self.fmt = fmt
        self.dir.mkdir(parents=True, exist_ok=True)

    def ext(self) -> str:
        return ".csv" if self.fmt == "csv" else ".txt"

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return path

    def table(self, stem: str, header, rows) -> Path:
        return self.write(stem + self.ext(), render_table(header, rows, self.fmt))


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


@dataclass
class Context:
    config_path: str | None
    seed: int | None
    out: Path
    fmt: str
    threads: int

    def experiment(self, required=True) -> ExperimentConfig:
        if self.config_path is None:
            if required:
                raise ConfigError("this command needs --config")
            exp = ExperimentConfig()
        else:
            exp, _ = load_experiment(self.config_path)
        if self.seed is not None:
            exp = dataclasses.replace(exp, seed=self.seed)
        return exp

    def output(self, exp: ExperimentConfig | None = None) -> Output:
        out = Output(self.out, self.fmt)
        if exp is not None:
            out.write("effective_config.json", _dump(exp.to_dict()))
        return out


def _fail(exc: Exception, code: int = EXIT_ERROR):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(code)


def _guard(fn):
    """Turn package errors into one-line messages and a nonzero exit code."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (NDRError, ValueError, KeyError, OSError) as exc:
            _fail(exc)
    return wrapper


def _need_ndr(exp: ExperimentConfig) -> NDRConfig:
    if exp.ndr is None:
        raise ConfigError("config has no 'ndr' section")
    return exp.ndr


def _claims(items, source) -> tuple[Claim, ...]:
    try:
        return tuple(Claim(Question(s, f), Valence(v)) for s, f, v in items)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: claims must be [system, formula, valence] triples ({exc})") from None


def _question(item, source) -> Question:
    try:
        s, f = item
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: question must be [system, formula], got {item!r}") from None
    return Question(s, f)


# -- CLI -----------------------------------------------------------------------------------

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", metavar="PATH",
              help="Experiment file (JSON). '@name' picks a shipped fixture, e.g. @config_a.")
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None,
              help="Master seed; overrides the file's seed. Replica i uses stream (seed, i).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True,
              help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "text"]), default="csv", show_default=True,
              help="Format of tabular outputs.")
@click.option("--threads", type=click.IntRange(1), envvar="NDRSIM_THREADS", default=1, show_default=True,
              help="Worker processes for replicas (env NDRSIM_THREADS).")
@click.pass_context
def main(ctx, config_path, seed, out_dir, fmt, threads):
    """Simulate noisy deterministic reasoning machines and check their theory.

    \b
    Example:
      ndrsim --config @config_a --out out/a simulate
    """
    ctx.obj = Context(config_path, seed, Path(out_dir), fmt, threads)


@main.command()
@click.pass_obj
@_guard
def simulate(obj: Context):
    """Run replicas and write traces, final claims lists and a summary.

    \b
    Files: trace.jsonl, final_claims.jsonl, summary.(csv|txt), effective_config.json
    Example:
      ndrsim --config @config_b --out out/b simulate
    """
    exp = obj.experiment()
    cfg = _need_ndr(exp)
    out = obj.output(exp)
    runs = run_replicas(cfg, exp.k_max, exp.replicas, exp.seed, workers=obj.threads,
                        record_events=exp.trace)
    oracles = cfg.oracles()
    finals = io.StringIO()
    n_claims = n_mistakes = n_clean = n_nonrep = 0
    for r in runs:
        claims = r.final.claims
        m = count_mistakes(claims, oracles)
        nr = is_non_repeating(claims)
        n_claims += len(claims)
        n_mistakes += m
        n_clean += m == 0
        n_nonrep += nr
        rec = {"replica": r.replica, "claims": json.loads(encode_claims(claims)),
               "mistakes": m, "mistake_free": m == 0, "non_repeating": nr}
        finals.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")
    out.write("final_claims.jsonl", finals.getvalue())
    if exp.trace:
        trace = io.StringIO()
        for r in runs:
            for ev in r.events:
                trace.write(json.dumps(ev.record(r.replica), ensure_ascii=False, separators=(",", ":")) + "\n")
        out.write("trace.jsonl", trace.getvalue())
    rate = n_mistakes / n_claims if n_claims else 0.0
    lo, hi = estimation.wilson_interval(n_mistakes, n_claims)
    predicted = cfg.noise_rate if cfg.answer_kernel.propagation == 0 else None
    rows = [
        ("replicas", exp.replicas), ("k_max", exp.k_max), ("seed", exp.seed),
        ("claims", n_claims), ("mistakes", n_mistakes),
        ("mistake_rate", rate), ("mistake_rate_lo", lo), ("mistake_rate_hi", hi),
        ("predicted_mistake_rate", predicted),
        ("mistake_free_replicas", n_clean), ("non_repeating_replicas", n_nonrep),
        ("mistake_free", n_clean == exp.replicas), ("non_repeating", n_nonrep == exp.replicas),
    ]
    out.table("summary", ("field", "value"), rows)
    click.echo(f"mistake_free={str(n_clean == exp.replicas).lower()} "
               f"non_repeating={str(n_nonrep == exp.replicas).lower()} "
               f"claims={n_claims} mistakes={n_mistakes}")


@main.command()
@click.pass_obj
@_guard
def estimate(obj: Context):
    """Estimate prefix, claims and answer distributions (CSV with Wilson 95% intervals).

    \b
    The file's "estimate" section may list:
      prefix_n: [n, ...]            first-n-claims distributions
      answers: [{question, given?, list?}, ...]
      claims: [{claims, list?}, ...]
      maximal: true                 maximal-within-horizon lists
      exact: true                   add exact-chain columns
    Example:
      ndrsim --config @estimate_synthu --out out/est estimate
    """
    exp = obj.experiment()
    cfg = _need_ndr(exp)
    section = exp.estimate
    out = obj.output(exp)
    k, N, seed = exp.k_max, exp.replicas, exp.seed
    lists = [_claims(a["list"], "estimate.answers.list") for a in section.get("answers", ()) if "list" in a]
    lists += [_claims(c["list"], "estimate.claims.list") for c in section.get("claims", ()) if "list" in c]
    watch = list(dict.fromkeys(lists))
    runs = run_replicas(cfg, k, N, seed, workers=obj.threads, watch=watch)
    chain = estimation.exact_chain(cfg, k) if section.get("exact") else None

    def with_list(claims_list):
        idx = watch.index(claims_list)
        kept = [r for r in runs if r.passed[idx]]
        if not kept:
            raise estimation.ConditioningListNeverReached(
                f"no replica passed through {encode_claims(claims_list)}")
        return kept

    report = [f"horizon: {k}", f"replicas: {N}", f"seed: {seed}",
              "config: " + json.dumps(exp.to_dict(), sort_keys=True, separators=(",", ":"))]
    for n in section.get("prefix_n", [exp.n]):
        dist = estimation.simulate_pk(cfg, k, n, N, seed, runs=runs)
        exact = chain.prefix_distribution(n) if chain else None
        rows = []
        keys = set(dist.counts) | (set(exact) if exact else set())
        for o in sorted(keys, key=estimation.outcome_key):
            c = dist.counts.get(o, 0)
            lo, hi = estimation.wilson_interval(c, N)
            row = [estimation.outcome_key(o), c, c / N, lo, hi, k]
            if exact is not None:
                row.append(exact.get(o, 0.0))
            rows.append(row)
        header = ["outcome", "count", "estimate", "lo", "hi", "horizon"] + (["exact"] if chain else [])
        out.table(f"pk_n{n}", header, rows)
        report.append(f"prefix n={n}: {len(rows)} outcomes")

    rows = []
    for i, a in enumerate(section.get("answers", ())):
        q = _question(a.get("question"), f"estimate.answers[{i}].question")
        given = _claims(a.get("given", ()), f"estimate.answers[{i}].given")
        clist = _claims(a["list"], "list") if "list" in a else None
        sample = with_list(clist) if clist is not None else runs
        sets = [frozenset(r.final.claims) for r in sample]
        ad = estimation.answer_from_sets(q, sets, given, k, clist)
        ex = None
        if chain is not None:
            src = chain
            if clist is not None:
                src = estimation.exact_chain(cfg, k, watch=clist).conditioned()
            ex = estimation.exact_answer_distribution(src, q, given)
        kind = "list-conditioned" if clist is not None else ("generalized" if given else "plain")
        for v, count, p, lo, hi in ad.rows():
            row = [kind, str(q), encode_claims(given), encode_claims(clist or ()), v, count, ad.denominator,
                   p, lo, hi, k]
            if ex is not None:
                row.append(ex[Valence(v)])
            rows.append(row)
    if section.get("answers"):
        header = ["kind", "question", "given", "list", "valence", "count", "denominator",
                  "estimate", "lo", "hi", "horizon"] + (["exact"] if chain else [])
        out.table("answers", header, rows)

    rows = []
    for i, c in enumerate(section.get("claims", ())):
        claims = _claims(c.get("claims", ()), f"estimate.claims[{i}].claims")
        clist = _claims(c["list"], "list") if "list" in c else None
        sample = with_list(clist) if clist is not None else runs
        # both limit orderings: whole list, then each prefix window
        windows = [None] + list(section.get("prefix_n", ()))
        for n in windows:
            est = estimation.estimate_claims_distribution(cfg, claims, k, N, seed, n=n, runs=sample)
            rows.append([encode_claims(claims), encode_claims(clist or ()), "" if n is None else n,
                         est.count, est.total, est.estimate, est.lo, est.hi, k])
    if section.get("claims"):
        out.table("claims", ["claims", "list", "prefix", "count", "total", "estimate", "lo", "hi", "horizon"], rows)

    if section.get("maximal"):
        rep = estimation.detect_maximal(cfg, k, N, seed, runs=runs)
        rows = [[encode_claims(x), k, "horizon-truncated"] for x in sorted(rep.lists, key=encode_claims)]
        out.table("maximal", ["claims", "horizon", "label"], rows)
    out.write("estimate_report.txt", "\n".join(report) + "\n")
    click.echo(f"estimated with {N} replicas at horizon {k}")


@main.command()
@click.pass_obj
@_guard
def check(obj: Context):
    """Run randomized-joint theorem checks; exit 1 on any violation.

    \b
    The file's "check" section may set suites ([abduction, proofpath]),
    abduction_trials, proofpath_trials, and joint_file (an explicit joint).
    Without --config the default suites run with seed 0.
    Example:
      ndrsim --config @check_default --out out/check check
    """
    exp = obj.experiment(required=False)
    section = exp.check
    out = obj.output(exp)
    parts, ok = [], True
    suites = section.get("suites", ["abduction", "proofpath"])
    if "joint_file" in section:
        text, good = check_joint_file(section["joint_file"])
        parts.append(text)
        ok &= good
    for name in suites:
        if name == "abduction":
            res = bayes.abduction_suite(int(section.get("abduction_trials", 10_000)), exp.seed)
        elif name == "proofpath":
            res = bayes.proofpath_suite(int(section.get("proofpath_trials", 1000)), exp.seed)
        else:
            raise ConfigError(f"unknown suite {name!r}")
        parts.append(res.report())
        ok &= res.ok
        click.echo(f"{name}: {'PASS' if res.ok else 'FAIL'} ({res.trials} trials, {res.violations} violations)")
        if name == "proofpath":
            click.echo(f"max_product_error={res.stats['max_product_error']}")
    out.write("check_report.txt", "\n".join(parts))
    if not ok:
        sys.exit(EXIT_VIOLATION)


def check_joint_file(path) -> tuple[str, bool]:
    """Load an explicit joint and run the checks it names."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    outcomes = {}
    for i, o in enumerate(data.get("outcomes", ())):
        key = frozenset(_claims(o["claims"], f"outcomes[{i}]"))
        outcomes[key] = outcomes.get(key, 0.0) + float(o["p"])
    joint = bayes.ClaimJoint(outcomes, data.get("provenance", "exact"))
    lines, ok = [f"joint: {Path(path).name}", f"outcomes: {len(outcomes)}", f"total: {joint.total!r}"], True
    for pair in data.get("abduction", ()):
        q, q2 = (_question(x, "abduction") for x in pair)
        rep = bayes.check_abduction(joint, q, q2)
        lines.append(f"abduction {q} {q2}: premise={rep.premise_holds} conclusion={rep.conclusion_holds} "
                     f"margin={rep.margin!r}")
        ok &= rep.consistent
    if "proofpath" in data:
        pp = data["proofpath"]
        q = _question(pp["question"], "proofpath.question")
        paths = [_claims(p, "proofpath.paths") for p in pp["paths"]]
        rep = bayes.proof_path_coefficients(joint, q, paths)
        lines.append(bayes.format_proofpath_report(rep).rstrip())
        ok &= abs(bayes.posterior_product(rep) - rep.direct) < 1e-10
    lines.append("result: " + ("PASS" if ok else "FAIL"))
    return "\n".join(lines) + "\n", ok


# -- graph ---------------------------------------------------------------------------------

def read_trace(paths) -> dict:
    """Replica -> iteration -> ordered event records."""
    by_rep: dict = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    key = (str(path), rec.get("replica", 0))
                    it = int(rec["iteration"])
                    if rec["kind"] not in (QUESTION_ADDED, CLAIM_ADDED, CLAIM_REMOVED):
                        raise ValueError(f"unknown event kind {rec['kind']!r}")
                    rec["system"], rec["formula"]
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}:{lineno}: malformed trace record ({exc})") from None
                by_rep.setdefault(key, {}).setdefault(it, []).append(rec)
    return by_rep


def trace_edges(by_rep: Mapping) -> dict:
    """Count transitions between successive distinct claims lists.

    Iterations that leave the tape unchanged are not edges. A transition that
    removed any claim is a deletion edge; otherwise it only appended.
    """
    edges: dict = {}
    for key in sorted(by_rep):
        tape: list[Claim] = []
        for it in sorted(by_rep[key]):
            before = tuple(tape)
            deleted = False
            for rec in sorted(by_rep[key][it], key=lambda r: r.get("seq", 0)):
                if rec["kind"] == QUESTION_ADDED:
                    continue
                c = Claim(Question(rec["system"], rec["formula"]), Valence(rec["valence"]))
                pos = rec.get("position")
                if rec["kind"] == CLAIM_ADDED:
                    if pos is not None and pos != len(tape):
                        raise ConfigError(f"{key[0]}: claim appended at {pos}, tape length {len(tape)}")
                    tape.append(c)
                else:
                    if pos is None or not 0 <= pos < len(tape) or tape[pos] != c:
                        raise ConfigError(f"{key[0]}: removal of {c} at {pos} does not match the tape")
                    tape.pop(pos)
                    deleted = True
            after = tuple(tape)
            if after != before:
                kind = "delete" if deleted else "append"
                e = (encode_claims(before), encode_claims(after), kind)
                edges[e] = edges.get(e, 0) + 1
    return edges


@main.command()
@click.argument("traces", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
@_guard
def graph(obj: Context, traces):
    """Build the claims-list transition graph from trace files.

    \b
    Writes edges.(csv|txt): source, target, kind (append/delete), count,
    probability (share of the source's outgoing transitions). Defaults to
    OUT/trace.jsonl.
    Example:
      ndrsim --out out/a graph out/a/trace.jsonl
    """
    paths = traces or (obj.out / "trace.jsonl",)
    edges = trace_edges(read_trace(paths))
    out_count: dict = {}
    for (src, _, _), c in edges.items():
        out_count[src] = out_count.get(src, 0) + c
    rows = [[src, dst, kind, c, c / out_count[src]] for (src, dst, kind), c in sorted(edges.items())]
    Output(obj.out, obj.fmt).table("edges", ["source", "target", "kind", "count", "probability"], rows)
    nodes = {r[0] for r in rows} | {r[1] for r in rows}
    click.echo(f"nodes={len(nodes)} edges={len(rows)} "
               f"deletion_edges={sum(r[2] == 'delete' for r in rows)}")


# -- ptm --------------------------------------------------------------------------------------

def _machine(name: str):
    p = Path(name)
    if p.suffix == ".json" or p.exists():
        return load_machine(p)
    from .machines import fixture
    try:
        return fixture(name)
    except FileNotFoundError:
        raise ConfigError(f"no machine file or fixture named {name!r}") from None


@main.command()
@click.argument("machine")
@click.argument("action", type=click.Choice(["run", "halting-set", "coinflip", "prefix-free"]))
@click.option("--input", "tape_input", default="", help="Input string for 'run'.")
@click.option("--max-len", type=click.IntRange(0), default=6, show_default=True,
              help="Longest input enumerated for halting sets.")
@click.option("--budget", type=click.IntRange(1), default=200, show_default=True, help="Step budget per run.")
@click.pass_obj
@_guard
def ptm(obj: Context, machine, action, tape_input, max_len, budget):
    """Tape-machine tools. MACHINE is a JSON file or a fixture name.

    \b
    Example:
      ndrsim --out out/ptm ptm prefix_0_10_11 coinflip --max-len 4
    """
    import numpy as np

    m = _machine(machine)
    out = Output(obj.out, obj.fmt)
    if action == "run":
        rng = np.random.default_rng(obj.seed or 0)
        res = ptm_run(m, tape_input, budget, rng)
        halted = type(res).__name__ == "Halted"
        rows = [("halted", halted), ("steps", res.steps), ("output", res.output if halted else None)]
        out.table("ptm_run", ("field", "value"), rows)
        click.echo(f"halted={str(halted).lower()} steps={res.steps}")
        return
    hs = halting_set(m, max_len, budget)
    if action == "halting-set":
        out.table("ptm_halting_set", ("string",), [(s,) for s in sorted(hs.strings, key=lambda s: (len(s), s))])
        click.echo(f"halting={len(hs.strings)}")
    elif action == "prefix-free":
        pf = check_prefix_free(hs.strings)
        out.table("ptm_prefix_free", ("field", "value"), [("prefix_free", pf), ("strings", len(hs.strings))])
        click.echo(f"prefix_free={str(pf).lower()}")
    else:
        dist = coin_flip_distribution(hs)
        from fractions import Fraction
        rows = [(s, str(Fraction(1, 2 ** len(s)) / dist.omega), p) for s, p in dist.probs.items()]
        out.table("ptm_coinflip", ("program", "weight", "probability"), rows)
        click.echo(f"omega={dist.omega}")


# -- mmh ----------------------------------------------------------------------------------------

@main.command("mmh")
@click.pass_obj
@_guard
def mmh_cmd(obj: Context):
    """Build an MMH measure (and optionally a world) from the file's "mmh" section.

    \b
    Keys: measure (generator section) or measure_file; restrict (bool);
    world: {bound, method, k_max, replicas} built from the "ndr" section.
    Example:
      ndrsim --config @mmh_coinflip --out out/mmh mmh
    """
    exp = obj.experiment()
    section = exp.mmh
    out = obj.output(exp)
    if "measure_file" in section:
        path = Path(section["measure_file"])
        measure_desc, base = mmh.load_measure_file(path), path.parent
    elif "measure" in section:
        measure_desc, base = section["measure"], None
    else:
        measure_desc = None
    lines = []
    if measure_desc is not None:
        if measure_desc.get("generator") == "ndr-machine-sampled" and "seed" not in measure_desc:
            measure_desc = dict(measure_desc, seed=exp.seed)
        m = mmh.build_mmh_measure(measure_desc, base)
        out.write("measure.json", mmh.dumps(m))
        lines += ["measure:"] + mmh.measure_statistics(m).lines()
        if section.get("restrict", True):
            r = mmh.restrict_mistake_free(m)
            out.write("restricted.json", mmh.dumps(r))
            lines += ["restricted:"] + mmh.measure_statistics(r).lines()
    if "world" in section:
        w = section["world"]
        cfg = _need_ndr(exp)
        world = mmh.make_world(cfg, int(w.get("bound", 2)), int(w.get("k_max", exp.k_max)),
                               int(w.get("replicas", exp.replicas)), exp.seed, w.get("method", "mc"))
        out.write("world.json", mmh.dumps(world))
        lines.append(f"world_mistake_free: {mmh.classify_mistake_free(world)}")
    out.write("mmh_report.txt", "\n".join(lines) + "\n")
    click.echo("\n".join(lines))


if __name__ == "__main__":
    main()
