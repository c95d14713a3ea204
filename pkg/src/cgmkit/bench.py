"""Scalability benchmark generator: N fresh replicas of the seed model joined
under an artificial root, plus random cross-replica contribution/conflict
edges and same-goal refinement preferences; Full and Reduced variants.

The RNG is splitmix64 with the instance stream seeded by
``mix64(seed ^ mix64(instance_index + 1))`` so every instance is
independently reproducible from (seed, index) alone, in any language.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from . import formulas as F
from .model import (
    AssertDecl,
    AttrDecl,
    CGM,
    Declaration,
    EdgeDecl,
    ElementDecl,
    FormatDecl,
    Kind,
    ObjectiveDecl,
    PreferDecl,
    RefineDecl,
    SetAttrDecl,
    build_model,
    classify,
)

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """The splitmix64 finalizer."""
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The splitmix64 generator (documented in the README for ports)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choice(self, seq):
        return seq[self.below(len(seq))]


def instance_stream(seed: int, index: int) -> SplitMix64:
    return SplitMix64(mix64(seed ^ mix64((index + 1) & MASK64)))


@dataclass(frozen=True)
class BenchConfig:
    n: int
    k: int = 2
    p: int = 0
    variant: str = "full"  # "full" | "reduced"
    seed: int = 0
    instances: int = 1

    def config_id(self) -> str:
        return f"{self.variant}-n{self.n}-k{self.k}-p{self.p}-s{self.seed}"


class ConfigError(Exception):
    pass


# The Reduced variant drops the nice-to-have requirements and their direct
# sub-tasks; identified by this fixture-embedded tag list, not heuristics.
REDUCED_DROP_ELEMENTS = (
    "LowCost",
    "FastSchedule",
    "MinimalEffort",
    "GoodQualitySchedule",
    "GoodParticipation",
    "MinimalConflicts",
    "CollectionEffort",
    "MatchingEffort",
)


def _seed_declarations(seed_model: CGM, variant: str) -> Tuple[List[Declaration], List[str]]:
    """Seed model as declarations with the Reduced drop applied; returns the
    declarations plus the list of goals eligible for preference pairs."""
    if variant == "reduced":
        missing = [l for l in REDUCED_DROP_ELEMENTS if l not in {e.id for e in seed_model.elements}]
        if missing:
            raise ConfigError(
                f"reduced variant needs the bundled seed model (missing {missing})"
            )
    dropped = set(REDUCED_DROP_ELEMENTS) if variant == "reduced" else set()
    decls: List[Declaration] = []
    for e in seed_model.elements:
        if e.id in dropped:
            continue
        decls.append(
            ElementDecl(
                name=e.id,
                kind=e.kind,
                prereq_pos=e.prereq_pos if e.prereq_pos != F.TRUE else None,
                prereq_neg=e.prereq_neg if e.prereq_neg != F.TRUE else None,
            )
        )
    for r in seed_model.refinements:
        if r.target in dropped or any(s in dropped for s in r.sources):
            continue
        decls.append(RefineDecl(target=r.target, sources=r.sources, label=r.id))
    for a in seed_model.attributes:
        if a.aggregate == "sum":
            decls.append(AttrDecl(a.id))
        else:
            decls.append(AttrDecl(a.id, a.aggregate))
    for e in seed_model.elements:
        if e.id in dropped:
            continue
        for attr, v in e.attr_on_sat:
            decls.append(SetAttrDecl(e.id, attr, sat=v))
        for attr, v in e.attr_on_deny:
            decls.append(SetAttrDecl(e.id, attr, sat=None, deny=v))
    for edge in seed_model.relation_edges:
        if edge.kind == "binding":
            t1 = seed_model.refinement(edge.a).target
            t2 = seed_model.refinement(edge.b).target
            if t1 in dropped or t2 in dropped:
                continue
        elif edge.a in dropped or edge.b in dropped:
            continue
        decls.append(EdgeDecl(edge.kind, edge.a, edge.b))
    for p in seed_model.preferences:
        decls.append(PreferDecl(p.preferred, p.over))
    for label, value in seed_model.assertions:
        if label not in dropped:
            decls.append(AssertDecl(label, value))
    pref_goals = []
    for e in seed_model.elements:
        if e.id in dropped:
            continue
        refs = [
            r.id
            for r in seed_model.refinements
            if r.target == e.id and not any(s in dropped for s in r.sources)
        ]
        if len(refs) >= 2:
            pref_goals.append((e.id, refs))
    return decls, pref_goals


def _rename(decls: List[Declaration], suffix: str) -> List[Declaration]:
    """Suffix every label, attribute and dotted reference in the declarations."""

    def rn(name: str) -> str:
        return f"{name}_{suffix}"

    def rt(t: F.Term) -> F.Term:
        if isinstance(t, F.Var):
            if "." in t.id:
                elem, _, attr = t.id.partition(".")
                return F.Var(f"{rn(elem)}.{rn(attr)}")
            return F.Var(rn(t.id))
        if isinstance(t, F.Scale):
            return F.Scale(t.coeff, rt(t.term))
        if isinstance(t, F.Add):
            return F.Add(tuple(rt(s) for s in t.terms))
        if isinstance(t, F.Ite):
            return F.Ite(rf(t.cond), rt(t.then), rt(t.orelse))
        return t

    def rf(f: F.Formula) -> F.Formula:
        if isinstance(f, F.Prop):
            return F.Prop(rn(f.label))
        if isinstance(f, F.Cmp):
            return F.Cmp(rt(f.lhs), f.op, rt(f.rhs))
        if isinstance(f, F.Not):
            return F.Not(rf(f.arg))
        if isinstance(f, F.And):
            return F.And(tuple(rf(a) for a in f.args))
        if isinstance(f, F.Or):
            return F.Or(tuple(rf(a) for a in f.args))
        if isinstance(f, F.Implies):
            return F.Implies(rf(f.lhs), rf(f.rhs))
        if isinstance(f, F.Iff):
            return F.Iff(rf(f.lhs), rf(f.rhs))
        if isinstance(f, F.SugarApp):
            return F.SugarApp(f.name, tuple(rn(a) for a in f.args))
        return f

    out: List[Declaration] = []
    for d in decls:
        if isinstance(d, ElementDecl):
            out.append(
                ElementDecl(
                    name=rn(d.name),
                    kind=d.kind,
                    prereq_pos=rf(d.prereq_pos) if d.prereq_pos else None,
                    prereq_neg=rf(d.prereq_neg) if d.prereq_neg else None,
                )
            )
        elif isinstance(d, RefineDecl):
            out.append(
                RefineDecl(
                    target=rn(d.target),
                    sources=tuple(rn(s) for s in d.sources),
                    label=rn(d.label) if d.label else None,
                )
            )
        elif isinstance(d, AttrDecl):
            out.append(AttrDecl(rn(d.name), rt(d.term) if d.term is not None else None))
        elif isinstance(d, SetAttrDecl):
            out.append(SetAttrDecl(rn(d.element), rn(d.attr), d.sat, d.deny))
        elif isinstance(d, EdgeDecl):
            out.append(EdgeDecl(d.kind, rn(d.a), rn(d.b)))
        elif isinstance(d, PreferDecl):
            out.append(PreferDecl(rn(d.preferred), rn(d.over)))
        elif isinstance(d, AssertDecl):
            out.append(AssertDecl(rn(d.name), d.value))
        else:
            out.append(d)
    return out


def generate_instance(config: BenchConfig, seed_model: CGM, index: int) -> CGM:
    """One benchmark model: replicas + artificial root + random cross edges."""
    rng = instance_stream(config.seed, index)
    base, pref_goals = _seed_declarations(seed_model, config.variant)
    decls: List[Declaration] = [FormatDecl("cgm/1")]
    mandatory: List[str] = []
    task_labels: List[List[str]] = []
    cls_seed = classify(seed_model)
    dropped = set(REDUCED_DROP_ELEMENTS) if config.variant == "reduced" else set()
    seed_tasks = [t for t in sorted(cls_seed.tasks) if t not in dropped]
    from .encode import attribute_support

    pen_support = [e for e in attribute_support(seed_model, "Penalty") if e not in dropped]
    rew_support = [e for e in attribute_support(seed_model, "Reward") if e not in dropped]
    for i in range(1, config.n + 1):
        decls.extend(_rename(base, str(i)))
        mandatory.append(f"ScheduleMeeting_{i}")
        task_labels.append([f"{t}_{i}" for t in seed_tasks])
        # per-replica weight over the replica's penalty/reward element variables
        parts: List[F.Term] = [F.Var(f"{e}_{i}.Penalty_{i}") for e in pen_support]
        parts += [F.Scale(Fraction(-1), F.Var(f"{e}_{i}.Reward_{i}")) for e in rew_support]
        decls.append(AttrDecl(f"Weight_{i}", F.Add(tuple(parts))))
    # artificial root goal with a single refinement over the mandatory requirements
    decls.append(ElementDecl(name="G", kind=Kind.GOAL))
    decls.append(RefineDecl(target="G", sources=tuple(mandatory), label="R"))
    decls.append(AssertDecl("G", True))

    # (k-1)*N contributions and N conflicts between tasks of different replicas
    # (a single replica has no eligible cross pairs, so no random edges)
    def cross_pair() -> Tuple[str, str]:
        while True:
            i = rng.below(config.n)
            j = rng.below(config.n)
            if i != j:
                a = rng.choice(task_labels[i])
                b = rng.choice(task_labels[j])
                return a, b

    seen_edges = set()
    added = 0
    while config.n > 1 and added < (config.k - 1) * config.n:
        a, b = cross_pair()
        key = ("contribution", a, b)
        if key in seen_edges:
            continue
        seen_edges.add(key)
        decls.append(EdgeDecl("contribution", a, b))
        added += 1
    added = 0
    while config.n > 1 and added < config.n:
        a, b = cross_pair()
        key = ("conflict", *sorted((a, b)))
        if key in seen_edges:
            continue
        seen_edges.add(key)
        decls.append(EdgeDecl("conflict", a, b))
        added += 1

    # p*N preferences, each between two refinements of one same goal
    if config.p:
        pairs = []
        for i in range(1, config.n + 1):
            for _goal, refs in pref_goals:
                named = [f"{r}_{i}" for r in refs]
                for x in named:
                    for y in named:
                        if x != y:
                            pairs.append((x, y))
        chosen = set()
        want = config.p * config.n
        if want > len(pairs):
            raise ConfigError(f"p={config.p} needs more same-goal refinement pairs than exist")
        while len(chosen) < want:
            pair = pairs[rng.below(len(pairs))]
            if pair not in chosen:
                chosen.add(pair)
                decls.append(PreferDecl(*pair))

    # aggregate objectives over the per-replica attributes
    def total(attr: str) -> F.Term:
        return F.Add(tuple(F.Var(f"{attr}_{i}") for i in range(1, config.n + 1)))

    decls.append(ObjectiveDecl(direction="min", name="cost", body=total("cost")))
    decls.append(ObjectiveDecl(direction="min", name="workTime", body=total("workTime")))
    decls.append(ObjectiveDecl(direction="min", name="Weight", body=total("Weight")))
    return build_model(decls)


def generate(config: BenchConfig, seed_model: CGM) -> List[CGM]:
    """All instances for a config; each independently reproducible."""
    if config.n < 1:
        raise ConfigError("n must be >= 1")
    if config.k < 1:
        raise ConfigError("k must be >= 1")
    if config.variant not in ("full", "reduced"):
        raise ConfigError(f"unknown variant {config.variant!r}")
    return [generate_instance(config, seed_model, i) for i in range(config.instances)]


def node_count(m: CGM) -> int:
    return len(m.elements) + len(m.refinements)


def rational_var_count(m: CGM) -> int:
    """Numeric variables of the encoding with the declared objectives enabled."""
    from .encode import encode

    problem = encode(m, [o.id for o in m.objectives])
    return len(problem.numeric_vars)


# -- suite running ------------------------------------------------------------------


DETAIL_HEADER = [
    "config_id", "instance", "n", "k", "p", "variant", "mode",
    "status", "time_ms", "obj_values",
]
SUMMARY_HEADER = [
    "config_id", "mode", "instances", "median_ms_solved",
    "pct_unrealizable", "pct_budget",
]


def run_suite(
    configs: Sequence[BenchConfig],
    seed_model: CGM,
    mode: str = "check",
    lex: Sequence[str] = (),
    timeout_s: float = 1000.0,
    jobs: int = 1,
) -> Tuple[str, str]:
    """Run every instance of every config; returns (detail CSV, summary CSV).

    Rows are emitted in instance order regardless of completion order; rerunning
    with the same seed reproduces everything except the time columns.
    """
    detail_rows: List[List[str]] = []
    summary_rows: List[List[str]] = []
    for config in configs:
        models = generate(config, seed_model)
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(
                    pool.map(
                        _run_one_pickled,
                        [
                            (config, idx, mode, tuple(lex), timeout_s, seed_model)
                            for idx in range(config.instances)
                        ],
                    )
                )
        else:
            results = [
                _run_one(models[idx], mode, lex, timeout_s)
                for idx in range(config.instances)
            ]
        times_solved = []
        unrealizable = 0
        budget = 0
        for idx, (status, ms, values) in enumerate(results):
            detail_rows.append(
                [
                    config.config_id(), str(idx), str(config.n), str(config.k),
                    str(config.p), config.variant, mode, status, f"{ms:.1f}",
                    " ".join(values),
                ]
            )
            if status == "unrealizable":
                unrealizable += 1
            elif status == "budget":
                budget += 1
            else:
                times_solved.append(ms)
        times_solved.sort()
        median = ""
        if times_solved:
            k = len(times_solved)
            median = f"{(times_solved[k // 2] if k % 2 else (times_solved[k // 2 - 1] + times_solved[k // 2]) / 2):.1f}"
        summary_rows.append(
            [
                config.config_id(), mode, str(config.instances), median,
                f"{100.0 * unrealizable / config.instances:.1f}",
                f"{100.0 * budget / config.instances:.1f}",
            ]
        )
    return _csv(DETAIL_HEADER, detail_rows), _csv(SUMMARY_HEADER, summary_rows)


def _csv(header: List[str], rows: List[List[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _run_one(model: CGM, mode: str, lex: Sequence[str], timeout_s: float):
    from . import reason

    t0 = time.monotonic()
    if mode == "check" or not lex:
        out = reason.check_realizability(model, budget=timeout_s)
    else:
        out = reason.optimize(model, list(lex), budget=timeout_s, canonical_witness=False)
    ms = (time.monotonic() - t0) * 1000.0
    if isinstance(out, reason.Realizable):
        values = [str(v) for v in (out.realization.objective_values or ())]
        return "realizable", ms, values
    if isinstance(out, reason.Unrealizable):
        return "unrealizable", ms, []
    return "budget", ms, [str(v) for v in out.bounds]


def _run_one_pickled(args):
    config, idx, mode, lex, timeout_s, seed_model = args
    model = generate_instance(config, seed_model, idx)
    return _run_one(model, mode, lex, timeout_s)


def write_instances(config: BenchConfig, seed_model: CGM, out_dir: str) -> Dict:
    """Emit .cgm files per instance plus a manifest.json; returns the manifest."""
    import os

    from .dsl import print_model

    os.makedirs(out_dir, exist_ok=True)
    files = []
    for idx, model in enumerate(generate(config, seed_model)):
        name = f"{config.config_id()}-i{idx}.cgm"
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(print_model(model))
        files.append(name)
    manifest = {
        "config": {
            "n": config.n, "k": config.k, "p": config.p,
            "variant": config.variant, "seed": config.seed,
            "instances": config.instances,
        },
        "rng": "splitmix64; instance stream seeded with mix64(seed ^ mix64(index+1))",
        "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
