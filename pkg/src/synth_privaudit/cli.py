"""Command-line entry point: ``synth-privaudit {audit,simulate,decide,inspect}``.

Exit codes: 0 when every decision is acceptable, 2 when any is high,
1 on any error (including usage errors).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels
from .attribute import AttributeConfig, attribute_audit
from .errors import AuditError, ConfigError, RefusedAudit
from .membership import MembershipConfig, membership_audit
from .policy import (
    RECOMMENDATIONS,
    SCHEMA_ID,
    AuditReport,
    Thresholds,
    epsilon_check,
    exit_code,
    naive_note,
    overall_risk,
    parse_report,
    recompute_decisions,
    render_report,
    to_json,
    decide_membership,
)
from .similarity import similarity_section
from .sim import SCENARIOS, run_scenario
from .tabular import (
    Dataset,
    Discretizer,
    discretize,
    equivalence_classes,
    k_map_vulnerability,
    load_csv,
    load_schema,
    partition,
    qi_names,
    sensitive_names,
    validate_schema,
)

CONFIG_ENV = "SYNTH_PRIVAUDIT_CONFIG"
DEFAULT_PARTITION_RATIO = 0.8

_CONFIG_KEYS = {
    "seed", "membership", "attribute", "thresholds", "partition_ratio", "epsilon",
    "attempt_probability", "population", "workers", "simulate",
}


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1; 2 is reserved for high-vulnerability decisions
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}; allowed: {sorted(_CONFIG_KEYS)}")
    return doc


def _config_path(args):
    return args.config or os.environ.get(CONFIG_ENV) or None


def write_manifest(out: Path, command: str, seed, config: dict, inputs: dict, extra: dict | None = None) -> Path:
    """Write ``<out>.manifest.json`` with everything needed to replay the run."""
    manifest = {
        "command": command,
        "tool_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "seed": seed,
        "config": config,
        "inputs": {str(k): _sha256(v) for k, v in inputs.items()},
        "output": {"path": str(out), "sha256": _sha256(out)},
    }
    if extra:
        manifest.update(extra)
    path = Path(f"{out}.manifest.json")
    path.write_text(to_json(manifest), encoding="utf-8")
    return path


# -- audit ---------------------------------------------------------------------

def _membership_cfg(args, doc: dict, seed: int) -> MembershipConfig:
    doc = dict(doc)
    if args.betas:
        doc["betas"] = args.betas
    for flag in ("t", "n", "N"):
        value = getattr(args, flag)
        if value is not None:
            doc[flag] = value
    doc["seed"] = seed
    cfg = MembershipConfig.from_dict(doc)
    if cfg.t is None and cfg.N is None:
        raise ConfigError(
            "member prevalence unknown: pass --t, or --n and --N, or set membership.t in the config"
        )
    return cfg


def audit_one(train: Dataset, holdout: Dataset, synthetic: Dataset, doc: dict, mcfg: MembershipConfig,
              include_similarity: bool, population: Dataset | None = None) -> AuditReport:
    """Membership, attribute and identity sections for one synthetic dataset."""
    seed = mcfg.seed
    thresholds = Thresholds.from_dict(doc.get("thresholds"))
    qis = qi_names(train.schema)
    disc = Discretizer.fit(train)
    notes = [RECOMMENDATIONS["R7"]]

    mem = membership_audit(train, holdout, synthetic, qis, mcfg, disc)
    decisions = {"membership": decide_membership(mem.headline_f_rel, thresholds)}
    note = naive_note(max(r.f_naive for r in mem.per_beta), thresholds)
    if note:
        notes.append(note)

    acfg = AttributeConfig.from_dict({**(doc.get("attribute") or {}), "seed": seed})
    targets = acfg.targets or sensitive_names(train.schema)
    if not targets:
        raise ConfigError("no sensitive attribute declared in the schema and no attribute.targets configured")
    attrs = []
    for target in targets:
        rep = attribute_audit(train, holdout, synthetic, acfg.keys, target, acfg, thresholds, disc)
        attrs.append(rep.to_dict())
        decisions[f"attribute:{target}"] = rep.decision

    train_d = disc.transform(train)
    if population is not None:
        km = k_map_vulnerability(train_d, disc.transform(population), qis)
        reference = "population"
    else:
        km = k_map_vulnerability(train_d, train_d, qis)
        reference = "training sample"
    k_map = {"reference": reference, "max": km.max, "mean": km.mean, "unseen": km.unseen,
             "quasi_identifiers": qis}

    epsilon = epsilon_check(float(doc["epsilon"])).to_dict() if doc.get("epsilon") is not None else None
    risk = None
    if doc.get("attempt_probability") is not None:
        attempt = float(doc["attempt_probability"])
        risk = {"vulnerability": km.max, "attempt": attempt, "risk": overall_risk(km.max, attempt),
                "vulnerability_source": "k_map max"}

    similarity = similarity_section(train_d, disc.transform(holdout), disc.transform(synthetic), qis) \
        if include_similarity else None
    return AuditReport(
        membership=mem.to_dict(),
        attribute=attrs,
        deprecated_similarity=similarity,
        k_map=k_map,
        epsilon=epsilon,
        overall_risk=risk,
        decisions=decisions,
        thresholds=thresholds.to_dict(),
        notes=notes,
    )


def _aggregate(docs: list) -> dict:
    values: dict[str, list] = {}

    def add(key, v):
        if v is not None and not (isinstance(v, float) and math.isnan(v)):
            values.setdefault(key, []).append(float(v))

    for d in docs:
        m = d["membership"]
        add("membership.headline_f_rel", m["headline_f_rel"])
        for b in m["betas"]:
            add(f"membership.f_beta[{b['beta']}]", b["f_beta"])
            add(f"membership.f_rel[{b['beta']}]", b["f_rel"])
        for a in d["attribute"]:
            for field in ("a_members", "a_non_members", "a_rel"):
                add(f"attribute.{a['target']}.{field}", a[field])
    return {
        k: {"mean": float(np.mean(v)), "sd": float(np.std(v, ddof=1)) if len(v) > 1 else 0.0, "n": len(v)}
        for k, v in values.items()
    }


def cmd_audit(args) -> int:
    cfg_path = _config_path(args)
    doc = load_config(cfg_path)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    schema = validate_schema(load_schema(args.schema), require_qi=True)

    train = load_csv(args.train, schema)
    inputs = {args.schema: args.schema, args.train: args.train}
    notes = []
    if args.holdout:
        holdout = load_csv(args.holdout, schema)
        inputs[args.holdout] = args.holdout
    else:
        ratio = float(doc.get("partition_ratio", DEFAULT_PARTITION_RATIO))
        msg = (f"no holdout given; partitioning the training file {ratio:.0%}/{1 - ratio:.0%} with seed {seed}. "
               "The partition postdates generation, so the holdout may have influenced the synthetic data.")
        _warn(msg)
        notes.append(msg)
        train, holdout = partition(train, ratio, seed).split(train)
    population = None
    if doc.get("population"):
        population = load_csv(doc["population"], schema)
        inputs[doc["population"]] = doc["population"]
    if cfg_path:
        inputs[cfg_path] = cfg_path

    mcfg = _membership_cfg(args, doc.get("membership") or {}, seed)
    synth_path = Path(args.synthetic)
    if synth_path.is_dir():
        files = sorted(p for p in synth_path.iterdir() if p.suffix == ".csv")
        if not files:
            raise ConfigError(f"{synth_path}: no .csv files")
    else:
        files = [synth_path]
    for f in files:
        inputs[str(f)] = f

    def run(path):
        synthetic = load_csv(path, schema)
        return audit_one(train, holdout, synthetic, doc, mcfg, args.include_deprecated_similarity, population)

    workers = max(1, int(doc.get("workers", 1)))
    with ThreadPoolExecutor(workers) as pool:
        reports = list(pool.map(run, files))

    provenance = {
        "seed": seed,
        "config": doc,
        "config_path": str(cfg_path) if cfg_path else None,
        "kernel_backend": kernels.BACKEND,
        "inputs": {str(k): _sha256(v) for k, v in inputs.items()},
        "train_size": len(train),
        "holdout_size": len(holdout),
    }
    if len(files) == 1 and not synth_path.is_dir():
        report = reports[0]
        report.notes = notes + report.notes
        report.provenance = provenance
        out_doc = report.to_dict()
        decisions = report.decisions
    else:
        per_file = []
        for r in reports:
            r.provenance = {"seed": seed}
            per_file.append(r.to_dict())
        decisions = {f"{f.name}:{k}": v for f, r in zip(files, reports) for k, v in r.decisions.items()}
        out_doc = {
            "schema": SCHEMA_ID,
            "tool_version": __version__,
            "kind": "bundle",
            "files": [f.name for f in files],
            "reports": per_file,
            "aggregate": _aggregate(per_file),
            "decisions": decisions,
            "thresholds": reports[0].thresholds,
            "notes": notes,
            "provenance": provenance,
        }

    out = Path(args.out)
    out.write_text(render_report(out_doc, "json"), encoding="utf-8")
    write_manifest(out, "audit", seed, doc, inputs, {"flags": _flags(args)})
    print(render_report(out_doc, "text"), end="")
    return exit_code(decisions)


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}


# -- simulate --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    name = args.scenario_opt or args.scenario
    if name is None:
        raise ConfigError(f"no scenario given; choose from {', '.join(SCENARIOS)}")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    cfg_path = _config_path(args)
    doc = load_config(cfg_path)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    overrides = (doc.get("simulate") or {}).get(name, {})
    result = run_scenario(name, seed, args.paper_scale, overrides)
    out = Path(args.out or f"{name}.csv")
    out.write_text(result.curve_csv(), encoding="utf-8")
    inputs = {cfg_path: cfg_path} if cfg_path else {}
    write_manifest(out, f"simulate {name}", seed, doc, inputs, {
        "scenario": name,
        "paper_scale": args.paper_scale,
        "params": result.params,
        "iterations": result.iterations,
        "generator": result.generator,
        "summary": result.summary,
    })
    for key, value in result.summary.items():
        print(f"{key}: {value}")
    return 0


# -- decide ----------------------------------------------------------------------

def cmd_decide(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        doc = parse_report(fh.read())
    if args.thresholds:
        with open(args.thresholds, encoding="utf-8") as fh:
            tdoc = yaml.safe_load(fh) or {}
        if isinstance(tdoc, dict) and "thresholds" in tdoc:
            tdoc = tdoc["thresholds"]
        thresholds = Thresholds.from_dict(tdoc)
    else:
        thresholds = Thresholds.from_dict(doc.get("thresholds"))
    decisions = recompute_decisions(doc, thresholds)
    stored = doc.get("decisions") or {}
    changed = 0
    for key in sorted(set(decisions) | set(stored)):
        new, old = decisions.get(key), stored.get(key)
        mark = "" if new == old else "  (differs from stored)"
        changed += new != old
        print(f"{key}: {new} [stored: {old}]{mark}")
    print(f"{changed} decision(s) differ from the stored report")
    if args.out:
        out = Path(args.out)
        out.write_text(to_json({"decisions": decisions, "stored": stored, "thresholds": thresholds.to_dict()}),
                       encoding="utf-8")
        inputs = {args.report: args.report}
        if args.thresholds:
            inputs[args.thresholds] = args.thresholds
        write_manifest(out, "decide", None, thresholds.to_dict(), inputs)
    return exit_code(decisions)


# -- inspect ---------------------------------------------------------------------

def cmd_inspect(args) -> int:
    path = Path(args.path)
    if path.suffix == ".json":
        print(render_report(parse_report(path.read_text(encoding="utf-8")), "text"), end="")
        return 0
    if not args.schema:
        raise ConfigError("inspecting a CSV needs --schema")
    schema = load_schema(args.schema)
    data = load_csv(path, schema)
    info = {"rows": len(data), "attributes": []}
    for attr in data.schema:
        col = data.column(attr.name)
        entry = {"name": attr.name, "kind": attr.kind, "role": attr.role}
        if attr.kind == "continuous":
            finite = col[~np.isnan(col)]
            entry.update(missing=int(len(col) - len(finite)),
                         min=float(finite.min()) if len(finite) else None,
                         max=float(finite.max()) if len(finite) else None)
        else:
            entry["distinct"] = len(set(col.tolist()))
        info["attributes"].append(entry)
    qis = qi_names(data.schema)
    if qis:
        idx = equivalence_classes(discretize(data), qis)
        info["k_anonymity"] = {"quasi_identifiers": qis, "classes": idx.n_groups,
                               "min_k": int(idx.k.min()) if len(idx.k) else None,
                               "max_1_over_k": float(idx.vulnerability.max()) if len(idx.k) else None}
    text = to_json(info)
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        write_manifest(out, "inspect", None, {}, {args.path: args.path, args.schema: args.schema})
    return 0


# -- parser ----------------------------------------------------------------------

def _betas(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"betas must be comma-separated numbers, got {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("betas must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="synth-privaudit", description="Disclosure-vulnerability audits for synthetic tabular data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help=f"YAML/JSON config (default: ${CONFIG_ENV})")
        sp.add_argument("--seed", type=int, help="single source of randomness")
        sp.add_argument("--out", help="output file; a .manifest.json is written beside it")

    a = sub.add_parser("audit", help="audit one synthetic file or a directory of them")
    common(a)
    a.add_argument("--train", required=True)
    a.add_argument("--holdout")
    a.add_argument("--synthetic", required=True, help="CSV file or directory of CSV files")
    a.add_argument("--schema", required=True)
    a.add_argument("--include-deprecated-similarity", action="store_true")
    a.add_argument("--betas", type=_betas)
    a.add_argument("--t", type=float, help="member prevalence in the attack set")
    a.add_argument("--n", type=int, help="training sample size")
    a.add_argument("--N", type=int, help="population size")
    a.set_defaults(func=cmd_audit, out="audit_report.json")

    s = sub.add_parser("simulate", help=f"run a simulation: {', '.join(SCENARIOS)}")
    common(s)
    s.add_argument("scenario", nargs="?")
    s.add_argument("--scenario", dest="scenario_opt")
    s.add_argument("--paper-scale", action="store_true")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("decide", help="re-apply decision thresholds to a stored report")
    d.add_argument("report")
    d.add_argument("--thresholds", help="YAML/JSON thresholds (or a config with a thresholds key)")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decide)

    i = sub.add_parser("inspect", help="summarize a CSV under a schema, or a report")
    i.add_argument("path")
    i.add_argument("--schema")
    i.add_argument("--out")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RefusedAudit as exc:
        print(f"error: {exc} (see {exc.recommendation})", file=sys.stderr)
    except (AuditError, OSError, json.JSONDecodeError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
