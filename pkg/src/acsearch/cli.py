"""Command-line surface: gen, extract, train, query, evaluate.

Configuration comes from an optional line-oriented ``key = value`` file; any
same-named command flag wins. Exit codes: 0 success, 1 usage, 2 bad input,
3 integrity failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from .evaluation import gen_queries, split_communities
from .extraction import ExtractionConfig, Query, extract
from .graph import GraphParseError, build_bipartite, ingest
from .model import LossWeights
from .modelio import ModelIntegrityError, load_model, save_model
from .pipeline import evaluate as run_evaluation
from .pipeline import fit, predict
from .synth import planted_partition_lines

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTEGRITY = 3


class InputError(ValueError):
    """Bad or missing input data (exit code 2)."""


@dataclass
class RunConfig:
    seed: int = 0
    tau: float = 0.8
    alpha: float = 0.1
    beta: float = 0.1
    latent_dim: int = 128
    layers: int = 2
    epochs: int = 300
    lr: float = 1e-3
    lr_decay: float = 0.5
    lr_interval: int = 100
    patience: int = 30
    dropout: float = 0.45
    clip: float = 0.01
    train_pairs: int = 150
    val_pairs: int = 100
    test_pairs: int = 100
    query_mode: str = "AFN"


def load_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"{path}:{line_no}: expected key = value")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from exc
    return values


def build_run_config(args):
    cfg = RunConfig()
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        caster = type(getattr(cfg, f.name))
        if f.name in file_values:
            try:
                setattr(cfg, f.name, caster(file_values[f.name]))
            except ValueError as exc:
                raise InputError(f"config key {f.name}: {exc}") from exc
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    return cfg


def _read_lines(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read {what}: {exc}") from exc


def load_graph(graph_path, attrs_path=None):
    edge_lines = _read_lines(graph_path, "graph file")
    attr_lines = _read_lines(attrs_path, "attribute file") if attrs_path else ()
    try:
        return ingest(edge_lines, attr_lines)
    except GraphParseError as exc:
        raise InputError(f"parse failure: {exc}") from exc


def load_communities(path, g):
    communities = []
    for line_no, raw in enumerate(_read_lines(path, "community file"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        members = set()
        for tok in line.split():
            if tok not in g.node_labels:
                raise InputError(f"community file line {line_no}: unknown node {tok!r}")
            members.add(g.node_labels[tok])
        communities.append(frozenset(members))
    if not communities:
        raise InputError("community file contains no communities")
    return communities


def parse_query(g, nodes_arg, attrs_arg):
    tokens = [t for t in (nodes_arg or "").replace(",", " ").split() if t]
    if not tokens:
        raise InputError("query nodes required")
    node_ids = []
    for tok in tokens:
        if tok not in g.node_labels:
            raise InputError(f"query node {tok!r} not in graph")
        node_ids.append(g.node_labels[tok])
    attr_ids = []
    for tok in [t for t in (attrs_arg or "").replace(",", " ").split() if t]:
        if tok in g.attr_vocab:
            attr_ids.append(g.attr_vocab[tok])
        else:
            print(f"warning: query attribute {tok!r} not in vocabulary",
                  file=sys.stderr)
    return Query(node_ids, attr_ids)


def cmd_gen(args):
    cfg = build_run_config(args)
    edges, attrs, comms = planted_partition_lines(
        n=args.n, m=args.m, p_in=args.p_in, p_out=args.p_out,
        noise_pool=args.noise_pool, seed=cfg.seed)
    import os

    os.makedirs(args.out, exist_ok=True)
    for name, lines in (("graph.txt", edges), ("attrs.txt", attrs),
                        ("communities.txt", comms)):
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"wrote {len(edges)} edges, {args.n} nodes, {args.m} communities to {args.out}")
    return 0


def cmd_extract(args):
    cfg = build_run_config(args)
    g = load_graph(args.graph, args.attrs)
    query = parse_query(g, args.nodes, args.query_attrs)
    res = extract(g, query, ExtractionConfig(tau=cfg.tau))
    tokens = sorted(g.node_tokens[v] for v in res.candidate.local_to_global)
    with open(args.out + ".nodes.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(tokens) + "\n")
    with open(args.out + ".trace.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["branch", "hop", "modularity"])
        for hop, mod in res.structure_trace:
            writer.writerow(["structure", hop, repr(mod)])
        for hop, mod in res.attribute_trace:
            writer.writerow(["attribute", hop, repr(mod)])
    print("\n".join(tokens))
    return 0


def _generate_datasets(g, communities, cfg):
    rng = np.random.default_rng(cfg.seed)
    train_c, val_c, test_c = split_communities(communities, rng)
    train_qs = gen_queries(train_c, cfg.train_pairs, cfg.query_mode, rng, g)
    val_qs = gen_queries(val_c, cfg.val_pairs, cfg.query_mode, rng, g)
    test_qs = gen_queries(test_c, cfg.test_pairs, cfg.query_mode, rng, g)
    return train_qs, val_qs, test_qs


def cmd_train(args):
    cfg = build_run_config(args)
    g = load_graph(args.graph, args.attrs)
    communities = load_communities(args.communities, g)
    train_qs, val_qs, _ = _generate_datasets(g, communities, cfg)
    weights = LossWeights(alpha=cfg.alpha, beta=cfg.beta, clip=cfg.clip)
    model, result, threshold = fit(
        g, list(train_qs.pairs), list(val_qs.pairs), tau=cfg.tau,
        latent_dim=cfg.latent_dim, layers=cfg.layers, dropout_rate=cfg.dropout,
        weights=weights, epochs=cfg.epochs, lr=cfg.lr, lr_decay=cfg.lr_decay,
        lr_interval=cfg.lr_interval, patience=cfg.patience, seed=cfg.seed)
    save_model(args.model, model, extra_config={
        "threshold": threshold, "tau": cfg.tau, "seed": cfg.seed,
        "query_mode": cfg.query_mode, "alpha": cfg.alpha, "beta": cfg.beta,
    })
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss", "val_f1"])
            for i, loss in enumerate(result.loss_trace):
                val = result.val_f1_trace[i] if i < len(result.val_f1_trace) else ""
                writer.writerow([i + 1, repr(loss), repr(val) if val != "" else ""])
    print(f"trained {result.stopped_epoch} epochs "
          f"(best epoch {result.best_epoch}), threshold {threshold}")
    return 0


def cmd_query(args):
    cfg = build_run_config(args)
    model, model_cfg = load_model(args.model)
    g = load_graph(args.graph, args.attrs)
    query = parse_query(g, args.nodes, args.query_attrs)
    tau = model_cfg.get("tau", cfg.tau)
    threshold = model_cfg.get("threshold", 0.5)
    community, score_map, _ = predict(model, g, query, tau, threshold)
    payload = {
        "nodes": sorted(g.node_tokens[v] for v in community),
        "scores": {g.node_tokens[v]: s for v, s in sorted(score_map.items())},
        "threshold": threshold,
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_evaluate(args):
    cfg = build_run_config(args)
    model, model_cfg = load_model(args.model)
    g = load_graph(args.graph, args.attrs)
    communities = load_communities(args.communities, g)
    if getattr(args, "seed", None) is None:
        cfg.seed = model_cfg.get("seed", cfg.seed)
    _, _, test_qs = _generate_datasets(g, communities, cfg)
    tau = model_cfg.get("tau", cfg.tau)
    threshold = model_cfg.get("threshold", 0.5)
    report, rows = run_evaluation(model, g, list(test_qs.pairs), tau, threshold)
    with open(args.out + ".metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key in sorted(report):
            writer.writerow([key, repr(report[key])])
    with open(args.out + ".metrics.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    with open(args.out + ".queries.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(json.dumps(report, sort_keys=True))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)


def build_parser():
    parser = _Parser(prog="acsearch",
                     description="Attributed community search engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a planted-partition benchmark")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--p-in", dest="p_in", type=float, default=0.2)
    p.add_argument("--p-out", dest="p_out", type=float, default=0.01)
    p.add_argument("--noise-pool", dest="noise_pool", type=int, default=50)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("extract", help="candidate subgraph extraction")
    _add_config_flags(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--attrs")
    p.add_argument("--nodes", help="comma-separated query node tokens")
    p.add_argument("--query-attrs", dest="query_attrs")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a community model")
    _add_config_flags(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--attrs")
    p.add_argument("--communities", required=True)
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--trace", help="loss trace CSV to write")
    for name, typ in (("alpha", float), ("beta", float), ("latent_dim", int),
                      ("layers", int), ("epochs", int), ("lr", float),
                      ("lr_decay", float), ("lr_interval", int),
                      ("patience", int), ("dropout", float), ("clip", float),
                      ("train_pairs", int), ("val_pairs", int)):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ)
    p.add_argument("--query-mode", dest="query_mode",
                   choices=["EmA", "AFC", "AFN"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("query", help="predict the community for one query")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--attrs")
    p.add_argument("--nodes")
    p.add_argument("--query-attrs", dest="query_attrs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="evaluate a model on test queries")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--attrs")
    p.add_argument("--communities", required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--test-pairs", dest="test_pairs", type=int)
    p.add_argument("--query-mode", dest="query_mode",
                   choices=["EmA", "AFC", "AFN"])
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
