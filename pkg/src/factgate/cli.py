"""Command-line interface.

Three subcommands: `validate` checks a graph against its constraint
manifest, `ask` gates a single question, and `eval` runs an experiment
condition over a QA dataset and prints the metrics table.

Exit codes are a stable contract:
  0  answer emitted / run succeeded / graph conforms
  1  graph does not conform
  2  input or configuration error
  3  the gate abstained (a successful outcome, distinct from errors)
  4  generator (upstream) failure
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .constraints import ConstraintSet, ManifestError, parse_manifest, validate_graph
from .evaluation import (
    Condition,
    DatasetError,
    DuplicateId,
    compute_metrics,
    constant_factory,
    load_dataset,
    mock_factory,
    read_result_log,
    render_report,
    run_condition,
    write_result_log,
)
from .extraction import Lexicon, PredicateRule, RuleError, build_lexicon, parse_rules
from .gate import Verdict, decision_to_json, run_pipeline
from .generators import (
    GeneratorConfig,
    GeneratorError,
    HttpGenerator,
    MockBehavior,
    MockMode,
    mock_generator,
)
from .kg import Graph, Iri, ParseError, parse_ntriples

EXIT_OK = 0
EXIT_NONCONFORMING = 1
EXIT_INPUT_ERROR = 2
EXIT_ABSTAINED = 3
EXIT_GENERATOR_FAILURE = 4


class CliError(Exception):
    """Input or configuration problem; maps to exit code 2."""


@dataclass
class RunConfig:
    graph: Graph
    constraints: ConstraintSet
    rules: list[PredicateRule]
    lexicon: Lexicon
    max_hops: int
    abstain_on_no_claims: bool


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {what} {path!r}: {exc}") from exc


def _load_graph(path: str) -> Graph:
    try:
        return parse_ntriples(_read_text(path, "graph"))
    except ParseError as exc:
        raise CliError(f"graph {path!r}: {exc}") from exc


def _load_constraints(path: str) -> ConstraintSet:
    try:
        return parse_manifest(_read_text(path, "constraint manifest"))
    except ManifestError as exc:
        raise CliError(f"constraints {path!r}: {exc}") from exc


def _load_rules(path: str) -> list[PredicateRule]:
    try:
        return parse_rules(_read_text(path, "rule file"))
    except RuleError as exc:
        raise CliError(f"rules {path!r}: {exc}") from exc


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    graph = _load_graph(args.graph)
    lexicon = build_lexicon(graph, [Iri(p) for p in args.label_predicate])
    return RunConfig(
        graph=graph,
        constraints=_load_constraints(args.constraints),
        rules=_load_rules(args.rules),
        lexicon=lexicon,
        max_hops=args.max_hops,
        abstain_on_no_claims=(args.no_claims == "abstain"),
    )


def _mock_behavior(args: argparse.Namespace) -> MockBehavior:
    return MockBehavior(
        mode=MockMode(args.mock_mode),
        p_correct=args.p_correct,
        p_hallucinate=args.p_hallucinate,
        seed=args.seed,
    )


def _http_generator(args: argparse.Namespace) -> HttpGenerator:
    if not args.endpoint:
        raise CliError("--endpoint is required with --generator http")
    config = GeneratorConfig(
        endpoint_url=args.endpoint,
        model_name=args.model,
        api_key_env=args.api_key_env,
        timeout=args.timeout,
        max_retries=args.retries,
    )
    return HttpGenerator(config)


# --- subcommands -------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    graph = _load_graph(args.graph)
    constraints = _load_constraints(args.constraints)
    report = validate_graph(graph, constraints)
    print(graph.stats_line())
    print(f"conforms={'true' if report.conforms else 'false'}")
    for v in report.violations:
        print(
            f"violation constraint={v.constraint_id} focus=<{v.focus.value}> "
            f"message={v.message}"
        )
    return EXIT_OK if report.conforms else EXIT_NONCONFORMING


def cmd_ask(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    if args.generator == "http":
        generator = _http_generator(args)
    else:
        behavior = _mock_behavior(args)
        if behavior.mode is not MockMode.ECHO_CONTEXT and args.answer is None:
            raise CliError(f"--answer is required with the {behavior.mode.value} mock")
        generator = mock_generator(behavior, answer_key=args.answer, rules=config.rules)
    try:
        decision = run_pipeline(
            args.question,
            config.graph,
            config.constraints,
            generator,
            config.lexicon,
            config.rules,
            max_hops=config.max_hops,
            abstain_on_no_claims=config.abstain_on_no_claims,
        )
    except GeneratorError as exc:
        print(f"generator failure: {exc}", file=sys.stderr)
        return EXIT_GENERATOR_FAILURE
    print(decision_to_json(args.question, decision))
    return EXIT_OK if decision.verdict is Verdict.ANSWER else EXIT_ABSTAINED


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    try:
        dataset = load_dataset(args.dataset)
    except OSError as exc:
        raise CliError(f"cannot read dataset {args.dataset!r}: {exc}") from exc
    except (DatasetError, DuplicateId) as exc:
        raise CliError(f"dataset {args.dataset!r}: {exc}") from exc
    condition = Condition(args.condition.upper())
    if args.from_log:
        try:
            records = read_result_log(args.from_log)
        except (OSError, DatasetError) as exc:
            raise CliError(f"result log {args.from_log!r}: {exc}") from exc
    else:
        if args.generator == "http":
            factory = constant_factory(_http_generator(args))
        else:
            factory = mock_factory(_mock_behavior(args), rules=config.rules)
        records = run_condition(
            condition,
            dataset,
            config.graph,
            config.constraints,
            factory,
            config.lexicon,
            config.rules,
            max_hops=config.max_hops,
            jobs=args.jobs,
            abstain_on_no_claims=config.abstain_on_no_claims,
        )
    if args.output:
        write_result_log(records, args.output)
    metrics = compute_metrics(dataset, records)
    print(render_report([(condition.value, metrics)]), end="")
    return EXIT_OK


# --- argument plumbing ----------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, rules: bool) -> None:
    parser.add_argument("--graph", required=True, help="N-Triples graph file")
    parser.add_argument(
        "--constraints", required=True, help="constraint manifest file"
    )
    if rules:
        parser.add_argument("--rules", required=True, help="predicate rule file")
        parser.add_argument(
            "--label-predicate",
            action="append",
            default=None,
            help="label predicate IRI for the lexicon (repeatable; default: label)",
        )
        parser.add_argument("--max-hops", type=int, default=None)
        parser.add_argument(
            "--no-claims",
            choices=("abstain", "answer"),
            default=None,
            help="policy when a response contains no extractable claims",
        )
        parser.add_argument(
            "--generator", choices=("mock", "http"), default=None
        )
        parser.add_argument(
            "--mock-mode", choices=("echo", "fixed", "noisy"), default=None
        )
        parser.add_argument("--answer", default=None, help="mock answer sentence")
        parser.add_argument("--p-correct", type=float, default=None)
        parser.add_argument("--p-hallucinate", type=float, default=None)
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--endpoint", default=None, help="chat completion URL")
        parser.add_argument("--model", default=None)
        parser.add_argument("--api-key-env", default=None)
        parser.add_argument("--timeout", type=float, default=None)
        parser.add_argument("--retries", type=int, default=None)


_DEFAULTS = {
    "label_predicate": ["label"],
    "max_hops": 3,
    "no_claims": "abstain",
    "generator": "mock",
    "mock_mode": "echo",
    "p_correct": 0.0,
    "p_hallucinate": 0.0,
    "seed": 0,
    "model": "",
    "api_key_env": "FACTGATE_API_KEY",
    "timeout": 30.0,
    "retries": 2,
    "jobs": 1,
}


def _apply_config_file(args: argparse.Namespace) -> None:
    """Layer settings: flags beat the config file, which beats defaults."""
    file_values: dict = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(_read_text(args.config, "config file"))
        except json.JSONDecodeError as exc:
            raise CliError(f"config {args.config!r}: bad JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise CliError(f"config {args.config!r}: expected a JSON object")
    for key, value in file_values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise CliError(f"config {args.config!r}: unknown setting {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factgate",
        description="Validate model output against a knowledge graph: "
        "answer when every claim is licensed, abstain otherwise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser(
        "validate", help="check a graph against its constraint manifest"
    )
    _add_common(p_validate, rules=False)
    p_validate.set_defaults(func=cmd_validate)

    p_ask = sub.add_parser("ask", help="gate a single question")
    _add_common(p_ask, rules=True)
    p_ask.add_argument("--config", default=None, help="JSON config file")
    p_ask.add_argument("question")
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser(
        "eval", help="run an experiment condition over a QA dataset"
    )
    _add_common(p_eval, rules=True)
    p_eval.add_argument("--config", default=None, help="JSON config file")
    p_eval.add_argument("--dataset", required=True, help="QA JSONL file")
    p_eval.add_argument(
        "--condition",
        required=True,
        choices=("baseline", "context_only", "oracle"),
    )
    p_eval.add_argument("--jobs", type=int, default=None)
    p_eval.add_argument("--output", default=None, help="result log JSONL path")
    p_eval.add_argument(
        "--from-log", default=None, help="re-score an existing result log"
    )
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT_ERROR if exc.code else EXIT_OK
    try:
        _apply_config_file(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
