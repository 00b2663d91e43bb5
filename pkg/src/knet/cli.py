"""Command-line interface: validate, infer, decide, consult, serve.

JSON results go to stdout so scripts can pipe them; diagnostics go to
stderr with a machine-parsable ``error:`` prefix.  Exit codes: 0 success,
1 validation failure, 2 usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import consultation, decision, inference, kbformat, model
from .errors import (
    KnetError,
    SchemaError,
    ValidationError,
    VersionError,
)
from .model import Network, NetworkKind, ValueNode

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

# Posteriors print with 7 significant digits: stable across platforms and
# well below the 1e-9 engine-agreement tolerance.
SIG_DIGITS = 7


def round_sig(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (SchemaError, VersionError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (KnetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knet",
        description="Build and consult belief/decision network knowledge bases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a knowledge-base file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("infer", help="posterior beliefs given evidence")
    p.add_argument("file")
    p.add_argument("--evidence", nargs="*", default=[], metavar="NODE=STATE")
    p.add_argument("--query", nargs="*", default=None, metavar="NODE")
    p.add_argument("--engine", choices=["auto", "oracle", "exact"], default="auto")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("decide", help="rank decision alternatives by expected utility")
    p.add_argument("file")
    p.add_argument("--evidence", nargs="*", default=[], metavar="NODE=STATE")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("consult", help="interactive consultation REPL")
    p.add_argument("file")
    p.set_defaults(func=_cmd_consult)

    p = sub.add_parser("serve", help="run the consultation HTTP service")
    p.add_argument("--kb-dir", required=True)
    p.add_argument("--port", type=int, default=8628)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--session-ttl", type=float, default=3600.0)
    p.add_argument("--ui-dir", default=None, help="serve static UI assets at /ui")
    p.set_defaults(func=_cmd_serve)
    return parser


def _cmd_validate(args) -> int:
    try:
        network = kbformat.parse_file(args.file)
    except ValidationError as exc:
        report = [
            {"rule": i.rule, "nodes": list(i.nodes), "detail": i.detail, "row": i.row}
            for i in exc.issues
        ]
        print(json.dumps({"valid": False, "issues": report}, separators=(",", ":")))
        return EXIT_INVALID
    issues = model.validate(network)
    print(json.dumps({"valid": not issues, "issues": []}, separators=(",", ":")))
    return EXIT_OK if not issues else EXIT_INVALID


def _parse_evidence(network: Network, pairs: list[str]) -> inference.Findings:
    findings: inference.Findings = {}
    for pair in pairs:
        node, sep, label = pair.partition("=")
        if not sep:
            raise ValueError(f"evidence must be NODE=STATE, got {pair!r}")
        if node not in network:
            raise KnetError(f"no node {node!r}")
        labels = consultation.node_labels(network, node)
        if label not in labels:
            raise KnetError(f"{label!r} is not a state of {node!r} (states: {list(labels)})")
        findings[node] = labels.index(label)
    return findings


def _beliefs_json(network: Network, beliefs: dict[str, tuple[float, ...]], query) -> str:
    if query is None:
        ids = sorted(beliefs)
    else:
        for nid in query:
            if nid not in beliefs:
                raise KnetError(f"no chance node {nid!r}")
        ids = list(query)
    doc = {
        nid: {
            label: round_sig(p)
            for label, p in zip(network.node(nid).states, beliefs[nid])
        }
        for nid in ids
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def _cmd_infer(args) -> int:
    network = kbformat.parse_file(args.file)
    findings = _parse_evidence(network, args.evidence)
    if args.engine == "oracle":
        result = inference.oracle_joint(network, findings)
    else:
        result = inference.infer(network, findings)
    print(_beliefs_json(network, result.beliefs, args.query))
    return EXIT_OK


def _recommendation_json(network: Network, rec: decision.Recommendation) -> str:
    def entry(ev: decision.EvaluatedDecision) -> dict:
        config = {
            nid: consultation.node_labels(network, nid)[alt]
            for nid, alt in sorted(ev.configuration.items())
        }
        return {
            "configuration": config,
            "expected_utility": None if ev.expected_utility is None else round_sig(ev.expected_utility),
            "normalized_score": None if ev.normalized_score is None else round_sig(ev.normalized_score),
            "feasible": ev.feasible,
        }

    ranking = [entry(ev) for ev in rec.ranking]
    doc = {"best": ranking[0], "ranking": ranking}
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def _cmd_decide(args) -> int:
    network = kbformat.parse_file(args.file)
    findings = _parse_evidence(network, args.evidence)
    rec = decision.recommend(network, findings)
    print(_recommendation_json(network, rec))
    return EXIT_OK


def _cmd_consult(args) -> int:
    network = kbformat.parse_file(args.file)
    session = consultation.new_session(network)
    print(f"consulting {network.name!r}; commands: assert NODE=STATE, retract NODE, "
          "beliefs [NODE], whatif NODE=STATE ..., recommend, history, export FILE, quit",
          file=sys.stderr)
    while True:
        try:
            print("> ", end="", file=sys.stderr, flush=True)
            line = input()
        except EOFError:
            return EXIT_OK
        try:
            if not _consult_command(network, session, line.strip()):
                return EXIT_OK
        except (KnetError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)


def _consult_command(network: Network, session: consultation.Session, line: str) -> bool:
    if not line:
        return True
    cmd, *rest = line.split()
    if cmd == "quit":
        return False
    if cmd == "assert":
        findings = _parse_evidence(network, rest)
        for node, state in findings.items():
            session.assert_finding(node, state)
        print(_beliefs_json(network, session.beliefs, None))
    elif cmd == "retract":
        for node in rest:
            session.retract_finding(node)
        print(_beliefs_json(network, session.beliefs, None))
    elif cmd == "beliefs":
        print(_beliefs_json(network, session.beliefs, rest or None))
    elif cmd == "whatif":
        view = session.what_if(_parse_evidence(network, rest))
        doc = json.loads(_beliefs_json(network, view.beliefs, None))
        if view.recommendation is not None:
            doc = {"beliefs": doc,
                   "recommendation": json.loads(_recommendation_json(network, view.recommendation))}
        print(json.dumps(doc, separators=(",", ":"), ensure_ascii=False))
    elif cmd == "recommend":
        print(_recommendation_json(network, session.get_recommendation()))
    elif cmd == "history":
        print(json.dumps(session.export()["events"], separators=(",", ":"), ensure_ascii=False))
    elif cmd == "export":
        if len(rest) != 1:
            raise ValueError("usage: export FILE")
        Path(rest[0]).write_text(
            json.dumps(session.export(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        print(json.dumps({"exported": rest[0]}, separators=(",", ":")))
    else:
        raise ValueError(f"unknown command {cmd!r}")
    return True


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.kb_dir, session_ttl=args.session_ttl, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


if __name__ == "__main__":
    entrypoint()
