"""Command-line entry point.

Exit codes: 0 success, 1 user error (bad input, pending decisions,
dependency order), 2 broken internal invariant.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ProjectConfig
from .errors import InternalError, UserError
from .project import Project


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strata", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a project directory")
    p.add_argument("name")
    p.add_argument("--lexicon", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--root", type=Path, default=Path("."))

    p = sub.add_parser("import", help="add a dataset (CSV + metadata)")
    p.add_argument("csv", type=Path)
    p.add_argument("--meta", required=True, type=Path)
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("run", help="run a pipeline phase")
    p.add_argument("phase", choices=["leg", "etg", "eg"])
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("decisions", help="list decisions")
    p.add_argument("--pending", action="store_true")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("decide", help="resolve one decision")
    p.add_argument("id")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--choose", type=int, metavar="CONCEPT")
    group.add_argument("--accept", action="store_true")
    group.add_argument("--reject", action="store_true")
    group.add_argument("--enrich", metavar="JSON")
    p.add_argument("--override", action="store_true")
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("export", help="print a phase artifact")
    p.add_argument("--what", required=True, choices=["leg", "etg", "eg"])
    p.add_argument("--format", required=True, choices=["tsv", "ttl", "jsonld"])
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("render", help="print the entity graph in one language")
    p.add_argument("--lang", required=True)
    p.add_argument("--project", type=Path, default=Path("."))

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--root", type=Path, default=Path("."))

    return parser


def _cmd_init(args) -> None:
    config = None
    if args.config:
        config = ProjectConfig.from_text(args.config.read_text(encoding="utf-8"))
    project = Project.create(
        args.root / args.name, args.name, args.lexicon.read_text(encoding="utf-8"), config
    )
    print(f"initialized project {project.id} at {project.root}")


def _cmd_import(args) -> None:
    project = Project(args.project)
    dataset_id = project.import_dataset(
        args.csv.read_text(encoding="utf-8"), args.meta.read_text(encoding="utf-8")
    )
    print(dataset_id)


def _cmd_run(args) -> None:
    report = Project(args.project).run_phase(args.phase)
    stats = " ".join(f"{k}={v}" for k, v in report.counts.items())
    status = "complete" if report.complete else "blocked"
    print(f"phase {report.phase}: {status} ({stats})")
    for decision_id in report.pending:
        print(f"pending {decision_id}")


def _cmd_decisions(args) -> None:
    decisions = Project(args.project).list_decisions(pending_only=args.pending)
    if args.as_json:
        print(json.dumps(decisions, indent=2))
        return
    for d in decisions:
        line = f"{d['id']}\t{d['status']}"
        if d["chosen"] is not None:
            line += f"\tchosen={d['chosen']}"
        print(line)
        for cand in d["candidates"]:
            print(f"  {cand['concept']}\t{cand['score']:.4f}\t{cand['gloss']}")


def _cmd_decide(args) -> None:
    if args.choose is not None:
        resolution: dict = {"action": "choose", "concept": args.choose,
                            "override": args.override}
    elif args.accept:
        resolution = {"action": "accept"}
    elif args.reject:
        resolution = {"action": "reject"}
    else:
        try:
            payload = json.loads(args.enrich)
        except json.JSONDecodeError as exc:
            raise UserError(f"--enrich expects JSON: {exc}") from exc
        resolution = {"action": "enrich", **payload}
    view = Project(args.project).submit_decision(args.id, resolution)
    chosen = f" chosen={view['chosen']}" if view["chosen"] is not None else ""
    print(f"{view['id']} {view['status']}{chosen}")


def _cmd_export(args) -> None:
    sys.stdout.write(Project(args.project).export(args.what, args.format))


def _cmd_render(args) -> None:
    sys.stdout.write(Project(args.project).render(args.lang))


def _cmd_serve(args) -> None:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(args.root), host=args.host, port=args.port)


_COMMANDS = {
    "init": _cmd_init,
    "import": _cmd_import,
    "run": _cmd_run,
    "decisions": _cmd_decisions,
    "decide": _cmd_decide,
    "export": _cmd_export,
    "render": _cmd_render,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
