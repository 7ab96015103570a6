"""Run the bundled vehicle-registration fixture end to end.

Creates a project, imports the three fixture tables, resolves the two
decisions a human would face (the ambiguous "Targa" column and the missing
body-style concept), runs every phase and prints the artifacts plus the
rendered entity in English and Italian.

Usage: python3 scripts/demo_pipeline.py [--root DIR] [--keep]
"""

import argparse
import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from strata.config import ProjectConfig
from strata.project import Project

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "strata" / "fixtures"


def read(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def show_report(report) -> None:
    stats = " ".join(f"{k}={v}" for k, v in report.counts.items())
    state = "complete" if report.complete else "blocked"
    print(f"  {report.phase}: {state} ({stats})")
    for decision_id in report.pending:
        print(f"    pending {decision_id}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=Path, help="where to create the project")
    parser.add_argument("--keep", action="store_true",
                        help="leave the project directory behind")
    args = parser.parse_args()

    root = args.root or Path(tempfile.mkdtemp(prefix="strata-demo-"))
    project = Project.create(
        root / "vehicles", "vehicles", read("lexicon.lex"),
        ProjectConfig.from_text(read("project.conf")),
    )
    for name in ("car", "vettura", "vehicle"):
        dataset_id = project.import_dataset(read(f"{name}.csv"), read(f"{name}.meta"))
        print(f"imported {name}.csv as {dataset_id}")

    print("\nfirst pass: the engine disambiguates what it can")
    show_report(project.run_phase("leg"))

    print("\nresolving the two open sense decisions")
    view = project.submit_decision(
        "sense:d2:col:0", {"action": "choose", "concept": 22}
    )
    print(f"  {view['id']} -> {view['status']} (concept {view['chosen']})")
    view = project.submit_decision(
        "sense:d2:col:2",
        {"action": "enrich",
         "new_concept": {"gloss": "body style of a car", "pos": "noun",
                         "parent": 20, "lemma": "tipo di corpo", "language": "it"}},
    )
    print(f"  {view['id']} -> {view['status']} (new concept {view['chosen']})")

    show_report(project.run_phase("leg"))

    print("\nschema matching")
    report = project.run_phase("etg")
    show_report(report)
    for match_id in report.pending:
        view = project.submit_decision(match_id, {"action": "accept"})
        print(f"  accepted {view['id']}")
    show_report(project.run_phase("etg"))

    print("\nentity resolution")
    show_report(project.run_phase("eg"))

    for what, fmt in (("leg", "tsv"), ("etg", "ttl"), ("eg", "jsonld")):
        text = project.export(what, fmt)
        print(f"\n--- {what}.{fmt} ({len(text)} bytes) " + "-" * 30)
        print(text if what == "leg" else text[:600] + ("..." if len(text) > 600 else ""))

    for lang in ("en", "it"):
        print(f"\n--- rendered [{lang}] " + "-" * 40)
        print(project.render(lang), end="")

    if args.keep or args.root:
        print(f"\nproject kept at {project.root}")
    else:
        shutil.rmtree(root)
    return 0


if __name__ == "__main__":
    sys.exit(main())
