"""Boot an HTTP server pre-loaded with the vehicle-registration fixture.

The project is created with its datasets imported and the first phase run,
leaving the two sense decisions open — the state a reviewer would pick up
in the web client.  Point the review UI (or curl) at http://HOST:PORT.

Usage: python3 scripts/serve_fixture.py [--port 8000] [--host 127.0.0.1] [--root DIR]
"""

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import uvicorn

from strata.config import ProjectConfig
from strata.project import Project
from strata.server import create_app

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "strata" / "fixtures"


def read(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--root", type=Path,
                        help="server root (default: a fresh temp directory)")
    args = parser.parse_args()

    root = args.root or Path(tempfile.mkdtemp(prefix="strata-server-"))
    target = root / "vehicles"
    if target.exists():
        print(f"reusing existing project at {target}")
    else:
        project = Project.create(
            target, "vehicles", read("lexicon.lex"),
            ProjectConfig.from_text(read("project.conf")),
        )
        for name in ("car", "vettura", "vehicle"):
            project.import_dataset(read(f"{name}.csv"), read(f"{name}.meta"))
        report = project.run_phase("leg")
        print(f"fixture project at {target}: {len(report.pending)} open decisions")

    uvicorn.run(create_app(root), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
