from pathlib import Path

import pytest

from strata.config import ProjectConfig
from strata.lexicon import loads
from strata.project import Project

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "strata" / "fixtures"

# Minimal noun chain used by the similarity unit tests:
# entity(0) > object(10) > vehicle(11) > car(12), depths 1..4.
CHAIN_LEXICON = """\
C 10 noun - an inanimate thing
C 11 noun 10 a conveyance that transports people or objects
C 12 noun 11 a motor vehicle with four wheels
S 10 en object
S 11 en vehicle
S 12 en car
"""


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def chain():
    return loads(CHAIN_LEXICON)


@pytest.fixture
def fixture_resource():
    return loads(fixture_text("lexicon.lex"))


def make_project(root: Path, seed_golden_log: bool = False) -> Project:
    cfg = ProjectConfig.from_text(fixture_text("project.conf"))
    project = Project.create(root / "vehicles", "vehicles", fixture_text("lexicon.lex"), cfg)
    for name in ("car", "vettura", "vehicle"):
        project.import_dataset(fixture_text(f"{name}.csv"), fixture_text(f"{name}.meta"))
    if seed_golden_log:
        (project.root / "decisions.log").write_text(
            fixture_text("golden_decisions.jsonl"), encoding="utf-8"
        )
    return project


@pytest.fixture
def project(tmp_path):
    return make_project(tmp_path)


@pytest.fixture
def golden_project(tmp_path):
    """Fixture datasets plus the recorded decision log; phases run clean."""
    return make_project(tmp_path, seed_golden_log=True)
