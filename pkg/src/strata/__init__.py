"""Stratified data integration: lexicon-grounded LEG/ETG/EG pipeline."""

from .config import ProjectConfig
from .lexicon import LexicalResource, load_resource, loads
from .project import Project

__version__ = "0.1.0"

__all__ = [
    "LexicalResource",
    "Project",
    "ProjectConfig",
    "load_resource",
    "loads",
    "__version__",
]
