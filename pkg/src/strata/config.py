"""Project configuration: tunable thresholds and the key=value file format.

The same one-key-per-line format is reused for dataset metadata files.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import ParseError


def parse_keyvalue(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines (UTF-8, ``#`` comments) into a dict."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key = key.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = value.strip()
    return out


@dataclass(frozen=True)
class ProjectConfig:
    """Thresholds and defaults steering disambiguation, matching and merging."""

    default_language: str = "en"
    # WSD scoring: score = context_weight * context + rank_weight / (1 + rank).
    wsd_context_weight: float = 0.7
    wsd_rank_weight: float = 0.3
    # Auto-accept a sense when top >= threshold and (top - second) >= margin.
    wsd_auto_threshold: float = 0.6
    wsd_auto_margin: float = 0.2
    # Schema-match suggestions below this similarity are dropped.
    match_floor: float = 0.5
    # Entity-merge suggestions: value-overlap score floor and min shared props.
    merge_floor: float = 0.5
    merge_min_shared: int = 2
    # Concepts whose columns count as identifying when values are unique.
    identifying_concepts: frozenset[int] = frozenset()

    @classmethod
    def from_text(cls, text: str) -> "ProjectConfig":
        raw = parse_keyvalue(text)
        kwargs: dict = {}
        known = {f.name for f in fields(cls)}
        for key, value in raw.items():
            if key not in known:
                raise ParseError(f"unknown config key {key!r}")
            if key == "default_language":
                kwargs[key] = value
            elif key == "identifying_concepts":
                kwargs[key] = frozenset(int(v) for v in value.split(",") if v.strip())
            elif key == "merge_min_shared":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "default_language": self.default_language,
            "wsd_context_weight": self.wsd_context_weight,
            "wsd_rank_weight": self.wsd_rank_weight,
            "wsd_auto_threshold": self.wsd_auto_threshold,
            "wsd_auto_margin": self.wsd_auto_margin,
            "match_floor": self.match_floor,
            "merge_floor": self.merge_floor,
            "merge_min_shared": self.merge_min_shared,
            "identifying_concepts": sorted(self.identifying_concepts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectConfig":
        data = dict(data)
        data["identifying_concepts"] = frozenset(data.get("identifying_concepts", ()))
        return cls(**data)
