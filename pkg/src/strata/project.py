"""Project store and phase orchestration.

A project is a directory: the base lexicon and dataset files verbatim, a
JSON config, an append-only JSONL decision log, and one exported artifact
file per completed phase. Everything derived is a pure function of
(datasets, lexicon, config, decision log): phases recompute their state by
replaying the log against the base inputs, so a fresh clone of those files
reproduces every artifact byte for byte. Artifact writes go through a
write-new-then-rename dance and all mutating operations take a per-project
file lock.
"""

from __future__ import annotations

import datetime
import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from filelock import FileLock

from . import eg as eg_mod
from . import etg as etg_mod
from . import leg as leg_mod
from .config import ProjectConfig
from .errors import (
    DependencyError,
    InternalError,
    ParseError,
    PendingDecisionsError,
    UnknownIdError,
    UserError,
)
from .lexicon import LexicalResource, NewConcept, NewLexeme, loads as load_lexicon

PHASES = ("leg", "etg", "eg")

_ARTIFACT_FILES = {"leg": "leg.tsv", "etg": "etg.ttl", "eg": "eg.jsonld"}
_ARTIFACT_FORMATS = {"leg": "tsv", "etg": "ttl", "eg": "jsonld"}
_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class PhaseReport:
    phase: str
    complete: bool
    counts: dict[str, int]
    pending: list[str]

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "complete": self.complete,
            "counts": self.counts,
            "pending": self.pending,
        }


@dataclass
class _LegState:
    resource: LexicalResource
    datasets: list[leg_mod.Dataset]
    decisions: dict[str, leg_mod.SenseDecision]
    fresh_log: list[dict] = field(default_factory=list)

    @property
    def pending(self) -> list[str]:
        return sorted(d.id for d in self.decisions.values() if not d.resolved)


@dataclass
class _EtgState:
    leg: leg_mod.LEG
    classifications: list[etg_mod.ElementClassification]
    matches: list[etg_mod.MatchCandidate]
    auto_count: int = 0
    fresh_log: list[dict] = field(default_factory=list)

    @property
    def pending(self) -> list[str]:
        return sorted(m.id for m in self.matches if m.status == etg_mod.SUGGESTED)


@dataclass
class _EgState:
    candidates: list[eg_mod.EntityCandidate]
    merges: list[eg_mod.MergeCandidate]
    reserved: frozenset[str]
    auto_count: int = 0
    fresh_log: list[dict] = field(default_factory=list)

    @property
    def pending(self) -> list[str]:
        return sorted(m.id for m in self.merges if m.status == eg_mod.SUGGESTED)


class Project:
    """One project directory; all paths hang off ``self.root``."""

    def __init__(self, root: Path):
        self.root = Path(root)
        meta_path = self.root / "project.json"
        if not meta_path.is_file():
            raise UserError(f"{self.root} is not a strata project (no project.json)")
        self._meta = json.loads(meta_path.read_text(encoding="utf-8"))
        self.config = ProjectConfig.from_dict(self._meta["config"])

    # -- creation and layout ---------------------------------------------

    @classmethod
    def create(
        cls,
        root: Path,
        name: str,
        lexicon_text: str,
        config: ProjectConfig | None = None,
    ) -> "Project":
        root = Path(root)
        if not name or not _ID_RE.match(name):
            raise UserError(f"bad project name {name!r}")
        load_lexicon(lexicon_text)  # validate before touching the filesystem
        try:
            root.mkdir(parents=True, exist_ok=False)
        except FileExistsError:
            raise UserError(f"project directory {root} already exists") from None
        (root / "datasets").mkdir()
        (root / "artifacts").mkdir()
        (root / "lexicon.lex").write_text(lexicon_text, encoding="utf-8")
        (root / "decisions.log").touch()
        meta = {
            "name": name,
            "config": (config or ProjectConfig()).to_dict(),
            "datasets": [],
            "next_dataset": 1,
        }
        _atomic_write(root / "project.json", json.dumps(meta, indent=2) + "\n")
        return cls(root)

    @property
    def id(self) -> str:
        return self.root.name

    @property
    def name(self) -> str:
        return self._meta["name"]

    def _lock(self) -> FileLock:
        return FileLock(self.root / ".lock", timeout=30)

    def _save_meta(self) -> None:
        _atomic_write(self.root / "project.json", json.dumps(self._meta, indent=2) + "\n")

    def _artifact_path(self, phase: str) -> Path:
        return self.root / "artifacts" / _ARTIFACT_FILES[phase]

    def phase_complete(self, phase: str) -> bool:
        return self._artifact_path(phase).is_file()

    def summary(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "config": self.config.to_dict(),
            "datasets": [dict(d) for d in self._meta["datasets"]],
            "phases": {p: self.phase_complete(p) for p in PHASES},
        }

    # -- inputs -------------------------------------------------------------

    def _lexicon_text(self) -> str:
        return (self.root / "lexicon.lex").read_text(encoding="utf-8")

    def datasets(self) -> list[leg_mod.Dataset]:
        out = []
        for entry in self._meta["datasets"]:
            csv_text = (self.root / "datasets" / f"{entry['id']}.csv").read_text(encoding="utf-8")
            meta_text = (self.root / "datasets" / f"{entry['id']}.meta").read_text(encoding="utf-8")
            out.append(leg_mod.parse_dataset(entry["id"], csv_text, meta_text))
        return out

    def import_dataset(self, csv_text: str, meta_text: str) -> str:
        with self._lock():
            dataset_id = f"d{self._meta['next_dataset']}"
            dataset = leg_mod.parse_dataset(dataset_id, csv_text, meta_text)
            if any(e["name"] == dataset.name for e in self._meta["datasets"]):
                raise UserError(f"a dataset named {dataset.name!r} is already imported")
            (self.root / "datasets" / f"{dataset_id}.csv").write_text(csv_text, encoding="utf-8")
            (self.root / "datasets" / f"{dataset_id}.meta").write_text(meta_text, encoding="utf-8")
            self._meta["datasets"].append(
                {"id": dataset_id, "name": dataset.name, "language": dataset.language}
            )
            self._meta["next_dataset"] += 1
            self._save_meta()
            self._invalidate("leg")
            return dataset_id

    # -- decision log ----------------------------------------------------------

    def log_entries(self) -> list[dict]:
        out = []
        for lineno, line in enumerate(
            (self.root / "decisions.log").read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise InternalError(f"corrupt decision log at line {lineno}: {exc}") from exc
        return out

    def _append_log(self, entries: list[dict]) -> None:
        if not entries:
            return
        seq = len(self.log_entries())
        with open(self.root / "decisions.log", "a", encoding="utf-8") as fh:
            for entry in entries:
                seq += 1
                fh.write(json.dumps({"seq": seq, "timestamp": _utcnow(), **entry}) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _invalidate(self, from_phase: str) -> None:
        for phase in PHASES[PHASES.index(from_phase):]:
            path = self._artifact_path(phase)
            if path.exists():
                path.unlink()

    def _write_artifact(self, phase: str, text: str) -> bool:
        """Persist atomically; True when the bytes changed (downstream stale)."""
        path = self._artifact_path(phase)
        old = path.read_text(encoding="utf-8") if path.is_file() else None
        _atomic_write(path, text)
        return old != text

    # -- phase state (pure replays of the log) ---------------------------------

    def _leg_state(self, log: list[dict]) -> _LegState:
        resource = load_lexicon(self._lexicon_text())
        # Enrichments first, in log order: fresh ids are deterministic, and
        # disambiguation must see the same lexicon the decisions were made on.
        for entry in log:
            if entry["kind"] != "sense":
                continue
            res = entry["resolution"]
            if res.get("action") != "enrich":
                continue
            created = resource.enrich(_enrich_request(res), project=self.id)
            if created != res["concept"]:
                raise InternalError(
                    f"log replay mismatch: enrichment for {entry['id']} produced "
                    f"concept {created}, log recorded {res['concept']}"
                )

        datasets = self.datasets()
        decisions: dict[str, leg_mod.SenseDecision] = {}
        for dataset in datasets:
            terms = leg_mod.extract_terms(dataset)
            for term in terms:
                decision = leg_mod.disambiguate(term, terms, resource, self.config)
                decisions[decision.id] = decision

        state = _LegState(resource, datasets, decisions)
        for entry in log:
            if entry["kind"] != "sense" or entry["id"] not in decisions:
                continue
            decision = decisions[entry["id"]]
            res = entry["resolution"]
            if entry["actor"] == "auto":
                if not any(cid == res["concept"] for cid, _ in decision.candidates):
                    raise InternalError(
                        f"log replay mismatch: auto choice {res['concept']} is no "
                        f"longer a candidate of {entry['id']}"
                    )
                decisions[entry["id"]] = replace(
                    decision, status=leg_mod.AUTO, chosen=res["concept"]
                )
            elif res["action"] == "enrich":
                in_candidates = any(cid == res["concept"] for cid, _ in decision.candidates)
                status = leg_mod.CONFIRMED if in_candidates else leg_mod.OVERRIDDEN
                decisions[entry["id"]] = replace(decision, status=status, chosen=res["concept"])
            else:
                decisions[entry["id"]] = leg_mod.apply_sense_decision(
                    decision,
                    leg_mod.Choose(res["concept"], res.get("override", False)),
                    resource,
                )

        logged = {e["id"] for e in log if e["kind"] == "sense"}
        for decision in decisions.values():
            if decision.status == leg_mod.AUTO and decision.id not in logged:
                state.fresh_log.append(
                    {
                        "kind": "sense",
                        "id": decision.id,
                        "resolution": {"action": "choose", "concept": decision.chosen},
                        "actor": "auto",
                    }
                )
        return state

    def _etg_state(self, log: list[dict], leg_state: _LegState) -> _EtgState:
        if leg_state.pending:
            raise PendingDecisionsError(
                "the leg phase has unresolved decisions", leg_state.pending
            )
        leg = leg_mod.build_leg(list(leg_state.decisions.values()), leg_state.resource)
        classifications = etg_mod.classify_elements(leg, leg_state.datasets, self.config)
        matches = etg_mod.suggest_matches(classifications, leg_state.resource, self.config)
        by_id = {m.id: m for m in matches}
        auto_count = sum(1 for m in matches if m.status == etg_mod.ACCEPTED)

        logged: set[str] = set()
        for entry in log:
            if entry["kind"] != "match" or entry["id"] not in by_id:
                continue
            logged.add(entry["id"])
            match = by_id[entry["id"]]
            action = entry["resolution"]["action"]
            match.status = etg_mod.ACCEPTED if action == "accept" else etg_mod.REJECTED

        state = _EtgState(leg, classifications, matches, auto_count)
        for match in matches:
            if match.status == etg_mod.ACCEPTED and match.id not in logged:
                # accepted straight out of suggest_matches = identical concepts
                state.fresh_log.append(
                    {
                        "kind": "match",
                        "id": match.id,
                        "resolution": {"action": "accept"},
                        "actor": "auto",
                    }
                )
        return state

    def _eg_state(self, log: list[dict], leg_state: _LegState, etg: etg_mod.ETG) -> _EgState:
        candidates = eg_mod.detect_entities(leg_state.datasets, etg)
        merges = eg_mod.suggest_merges(candidates, etg, leg_state.resource, self.config)
        by_id = {m.id: m for m in merges}
        auto_count = sum(1 for m in merges if m.status == eg_mod.ACCEPTED)

        logged: set[str] = set()
        for entry in log:
            if entry["kind"] != "merge" or entry["id"] not in by_id:
                continue
            logged.add(entry["id"])
            merge = by_id[entry["id"]]
            action = entry["resolution"]["action"]
            merge.status = eg_mod.ACCEPTED if action == "accept" else eg_mod.REJECTED

        state = _EgState(
            candidates, merges, eg_mod.collect_reserved_ids(leg_state.datasets), auto_count
        )
        for merge in merges:
            if merge.status == eg_mod.ACCEPTED and merge.id not in logged:
                state.fresh_log.append(
                    {
                        "kind": "merge",
                        "id": merge.id,
                        "resolution": {"action": "accept"},
                        "actor": "auto",
                    }
                )
        return state

    def _built_etg(self, leg_state: _LegState, etg_state: _EtgState):
        if etg_state.pending:
            raise PendingDecisionsError(
                "the etg phase has unresolved matches", etg_state.pending
            )
        return etg_mod.build_etg(
            etg_state.classifications, etg_state.matches, etg_state.leg, leg_state.resource
        )

    # -- phase running ---------------------------------------------------------

    def run_phase(self, phase: str) -> PhaseReport:
        if phase not in PHASES:
            raise UserError(f"unknown phase {phase!r}")
        with self._lock():
            log = self.log_entries()
            if phase == "leg":
                return self._run_leg(log)
            if not self.phase_complete("leg"):
                raise DependencyError("the leg phase has not completed; run it first")
            leg_state = self._leg_state(log)
            if phase == "etg":
                return self._run_etg(log, leg_state)
            if not self.phase_complete("etg"):
                raise DependencyError("the etg phase has not completed; run it first")
            etg_state = self._etg_state(log, leg_state)
            etg = self._built_etg(leg_state, etg_state)
            return self._run_eg(log, leg_state, etg)

    def _run_leg(self, log: list[dict]) -> PhaseReport:
        state = self._leg_state(log)
        self._append_log(state.fresh_log)
        decisions = list(state.decisions.values())
        counts = {
            "terms": len(decisions),
            "auto": sum(1 for d in decisions if d.status == leg_mod.AUTO),
            "resolved": sum(1 for d in decisions if d.resolved),
            "pending": len(state.pending),
        }
        if state.pending:
            self._invalidate("leg")
            return PhaseReport("leg", False, counts, state.pending)
        leg = leg_mod.build_leg(decisions, state.resource)
        if self._write_artifact("leg", leg_mod.export_leg_sheet(leg)):
            self._invalidate("etg")
        return PhaseReport("leg", True, counts, [])

    def _run_etg(self, log: list[dict], leg_state: _LegState) -> PhaseReport:
        state = self._etg_state(log, leg_state)
        self._append_log(state.fresh_log)
        counts = {
            "matches": len(state.matches),
            "auto": state.auto_count,
            "accepted": sum(1 for m in state.matches if m.status == etg_mod.ACCEPTED),
            "pending": len(state.pending),
        }
        if state.pending:
            self._invalidate("etg")
            return PhaseReport("etg", False, counts, state.pending)
        etg = self._built_etg(leg_state, state)
        counts["etypes"] = len(etg.etypes)
        counts["properties"] = len(etg.properties)
        if self._write_artifact("etg", etg_mod.export_etg(etg, state.leg, leg_state.resource)):
            self._invalidate("eg")
        return PhaseReport("etg", True, counts, [])

    def _run_eg(self, log: list[dict], leg_state: _LegState, etg: etg_mod.ETG) -> PhaseReport:
        state = self._eg_state(log, leg_state, etg)
        self._append_log(state.fresh_log)
        counts = {
            "merges": len(state.merges),
            "auto": state.auto_count,
            "accepted": sum(1 for m in state.merges if m.status == eg_mod.ACCEPTED),
            "pending": len(state.pending),
        }
        if state.pending:
            self._invalidate("eg")
            return PhaseReport("eg", False, counts, state.pending)
        leg = leg_mod.build_leg(list(leg_state.decisions.values()), leg_state.resource)
        graph = eg_mod.assemble_eg(
            state.candidates,
            state.merges,
            etg,
            leg_state.resource,
            leg=leg,
            reserved=state.reserved,
        )
        counts["entities"] = len(graph.entities)
        self._write_artifact("eg", eg_mod.export_jsonld(graph, etg))
        return PhaseReport("eg", True, counts, [])

    # -- decisions ----------------------------------------------------------------

    def list_decisions(self, pending_only: bool = False) -> list[dict]:
        """Current decisions of every computable phase, ordered (phase, id)."""
        log = self.log_entries()
        out: list[dict] = []
        leg_state = self._leg_state(log)
        out += [
            _sense_view(d, leg_state.resource)
            for _, d in sorted(leg_state.decisions.items())
        ]
        if not leg_state.pending and self.phase_complete("leg"):
            etg_state = self._etg_state(log, leg_state)
            out += [_match_view(m) for m in etg_state.matches]
            if not etg_state.pending and self.phase_complete("etg"):
                etg = self._built_etg(leg_state, etg_state)
                eg_state = self._eg_state(log, leg_state, etg)
                out += [_merge_view(m) for m in eg_state.merges]
        if pending_only:
            out = [d for d in out if d["status"] in ("pending", "new-concept-requested",
                                                     "suggested")]
        return out

    def submit_decision(self, decision_id: str, resolution: dict) -> dict:
        with self._lock():
            log = self.log_entries()
            if decision_id.startswith("sense:"):
                return self._submit_sense(log, decision_id, resolution)
            if decision_id.startswith("match:"):
                return self._submit_match(log, decision_id, resolution)
            if decision_id.startswith("merge:"):
                return self._submit_merge(log, decision_id, resolution)
            raise UnknownIdError(f"unknown decision id {decision_id!r}")

    def _submit_sense(self, log: list[dict], decision_id: str, resolution: dict) -> dict:
        state = self._leg_state(log)
        if decision_id not in state.decisions:
            raise UnknownIdError(f"unknown decision id {decision_id!r}")
        decision = state.decisions[decision_id]
        action = resolution.get("action")
        if action == "choose":
            if not isinstance(resolution.get("concept"), int):
                raise UserError("choose needs an integer 'concept'")
            updated = leg_mod.apply_sense_decision(
                decision,
                leg_mod.Choose(resolution["concept"], bool(resolution.get("override"))),
                state.resource,
            )
            entry_res = {
                "action": "choose",
                "concept": updated.chosen,
                "override": bool(resolution.get("override")),
            }
        elif action == "enrich":
            request = _enrich_request(resolution)
            updated = leg_mod.apply_sense_decision(
                decision, leg_mod.EnrichAndChoose(request), state.resource, project=self.id
            )
            entry_res = {k: v for k, v in resolution.items() if k != "concept"}
            entry_res["concept"] = updated.chosen
        else:
            raise UserError(f"bad sense resolution action {action!r}")
        if updated == decision:
            return _sense_view(updated, state.resource)  # idempotent, nothing to log
        self._append_log(
            [{"kind": "sense", "id": decision_id, "resolution": entry_res, "actor": "user"}]
        )
        self._invalidate("leg")
        return _sense_view(updated, state.resource)

    def _submit_match(self, log: list[dict], decision_id: str, resolution: dict) -> dict:
        leg_state = self._leg_state(log)
        state = self._etg_state(log, leg_state)
        by_id = {m.id: m for m in state.matches}
        if decision_id not in by_id:
            raise UnknownIdError(f"unknown decision id {decision_id!r}")
        match = by_id[decision_id]
        action = resolution.get("action")
        if action not in ("accept", "reject"):
            raise UserError(f"bad match resolution action {action!r}")
        target = etg_mod.ACCEPTED if action == "accept" else etg_mod.REJECTED
        if match.status == target:
            return _match_view(match)
        if match.status != etg_mod.SUGGESTED:
            raise UserError(f"match {decision_id} is already {match.status}")
        if (
            target == etg_mod.ACCEPTED
            and match.role == "etype"
            and not leg_state.resource.comparable(match.left_concept, match.right_concept)
        ):
            raise UserError(
                f"cannot accept {decision_id}: concepts {match.left_concept} and "
                f"{match.right_concept} are not lexicon-comparable"
            )
        match.status = target
        self._append_log(
            [{"kind": "match", "id": decision_id, "resolution": {"action": action},
              "actor": "user"}]
        )
        self._invalidate("etg")
        return _match_view(match)

    def _submit_merge(self, log: list[dict], decision_id: str, resolution: dict) -> dict:
        leg_state = self._leg_state(log)
        etg_state = self._etg_state(log, leg_state)
        etg = self._built_etg(leg_state, etg_state)
        state = self._eg_state(log, leg_state, etg)
        by_id = {m.id: m for m in state.merges}
        if decision_id not in by_id:
            raise UnknownIdError(f"unknown decision id {decision_id!r}")
        merge = by_id[decision_id]
        action = resolution.get("action")
        if action not in ("accept", "reject"):
            raise UserError(f"bad merge resolution action {action!r}")
        target = eg_mod.ACCEPTED if action == "accept" else eg_mod.REJECTED
        if merge.status == target:
            return _merge_view(merge)
        if merge.status != eg_mod.SUGGESTED:
            raise UserError(f"merge {decision_id} is already {merge.status}")
        if target == eg_mod.ACCEPTED:
            by_ref = {c.ref: c for c in state.candidates}
            eg_mod.recognize_etype(
                [by_ref[merge.left], by_ref[merge.right]], etg, leg_state.resource
            )  # refuse merges that could never assemble
        merge.status = target
        self._append_log(
            [{"kind": "merge", "id": decision_id, "resolution": {"action": action},
              "actor": "user"}]
        )
        self._invalidate("eg")
        return _merge_view(merge)

    # -- exports ---------------------------------------------------------------

    def export(self, what: str, fmt: str) -> str:
        if what not in PHASES:
            raise UserError(f"unknown artifact {what!r}")
        if fmt != _ARTIFACT_FORMATS[what]:
            raise UserError(
                f"artifact {what!r} exports as {_ARTIFACT_FORMATS[what]!r}, not {fmt!r}"
            )
        path = self._artifact_path(what)
        if not path.is_file():
            raise DependencyError(f"the {what} phase has not completed; run it first")
        return path.read_text(encoding="utf-8")

    def render(self, language: str) -> str:
        if not self.phase_complete("eg"):
            raise DependencyError("the eg phase has not completed; run it first")
        log = self.log_entries()
        leg_state = self._leg_state(log)
        etg_state = self._etg_state(log, leg_state)
        etg = self._built_etg(leg_state, etg_state)
        eg_state = self._eg_state(log, leg_state, etg)
        graph = eg_mod.assemble_eg(
            eg_state.candidates,
            eg_state.merges,
            etg,
            leg_state.resource,
            leg=etg_state.leg,
            reserved=eg_state.reserved,
        )
        return eg_mod.render_eg(graph, etg_state.leg, leg_state.resource, language, etg)


# -- decision views -------------------------------------------------------------------


def _sense_view(decision: leg_mod.SenseDecision, resource: LexicalResource) -> dict:
    term = decision.term
    return {
        "id": decision.id,
        "kind": "sense",
        "phase": "leg",
        "status": decision.status,
        "subject": {
            "surface": term.surface,
            "lemma": term.lemma,
            "language": term.language,
            "dataset": term.dataset,
            "locus": term.locus.code(),
        },
        "candidates": [
            {
                "concept": cid,
                "score": round(score, 6),
                "gloss": resource.concept(cid).gloss,
            }
            for cid, score in decision.candidates
        ],
        "chosen": decision.chosen,
    }


def _match_view(match: etg_mod.MatchCandidate) -> dict:
    return {
        "id": match.id,
        "kind": "match",
        "phase": "etg",
        "status": match.status,
        "subject": {
            "role": match.role,
            "left": {"dataset": match.left[0], "element": match.left[1],
                     "concept": match.left_concept},
            "right": {"dataset": match.right[0], "element": match.right[1],
                      "concept": match.right_concept},
            "similarity": round(match.similarity, 6),
        },
        "candidates": [],
        "chosen": None,
    }


def _merge_view(merge: eg_mod.MergeCandidate) -> dict:
    return {
        "id": merge.id,
        "kind": "merge",
        "phase": "eg",
        "status": merge.status,
        "subject": {
            "left": merge.left,
            "right": merge.right,
            "evidence": {
                "kind": merge.evidence.kind,
                "property": merge.evidence.property,
                "value": merge.evidence.value,
                "score": round(merge.evidence.score, 6),
            },
        },
        "candidates": [],
        "chosen": None,
    }


def _enrich_request(resolution: dict) -> NewConcept | NewLexeme:
    if "new_concept" in resolution:
        spec = resolution["new_concept"]
        try:
            return NewConcept(
                gloss=spec["gloss"],
                pos=spec["pos"],
                parent=spec["parent"],
                lemma=spec["lemma"],
                language=spec["language"],
            )
        except KeyError as exc:
            raise UserError(f"new_concept payload missing {exc}") from exc
    if "new_lexeme" in resolution:
        spec = resolution["new_lexeme"]
        try:
            return NewLexeme(
                lemma=spec["lemma"], language=spec["language"], concept=spec["concept"]
            )
        except KeyError as exc:
            raise UserError(f"new_lexeme payload missing {exc}") from exc
    raise UserError("enrich resolution needs 'new_concept' or 'new_lexeme'")
