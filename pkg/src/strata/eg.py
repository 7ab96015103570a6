"""Phase 3: entity detection, deduplication, Entity Graph assembly.

Each data row starts as one entity candidate (row-as-entity). Equal values on
an identifying property put rows in one block; blocked pairs with
lexicon-comparable etypes are auto-accepted merges, everything else needs a
human. Accepted merges close into connected components, one entity per
component, with fresh "#<n>" ids guaranteed never to collide with any input
cell. Conflicting values are kept side by side, each with cell provenance;
equal values (numeric equality for numbers, case-folded for strings) collapse
into one value with several provenance records.
"""

from __future__ import annotations

import datetime
import json
import re
import unicodedata
from dataclasses import dataclass, field
from decimal import Decimal

from .config import ProjectConfig
from .errors import ParseError, UserError
from .etg import ETG
from .leg import LEG, Dataset
from .lexicon import LexicalResource

SUGGESTED = "suggested"
ACCEPTED = "accepted"
REJECTED = "rejected"

_INT_RE = re.compile(r"^[+-]?\d+$")
_DEC_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")
_DMY_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")


class IncomparableEtypesError(UserError):
    pass


@dataclass(frozen=True)
class PropertyValue:
    property: str
    raw: str
    normalized: object
    range: str
    source: str  # "dataset:row:col"
    warning: bool = False  # normalization failed, value kept raw-only

    def key(self) -> object:
        """Comparison form: case-folded for strings, typed value otherwise."""
        if isinstance(self.normalized, str):
            return self.normalized.casefold()
        return self.normalized


@dataclass
class EntityCandidate:
    ref: str  # "dataset:row" (or an existing entity id when extending)
    dataset: str
    row: int
    etype: str
    values: list[PropertyValue]


@dataclass(frozen=True)
class MergeEvidence:
    kind: str  # "identifying-match" | "similarity"
    property: str | None = None
    value: str | None = None
    score: float = 1.0


@dataclass
class MergeCandidate:
    id: str
    left: str
    right: str
    evidence: MergeEvidence
    status: str = SUGGESTED

    @property
    def similarity(self) -> float:
        return self.evidence.score


@dataclass
class Value:
    normalized: object
    range: str
    raw: str
    sources: list[str]
    warning: bool = False

    def key(self) -> object:
        if isinstance(self.normalized, str):
            return self.normalized.casefold()
        return self.normalized


@dataclass
class Entity:
    id: str
    etype: str
    members: list[str]
    values: dict[str, list[Value]]


@dataclass
class EG:
    entities: dict[str, Entity] = field(default_factory=dict)
    etg: ETG | None = None
    leg: LEG | None = None


# -- value normalization -------------------------------------------------------


def normalize_value(raw: str, range_: str) -> object:
    """Typed value for a cell under a property range; ValueError on mismatch."""
    text = unicodedata.normalize("NFC", raw).strip()
    if range_ == "integer":
        if not _INT_RE.match(text):
            raise ValueError(f"not an integer: {raw!r}")
        return int(text)
    if range_ == "decimal":
        if not _DEC_RE.match(text):
            raise ValueError(f"not a decimal: {raw!r}")
        return Decimal(text)
    if range_ == "date":
        try:
            return datetime.date.fromisoformat(text).isoformat()
        except ValueError:
            pass
        m = _DMY_RE.match(text)
        if m:
            day, month, year = (int(g) for g in m.groups())
            return datetime.date(year, month, day).isoformat()
        raise ValueError(f"not a date: {raw!r}")
    if range_ == "boolean":
        low = text.casefold()
        if low in ("true", "false"):
            return low == "true"
        raise ValueError(f"not a boolean: {raw!r}")
    return text  # strings stay case-preserved; comparison is case-folded


def canonical_str(value: object) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


# -- detection ------------------------------------------------------------------


def detect_entities(datasets: list[Dataset], etg: ETG) -> list[EntityCandidate]:
    """One candidate per data row; non-empty cells become typed values.

    Cells that fail normalization still appear, raw-only with a warning flag,
    so nothing silently vanishes between the inputs and the graph.
    """
    out = []
    for dataset in sorted(datasets, key=lambda d: d.id):
        etype = etg.etype_for_dataset(dataset.id)
        props = {i: etg.property_for(dataset.id, i) for i in range(len(dataset.columns))}
        for r, row in enumerate(dataset.rows):
            values = []
            for c, raw in enumerate(row):
                if not raw.strip():
                    continue
                prop = props[c]
                rng = prop.range if isinstance(prop.range, str) else "string"
                source = f"{dataset.id}:{r}:{c}"
                try:
                    normalized = normalize_value(raw, rng)
                    warned = False
                except ValueError:
                    normalized = unicodedata.normalize("NFC", raw).strip()
                    warned = True
                values.append(PropertyValue(prop.id, raw, normalized, rng, source, warned))
            out.append(EntityCandidate(f"{dataset.id}:{r}", dataset.id, r, etype.id, values))
    return out


def recognize_etype(
    candidates: list[EntityCandidate], etg: ETG, resource: LexicalResource
) -> str:
    """Most specific etype among the members; members must be comparable."""
    if not candidates:
        raise UserError("cannot recognize the etype of an empty member set")
    etypes = sorted({c.etype for c in candidates})
    concepts = [etg.etypes[e].concept for e in etypes]
    for i in range(len(concepts)):
        for j in range(i + 1, len(concepts)):
            if not resource.comparable(concepts[i], concepts[j]):
                raise IncomparableEtypesError(
                    f"etypes {etypes[i]} and {etypes[j]} have lexicon-incomparable "
                    f"concepts {concepts[i]} and {concepts[j]}"
                )
    return max(
        etypes, key=lambda e: (resource.depth(etg.etypes[e].concept), -etg.etypes[e].concept)
    )


# -- merge suggestion -----------------------------------------------------------


def merge_id(left: str, right: str) -> str:
    return f"merge:{left}|{right}"


def _ref_key(ref: str) -> tuple[str, int]:
    if ref.startswith("#") and ref[1:].isdigit():
        return "", int(ref[1:])
    dataset, row = ref.rsplit(":", 1)
    return dataset, int(row)


def _entity_as_candidate(entity: Entity) -> EntityCandidate:
    values = [
        PropertyValue(pid, v.raw, v.normalized, v.range, v.sources[0], v.warning)
        for pid, vals in entity.values.items()
        for v in vals
    ]
    return EntityCandidate(entity.id, "", -1, entity.etype, values)


def value_overlap(a: EntityCandidate, b: EntityCandidate) -> tuple[int, int]:
    """(# shared properties, # shared properties with an equal value)."""
    av: dict[str, set] = {}
    bv: dict[str, set] = {}
    for v in a.values:
        av.setdefault(v.property, set()).add(v.key())
    for v in b.values:
        bv.setdefault(v.property, set()).add(v.key())
    shared = set(av) & set(bv)
    equal = sum(1 for p in shared if av[p] & bv[p])
    return len(shared), equal


def suggest_merges(
    candidates: list[EntityCandidate],
    etg: ETG,
    resource: LexicalResource,
    config: ProjectConfig | None = None,
    existing: EG | None = None,
) -> list[MergeCandidate]:
    cfg = config or ProjectConfig()
    pool = list(candidates)
    if existing is not None:
        pool += [_entity_as_candidate(e) for e in existing.entities.values()]
    out: list[MergeCandidate] = []
    paired: set[tuple[str, str]] = set()

    def ordered(a: EntityCandidate, b: EntityCandidate) -> tuple[str, str]:
        if _ref_key(a.ref) <= _ref_key(b.ref):
            return a.ref, b.ref
        return b.ref, a.ref

    # Blocking: rows sharing a normalized identifying value. Adjacent pairs in
    # each block become merge candidates; the remaining within-block pairs are
    # reached transitively through those, so the similarity pass skips them too.
    identifying = sorted(p.id for p in etg.properties.values() if p.identifying)
    for pid in identifying:
        blocks: dict[str, list[EntityCandidate]] = {}
        for cand in pool:
            for v in cand.values:
                if v.property == pid and not v.warning:
                    blocks.setdefault(canonical_str(v.key()), []).append(cand)
        for key in sorted(blocks):
            members = sorted(blocks[key], key=lambda c: _ref_key(c.ref))
            chain = []
            for a, b in zip(members, members[1:]):
                pair = ordered(a, b)
                if pair[0] != pair[1] and pair not in paired:
                    chain.append((a, b, pair))
            for i, a in enumerate(members):
                for b in members[i + 1 :]:
                    paired.add(ordered(a, b))
            for a, b, pair in chain:
                comparable = resource.comparable(
                    etg.etypes[a.etype].concept, etg.etypes[b.etype].concept
                )
                out.append(
                    MergeCandidate(
                        merge_id(*pair),
                        pair[0],
                        pair[1],
                        MergeEvidence("identifying-match", property=pid, value=key),
                        ACCEPTED if comparable else SUGGESTED,
                    )
                )

    # Value-overlap similarity: suggestions only, never auto-accepted.
    pool.sort(key=lambda c: _ref_key(c.ref))
    scored = []
    for i in range(len(pool)):
        for j in range(i + 1, len(pool)):
            a, b = pool[i], pool[j]
            pair = ordered(a, b)
            if pair in paired:
                continue
            shared, equal = value_overlap(a, b)
            if shared < cfg.merge_min_shared:
                continue
            score = equal / shared
            if score >= cfg.merge_floor:
                scored.append(
                    MergeCandidate(
                        merge_id(*pair),
                        pair[0],
                        pair[1],
                        MergeEvidence("similarity", score=score),
                    )
                )
    scored.sort(key=lambda m: (-m.similarity, _ref_key(m.left), _ref_key(m.right)))
    return out + scored


# -- assembly -------------------------------------------------------------------


def collect_reserved_ids(datasets: list[Dataset]) -> frozenset[str]:
    return frozenset(
        cell.strip() for d in datasets for row in d.rows for cell in row if cell.strip()
    )


def assemble_eg(
    candidates: list[EntityCandidate],
    merges: list[MergeCandidate],
    etg: ETG,
    resource: LexicalResource,
    leg: LEG | None = None,
    existing: EG | None = None,
    reserved: frozenset[str] = frozenset(),
) -> EG:
    """Close accepted merges into entities.

    Fresh ids continue past any existing entity's number and skip every
    string in `reserved` (the input cell values), so an id can never
    collide with either. Components containing an existing entity keep its
    id — the smallest one, when a merge joins several.
    """
    unresolved = sorted(m.id for m in merges if m.status == SUGGESTED)
    if unresolved:
        from .errors import PendingDecisionsError

        raise PendingDecisionsError("cannot assemble EG with unresolved merges", unresolved)

    pool = {c.ref: c for c in candidates}
    if existing is not None:
        for entity in existing.entities.values():
            pool[entity.id] = _entity_as_candidate(entity)
    parent = {ref: ref for ref in pool}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    for m in merges:
        if m.status != ACCEPTED:
            continue
        if m.left not in parent or m.right not in parent:
            raise UserError(f"merge {m.id} references unknown rows")
        ra, rb = find(m.left), find(m.right)
        if ra != rb:
            parent[max(ra, rb, key=_ref_key)] = min(ra, rb, key=_ref_key)

    groups: dict[str, list[str]] = {}
    for ref in pool:
        groups.setdefault(find(ref), []).append(ref)

    taken = set(existing.entities) if existing else set()
    counter = max((int(e[1:]) for e in taken), default=0)

    eg = EG(etg=etg, leg=leg if leg is not None else (existing.leg if existing else None))
    for root in sorted(groups, key=_ref_key):
        members = sorted(groups[root], key=_ref_key)
        prior = [r for r in members if r in (existing.entities if existing else {})]
        if prior:
            eid = min(prior, key=_ref_key)
        else:
            counter += 1
            while f"#{counter}" in reserved or f"#{counter}" in taken:
                counter += 1
            eid = f"#{counter}"
        assert eid not in eg.entities

        etype = recognize_etype([pool[r] for r in members], etg, resource)
        row_members: list[str] = []
        for r in members:
            if prior and r in prior:
                row_members += existing.entities[r].members  # type: ignore[union-attr]
            elif not r.startswith("#"):
                row_members.append(r)
        cells = [v for r in members for v in pool[r].values]
        cells.sort(key=lambda v: tuple(
            int(p) if p.isdigit() else p for p in v.source.split(":")
        ))
        values: dict[str, list[Value]] = {}
        for cell in cells:
            bucket = values.setdefault(cell.property, [])
            for val in bucket:
                if val.key() == cell.key():
                    if cell.source not in val.sources:
                        val.sources.append(cell.source)
                    break
            else:
                values[cell.property].append(
                    Value(cell.normalized, cell.range, cell.raw, [cell.source], cell.warning)
                )
        eg.entities[eid] = Entity(eid, etype, sorted(set(row_members), key=_ref_key), values)
    return eg


# -- JSON-LD export / import -----------------------------------------------------

_XSD_OF_RANGE = {
    "integer": "xsd:integer",
    "decimal": "xsd:decimal",
    "date": "xsd:date",
    "boolean": "xsd:boolean",
}
_RANGE_OF_XSD = {v: k for k, v in _XSD_OF_RANGE.items()}


def _entity_number(eid: str) -> int:
    if not (eid.startswith("#") and eid[1:].isdigit()):
        raise UserError(f"malformed entity id: {eid!r}")
    return int(eid[1:])


def _source_obj(source: str) -> dict:
    dataset, row, col = source.rsplit(":", 2)
    return {"dataset": dataset, "row": int(row), "column": int(col)}


def _member_obj(ref: str) -> dict:
    dataset, row = ref.rsplit(":", 1)
    return {"dataset": dataset, "row": int(row)}


def export_jsonld(eg: EG, etg: ETG | None = None) -> str:
    """Deterministic JSON-LD document; import(export(eg)) is isomorphic."""
    etg = etg or eg.etg
    if etg is None:
        raise UserError("EG has no ETG attached; pass one explicitly")
    used_etypes = sorted({e.etype for e in eg.entities.values()})
    used_props = sorted({p for e in eg.entities.values() for p in e.values})
    context: dict[str, object] = {
        "sm": "urn:strata:meta:",
        "xsd": "http://www.w3.org/2001/XMLSchema#",
    }
    for el in used_etypes:
        context[el] = f"urn:strata:c:{etg.etypes[el].concept}"
    for el in used_props:
        context[el] = f"urn:strata:c:{etg.properties[el].concept}"

    graph = []
    for eid in sorted(eg.entities, key=_entity_number):
        entity = eg.entities[eid]
        node: dict[str, object] = {
            "@id": f"urn:strata:e:{_entity_number(eid)}",
            "@type": entity.etype,
            "sm:members": [_member_obj(r) for r in sorted(entity.members, key=_ref_key)],
        }
        for pid in sorted(entity.values):
            vals = []
            for value in entity.values[pid]:
                obj: dict[str, object] = {}
                if value.warning:
                    obj["@value"] = value.normalized
                    obj["sm:warning"] = True
                    obj["sm:range"] = value.range
                elif value.range == "decimal":
                    obj["@value"] = canonical_str(value.normalized)
                    obj["@type"] = _XSD_OF_RANGE[value.range]
                elif value.range in _XSD_OF_RANGE:
                    obj["@value"] = value.normalized
                    obj["@type"] = _XSD_OF_RANGE[value.range]
                else:
                    obj["@value"] = value.normalized
                obj["sm:raw"] = value.raw
                obj["sm:provenance"] = [
                    _source_obj(s)
                    for s in sorted(
                        value.sources,
                        key=lambda s: tuple(
                            int(p) if p.isdigit() else p for p in s.split(":")
                        ),
                    )
                ]
                vals.append(obj)
            node[pid] = vals
        graph.append(node)
    doc = {"@context": context, "@graph": graph}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def import_jsonld(text: str) -> EG:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "@graph" not in doc:
        raise ParseError("missing @graph")
    eg = EG()
    for node in doc["@graph"]:
        try:
            iri = node["@id"]
            eid = "#" + iri.rsplit(":", 1)[1]
            _entity_number(eid)
            etype = node["@type"]
            members = [f"{m['dataset']}:{m['row']}" for m in node["sm:members"]]
            values: dict[str, list[Value]] = {}
            for pid, vals in node.items():
                if pid.startswith("@") or pid.startswith("sm:"):
                    continue
                out = []
                for obj in vals:
                    warned = bool(obj.get("sm:warning", False))
                    if warned:
                        rng = obj.get("sm:range", "string")
                        normalized: object = obj["@value"]
                    else:
                        rng = _RANGE_OF_XSD.get(obj.get("@type", ""), "string")
                        raw_value = obj["@value"]
                        if rng == "integer":
                            normalized = int(raw_value)
                        elif rng == "decimal":
                            normalized = Decimal(str(raw_value))
                        elif rng == "boolean":
                            normalized = bool(raw_value)
                        else:
                            normalized = raw_value
                    sources = [
                        f"{p['dataset']}:{p['row']}:{p['column']}"
                        for p in obj["sm:provenance"]
                    ]
                    out.append(Value(normalized, rng, obj["sm:raw"], sources, warned))
                values[pid] = out
            eg.entities[eid] = Entity(eid, etype, members, values)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"malformed entity node: {exc}") from exc
    return eg


# -- rendering -------------------------------------------------------------------


def _annotation_surface(leg: LEG, concept: int) -> str | None:
    terms = sorted(
        leg.annotations.get(concept, ()), key=lambda t: (t.dataset, t.locus.sort_key())
    )
    return terms[0].surface if terms else None


def _label(
    concept: int, language: str, resource: LexicalResource, leg: LEG | None
) -> tuple[str, bool]:
    """Rank-0 lemma in the target language, else a flagged annotation term."""
    lemma = resource.rank0_lemma(concept, language)
    if lemma is not None:
        return lemma, False
    fallback = _annotation_surface(leg, concept) if leg is not None else None
    if fallback is None:
        fallback = f"concept-{concept}"
    return fallback, True


def render_eg(
    eg: EG,
    leg: LEG | None,
    resource: LexicalResource,
    language: str,
    etg: ETG | None = None,
) -> str:
    """Text view in one language; labels lacking a lemma are marked  [fallback]."""
    etg = etg or eg.etg
    if etg is None:
        raise UserError("EG has no ETG attached; pass one explicitly")
    leg = leg if leg is not None else eg.leg

    lines = []
    hits = 0
    concepts_seen = 0
    for eid in sorted(eg.entities, key=_entity_number):
        entity = eg.entities[eid]
        etype = etg.etypes[entity.etype]
        label, flagged = _label(etype.concept, language, resource, leg)
        concepts_seen += 1
        hits += 0 if flagged else 1
        lines.append(f"{eid} a {label}" + (" [fallback]" if flagged else ""))
        rows = []
        for pid, vals in entity.values.items():
            plabel, pflag = _label(etg.properties[pid].concept, language, resource, leg)
            concepts_seen += 1
            hits += 0 if pflag else 1
            rendered = " | ".join(canonical_str(v.normalized) for v in vals)
            suffix = " [fallback]" if pflag else ""
            rows.append((plabel.casefold(), pid, f"  {plabel}{suffix}: {rendered}"))
        for _, _, line in sorted(rows):
            lines.append(line)
    if concepts_seen and not hits:
        raise UserError(f"language {language!r} has no lexeme for any rendered concept")
    return "\n".join(lines) + ("\n" if lines else "")
