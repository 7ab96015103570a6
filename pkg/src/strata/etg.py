"""Phase 2: element classification, schema matching, Entity Type Graph.

Every etype and property is grounded in a LEG concept, and etype subsumption
is forced to agree with the concept hierarchy: an edge (child, parent) may
exist only when the parent's concept is a lexicon ancestor of the child's.
Comparable etype concepts imply their subsumption edge even without an
explicitly accepted match; the stored relation is a transitive reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .config import ProjectConfig
from .errors import UserError
from .leg import LEG, Dataset, _ISO_DATE_RE
from .lexicon import ConceptId, LexicalResource, is_namespace_language

DATATYPE_RANGES = ("string", "integer", "decimal", "date", "boolean")

SUGGESTED = "suggested"
ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass(frozen=True)
class ClassifiedColumn:
    column: int
    concept: ConceptId
    kind: str  # "datatype" | "object"
    range: str | ConceptId  # datatype range name, or target concept
    identifying: bool


@dataclass
class ElementClassification:
    dataset: str
    table_concept: ConceptId
    columns: list[ClassifiedColumn]


@dataclass
class MatchCandidate:
    id: str
    left: tuple[str, str]  # (dataset id, element code: "table" | "col:<i>")
    right: tuple[str, str]
    left_concept: ConceptId
    right_concept: ConceptId
    role: str  # "etype" | "property"
    similarity: float
    status: str = SUGGESTED


@dataclass
class Etype:
    id: str
    concept: ConceptId
    name: str
    members: list[str]  # dataset ids


@dataclass
class Property:
    id: str
    concept: ConceptId
    kind: str
    domain: str  # etype id
    range: str | ConceptId
    identifying: bool
    members: list[tuple[str, int]]  # (dataset id, column index)


@dataclass
class ETG:
    etypes: dict[str, Etype] = field(default_factory=dict)
    properties: dict[str, Property] = field(default_factory=dict)
    subsumption: set[tuple[str, str]] = field(default_factory=set)  # (child, parent)
    warnings: list[str] = field(default_factory=list)

    def property_for(self, dataset: str, column: int) -> Property:
        for prop in self.properties.values():
            if (dataset, column) in prop.members:
                return prop
        raise UserError(f"no property classified for {dataset} column {column}")

    def etype_for_dataset(self, dataset: str) -> Etype:
        for etype in self.etypes.values():
            if dataset in etype.members:
                return etype
        raise UserError(f"no etype covers dataset {dataset}")

    def subsumers_of(self, etype_id: str) -> set[str]:
        """Reflexive-transitive subsumption ancestors of an etype."""
        seen = {etype_id}
        frontier = [etype_id]
        while frontier:
            node = frontier.pop()
            for child, parent in self.subsumption:
                if child == node and parent not in seen:
                    seen.add(parent)
                    frontier.append(parent)
        return seen


class CoherenceError(UserError):
    pass


# -- classification -----------------------------------------------------------


def _profile_range(values: list[str]) -> str:
    present = [v.strip() for v in values if v.strip()]
    if not present:
        return "string"
    if all(_is_int(v) for v in present):
        return "integer"
    if all(_is_decimal(v) for v in present):
        return "decimal"
    if all(_ISO_DATE_RE.match(v) for v in present):
        return "date"
    return "string"


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def _is_decimal(text: str) -> bool:
    try:
        Decimal(text)
        return True
    except InvalidOperation:
        return False


def _locus_concepts(leg: LEG, dataset_id: str) -> dict[str, ConceptId]:
    """Map locus codes of one dataset to the concepts chosen for them."""
    out: dict[str, ConceptId] = {}
    for concept, terms in leg.annotations.items():
        for term in terms:
            if term.dataset == dataset_id:
                out[term.locus.code()] = concept
    return out


def classify_elements(
    leg: LEG, datasets: list[Dataset], config: ProjectConfig | None = None
) -> list[ElementClassification]:
    """Tag table concepts as etype candidates, column concepts as properties.

    A column is identifying when its values are unique within the dataset and
    its concept is configured as identifying (metadata may override per column).
    """
    cfg = config or ProjectConfig()
    out = []
    for dataset in datasets:
        loci = _locus_concepts(leg, dataset.id)
        if "table" not in loci:
            raise UserError(f"LEG does not cover the table name of dataset {dataset.id}")
        columns = []
        for i in range(len(dataset.columns)):
            code = f"col:{i}"
            if code not in loci:
                raise UserError(f"LEG does not cover column {i} of dataset {dataset.id}")
            values = [row[i] for row in dataset.rows]
            rng = _profile_range(values)
            present = [v.strip().casefold() for v in values if v.strip()]
            unique = len(present) == len(set(present))
            identifying = unique and loci[code] in cfg.identifying_concepts
            if i in dataset.identifying_overrides:
                identifying = dataset.identifying_overrides[i]
            columns.append(ClassifiedColumn(i, loci[code], "datatype", rng, identifying))
        out.append(ElementClassification(dataset.id, loci["table"], columns))
    return out


# -- matching -------------------------------------------------------------------


def match_id(left: tuple[str, str], right: tuple[str, str]) -> str:
    return f"match:{left[0]}:{left[1]}|{right[0]}:{right[1]}"


def suggest_matches(
    classifications: list[ElementClassification],
    resource: LexicalResource,
    config: ProjectConfig | None = None,
) -> list[MatchCandidate]:
    """Cross-dataset candidates for same-role element pairs.

    Identical concepts are certain matches (similarity exactly 1.0) and come
    back pre-accepted; anything else at or above the configured floor is
    suggested for review, sorted by descending similarity.
    """
    cfg = config or ProjectConfig()
    etype_elems = [
        (c.dataset, "table", c.table_concept) for c in classifications
    ]
    prop_elems = [
        (c.dataset, f"col:{col.column}", col.concept)
        for c in classifications
        for col in c.columns
    ]

    candidates: list[MatchCandidate] = []
    for role, elems in (("etype", etype_elems), ("property", prop_elems)):
        for i in range(len(elems)):
            for j in range(i + 1, len(elems)):
                a, b = elems[i], elems[j]
                if a[0] == b[0]:
                    continue
                left, right = sorted([a, b])[:2]
                ca, cb = left[2], right[2]
                if ca == cb:
                    sim = 1.0
                elif resource.concept(ca).pos == resource.concept(cb).pos:
                    sim = resource.concept_similarity(ca, cb)
                else:
                    sim = 0.0
                if ca == cb:
                    status = ACCEPTED
                elif sim >= cfg.match_floor:
                    status = SUGGESTED
                else:
                    continue
                lkey, rkey = (left[0], left[1]), (right[0], right[1])
                candidates.append(
                    MatchCandidate(match_id(lkey, rkey), lkey, rkey, ca, cb, role, sim, status)
                )

    def col_index(code: str) -> int:
        return -1 if code == "table" else int(code.split(":")[1])

    candidates.sort(
        key=lambda m: (-m.similarity, m.left[0], col_index(m.left[1]), m.right[0],
                       col_index(m.right[1]))
    )
    return candidates


# -- graph assembly ---------------------------------------------------------------


def _transitive_reduction(edges: set[tuple[str, str]]) -> set[tuple[str, str]]:
    """Drop every edge implied by the transitivity of the others."""
    reach: dict[str, set[str]] = {}

    def reachable(src: str, dst: str, skip: tuple[str, str]) -> bool:
        frontier, seen = [src], {src}
        while frontier:
            node = frontier.pop()
            for (c, p) in edges:
                if (c, p) == skip or c != node:
                    continue
                if p == dst:
                    return True
                if p not in seen:
                    seen.add(p)
                    frontier.append(p)
        return False

    return {e for e in edges if not reachable(e[0], e[1], skip=e)}


def build_etg(
    classifications: list[ElementClassification],
    matches: list[MatchCandidate],
    leg: LEG,
    resource: LexicalResource,
) -> ETG:
    """Assemble the integrated ETG from classifications and resolved matches."""
    unresolved = sorted(m.id for m in matches if m.status == SUGGESTED)
    if unresolved:
        from .errors import PendingDecisionsError

        raise PendingDecisionsError("cannot build ETG with unresolved matches", unresolved)

    etg = ETG()

    # Accepted etype matches between lexicon-incomparable concepts can never
    # be encoded coherently; refuse before building anything.
    for m in matches:
        if m.role == "etype" and m.status == ACCEPTED and m.left_concept != m.right_concept:
            if not resource.comparable(m.left_concept, m.right_concept):
                raise CoherenceError(
                    f"accepted etype match {m.id} joins incomparable concepts "
                    f"{m.left_concept} and {m.right_concept}"
                )

    # One etype per distinct table concept.
    by_concept: dict[ConceptId, list[str]] = {}
    for c in classifications:
        by_concept.setdefault(c.table_concept, []).append(c.dataset)
    for concept, members in sorted(by_concept.items()):
        members = sorted(members)
        name = _table_surface(leg, concept, members)
        etg.etypes[f"e:{concept}"] = Etype(f"e:{concept}", concept, name, members)

    # Subsumption follows concept comparability, reduced.
    edges: set[tuple[str, str]] = set()
    ids = sorted(etg.etypes)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            ca, cb = etg.etypes[a].concept, etg.etypes[b].concept
            if resource.concept(ca).pos != resource.concept(cb).pos:
                continue
            if resource.is_ancestor(cb, ca):
                edges.add((a, b))
            elif resource.is_ancestor(ca, cb):
                edges.add((b, a))
    etg.subsumption = _transitive_reduction(edges)

    # Properties: merge accepted equal-concept matches via union-find.
    keys = [(c.dataset, col.column) for c in classifications for col in c.columns]
    parent: dict[tuple[str, int], tuple[str, int]] = {k: k for k in keys}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    col_info = {
        (c.dataset, col.column): (col, c.table_concept)
        for c in classifications
        for col in c.columns
    }
    for m in matches:
        if m.role != "property" or m.status != ACCEPTED:
            continue
        if m.left_concept != m.right_concept:
            continue  # related but distinct concepts stay separate properties
        lk = (m.left[0], int(m.left[1].split(":")[1]))
        rk = (m.right[0], int(m.right[1].split(":")[1]))
        union(lk, rk)

    groups: dict[tuple[str, int], list[tuple[str, int]]] = {}
    for k in keys:
        groups.setdefault(find(k), []).append(k)

    for root in sorted(groups):
        members = sorted(groups[root])
        cols = [col_info[k][0] for k in members]
        concept = cols[0].concept
        rng = _unify_ranges([c.range for c in cols])
        identifying = any(c.identifying for c in cols)
        member_etypes = sorted({f"e:{col_info[k][1]}" for k in members})
        domain = _least_subsumer(etg, member_etypes, resource)
        pid = f"p:{root[0]}:{root[1]}"
        if domain is None:
            etg.warnings.append(
                f"property {pid}: no common domain etype for {member_etypes}; "
                "duplicated per etype"
            )
            for et in member_etypes:
                sub = [k for k in members if f"e:{col_info[k][1]}" == et]
                spid = f"p:{sub[0][0]}:{sub[0][1]}"
                etg.properties[spid] = Property(
                    spid, concept, cols[0].kind, et, rng, identifying, sub
                )
        else:
            etg.properties[pid] = Property(
                pid, concept, cols[0].kind, domain, rng, identifying, members
            )

    violations = check_coherence(etg, leg, resource)
    if violations:
        raise CoherenceError(
            "built ETG failed its own coherence check: "
            + "; ".join(v.describe() for v in violations)
        )
    return etg


def _table_surface(leg: LEG, concept: ConceptId, members: list[str]) -> str:
    terms = [
        t
        for t in leg.annotations.get(concept, ())
        if t.locus.kind == "table" and t.dataset in members
    ]
    if not terms:
        return f"concept-{concept}"
    return min(terms, key=lambda t: t.dataset).surface


def _unify_ranges(ranges: list) -> str:
    distinct = set(ranges)
    if len(distinct) == 1:
        return ranges[0]
    if distinct <= {"integer", "decimal"}:
        return "decimal"
    return "string"


def _least_subsumer(etg: ETG, etype_ids: list[str], resource: LexicalResource) -> str | None:
    common: set[str] | None = None
    for et in etype_ids:
        subs = etg.subsumers_of(et)
        common = subs if common is None else common & subs
    if not common:
        return None
    return max(common, key=lambda e: (resource.depth(etg.etypes[e].concept), -etg.etypes[e].concept))


# -- coherence -----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "inverted-subsumption" | "not-in-leg" | "subsumption-cycle"
    subject: str
    detail: str

    def describe(self) -> str:
        return f"{self.kind}: {self.subject} ({self.detail})"


def check_coherence(etg: ETG, leg: LEG, resource: LexicalResource) -> list[Violation]:
    """Independent check that the ETG respects the LEG and concept hierarchy."""
    violations: list[Violation] = []

    for child, parent in sorted(etg.subsumption):
        cc = etg.etypes[child].concept
        pc = etg.etypes[parent].concept
        if not resource.is_ancestor(pc, cc):
            violations.append(
                Violation(
                    "inverted-subsumption",
                    f"{child} -> {parent}",
                    f"concept {pc} is not a lexicon ancestor of {cc}",
                )
            )

    for etype in sorted(etg.etypes.values(), key=lambda e: e.id):
        if etype.concept not in leg.nodes:
            violations.append(
                Violation("not-in-leg", etype.id, f"concept {etype.concept} not a LEG node")
            )
    for prop in sorted(etg.properties.values(), key=lambda p: p.id):
        if prop.concept not in leg.nodes:
            violations.append(
                Violation("not-in-leg", prop.id, f"concept {prop.concept} not a LEG node")
            )

    # Cycle detection over subsumption edges.
    graph: dict[str, list[str]] = {}
    for child, parent in etg.subsumption:
        graph.setdefault(child, []).append(parent)
    done: set[str] = set()
    for start in sorted(graph):
        if start in done:
            continue
        cycle = _find_string_cycle(start, graph, done)
        if cycle:
            violations.append(
                Violation("subsumption-cycle", " -> ".join(cycle), "subsumption loops")
            )
            break
    return violations


def _find_string_cycle(start: str, graph: dict[str, list[str]], done: set[str]):
    path: list[str] = []
    on_path: set[str] = set()
    stack: list[tuple[str, bool]] = [(start, False)]
    while stack:
        node, leaving = stack.pop()
        if leaving:
            on_path.discard(node)
            path.pop()
            done.add(node)
            continue
        if node in on_path:
            return path[path.index(node):]
        if node in done:
            continue
        on_path.add(node)
        path.append(node)
        stack.append((node, True))
        for nxt in sorted(graph.get(node, ())):
            if nxt in on_path:
                return path[path.index(nxt):]
            if nxt not in done:
                stack.append((nxt, False))
    return None


# -- reference-ontology alignment -------------------------------------------------


def align_with_reference(
    etg: ETG, reference: ETG, resource: LexicalResource, config: ProjectConfig | None = None
) -> list[MatchCandidate]:
    """Suggest etype matches between a project ETG and a reference ETG."""
    cfg = config or ProjectConfig()
    out = []
    for pe in sorted(etg.etypes.values(), key=lambda e: e.id):
        for re_ in sorted(reference.etypes.values(), key=lambda e: e.id):
            ca, cb = pe.concept, re_.concept
            if resource.concept(ca).pos != resource.concept(cb).pos:
                continue
            sim = 1.0 if ca == cb else resource.concept_similarity(ca, cb)
            if ca == cb:
                status = ACCEPTED
            elif sim >= cfg.match_floor:
                status = SUGGESTED
            else:
                continue
            left, right = ("project", pe.id), ("reference", re_.id)
            out.append(
                MatchCandidate(match_id(left, right), left, right, ca, cb, "etype", sim, status)
            )
    out.sort(key=lambda m: (-m.similarity, m.left[1], m.right[1]))
    return out


def apply_reference_alignment(
    etg: ETG, reference: ETG, accepted: list[MatchCandidate], resource: LexicalResource
) -> ETG:
    """Fold accepted reference matches in: imported etypes, subsumption only."""
    for m in accepted:
        if m.status != ACCEPTED:
            continue
        ref_etype = reference.etypes[m.right[1]]
        if m.left_concept == m.right_concept:
            continue  # same concept: nothing to add
        if not resource.comparable(m.left_concept, m.right_concept):
            raise CoherenceError(
                f"reference match {m.id} joins incomparable concepts"
            )
        if ref_etype.id not in etg.etypes:
            etg.etypes[ref_etype.id] = Etype(
                ref_etype.id, ref_etype.concept, ref_etype.name, []
            )
        if resource.is_ancestor(m.right_concept, m.left_concept):
            etg.subsumption.add((m.left[1], ref_etype.id))
        else:
            etg.subsumption.add((ref_etype.id, m.left[1]))
    etg.subsumption = _transitive_reduction(etg.subsumption)
    return etg


# -- Turtle export ------------------------------------------------------------------

_PREFIX_BLOCK = (
    "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
    "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
    "@prefix sm: <urn:strata:meta:> .\n"
    "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n"
)

_XSD = {
    "string": "xsd:string",
    "integer": "xsd:integer",
    "decimal": "xsd:decimal",
    "date": "xsd:date",
    "boolean": "xsd:boolean",
}


def _ttl_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _langtag(language: str) -> str:
    # Namespace pseudo-languages become BCP-47 private-use tags so the
    # output stays within the Turtle grammar.
    if is_namespace_language(language):
        return "x-" + language.replace(":", "-")
    return language


def _labels(leg: LEG, concept: ConceptId) -> list[tuple[str, str]]:
    by_lang: dict[str, object] = {}
    for term in sorted(
        leg.annotations.get(concept, ()), key=lambda t: (t.dataset, t.locus.sort_key())
    ):
        by_lang.setdefault(term.language, term.lemma)
    return sorted(by_lang.items())  # type: ignore[arg-type]


def export_etg(etg: ETG, leg: LEG, resource: LexicalResource) -> str:
    """Minimal OWL subset in Turtle; refuses to export an incoherent graph."""
    violations = check_coherence(etg, leg, resource)
    if violations:
        raise CoherenceError(
            "refusing to export incoherent ETG: " + "; ".join(v.describe() for v in violations)
        )

    iris: dict[str, str] = {}
    used: set[str] = set()
    for etype in sorted(etg.etypes.values(), key=lambda e: e.id):
        iri = f"urn:strata:c:{etype.concept}"
        assert iri not in used  # one etype per concept
        iris[etype.id] = iri
        used.add(iri)
    for prop in sorted(etg.properties.values(), key=lambda p: p.id):
        base = f"urn:strata:c:{prop.concept}"
        iri, n = base, 1
        while iri in used:
            n += 1
            iri = f"{base}.{n}"
        iris[prop.id] = iri
        used.add(iri)

    blocks: list[tuple[str, str]] = []
    for etype in etg.etypes.values():
        lines = [f"<{iris[etype.id]}> a owl:Class ;"]
        for child, parent in sorted(etg.subsumption):
            if child == etype.id:
                lines.append(f"    rdfs:subClassOf <{iris[parent]}> ;")
        for language, lemma in _labels(leg, etype.concept):
            lines.append(f'    rdfs:label "{_ttl_escape(lemma)}"@{_langtag(language)} ;')
        lines.append(f'    sm:name "{_ttl_escape(etype.name)}" ;')
        lines.append(f"    sm:conceptId {etype.concept} .")
        blocks.append((iris[etype.id], "\n".join(lines)))

    for prop in etg.properties.values():
        if prop.kind == "object":
            kind = "owl:ObjectProperty"
            rng = f"<{iris[f'e:{prop.range}']}>"
        else:
            kind = "owl:DatatypeProperty"
            rng = _XSD[prop.range]  # type: ignore[index]
        lines = [f"<{iris[prop.id]}> a {kind} ;"]
        lines.append(f"    rdfs:domain <{iris[prop.domain]}> ;")
        lines.append(f"    rdfs:range {rng} ;")
        for language, lemma in _labels(leg, prop.concept):
            lines.append(f'    rdfs:label "{_ttl_escape(lemma)}"@{_langtag(language)} ;')
        if prop.identifying:
            lines.append("    sm:identifying true ;")
        lines.append(f"    sm:conceptId {prop.concept} .")
        blocks.append((iris[prop.id], "\n".join(lines)))

    blocks.sort(key=lambda b: b[0])
    body = "\n\n".join(text for _, text in blocks)
    return _PREFIX_BLOCK + ("\n" + body + "\n" if body else "")
