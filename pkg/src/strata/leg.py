"""Phase 1: term extraction, word-sense disambiguation, LEG assembly.

The Language Entity Graph (LEG) is the subgraph of lexicon concepts chosen
for the words and multiwords occurring in the input tables, annotated with
those input terms and their dataset provenance, and ordered by the same
hypernym links as the lexicon (stored as a transitive reduction).
"""

from __future__ import annotations

import csv
import io
import re
import unicodedata
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation

from .config import ProjectConfig, parse_keyvalue
from .errors import ParseError, PendingDecisionsError, UnknownIdError, UserError
from .lexicon import (
    ConceptId,
    EnrichRequest,
    LexicalResource,
    is_namespace_language,
    normalize_lemma,
    validate_language,
)

# -- datasets ---------------------------------------------------------------


@dataclass(frozen=True)
class Locus:
    """Where a term occurred: the table name, a header, or a cell."""

    kind: str  # "table" | "column" | "cell"
    row: int | None = None
    col: int | None = None

    def code(self) -> str:
        if self.kind == "table":
            return "table"
        if self.kind == "column":
            return f"col:{self.col}"
        return f"cell:{self.row}:{self.col}"

    def sort_key(self) -> tuple:
        order = {"table": 0, "column": 1, "cell": 2}[self.kind]
        return (order, self.row if self.row is not None else -1,
                self.col if self.col is not None else -1)

    @classmethod
    def parse(cls, code: str) -> "Locus":
        if code == "table":
            return cls("table")
        if code.startswith("col:"):
            return cls("column", col=int(code[4:]))
        if code.startswith("cell:"):
            r, c = code[5:].split(":")
            return cls("cell", row=int(r), col=int(c))
        raise ParseError(f"bad locus {code!r}")


@dataclass(frozen=True)
class Term:
    surface: str
    lemma: str
    language: str
    locus: Locus
    dataset: str


@dataclass
class Dataset:
    id: str
    name: str
    language: str
    namespaces: dict[str, str]  # header prefix -> pseudo-language tag
    columns: list[str]
    rows: list[list[str]]
    identifying_overrides: dict[int, bool] = field(default_factory=dict)

    def validate(self) -> None:
        validate_language(self.language)
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ParseError(
                    f"row has {len(row)} cells, expected {len(self.columns)}", i + 2
                )


_PREFIX_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_.-]*):(\S.*)$")


def parse_dataset(dataset_id: str, csv_text: str, meta_text: str) -> Dataset:
    """Build a Dataset from RFC-4180 CSV text plus a key=value metadata file."""
    meta = parse_keyvalue(meta_text)
    name = meta.get("name")
    if not name:
        raise ParseError("dataset metadata must declare a name")
    language = validate_language(meta.get("language", "en"))
    namespaces: dict[str, str] = {}
    overrides: dict[int, bool] = {}
    for key, value in meta.items():
        if key.startswith("namespace."):
            prefix = key[len("namespace."):]
            if not is_namespace_language(value):
                raise ParseError(f"namespace mapping {key!r} must map to an ns: tag")
            namespaces[prefix] = value
        elif key.startswith("identifying."):
            overrides[int(key[len("identifying."):])] = value.lower() in ("true", "yes", "1")
        elif key not in ("name", "language"):
            raise ParseError(f"unknown metadata key {key!r}")

    reader = csv.reader(io.StringIO(csv_text))
    table = [row for row in reader]
    if not table:
        raise ParseError("CSV file is empty (no header row)")
    columns, rows = table[0], table[1:]
    for i, row in enumerate(rows):
        if len(row) != len(columns):
            raise ParseError(f"row has {len(row)} cells, expected {len(columns)}", i + 2)

    for header in columns:
        m = _PREFIX_RE.match(header)
        if m and ":" in header and m.group(1) not in namespaces:
            raise ParseError(
                f"header {header!r} uses namespace prefix {m.group(1)!r} "
                "not declared in the metadata"
            )

    ds = Dataset(dataset_id, name, language, namespaces, columns, rows, overrides)
    ds.validate()
    return ds


# -- term extraction ---------------------------------------------------------

_IDENTIFIER_RE = re.compile(r"^(?=.*[0-9])[A-Z0-9]{5,}$")
_ISO_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_DMY_DATE_RE = re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$")


def is_value_literal(cell: str) -> bool:
    """Numbers, dates and identifier codes are data, not language."""
    text = cell.strip()
    if not text:
        return True
    try:
        Decimal(text)
        return True
    except InvalidOperation:
        pass
    if _ISO_DATE_RE.match(text) or _DMY_DATE_RE.match(text):
        return True
    return bool(_IDENTIFIER_RE.match(text))


def _qualify(surface: str, dataset: Dataset) -> tuple[str, str]:
    """Resolve ``prefix:word`` surfaces to (language, lemma)."""
    m = _PREFIX_RE.match(surface.strip())
    if m and m.group(1) in dataset.namespaces:
        return dataset.namespaces[m.group(1)], normalize_lemma(m.group(2))
    return dataset.language, normalize_lemma(surface)


def extract_terms(dataset: Dataset) -> list[Term]:
    """One term per table name, header, and distinct non-literal cell value.

    Order is deterministic: table name, columns left to right, then cells
    row-major with the first occurrence of a repeated value winning.
    """
    dataset.validate()
    terms: list[Term] = []

    def mk(surface: str, locus: Locus) -> Term:
        surface = surface.strip()
        language, lemma = _qualify(surface, dataset)
        return Term(surface, lemma, language, locus, dataset.id)

    terms.append(mk(dataset.name, Locus("table")))
    for i, header in enumerate(dataset.columns):
        terms.append(mk(header, Locus("column", col=i)))
    seen_cells: set[str] = set()
    for r, row in enumerate(dataset.rows):
        for c, cell in enumerate(row):
            value = cell.strip()
            if not value or is_value_literal(value):
                continue
            if value in seen_cells:
                continue
            seen_cells.add(value)
            terms.append(mk(value, Locus("cell", row=r, col=c)))
    return terms


# -- sense decisions ----------------------------------------------------------

AUTO = "auto"
PENDING = "pending"
CONFIRMED = "confirmed"
OVERRIDDEN = "overridden"
NEW_CONCEPT = "new-concept-requested"

RESOLVED_STATUSES = (AUTO, CONFIRMED, OVERRIDDEN)


def sense_decision_id(term: Term) -> str:
    return f"sense:{term.dataset}:{term.locus.code()}"


@dataclass
class SenseDecision:
    id: str
    term: Term
    candidates: list[tuple[ConceptId, float]]  # ranked, best first
    status: str
    chosen: ConceptId | None = None

    @property
    def resolved(self) -> bool:
        return self.status in RESOLVED_STATUSES


def disambiguate(
    term: Term,
    context: list[Term],
    resource: LexicalResource,
    config: ProjectConfig | None = None,
) -> SenseDecision:
    """Score each sense of the term against its dataset's other terms.

    score = cw * context + rw / (1 + sense rank), where context is the best
    similarity between the candidate and any candidate concept of any other
    term in the same dataset.  The top sense is auto-accepted when it clears
    the threshold with enough margin over the runner-up; an unknown word
    becomes a new-concept request.
    """
    cfg = config or ProjectConfig()
    senses = resource.lookup_senses(term.lemma, term.language)
    if not senses:
        return SenseDecision(sense_decision_id(term), term, [], NEW_CONCEPT)

    context_concepts: set[ConceptId] = set()
    for other in context:
        if other == term:
            continue
        context_concepts.update(resource.lookup_senses(other.lemma, other.language))

    def context_score(cid: ConceptId) -> float:
        pos = resource.concept(cid).pos
        best = 0.0
        for other_cid in context_concepts:
            if resource.concept(other_cid).pos != pos:
                continue
            best = max(best, resource.concept_similarity(cid, other_cid))
        return best

    scored = [
        (cid, cfg.wsd_context_weight * context_score(cid) + cfg.wsd_rank_weight / (1 + rank))
        for rank, cid in enumerate(senses)
    ]
    ranked = sorted(
        scored, key=lambda item: (-item[1], senses.index(item[0]), item[0])
    )
    top = ranked[0][1]
    second = ranked[1][1] if len(ranked) > 1 else 0.0
    if top >= cfg.wsd_auto_threshold and (top - second) >= cfg.wsd_auto_margin:
        return SenseDecision(sense_decision_id(term), term, ranked, AUTO, ranked[0][0])
    return SenseDecision(sense_decision_id(term), term, ranked, PENDING)


@dataclass(frozen=True)
class Choose:
    concept: ConceptId
    override: bool = False


@dataclass(frozen=True)
class EnrichAndChoose:
    request: EnrichRequest


SenseResolution = Choose | EnrichAndChoose


def apply_sense_decision(
    decision: SenseDecision,
    resolution: SenseResolution,
    resource: LexicalResource,
    project: str = "local",
) -> SenseDecision:
    """Resolve (or override) a sense decision; returns the updated decision.

    Re-submitting the same choice to an already-resolved decision is a no-op;
    changing a confirmed choice is rejected.
    """
    if isinstance(resolution, EnrichAndChoose):
        chosen = resource.enrich(resolution.request, project=project)
        in_candidates = any(cid == chosen for cid, _ in decision.candidates)
        status = CONFIRMED if in_candidates else OVERRIDDEN
        return replace(decision, status=status, chosen=chosen)

    if isinstance(resolution, Choose):
        if decision.status in (CONFIRMED, OVERRIDDEN):
            if decision.chosen == resolution.concept:
                return decision  # idempotent re-resolution
            raise UserError(
                f"decision {decision.id} already resolved to {decision.chosen}"
            )
        resource.concept(resolution.concept)
        in_candidates = any(cid == resolution.concept for cid, _ in decision.candidates)
        if not in_candidates and not resolution.override:
            raise UserError(
                f"concept {resolution.concept} is not a candidate of {decision.id}; "
                "use the override flag to force it"
            )
        if decision.status == AUTO and decision.chosen == resolution.concept:
            return replace(decision, status=CONFIRMED)
        status = CONFIRMED if in_candidates else OVERRIDDEN
        return replace(decision, status=status, chosen=resolution.concept)

    raise UserError(f"unknown resolution {resolution!r}")


# -- the graph ----------------------------------------------------------------


@dataclass
class LEG:
    nodes: set[ConceptId] = field(default_factory=set)
    annotations: dict[ConceptId, set[Term]] = field(default_factory=dict)
    edges: set[tuple[ConceptId, ConceptId]] = field(default_factory=set)  # (child, parent)
    glosses: dict[ConceptId, str] = field(default_factory=dict)


def build_leg(decisions: list[SenseDecision], resource: LexicalResource) -> LEG:
    """Induce the chosen-concept subgraph with transitively reduced edges."""
    unresolved = sorted(d.id for d in decisions if not d.resolved)
    if unresolved:
        raise PendingDecisionsError("cannot build LEG with unresolved decisions", unresolved)

    leg = LEG()
    for decision in decisions:
        assert decision.chosen is not None
        leg.nodes.add(decision.chosen)
        leg.annotations.setdefault(decision.chosen, set()).add(decision.term)
        leg.glosses[decision.chosen] = resource.concept(decision.chosen).gloss

    for node in leg.nodes:
        strict_ancestors = [
            b for b in leg.nodes if b != node and resource.is_ancestor(b, node)
        ]
        for b in strict_ancestors:
            direct = not any(
                c not in (node, b)
                and resource.is_ancestor(b, c)
                and resource.is_ancestor(c, node)
                for c in strict_ancestors
            )
            if direct:
                leg.edges.add((node, b))
    return leg


# -- spreadsheet export --------------------------------------------------------

_SHEET_HEADER = "concept\tgloss\tleg_parents\tsurface\tlanguage\tdataset\tlocus"


def _esc(fieldtext: str) -> str:
    return (
        fieldtext.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _unesc(fieldtext: str) -> str:
    out, i = [], 0
    while i < len(fieldtext):
        ch = fieldtext[i]
        if ch == "\\" and i + 1 < len(fieldtext):
            nxt = fieldtext[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def export_leg_sheet(leg: LEG) -> str:
    """Tab-separated view: one row per (concept, annotating term)."""
    parents_of: dict[ConceptId, list[ConceptId]] = {}
    for child, parent in leg.edges:
        parents_of.setdefault(child, []).append(parent)
    rows = []
    for node in sorted(leg.nodes):
        parents = ",".join(map(str, sorted(parents_of.get(node, ()))))
        gloss = leg.glosses.get(node, "")
        for term in sorted(
            leg.annotations.get(node, ()), key=lambda t: (t.dataset, t.locus.sort_key())
        ):
            rows.append(
                "\t".join(
                    [
                        str(node),
                        _esc(gloss),
                        parents,
                        _esc(term.surface),
                        term.language,
                        term.dataset,
                        term.locus.code(),
                    ]
                )
            )
    return "\n".join([_SHEET_HEADER] + rows) + "\n"


def parse_leg_sheet(text: str) -> LEG:
    """Inverse of ``export_leg_sheet`` (lemmas are re-derived from surfaces)."""
    # split on "\n" exactly: surfaces may carry characters like \f or \x1c
    # that str.splitlines treats as line breaks but the escaping does not
    lines = text.split("\n")
    if not lines or lines[0] != _SHEET_HEADER:
        raise ParseError("not a LEG sheet (bad header line)")
    leg = LEG()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise ParseError(f"expected 7 columns, got {len(parts)}", lineno)
        cid_s, gloss, parents_s, surface_esc, language, dataset, locus_code = parts
        cid = int(cid_s)
        surface = _unesc(surface_esc)
        if is_namespace_language(language) and ":" in surface:
            lemma = normalize_lemma(surface.split(":", 1)[1])
        else:
            lemma = normalize_lemma(surface)
        term = Term(surface, lemma, language, Locus.parse(locus_code), dataset)
        leg.nodes.add(cid)
        leg.glosses[cid] = _unesc(gloss)
        leg.annotations.setdefault(cid, set()).add(term)
        for p in parents_s.split(","):
            if p:
                leg.edges.add((cid, int(p)))
    return leg
