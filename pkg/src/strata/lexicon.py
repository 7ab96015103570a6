"""Multilingual lexico-semantic resource backing the integration pipeline.

Concepts are plain integer identifiers carrying no linguistic content,
organized in one acyclic hierarchy per part of speech (multiple parents
allowed, so each hierarchy is a rooted DAG).  Words attach to concepts
through synsets, one per (concept, language) pair, where "language" is
either a natural-language code ("en", "it") or a namespace pseudo-language
("ns:schema").  The word-to-concept mapping is many-to-many; sense order
is significant on both sides:

* within a synset, lemmas are listed most-frequent first (the rank-0 lemma
  is what rendering uses);
* for one (lemma, language) key, candidate concepts keep the order in which
  the mappings were introduced (file order on load, append order on enrich).

File format, line-delimited UTF-8 (``#`` starts a comment):

    C <id> <pos> <parent-id,...> <gloss...>
    S <concept-id> <language-tag> <lemma|lemma|...>

Ids 0..2 are reserved for the built-in per-pos roots and may appear as
parents (``-`` means "attach to the pos root").  Lemmas are stored
NFC-normalized and case-folded; multiwords use single spaces.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace

from .errors import ParseError, UnknownIdError, UserError

ConceptId = int

POS_TAGS = ("noun", "verb", "adjective")

# Reserved root ids, one per pos, present in every resource.
ROOT_IDS = {"noun": 0, "verb": 1, "adjective": 2}
_ROOT_GLOSSES = {
    "noun": "that which is perceived or known to exist",
    "verb": "do or perform something",
    "adjective": "a quality that characterizes something",
}

BUILTIN = "builtin"


def normalize_lemma(text: str) -> str:
    """Case-fold, NFC-normalize and collapse whitespace runs to single spaces."""
    folded = unicodedata.normalize("NFC", text).casefold().strip()
    return " ".join(folded.split())


def validate_language(tag: str) -> str:
    tag = tag.strip()
    if not tag:
        raise UserError("language tag must be nonempty")
    return tag


def is_namespace_language(tag: str) -> bool:
    return tag.startswith("ns:")


@dataclass(frozen=True)
class Concept:
    id: ConceptId
    pos: str
    gloss: str
    parents: frozenset[ConceptId]
    provenance: str = BUILTIN  # "builtin" or "enriched:<project>"


@dataclass
class Synset:
    concept: ConceptId
    language: str
    lemmas: list[str]  # most frequent first, case-folded


class CycleError(UserError):
    def __init__(self, cycle: list[ConceptId]):
        self.cycle = cycle
        super().__init__("concept hierarchy contains a cycle: " + " -> ".join(map(str, cycle)))


class DuplicateLexemeError(UserError):
    pass


@dataclass(frozen=True)
class NewLexeme:
    """Attach an existing lemma to an existing concept."""

    lemma: str
    language: str
    concept: ConceptId


@dataclass(frozen=True)
class NewConcept:
    """Mint a fresh concept under ``parent`` and name it in one language."""

    gloss: str
    pos: str
    parent: ConceptId
    lemma: str
    language: str


EnrichRequest = NewLexeme | NewConcept


def _find_cycle(start, parents_of, done: set) -> list | None:
    """Path-tracking DFS along parent links; returns the cycle if one exists."""
    path: list = []
    on_path: set = set()
    stack: list[tuple[int, bool]] = [(start, False)]
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
        for parent in parents_of(node):
            if parent in on_path:
                return path[path.index(parent):]
            if parent not in done:
                stack.append((parent, False))
    return None


class LexicalResource:
    """Concept hierarchy plus the synset store and its lemma inversion."""

    def __init__(self) -> None:
        self.concepts: dict[ConceptId, Concept] = {}
        self.synsets: dict[tuple[ConceptId, str], Synset] = {}
        # (lemma, language) -> concept ids in sense-rank order.
        self.lemma_index: dict[tuple[str, str], list[ConceptId]] = {}
        self._depth_cache: dict[ConceptId, int] = {}
        self._ancestor_cache: dict[ConceptId, frozenset[ConceptId]] = {}
        for pos, rid in ROOT_IDS.items():
            self.concepts[rid] = Concept(rid, pos, _ROOT_GLOSSES[pos], frozenset())

    # -- structure ---------------------------------------------------------

    def _invalidate_caches(self) -> None:
        self._depth_cache.clear()
        self._ancestor_cache.clear()

    def add_concept(self, concept: Concept) -> None:
        """Insert a concept; parents must already exist and share its pos."""
        if concept.id in self.concepts:
            raise UserError(f"concept id {concept.id} already exists")
        if concept.pos not in POS_TAGS:
            raise UserError(f"unknown pos {concept.pos!r}")
        if not concept.parents:
            concept = replace(concept, parents=frozenset({ROOT_IDS[concept.pos]}))
        for pid in concept.parents:
            parent = self.concepts.get(pid)
            if parent is None:
                raise UnknownIdError(f"concept {concept.id} references unknown parent {pid}")
            if parent.pos != concept.pos:
                raise UserError(
                    f"concept {concept.id} ({concept.pos}) cannot have {parent.pos} parent {pid}"
                )
        self.concepts[concept.id] = concept
        self._invalidate_caches()

    def concept(self, cid: ConceptId) -> Concept:
        try:
            return self.concepts[cid]
        except KeyError:
            raise UnknownIdError(f"unknown concept id {cid}") from None

    def user_concepts(self) -> list[Concept]:
        return [c for c in self.concepts.values() if c.id not in ROOT_IDS.values()]

    def check_acyclic(self) -> None:
        """Raise ``CycleError`` if any parent chain loops. Full traversal."""
        done: set[ConceptId] = set()
        for start in sorted(self.concepts):
            if start in done:
                continue
            cycle = _find_cycle(start, lambda c: sorted(self.concepts[c].parents), done)
            if cycle:
                raise CycleError(cycle)

    def ancestors(self, cid: ConceptId) -> frozenset[ConceptId]:
        """All concepts reachable via parent links, including ``cid`` itself."""
        cached = self._ancestor_cache.get(cid)
        if cached is not None:
            return cached
        self.concept(cid)
        seen: set[ConceptId] = set()
        stack = [cid]
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(self.concepts[node].parents)
        result = frozenset(seen)
        self._ancestor_cache[cid] = result
        return result

    def is_ancestor(self, ancestor: ConceptId, descendant: ConceptId) -> bool:
        """True iff ``ancestor`` is reachable from ``descendant`` (reflexive)."""
        self.concept(ancestor)
        return ancestor in self.ancestors(descendant)

    def comparable(self, a: ConceptId, b: ConceptId) -> bool:
        return self.is_ancestor(a, b) or self.is_ancestor(b, a)

    def depth(self, cid: ConceptId) -> int:
        """Longest-path distance from the pos root, with depth(root) = 1.

        Longest (not shortest) paths keep every strict ancestor strictly
        shallower than its descendants even when a concept has parents at
        very different depths, which is what makes the similarity measure
        stay within [0, 1] on multi-parent hierarchies.
        """
        cached = self._depth_cache.get(cid)
        if cached is not None:
            return cached
        self.concept(cid)
        order: list[ConceptId] = []
        state: dict[ConceptId, int] = {}
        stack = [(cid, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                state[node] = 2
                continue
            if state.get(node):
                continue
            state[node] = 1
            stack.append((node, True))
            for pid in self.concepts[node].parents:
                if pid not in self._depth_cache and state.get(pid) != 2:
                    stack.append((pid, False))
        for node in order:
            parents = self.concepts[node].parents
            if not parents:
                self._depth_cache[node] = 1
            else:
                self._depth_cache[node] = 1 + max(self._depth_cache[p] for p in parents)
        return self._depth_cache[cid]

    def lowest_common_ancestor(self, a: ConceptId, b: ConceptId) -> ConceptId | None:
        """Deepest common ancestor; ties broken by smallest concept id."""
        ca, cb = self.concept(a), self.concept(b)
        if ca.pos != cb.pos:
            raise UserError(f"pos mismatch: {a} is {ca.pos}, {b} is {cb.pos}")
        common = self.ancestors(a) & self.ancestors(b)
        if not common:
            return None
        return max(common, key=lambda c: (self.depth(c), -c))

    def concept_similarity(self, a: ConceptId, b: ConceptId) -> float:
        """Wu-Palmer similarity: 2*depth(lca) / (depth(a) + depth(b))."""
        lca = self.lowest_common_ancestor(a, b)
        if lca is None:
            return 0.0
        return 2.0 * self.depth(lca) / (self.depth(a) + self.depth(b))

    # -- lexemes -----------------------------------------------------------

    def add_synset_lemma(self, cid: ConceptId, language: str, lemma: str) -> None:
        """Append one lemma to the (concept, language) synset, rank-last."""
        self.concept(cid)
        language = validate_language(language)
        lemma = normalize_lemma(lemma)
        if not lemma:
            raise UserError("lemma must be nonempty")
        key = (cid, language)
        synset = self.synsets.get(key)
        if synset is None:
            synset = Synset(cid, language, [])
            self.synsets[key] = synset
        if lemma in synset.lemmas:
            raise DuplicateLexemeError(
                f"lemma {lemma!r} already maps to concept {cid} in {language!r}"
            )
        synset.lemmas.append(lemma)
        self.lemma_index.setdefault((lemma, language), []).append(cid)

    def lookup_senses(self, lemma: str, language: str) -> list[ConceptId]:
        """Concepts the word can express, in sense-rank order; [] if unknown."""
        return list(self.lemma_index.get((normalize_lemma(lemma), language), ()))

    def rank0_lemma(self, cid: ConceptId, language: str) -> str | None:
        synset = self.synsets.get((cid, language))
        return synset.lemmas[0] if synset else None

    def languages_of(self, cid: ConceptId) -> list[str]:
        return sorted(lang for (c, lang) in self.synsets if c == cid)

    # -- enrichment --------------------------------------------------------

    def fresh_id(self) -> ConceptId:
        return max(self.concepts) + 1

    def enrich(self, request: EnrichRequest, project: str = "local") -> ConceptId:
        """Apply an enrichment request; returns the concept the lemma now maps to.

        Existing entries are never removed or re-ranked, so enrichment is
        monotone: anything that resolved before keeps resolving the same way.
        """
        if isinstance(request, NewLexeme):
            self.add_synset_lemma(request.concept, request.language, request.lemma)
            return request.concept
        if isinstance(request, NewConcept):
            cid = self.fresh_id()
            self.add_concept(
                Concept(
                    cid,
                    request.pos,
                    request.gloss,
                    frozenset({request.parent}),
                    provenance=f"enriched:{project}",
                )
            )
            self.check_acyclic()
            self.add_synset_lemma(cid, request.language, request.lemma)
            return cid
        raise UserError(f"unknown enrichment request {request!r}")

    # -- serialization -----------------------------------------------------

    def dump(self) -> str:
        """Render back to the line format; round-trips through ``loads``."""
        lines = []
        for concept in sorted(self.user_concepts(), key=lambda c: c.id):
            parents = ",".join(map(str, sorted(concept.parents)))
            lines.append(f"C {concept.id} {concept.pos} {parents} {concept.gloss}")
        # Insertion order, not sorted: synset file order is what fixes the
        # sense rank of a polysemous lemma, so reordering here would change
        # lookup_senses() after a round trip.
        for synset in self.synsets.values():
            lines.append(f"S {synset.concept} {synset.language} {'|'.join(synset.lemmas)}")
        return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str) -> LexicalResource:
    """Parse the line-delimited lexicon format into a validated resource."""
    resource = LexicalResource()
    pending_parents: dict[ConceptId, tuple[int, str, str, list[ConceptId]]] = {}
    synset_lines: list[tuple[int, ConceptId, str, list[str]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        if kind == "C":
            parts = rest.split(" ", 3)
            if len(parts) < 4:
                raise ParseError("C record needs <id> <pos> <parents> <gloss>", lineno)
            sid, pos, parents_field, gloss = parts
            try:
                cid = int(sid)
            except ValueError:
                raise ParseError(f"bad concept id {sid!r}", lineno) from None
            if cid < 0:
                raise ParseError(f"concept id must be non-negative, got {cid}", lineno)
            if cid in ROOT_IDS.values():
                raise ParseError(f"concept id {cid} is reserved for a root", lineno)
            if cid in pending_parents:
                raise ParseError(f"duplicate concept id {cid}", lineno)
            if pos not in POS_TAGS:
                raise ParseError(f"unknown pos {pos!r}", lineno)
            if parents_field == "-":
                parents: list[ConceptId] = []
            else:
                try:
                    parents = [int(p) for p in parents_field.split(",") if p]
                except ValueError:
                    raise ParseError(f"bad parent list {parents_field!r}", lineno) from None
            pending_parents[cid] = (lineno, pos, gloss.strip(), parents)
        elif kind == "S":
            parts = rest.split(" ", 2)
            if len(parts) < 3:
                raise ParseError("S record needs <concept-id> <language> <lemmas>", lineno)
            sid, language, lemma_field = parts
            try:
                cid = int(sid)
            except ValueError:
                raise ParseError(f"bad concept id {sid!r}", lineno) from None
            lemmas = [w for w in lemma_field.split("|") if w.strip()]
            if not lemmas:
                raise ParseError("synset needs at least one lemma", lineno)
            synset_lines.append((lineno, cid, validate_language(language), lemmas))
        else:
            raise ParseError(f"unknown record kind {kind!r}", lineno)

    known = set(ROOT_IDS.values()) | set(pending_parents)
    for cid, (lineno, pos, gloss, parents) in sorted(pending_parents.items()):
        for pid in parents:
            if pid not in known:
                raise ParseError(f"concept {cid} references dangling parent {pid}", lineno)

    # Parents may be declared in any order; insert roots-first by dependency.
    placed = set(ROOT_IDS.values())
    remaining = dict(pending_parents)
    while remaining:
        progressed = False
        for cid in sorted(remaining):
            lineno, pos, gloss, parents = remaining[cid]
            if all(p in placed for p in parents):
                resource.add_concept(Concept(cid, pos, gloss, frozenset(parents)))
                placed.add(cid)
                del remaining[cid]
                progressed = True
        if not progressed:
            # Everything left participates in (or hangs off) a parent cycle;
            # walk the declared parent links to name the actual loop.
            declared = {cid: rec[3] for cid, rec in remaining.items()}
            done: set[ConceptId] = set(placed)
            for cid in sorted(remaining):
                cycle = _find_cycle(
                    cid, lambda c: sorted(p for p in declared.get(c, ()) if p not in placed), done
                )
                if cycle:
                    raise CycleError(cycle)
            raise CycleError(sorted(remaining))  # unreachable fallback
    resource.check_acyclic()

    for lineno, cid, language, lemmas in synset_lines:
        if cid not in resource.concepts:
            raise ParseError(f"synset references unknown concept {cid}", lineno)
        for lemma in lemmas:
            try:
                resource.add_synset_lemma(cid, language, lemma)
            except DuplicateLexemeError as exc:
                raise ParseError(str(exc), lineno) from None
    return resource


def load_resource(path) -> LexicalResource:
    """Load and validate a lexicon file; see module docstring for the format."""
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
