// Wire types for the service HTTP API. Every interface here mirrors a JSON
// payload the server emits verbatim; the client never extends or reshapes them.

export type Phase = "leg" | "etg" | "eg";

export const PHASES: Phase[] = ["leg", "etg", "eg"];

export interface DatasetInfo {
    id: string;
    name: string;
    language: string;
}

export interface ProjectSummary {
    id: string;
    name: string;
    config: Record<string, unknown>;
    datasets: DatasetInfo[];
    phases: Record<Phase, boolean>;
}

export interface PhaseReport {
    phase: Phase;
    complete: boolean;
    counts: Record<string, number>;
    pending: string[];
}

/** Sense decisions move pending/new-concept-requested → confirmed/overridden;
 *  match and merge candidates move suggested → accepted/rejected. */
export type DecisionStatus =
    | "pending"
    | "new-concept-requested"
    | "auto"
    | "confirmed"
    | "overridden"
    | "suggested"
    | "accepted"
    | "rejected";

export interface SenseCandidate {
    concept: number;
    score: number;
    gloss: string;
}

export interface SenseSubject {
    surface: string;
    lemma: string;
    language: string;
    dataset: string;
    locus: string;
}

export interface MatchSide {
    dataset: string;
    element: string | number;
    concept: number;
}

export interface MatchSubject {
    role: "etype" | "prop";
    left: MatchSide;
    right: MatchSide;
    similarity: number;
}

export interface MergeSubject {
    left: string;
    right: string;
    evidence: {
        kind: string;
        property: string | null;
        value: string | null;
        score: number;
    };
}

interface DecisionBase {
    id: string;
    status: DecisionStatus;
    candidates: SenseCandidate[];
    chosen: number | null;
}

export interface SenseDecisionView extends DecisionBase {
    kind: "sense";
    phase: "leg";
    subject: SenseSubject;
}

export interface MatchDecisionView extends DecisionBase {
    kind: "match";
    phase: "etg";
    subject: MatchSubject;
}

export interface MergeDecisionView extends DecisionBase {
    kind: "merge";
    phase: "eg";
    subject: MergeSubject;
}

export type DecisionView = SenseDecisionView | MatchDecisionView | MergeDecisionView;

/** Bodies accepted by POST /projects/{id}/decisions/{did}. */
export type Resolution =
    | { action: "choose"; concept: number; override?: boolean }
    | {
          action: "enrich";
          new_concept: {
              gloss: string;
              pos: string;
              parent: number;
              lemma: string;
              language: string;
          };
      }
    | {
          action: "enrich";
          new_lexeme: { lemma: string; language: string; concept: number };
      }
    | { action: "accept" }
    | { action: "reject" };

// -- JSON-LD entity export ---------------------------------------------------

export interface ProvenanceRef {
    dataset: string;
    row: number;
    column: number;
}

export interface MemberRef {
    dataset: string;
    row: number;
}

export interface JsonLdValue {
    "@value": string | number | boolean;
    "@type"?: string;
    "sm:raw": string;
    "sm:provenance": ProvenanceRef[];
}

export interface JsonLdNode {
    "@id": string;
    "@type": string;
    "sm:members": MemberRef[];
    [property: string]: unknown;
}

export interface JsonLdDocument {
    "@context": Record<string, string>;
    "@graph": JsonLdNode[];
}
