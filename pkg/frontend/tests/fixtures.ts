// Canned service payloads, captured verbatim from a live server running the
// vehicle-registration fixture. If the wire format moves, re-capture these.

import type { FetchLike } from "../src/api.js";
import type {
    DecisionView,
    JsonLdDocument,
    ProjectSummary,
} from "../src/types.js";

export const SUMMARY: ProjectSummary = {
    id: "vehicles",
    name: "vehicles",
    config: {
        default_language: "en",
        wsd_context_weight: 0.7,
        wsd_rank_weight: 0.3,
        wsd_auto_threshold: 0.6,
        wsd_auto_margin: 0.2,
        match_floor: 0.7,
        merge_floor: 0.5,
        merge_min_shared: 2,
        identifying_concepts: [22],
    },
    datasets: [
        { id: "d1", name: "Car", language: "en" },
        { id: "d2", name: "Vettura", language: "it" },
        { id: "d3", name: "Vehicle", language: "en" },
    ],
    phases: { leg: false, etg: false, eg: false },
};

export const PENDING_SENSES: DecisionView[] = [
    {
        id: "sense:d2:col:0",
        kind: "sense",
        phase: "leg",
        status: "pending",
        subject: {
            surface: "Targa",
            lemma: "targa",
            language: "it",
            dataset: "d2",
            locus: "col:0",
        },
        candidates: [
            { concept: 15, score: 0.772222, gloss: "a car with a removable roof panel" },
            { concept: 22, score: 0.766667, gloss: "a plate identifying a registered vehicle" },
        ],
        chosen: null,
    },
    {
        id: "sense:d2:col:2",
        kind: "sense",
        phase: "leg",
        status: "new-concept-requested",
        subject: {
            surface: "Tipo di corpo",
            lemma: "tipo di corpo",
            language: "it",
            dataset: "d2",
            locus: "col:2",
        },
        candidates: [],
        chosen: null,
    },
];

export const PENDING_MATCHES: DecisionView[] = [
    {
        id: "match:d1:table|d3:table",
        kind: "match",
        phase: "etg",
        status: "suggested",
        subject: {
            role: "etype",
            left: { dataset: "d1", element: "table", concept: 12 },
            right: { dataset: "d3", element: "table", concept: 11 },
            similarity: 0.857143,
        },
        candidates: [],
        chosen: null,
    },
    {
        id: "match:d2:table|d3:table",
        kind: "match",
        phase: "etg",
        status: "suggested",
        subject: {
            role: "etype",
            left: { dataset: "d2", element: "table", concept: 12 },
            right: { dataset: "d3", element: "table", concept: 11 },
            similarity: 0.857143,
        },
        candidates: [],
        chosen: null,
    },
];

export const PENDING_MERGE: DecisionView = {
    id: "merge:d1:0|d2:0",
    kind: "merge",
    phase: "eg",
    status: "suggested",
    subject: {
        left: "d1:0",
        right: "d2:0",
        evidence: {
            kind: "identifying-match",
            property: "p:d1:0",
            value: "xk9q7",
            score: 1.0,
        },
    },
    candidates: [],
    chosen: null,
};

export const RENDER_EN =
    "#1 a car\n" +
    "  feature: Armrest\n" +
    "  fuel capacity: 62\n" +
    "  fuel type: Petrol\n" +
    "  model date: 2020-11-25\n" +
    "  nameplate: FP372MK\n" +
    "  speed: 150 | 158 | 155.0\n" +
    "  Tipo di corpo [fallback]: Coupé\n";

export const RENDER_IT =
    "#1 a vettura\n" +
    "  schema:fuelCapacity [fallback]: 62\n" +
    "  schema:fuelType [fallback]: Petrol\n" +
    "  schema:modelDate [fallback]: 2020-11-25\n" +
    "  targa: FP372MK\n" +
    "  tipo di corpo: Coupé\n" +
    "  velocità: 150 | 158 | 155.0\n" +
    "  vso:feature [fallback]: Armrest\n";

export const EG_JSONLD: JsonLdDocument = {
    "@context": {
        sm: "urn:strata:meta:",
        xsd: "http://www.w3.org/2001/XMLSchema#",
        "e:12": "urn:strata:c:12",
        "p:d1:0": "urn:strata:c:22",
        "p:d1:1": "urn:strata:c:21",
        "p:d1:2": "urn:strata:c:23",
        "p:d1:3": "urn:strata:c:24",
        "p:d1:4": "urn:strata:c:25",
        "p:d2:2": "urn:strata:c:27",
        "p:d3:1": "urn:strata:c:26",
    },
    "@graph": [
        {
            "@id": "urn:strata:e:1",
            "@type": "e:12",
            "sm:members": [
                { dataset: "d1", row: 0 },
                { dataset: "d2", row: 0 },
                { dataset: "d3", row: 0 },
            ],
            "p:d1:0": [
                {
                    "@value": "FP372MK",
                    "sm:raw": "FP372MK",
                    "sm:provenance": [
                        { dataset: "d1", row: 0, column: 0 },
                        { dataset: "d2", row: 0, column: 0 },
                        { dataset: "d3", row: 0, column: 0 },
                    ],
                },
            ],
            "p:d1:1": [
                {
                    "@value": "150",
                    "@type": "xsd:decimal",
                    "sm:raw": "150",
                    "sm:provenance": [{ dataset: "d1", row: 0, column: 1 }],
                },
                {
                    "@value": "158",
                    "@type": "xsd:decimal",
                    "sm:raw": "158",
                    "sm:provenance": [{ dataset: "d2", row: 0, column: 1 }],
                },
                {
                    "@value": "155.0",
                    "@type": "xsd:decimal",
                    "sm:raw": "155.0",
                    "sm:provenance": [{ dataset: "d3", row: 0, column: 3 }],
                },
            ],
            "p:d1:2": [
                {
                    "@value": 62,
                    "@type": "xsd:integer",
                    "sm:raw": "62",
                    "sm:provenance": [{ dataset: "d1", row: 0, column: 2 }],
                },
            ],
            "p:d1:3": [
                {
                    "@value": "Petrol",
                    "sm:raw": "Petrol",
                    "sm:provenance": [{ dataset: "d1", row: 0, column: 3 }],
                },
            ],
            "p:d1:4": [
                {
                    "@value": "2020-11-25",
                    "@type": "xsd:date",
                    "sm:raw": "2020-11-25",
                    "sm:provenance": [
                        { dataset: "d1", row: 0, column: 4 },
                        { dataset: "d3", row: 0, column: 2 },
                    ],
                },
            ],
            "p:d2:2": [
                {
                    "@value": "Coupé",
                    "sm:raw": "Coupé",
                    "sm:provenance": [{ dataset: "d2", row: 0, column: 2 }],
                },
            ],
            "p:d3:1": [
                {
                    "@value": "Armrest",
                    "sm:raw": "Armrest",
                    "sm:provenance": [{ dataset: "d3", row: 0, column: 1 }],
                },
            ],
        },
    ],
};

export interface RecordedCall {
    method: string;
    path: string;
    body?: unknown;
}

export interface StubResponse {
    status?: number;
    json?: unknown;
    text?: string;
}

/** A fetch stand-in: the handler maps a request to a response, `undefined`
 *  means "network down". Every request is recorded for assertions. */
export function fakeFetch(
    handler: (call: RecordedCall) => StubResponse | undefined,
): { fetchImpl: FetchLike; calls: RecordedCall[] } {
    const calls: RecordedCall[] = [];
    const fetchImpl: FetchLike = async (input, init) => {
        const url = new URL(input);
        const call: RecordedCall = {
            method: init?.method ?? "GET",
            path: url.pathname + url.search,
        };
        if (typeof init?.body === "string") call.body = JSON.parse(init.body);
        calls.push(call);
        const out = handler(call);
        if (!out) throw new TypeError("fetch failed");
        const isText = out.text !== undefined;
        return new Response(isText ? out.text : JSON.stringify(out.json), {
            status: out.status ?? 200,
            headers: {
                "content-type": isText ? "text/plain; charset=utf-8" : "application/json",
            },
        });
    };
    return { fetchImpl, calls };
}
