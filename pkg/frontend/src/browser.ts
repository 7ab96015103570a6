import { ApiError, ServiceClient } from "./api.js";
import type {
    JsonLdDocument,
    JsonLdNode,
    JsonLdValue,
    MemberRef,
    ProvenanceRef,
} from "./types.js";

// The render endpoint is the single source of language-specific labels; the
// JSON-LD export is the single source of structure and provenance. The browser
// joins the two per entity, matching a rendered line to the exported property
// whose value sequence it displays.

export interface RenderedLine {
    label: string;
    fallback: boolean;
    values: string[];
}

export interface RenderedEntity {
    id: string;
    label: string;
    fallback: boolean;
    lines: RenderedLine[];
}

const HEADER = /^(#\d+) a (.*?)( \[fallback\])?$/;
const PROPERTY = /^ {2}(.*?)( \[fallback\])?: (.*)$/;

export function parseRender(text: string): RenderedEntity[] {
    const entities: RenderedEntity[] = [];
    for (const line of text.split("\n")) {
        if (!line) continue;
        const header = HEADER.exec(line);
        if (header) {
            entities.push({
                id: header[1],
                label: header[2],
                fallback: header[3] !== undefined,
                lines: [],
            });
            continue;
        }
        const prop = PROPERTY.exec(line);
        const current = entities[entities.length - 1];
        if (!prop || !current) throw new Error(`unparseable render line: ${line}`);
        current.lines.push({
            label: prop[1],
            fallback: prop[2] !== undefined,
            values: prop[3].split(" | "),
        });
    }
    return entities;
}

export interface ValueView {
    display: string;
    raw: string;
    sources: ProvenanceRef[];
}

export interface PropertyView {
    /** Context key ("p:d1:1") when the line matched an exported property. */
    key: string | null;
    label: string;
    fallback: boolean;
    values: ValueView[];
}

export interface EntityView {
    id: string;
    iri: string;
    etypeLabel: string;
    etypeFallback: boolean;
    etypeIri: string;
    members: MemberRef[];
    properties: PropertyView[];
}

function isValueList(value: unknown): value is JsonLdValue[] {
    return Array.isArray(value) && value.every((v) => v && typeof v === "object" && "@value" in v);
}

function propertyEntries(node: JsonLdNode): Array<[string, JsonLdValue[]]> {
    const entries: Array<[string, JsonLdValue[]]> = [];
    for (const [key, value] of Object.entries(node)) {
        if (key.startsWith("@") || key === "sm:members") continue;
        if (isValueList(value)) entries.push([key, value]);
    }
    return entries;
}

/**
 * Join one project's JSON-LD export with one rendered view of it.
 *
 * Entities pair by numeric id (`urn:strata:e:1` ↔ `#1`); within an entity a
 * rendered line pairs with the first still-unclaimed property whose displayed
 * value sequence equals the line's values. Lines that find no partner keep
 * their rendered values and an empty provenance list rather than being dropped.
 */
export function buildEntityViews(doc: JsonLdDocument, rendered: RenderedEntity[]): EntityView[] {
    const context = doc["@context"];
    const byId = new Map<string, JsonLdNode>();
    for (const node of doc["@graph"]) {
        const m = /^urn:strata:e:(\d+)$/.exec(node["@id"]);
        if (m) byId.set(`#${m[1]}`, node);
    }

    const views: EntityView[] = [];
    for (const entity of rendered) {
        const node = byId.get(entity.id);
        if (!node) throw new Error(`rendered entity ${entity.id} missing from export`);
        const available = propertyEntries(node);
        const claimed = new Set<string>();
        const properties: PropertyView[] = [];
        for (const line of entity.lines) {
            const found = available.find(
                ([key, values]) =>
                    !claimed.has(key) &&
                    values.length === line.values.length &&
                    values.every((v, i) => String(v["@value"]) === line.values[i]),
            );
            if (found) claimed.add(found[0]);
            properties.push({
                key: found ? found[0] : null,
                label: line.label,
                fallback: line.fallback,
                values: found
                    ? found[1].map((v, i) => ({
                          display: line.values[i],
                          raw: v["sm:raw"],
                          sources: v["sm:provenance"],
                      }))
                    : line.values.map((display) => ({ display, raw: display, sources: [] })),
            });
        }
        views.push({
            id: entity.id,
            iri: node["@id"],
            etypeLabel: entity.label,
            etypeFallback: entity.fallback,
            etypeIri: context[node["@type"]] ?? node["@type"],
            members: node["sm:members"],
            properties,
        });
    }
    return views;
}

export interface BrowserState {
    language: string;
    entities: EntityView[];
    /** True when the eg artifact does not exist yet (409 from the server). */
    stale: boolean;
    banner: string | null;
    busy: boolean;
}

/** State holder behind the graph browser; a language switch re-requests the
 *  rendered view and rebuilds the join, nothing is relabelled client-side. */
export class BrowserController {
    private readonly client: ServiceClient;
    private readonly projectId: string;
    private state: BrowserState = {
        language: "en",
        entities: [],
        stale: false,
        banner: null,
        busy: false,
    };
    private readonly listeners: Array<(state: BrowserState) => void> = [];

    constructor(client: ServiceClient, projectId: string, language = "en") {
        this.client = client;
        this.projectId = projectId;
        this.state.language = language;
    }

    snapshot(): BrowserState {
        return this.state;
    }

    onChange(listener: (state: BrowserState) => void): void {
        this.listeners.push(listener);
    }

    async load(): Promise<void> {
        this.patch({ busy: true });
        try {
            const doc = await this.client.entityGraph(this.projectId);
            const text = await this.client.render(this.projectId, this.state.language);
            this.patch({
                entities: buildEntityViews(doc, parseRender(text)),
                stale: false,
                banner: null,
                busy: false,
            });
        } catch (err) {
            if (err instanceof ApiError && err.status === 409) {
                this.patch({ entities: [], stale: true, busy: false });
            } else if (err instanceof ApiError) {
                this.patch({ banner: err.message, busy: false });
            } else {
                throw err;
            }
        }
    }

    async setLanguage(language: string): Promise<void> {
        this.patch({ language });
        await this.load();
    }

    private patch(partial: Partial<BrowserState>): void {
        this.state = { ...this.state, ...partial };
        for (const listener of this.listeners) listener(this.state);
    }
}
