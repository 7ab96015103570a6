import type {
    DecisionView,
    JsonLdDocument,
    Phase,
    PhaseReport,
    ProjectSummary,
    Resolution,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * A failed request against the service.
 *
 * `status` is the HTTP status code, or 0 when the service was unreachable.
 * `blocking` carries the decision ids the server reported for a 409 conflict
 * (empty for plain dependency errors and every other failure).
 */
export class ApiError extends Error {
    readonly status: number;
    readonly blocking: string[];

    constructor(status: number, detail: string, blocking: string[] = []) {
        super(detail);
        this.name = "ApiError";
        this.status = status;
        this.blocking = blocking;
    }
}

/**
 * Thin typed client over the service HTTP API.
 *
 * One method per documented endpoint, nothing else: the UI owns no state the
 * server cannot reproduce, so every method simply forwards and decodes.
 *
 * @example
 * ```typescript
 * const client = new ServiceClient("http://127.0.0.1:8000");
 * const pending = await client.pendingDecisions("vehicles");
 * await client.submitDecision("vehicles", pending[0].id, { action: "accept" });
 * ```
 */
export class ServiceClient {
    private readonly base: string;
    private readonly fetchImpl: FetchLike;

    constructor(base: string, fetchImpl?: FetchLike) {
        this.base = base.replace(/\/+$/, "");
        this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    }

    listProjects(): Promise<ProjectSummary[]> {
        return this.json<{ projects: ProjectSummary[] }>("GET", "/projects").then(
            (body) => body.projects,
        );
    }

    createProject(
        name: string,
        lexicon: string,
        config?: Record<string, unknown>,
    ): Promise<ProjectSummary> {
        const body: Record<string, unknown> = { name, lexicon };
        if (config !== undefined) body.config = config;
        return this.json("POST", "/projects", body);
    }

    getProject(projectId: string): Promise<ProjectSummary> {
        return this.json("GET", `/projects/${encodeURIComponent(projectId)}`);
    }

    addDataset(projectId: string, csv: string, meta: string): Promise<string> {
        return this.json<{ dataset: string }>(
            "POST",
            `/projects/${encodeURIComponent(projectId)}/datasets`,
            { csv, meta },
        ).then((body) => body.dataset);
    }

    runPhase(projectId: string, phase: Phase): Promise<PhaseReport> {
        return this.json(
            "POST",
            `/projects/${encodeURIComponent(projectId)}/phases/${phase}`,
        );
    }

    pendingDecisions(projectId: string): Promise<DecisionView[]> {
        return this.json<{ decisions: DecisionView[] }>(
            "GET",
            `/projects/${encodeURIComponent(projectId)}/decisions?status=pending`,
        ).then((body) => body.decisions);
    }

    allDecisions(projectId: string): Promise<DecisionView[]> {
        return this.json<{ decisions: DecisionView[] }>(
            "GET",
            `/projects/${encodeURIComponent(projectId)}/decisions`,
        ).then((body) => body.decisions);
    }

    submitDecision(
        projectId: string,
        decisionId: string,
        resolution: Resolution,
    ): Promise<DecisionView> {
        return this.json(
            "POST",
            `/projects/${encodeURIComponent(projectId)}/decisions/${encodeURIComponent(decisionId)}`,
            resolution,
        );
    }

    exportArtifact(
        projectId: string,
        what: Phase,
        format: "tsv" | "ttl" | "jsonld",
    ): Promise<string> {
        return this.text(
            "GET",
            `/projects/${encodeURIComponent(projectId)}/export/${what}?format=${format}`,
        );
    }

    entityGraph(projectId: string): Promise<JsonLdDocument> {
        return this.exportArtifact(projectId, "eg", "jsonld").then(
            (text) => JSON.parse(text) as JsonLdDocument,
        );
    }

    render(projectId: string, lang: string): Promise<string> {
        return this.text(
            "GET",
            `/projects/${encodeURIComponent(projectId)}/render?lang=${encodeURIComponent(lang)}`,
        );
    }

    private async request(method: string, path: string, body?: unknown): Promise<Response> {
        let response: Response;
        const init: RequestInit = { method };
        if (body !== undefined) {
            init.headers = { "content-type": "application/json" };
            init.body = JSON.stringify(body);
        }
        try {
            response = await this.fetchImpl(this.base + path, init);
        } catch (err) {
            throw new ApiError(0, `service unreachable: ${String(err)}`);
        }
        if (!response.ok) {
            let detail = `${response.status} ${response.statusText}`;
            let blocking: string[] = [];
            try {
                const payload = (await response.json()) as {
                    detail?: string;
                    blocking?: string[];
                };
                if (typeof payload.detail === "string") detail = payload.detail;
                if (Array.isArray(payload.blocking)) blocking = payload.blocking;
            } catch {
                // non-JSON error body; keep the status line
            }
            throw new ApiError(response.status, detail, blocking);
        }
        return response;
    }

    private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
        const response = await this.request(method, path, body);
        return (await response.json()) as T;
    }

    private async text(method: string, path: string, body?: unknown): Promise<string> {
        const response = await this.request(method, path, body);
        return response.text();
    }
}
