import { ApiError, ServiceClient } from "./api.js";
import type {
    DecisionView,
    Phase,
    PhaseReport,
    ProjectSummary,
    Resolution,
} from "./types.js";
import { PHASES } from "./types.js";

export interface QueueGroup {
    phase: Phase;
    decisions: DecisionView[];
}

/** Pending decisions in pipeline order (leg, etg, eg); empty phases dropped,
 *  server order kept within a phase. */
export function groupByPhase(decisions: DecisionView[]): QueueGroup[] {
    const groups: QueueGroup[] = [];
    for (const phase of PHASES) {
        const matching = decisions.filter((d) => d.phase === phase);
        if (matching.length) groups.push({ phase, decisions: matching });
    }
    return groups;
}

/** First phase whose artifact is missing, or null when the pipeline is done. */
export function nextPhase(summary: ProjectSummary): Phase | null {
    for (const phase of PHASES) {
        if (!summary.phases[phase]) return phase;
    }
    return null;
}

export interface QueueState {
    summary: ProjectSummary | null;
    groups: QueueGroup[];
    /** Network-failure message; the screen shows it as a banner with a retry. */
    banner: string | null;
    /** Detail of the last server-side rejection (400/404/500). */
    notice: string | null;
    /** Decision ids the server named in the last 409 conflict. */
    blocking: string[];
    lastReport: PhaseReport | null;
    busy: boolean;
}

/**
 * State holder behind the decision queue screen.
 *
 * Every transition is driven by a server response — a submit never touches
 * local state until the POST is acknowledged, and each acknowledgment is
 * followed by a full refresh, so reloading the page reproduces the same view.
 */
export class QueueController {
    private readonly client: ServiceClient;
    private readonly projectId: string;
    private state: QueueState = {
        summary: null,
        groups: [],
        banner: null,
        notice: null,
        blocking: [],
        lastReport: null,
        busy: false,
    };
    private readonly listeners: Array<(state: QueueState) => void> = [];

    constructor(client: ServiceClient, projectId: string) {
        this.client = client;
        this.projectId = projectId;
    }

    snapshot(): QueueState {
        return this.state;
    }

    onChange(listener: (state: QueueState) => void): void {
        this.listeners.push(listener);
    }

    nextPhase(): Phase | null {
        return this.state.summary ? nextPhase(this.state.summary) : null;
    }

    /** Re-pull summary and pending decisions; the only way state gets content. */
    async refresh(): Promise<void> {
        this.patch({ busy: true });
        try {
            const summary = await this.client.getProject(this.projectId);
            const pending = await this.client.pendingDecisions(this.projectId);
            this.patch({
                summary,
                groups: groupByPhase(pending),
                banner: null,
                busy: false,
            });
        } catch (err) {
            this.fail(err);
        }
    }

    async submit(decisionId: string, resolution: Resolution): Promise<void> {
        this.patch({ busy: true, notice: null });
        try {
            await this.client.submitDecision(this.projectId, decisionId, resolution);
            this.patch({ blocking: [], busy: false });
        } catch (err) {
            this.fail(err);
            if (err instanceof ApiError && err.status === 0) return;
        }
        // refresh even after a rejection: stale queues are how conflicts happen
        await this.refresh();
    }

    async runNextPhase(): Promise<void> {
        const phase = this.nextPhase();
        if (!phase) return;
        this.patch({ busy: true, notice: null });
        try {
            const report = await this.client.runPhase(this.projectId, phase);
            this.patch({ lastReport: report, blocking: [], busy: false });
        } catch (err) {
            this.fail(err);
            if (err instanceof ApiError && err.status === 0) return;
        }
        await this.refresh();
    }

    private fail(err: unknown): void {
        if (!(err instanceof ApiError)) throw err;
        if (err.status === 409) {
            this.patch({ blocking: err.blocking, busy: false });
        } else if (err.status === 0) {
            this.patch({ banner: err.message, busy: false });
        } else {
            this.patch({ notice: err.message, busy: false });
        }
    }

    private patch(partial: Partial<QueueState>): void {
        this.state = { ...this.state, ...partial };
        for (const listener of this.listeners) listener(this.state);
    }
}
