import { ServiceClient } from "./api.js";
import { BrowserController } from "./browser.js";
import type { BrowserState, EntityView } from "./browser.js";
import { QueueController } from "./queue.js";
import type { QueueState } from "./queue.js";
import type {
    DecisionView,
    MatchDecisionView,
    MergeDecisionView,
    SenseDecisionView,
} from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function button(label: string, onClick: () => void, className = "action"): HTMLButtonElement {
    const node = el("button", className, label);
    node.addEventListener("click", onClick);
    return node;
}

class QueueScreen {
    private readonly container: HTMLElement;
    private readonly controller: QueueController;

    constructor(container: HTMLElement, controller: QueueController) {
        this.container = container;
        this.controller = controller;
        controller.onChange((state) => this.render(state));
        this.render(controller.snapshot());
    }

    private render(state: QueueState): void {
        this.container.replaceChildren();
        if (state.banner) {
            const banner = el("div", "banner error", state.banner);
            banner.append(" ", button("retry", () => void this.controller.refresh()));
            this.container.append(banner);
        }
        if (state.notice) this.container.append(el("div", "banner notice", state.notice));
        if (state.blocking.length) {
            const box = el("div", "banner conflict", "blocked by pending decisions: ");
            for (const id of state.blocking) box.append(el("code", "chip", id));
            this.container.append(box);
        }
        if (state.lastReport) {
            const r = state.lastReport;
            const counts = Object.entries(r.counts)
                .map(([k, v]) => `${k} ${v}`)
                .join(", ");
            this.container.append(
                el(
                    "div",
                    "report",
                    `${r.phase}: ${r.complete ? "complete" : "blocked"} (${counts})`,
                ),
            );
        }

        if (!state.groups.length) {
            const empty = el("div", "empty", "no pending decisions");
            const phase = this.controller.nextPhase();
            if (phase) {
                empty.append(
                    " ",
                    button(`run ${phase}`, () => void this.controller.runNextPhase(), "primary"),
                );
            } else if (state.summary) {
                empty.append(" ", el("span", undefined, "— pipeline complete"));
            }
            this.container.append(empty);
            return;
        }

        for (const group of state.groups) {
            const section = el("section", "phase-group");
            section.append(el("h3", undefined, `${group.phase} decisions`));
            for (const decision of group.decisions) section.append(this.card(decision));
            this.container.append(section);
        }
    }

    private card(decision: DecisionView): HTMLElement {
        switch (decision.kind) {
            case "sense":
                return this.senseCard(decision);
            case "match":
                return this.matchCard(decision);
            case "merge":
                return this.mergeCard(decision);
        }
    }

    private senseCard(decision: SenseDecisionView): HTMLElement {
        const s = decision.subject;
        const card = el("article", "decision sense");
        card.append(el("h4", undefined, decision.id));
        card.append(
            el(
                "p",
                "subject",
                `“${s.surface}” (${s.lemma}, ${s.language}) — dataset ${s.dataset}, ${s.locus}`,
            ),
        );
        for (const candidate of decision.candidates) {
            const row = el("div", "candidate");
            row.append(
                button(`choose ${candidate.concept}`, () =>
                    void this.controller.submit(decision.id, {
                        action: "choose",
                        concept: candidate.concept,
                    }),
                ),
                el("span", "gloss", ` ${candidate.gloss} `),
                el("span", "score", `(${candidate.score.toFixed(4)})`),
            );
            card.append(row);
        }
        card.append(this.enrichForm(decision));
        return card;
    }

    private enrichForm(decision: SenseDecisionView): HTMLElement {
        const s = decision.subject;
        const details = el("details", "enrich");
        // a request with no candidates is exactly the create-concept case
        details.open = decision.status === "new-concept-requested";
        details.append(el("summary", undefined, "create a new concept"));
        const form = el("form");
        const gloss = el("input");
        gloss.placeholder = "gloss";
        const lemma = el("input");
        lemma.value = s.lemma;
        const language = el("input");
        language.value = s.language;
        language.size = 4;
        const pos = el("select");
        for (const option of ["noun", "verb", "adjective"]) {
            pos.append(new Option(option, option));
        }
        const parent = el("input");
        parent.type = "number";
        parent.placeholder = "parent concept id";
        form.append(gloss, lemma, language, pos, parent, button("submit", () => {}));
        form.addEventListener("submit", (event) => {
            event.preventDefault();
            void this.controller.submit(decision.id, {
                action: "enrich",
                new_concept: {
                    gloss: gloss.value,
                    pos: pos.value,
                    parent: Number(parent.value),
                    lemma: lemma.value,
                    language: language.value,
                },
            });
        });
        details.append(form);
        return details;
    }

    private matchCard(decision: MatchDecisionView): HTMLElement {
        const s = decision.subject;
        const card = el("article", "decision match");
        card.append(el("h4", undefined, decision.id));
        card.append(
            el(
                "p",
                "subject",
                `${s.role}: ${s.left.dataset}/${s.left.element} (c${s.left.concept}) ↔ ` +
                    `${s.right.dataset}/${s.right.element} (c${s.right.concept}) — ` +
                    `similarity ${s.similarity.toFixed(4)}`,
            ),
        );
        card.append(this.acceptReject(decision.id));
        return card;
    }

    private mergeCard(decision: MergeDecisionView): HTMLElement {
        const s = decision.subject;
        const evidence = s.evidence;
        const card = el("article", "decision merge");
        card.append(el("h4", undefined, decision.id));
        card.append(
            el(
                "p",
                "subject",
                `${s.left} ↔ ${s.right} — ${evidence.kind}` +
                    (evidence.property ? ` on ${evidence.property}` : "") +
                    (evidence.value ? ` (“${evidence.value}”)` : "") +
                    `, score ${evidence.score.toFixed(4)}`,
            ),
        );
        card.append(this.acceptReject(decision.id));
        return card;
    }

    private acceptReject(decisionId: string): HTMLElement {
        const row = el("div", "actions");
        row.append(
            button("accept", () => void this.controller.submit(decisionId, { action: "accept" })),
            button("reject", () => void this.controller.submit(decisionId, { action: "reject" })),
        );
        return row;
    }
}

class BrowserScreen {
    private readonly container: HTMLElement;
    private readonly controller: BrowserController;
    private readonly languages: string[];
    private readonly showQueue: () => void;

    constructor(
        container: HTMLElement,
        controller: BrowserController,
        languages: string[],
        showQueue: () => void,
    ) {
        this.container = container;
        this.controller = controller;
        this.languages = languages;
        this.showQueue = showQueue;
        controller.onChange((state) => this.render(state));
        this.render(controller.snapshot());
    }

    private render(state: BrowserState): void {
        this.container.replaceChildren();
        if (state.banner) this.container.append(el("div", "banner error", state.banner));

        const bar = el("div", "language-bar", "language: ");
        const select = el("select");
        for (const lang of this.languages) {
            select.append(new Option(lang, lang, undefined, lang === state.language));
        }
        select.addEventListener("change", () => void this.controller.setLanguage(select.value));
        bar.append(select);
        this.container.append(bar);

        if (state.stale) {
            const empty = el("div", "empty", "no entity graph yet — ");
            empty.append(button("open the pipeline", this.showQueue, "link"));
            this.container.append(empty);
            return;
        }
        for (const entity of state.entities) this.container.append(this.entityCard(entity));
    }

    private entityCard(entity: EntityView): HTMLElement {
        const card = el("article", "entity");
        const header = el("h4", undefined, `${entity.id} `);
        const chip = el("span", "chip etype", entity.etypeLabel);
        chip.title = entity.etypeIri;
        if (entity.etypeFallback) chip.classList.add("fallback");
        header.append(chip);
        for (const member of entity.members) {
            header.append(" ", el("span", "chip member", `${member.dataset}:${member.row}`));
        }
        card.append(header);

        const table = el("table", "values");
        for (const property of entity.properties) {
            const row = el("tr", property.values.length > 1 ? "conflict" : undefined);
            const labelCell = el("td", "label", property.label);
            if (property.fallback) labelCell.append(" ", el("span", "chip fallback", "fallback"));
            row.append(labelCell);
            const valueCell = el("td");
            for (const value of property.values) {
                const box = el("details", "value");
                box.append(el("summary", undefined, value.display));
                for (const source of value.sources) {
                    box.append(
                        el(
                            "span",
                            "chip provenance",
                            `${source.dataset} r${source.row} c${source.column}`,
                        ),
                    );
                }
                valueCell.append(box);
            }
            row.append(valueCell);
            table.append(row);
        }
        card.append(table);
        return card;
    }
}

class App {
    private readonly root: HTMLElement;
    private readonly client: ServiceClient;

    constructor(root: HTMLElement, apiBase: string) {
        this.root = root;
        this.client = new ServiceClient(apiBase);
        window.addEventListener("hashchange", () => void this.route());
        void this.route();
    }

    private async route(): Promise<void> {
        const match = /^#\/p\/([^/]+)/.exec(location.hash);
        if (match) {
            await this.projectPage(decodeURIComponent(match[1]));
        } else {
            await this.projectList();
        }
    }

    private async projectList(): Promise<void> {
        this.root.replaceChildren(el("h2", undefined, "projects"));
        try {
            const projects = await this.client.listProjects();
            if (!projects.length) {
                this.root.append(el("div", "empty", "no projects on this server"));
            }
            const list = el("ul", "projects");
            for (const project of projects) {
                const item = el("li");
                const link = el("a", undefined, project.name);
                link.href = `#/p/${encodeURIComponent(project.id)}`;
                const phases = Object.entries(project.phases)
                    .filter(([, done]) => done)
                    .map(([phase]) => phase);
                item.append(link, el("span", "meta", ` ${phases.join(" ") || "not started"}`));
                list.append(item);
            }
            this.root.append(list);
        } catch (err) {
            const banner = el("div", "banner error", String(err));
            banner.append(" ", button("retry", () => void this.projectList()));
            this.root.append(banner);
        }
    }

    private async projectPage(projectId: string): Promise<void> {
        this.root.replaceChildren();
        const heading = el("h2", undefined, projectId);
        const back = el("a", "back", "all projects");
        back.href = "#/";
        const tabs = el("nav", "tabs");
        const queueTab = button("decision queue", () => show("queue"), "tab");
        const browserTab = button("entity browser", () => show("browser"), "tab");
        tabs.append(queueTab, browserTab);
        const queuePane = el("div", "pane");
        const browserPane = el("div", "pane");
        this.root.append(back, heading, tabs, queuePane, browserPane);

        const show = (which: "queue" | "browser") => {
            queuePane.style.display = which === "queue" ? "" : "none";
            browserPane.style.display = which === "browser" ? "" : "none";
            queueTab.classList.toggle("active", which === "queue");
            browserTab.classList.toggle("active", which === "browser");
            if (which === "browser") void browserController.load();
        };

        const queueController = new QueueController(this.client, projectId);
        new QueueScreen(queuePane, queueController);
        const languages = ["en"];
        try {
            const summary = await this.client.getProject(projectId);
            for (const dataset of summary.datasets) {
                if (!languages.includes(dataset.language)) languages.push(dataset.language);
            }
        } catch {
            // summary fetch failures resurface through the queue controller below
        }
        const browserController = new BrowserController(this.client, projectId);
        new BrowserScreen(browserPane, browserController, languages, () => show("queue"));

        show("queue");
        await queueController.refresh();
    }
}

const params = new URLSearchParams(location.search);
new App(
    document.getElementById("app") as HTMLElement,
    params.get("api") ?? "http://127.0.0.1:8000",
);
