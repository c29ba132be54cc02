// DOM application: pending-queue browser, query view with program and
// sketch editors, and the experiment progress dashboard.

import { AnnotationClient } from "./api.js";
import { FUNCTIONS } from "./mr.js";
import { SketchBuilder, validatePayload } from "./validate.js";
import type { AnnotationKind, ExperimentStatus, PendingQuery } from "./types.js";

const PREVIEW_ROWS = 12;

export interface PollerHooks {
  onQueries(queries: PendingQuery[]): void;
  onStatus(status: ExperimentStatus): void;
  onConnectionChange(up: boolean): void;
}

/** Polls the service with exponential backoff while it is unreachable. */
export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private delayMs: number;
  private stopped = false;

  constructor(
    private readonly client: AnnotationClient,
    private readonly hooks: PollerHooks,
    private readonly baseDelayMs = 1500,
    private readonly maxDelayMs = 15000
  ) {
    this.delayMs = baseDelayMs;
  }

  async tick(): Promise<void> {
    try {
      const [queries, status] = await Promise.all([
        this.client.pendingQueries(),
        this.client.experimentStatus(),
      ]);
      this.hooks.onConnectionChange(true);
      this.delayMs = this.baseDelayMs;
      this.hooks.onQueries(queries);
      this.hooks.onStatus(status);
    } catch {
      this.hooks.onConnectionChange(false);
      this.delayMs = Math.min(this.delayMs * 2, this.maxDelayMs);
    }
  }

  start(): void {
    this.stopped = false;
    const loop = async () => {
      if (this.stopped) return;
      await this.tick();
      if (!this.stopped) {
        this.timer = setTimeout(loop, this.delayMs);
      }
    };
    void loop();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private queries: PendingQuery[] = [];
  private selected: PendingQuery | null = null;
  private status: ExperimentStatus | null = null;
  private accuracyHistory: { iteration: number; test: number }[] = [];
  private connectionUp = true;
  private expandedTable = false;
  private poller: Poller;

  constructor(private readonly root: HTMLElement, private readonly client: AnnotationClient) {
    this.poller = new Poller(client, {
      onQueries: (queries) => this.setQueries(queries),
      onStatus: (status) => this.setStatus(status),
      onConnectionChange: (up) => {
        if (up !== this.connectionUp) {
          this.connectionUp = up;
          this.render();
        }
      },
    });
  }

  start(): void {
    this.render();
    this.poller.start();
  }

  private setQueries(queries: PendingQuery[]): void {
    this.queries = queries;
    if (this.selected && !queries.some((q) => q.query_id === this.selected!.query_id)) {
      // resolved elsewhere: drop the stale selection
      this.selected = null;
    }
    this.render();
  }

  private setStatus(status: ExperimentStatus): void {
    this.status = status;
    const test = status.accuracies?.test;
    if (test !== undefined && test !== null) {
      const last = this.accuracyHistory[this.accuracyHistory.length - 1];
      if (!last || last.iteration !== status.iteration || last.test !== test) {
        this.accuracyHistory.push({ iteration: status.iteration, test });
      }
    }
    this.render();
  }

  private render(): void {
    this.root.replaceChildren();
    if (!this.connectionUp) {
      this.root.appendChild(
        el("div", "banner error", "annotation service unreachable, retrying...")
      );
    }
    this.root.appendChild(this.renderDashboard());
    const main = el("div", "columns");
    main.appendChild(this.renderQueue());
    main.appendChild(this.selected ? this.renderQueryView(this.selected) : this.renderEmptyState());
    this.root.appendChild(main);
  }

  private renderDashboard(): HTMLElement {
    const panel = el("div", "dashboard");
    const status = this.status;
    const state = status ? status.state : "connecting";
    panel.appendChild(el("span", "badge state", `state: ${state}`));
    if (status) {
      panel.appendChild(el("span", "badge", `iteration ${status.iteration}`));
      panel.appendChild(el("span", "badge pending", `pending ${status.pending_count}`));
    }
    if (this.accuracyHistory.length) {
      panel.appendChild(this.renderAccuracyChart());
    }
    if (state === "done" && status?.accuracies) {
      const summary = el("div", "final-card");
      summary.appendChild(el("strong", undefined, "experiment finished"));
      for (const [split, value] of Object.entries(status.accuracies)) {
        if (typeof value === "number") {
          summary.appendChild(el("div", undefined, `${split}: ${(value * 100).toFixed(1)}%`));
        }
      }
      panel.appendChild(summary);
    }
    if (state === "idle" && !this.queries.length) {
      panel.appendChild(el("div", "muted", "no experiment running"));
    }
    return panel;
  }

  private renderAccuracyChart(): HTMLElement {
    const width = 260;
    const height = 80;
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("width", String(width));
    svg.setAttribute("height", String(height));
    svg.setAttribute("class", "chart");
    const points = this.accuracyHistory;
    const barWidth = Math.min(40, width / Math.max(points.length, 1) - 8);
    points.forEach((point, i) => {
      const barHeight = Math.max(2, point.test * (height - 20));
      const rect = document.createElementNS("http://www.w3.org/2000/svg", "rect");
      rect.setAttribute("x", String(8 + i * (barWidth + 8)));
      rect.setAttribute("y", String(height - barHeight - 14));
      rect.setAttribute("width", String(barWidth));
      rect.setAttribute("height", String(barHeight));
      rect.setAttribute("class", "bar");
      svg.appendChild(rect);
      const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
      label.setAttribute("x", String(8 + i * (barWidth + 8) + barWidth / 2));
      label.setAttribute("y", String(height - 2));
      label.setAttribute("text-anchor", "middle");
      label.setAttribute("class", "bar-label");
      label.textContent = `${(point.test * 100).toFixed(0)}%`;
      svg.appendChild(label);
    });
    const wrap = el("div", "chart-wrap");
    wrap.appendChild(el("div", "muted", "test accuracy by round"));
    wrap.appendChild(svg);
    return wrap;
  }

  private renderQueue(): HTMLElement {
    const panel = el("div", "queue");
    const header = el("div", "queue-header");
    header.appendChild(el("strong", undefined, "pending queries"));
    header.appendChild(el("span", "badge count", String(this.queries.length)));
    panel.appendChild(header);
    if (!this.queries.length) {
      panel.appendChild(el("div", "muted", "nothing to annotate"));
      return panel;
    }
    const list = el("ul", "query-list");
    for (const query of this.queries) {
      const item = el("li", "query-item");
      if (this.selected?.query_id === query.query_id) item.classList.add("selected");
      item.appendChild(el("div", "utterance", query.utterance));
      item.appendChild(
        el("div", "meta", `${query.example_id} · table ${query.table_id} · round ${query.iteration}`)
      );
      item.addEventListener("click", () => {
        this.selected = query;
        this.expandedTable = false;
        this.render();
      });
      list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
  }

  private renderEmptyState(): HTMLElement {
    const panel = el("div", "query-view muted");
    panel.appendChild(el("div", undefined, "select a query to annotate"));
    return panel;
  }

  private renderQueryView(query: PendingQuery): HTMLElement {
    const panel = el("div", "query-view");
    panel.appendChild(el("h2", undefined, query.utterance));
    panel.appendChild(
      el("div", "meta", `expected answer: ${JSON.stringify(query.answer)}`)
    );
    panel.appendChild(this.renderTable(query));

    const editorState: { kind: AnnotationKind; text: string } = {
      kind: query.allowed_kinds[0] ?? "full_mr",
      text: "",
    };

    const candidates = el("div", "candidates");
    candidates.appendChild(el("strong", undefined, "parser suggestions"));
    for (const candidate of query.candidates) {
      const row = el("div", "candidate");
      row.appendChild(el("code", undefined, candidate.text));
      row.appendChild(el("span", "prob", `${(candidate.probability * 100).toFixed(1)}%`));
      row.addEventListener("click", () => {
        editorState.kind = "full_mr";
        editorState.text = candidate.text;
        renderEditor();
      });
      candidates.appendChild(row);
    }
    panel.appendChild(candidates);

    const editor = el("div", "editor");
    panel.appendChild(editor);

    const sketchBuilder = new SketchBuilder();

    const renderEditor = () => {
      editor.replaceChildren();
      const tabs = el("div", "tabs");
      for (const kind of query.allowed_kinds) {
        const tab = el(
          "button",
          `tab${editorState.kind === kind ? " active" : ""}`,
          kind === "full_mr" ? "full program" : "operator sketch"
        );
        tab.addEventListener("click", () => {
          editorState.kind = kind;
          renderEditor();
        });
        tabs.appendChild(tab);
      }
      editor.appendChild(tabs);

      const feedback = el("div", "feedback");
      const setFeedback = (text: string, kind: "error" | "ok" | "info") => {
        feedback.textContent = text;
        feedback.className = `feedback ${kind}`;
      };

      let currentPayload: () => string;
      if (editorState.kind === "full_mr") {
        const area = el("textarea", "mr-input") as HTMLTextAreaElement;
        area.value = editorState.text;
        area.rows = 3;
        area.placeholder = "(filter_eq all_rows `2007' `Year') (count v0)";
        area.addEventListener("input", () => {
          editorState.text = area.value;
          const verdict = validatePayload(query, "full_mr", area.value);
          if (verdict.status === "valid") setFeedback("looks valid", "ok");
          else if (verdict.status === "unverified") setFeedback(verdict.reason, "info");
          else setFeedback(verdict.reason, "error");
        });
        editor.appendChild(area);
        currentPayload = () => area.value;
      } else {
        const chips = el("div", "chips");
        const chosen = el("div", "chosen");
        const refreshChosen = () => {
          chosen.replaceChildren();
          chosen.appendChild(el("span", "muted", "sketch: "));
          sketchBuilder.ops.forEach((op) => chosen.appendChild(el("span", "chip picked", op)));
          if (sketchBuilder.ops.length) {
            const undo = el("button", "chip undo", "remove last");
            undo.addEventListener("click", () => {
              sketchBuilder.removeLast();
              refreshChosen();
            });
            chosen.appendChild(undo);
          }
        };
        for (const op of FUNCTIONS) {
          const chip = el("button", "chip", op);
          chip.addEventListener("click", () => {
            sketchBuilder.add(op);
            refreshChosen();
          });
          chips.appendChild(chip);
        }
        refreshChosen();
        editor.appendChild(chips);
        editor.appendChild(chosen);
        currentPayload = () => sketchBuilder.payload();
      }

      const submit = el("button", "submit", "submit annotation");
      submit.addEventListener("click", async () => {
        const payload = currentPayload();
        const verdict = validatePayload(query, editorState.kind, payload);
        if (verdict.status === "invalid") {
          setFeedback(verdict.reason, "error");
          return;
        }
        const result = await this.client.submitAnnotation(query.query_id, {
          example_id: query.example_id,
          kind: editorState.kind,
          payload,
        });
        if (result.ok) {
          this.selected = null;
          await this.poller.tick();
          // advance to the next pending query automatically
          this.selected = this.queries[0] ?? null;
          this.render();
        } else if (result.status === 409) {
          setFeedback("already resolved elsewhere, refreshing queue", "info");
          await this.poller.tick();
        } else {
          setFeedback(result.reason, "error");
        }
      });
      editor.appendChild(feedback);
      editor.appendChild(submit);
    };

    renderEditor();
    return panel;
  }

  private renderTable(query: PendingQuery): HTMLElement {
    const wrap = el("div", "table-wrap");
    const table = el("table", "preview");
    const head = el("tr");
    for (const column of query.columns) {
      head.appendChild(el("th", undefined, `${column.name} (${column.kind})`));
    }
    table.appendChild(head);
    const limit = this.expandedTable ? query.rows.length : Math.min(query.rows.length, PREVIEW_ROWS);
    for (const row of query.rows.slice(0, limit)) {
      const tr = el("tr");
      for (const cell of row) tr.appendChild(el("td", undefined, String(cell)));
      table.appendChild(tr);
    }
    wrap.appendChild(table);
    if (query.truncated_rows > 0) {
      wrap.appendChild(
        el("div", "muted", `${query.truncated_rows} more rows not shown in this preview`)
      );
    }
    return wrap;
  }
}
