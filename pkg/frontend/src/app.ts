/** Single-page review board: chips on the left, candidate cards on the right. */

import {
  CHIP_CLASS,
  cycleChip,
  foldChips,
  type KeywordChipState,
  type QueryBody,
} from "./chips.js";
import {
  ApiError,
  type AnnotationWire,
  type Backend,
  type GroupWire,
  type SearchResponse,
} from "./api.js";

export const PAGE_SIZE = 25;

export const DATA_TYPES = [
  "timeseries",
  "cumulative_timeseries",
  "matrix",
  "geo",
  "scalar",
  "other",
] as const;

export const ANNOTATION_CLASS: Record<string, string> = {
  unmatched: "ann-unmatched",
  matched_in_order: "ann-in-order",
  matched_out_of_order: "ann-out-of-order",
};

interface CardState {
  propagated: boolean;
  newPageId: string | null;
  note: string | null;
}

/**
 * Annotations in display order: unmatched first, the rest as given,
 * hidden_common dropped. Ordering and styling use only the wire status.
 */
export function displayAnnotations(annotations: readonly AnnotationWire[]): AnnotationWire[] {
  const shown = annotations.filter((a) => a.status !== "hidden_common");
  return [
    ...shown.filter((a) => a.status === "unmatched"),
    ...shown.filter((a) => a.status !== "unmatched"),
  ];
}

export class App {
  readonly root: HTMLElement;
  readonly backend: Backend;
  readonly pageId: string;

  chips: KeywordChipState[] = [];
  dataTypes: Set<string> = new Set();
  results: SearchResponse | null = null;
  searchError: ApiError | null = null;
  page = 0;

  private readonly doc: Document;
  private cards = new Map<string, CardState>();
  private inFlight: Promise<void> | null = null;
  private searchQueued = false;
  private activations: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, backend: Backend, pageId: string) {
    this.root = root;
    this.backend = backend;
    this.pageId = pageId;
    this.doc = root.ownerDocument;
    this.renderSkeleton();
  }

  /** First search runs without a query so the service derives and trims one. */
  async init(): Promise<void> {
    await this.runSearch(true);
    if (this.results) {
      this.chips = queryToChips(this.results.query);
      this.dataTypes = new Set(this.results.query.data_types);
    }
    this.renderLeftPanel();
  }

  /** The request body is a pure function of the current chip states. */
  buildBody(initial = false): { page_id: string; query?: QueryBody; auto_exclude?: boolean } {
    if (initial) {
      return { page_id: this.pageId, auto_exclude: true };
    }
    return { page_id: this.pageId, query: foldChips(this.chips, [...this.dataTypes]) };
  }

  /** At most one search is in flight; a submit during one queues a trailing re-run. */
  runSearch(initial = false): Promise<void> {
    if (this.inFlight) {
      this.searchQueued = true;
      return this.inFlight;
    }
    const run = async (): Promise<void> => {
      try {
        const response = await this.backend.search(this.buildBody(initial));
        this.results = response;
        this.searchError = null;
        this.page = 0;
        this.cards = new Map(
          response.groups.map((g) => [
            g.group_hash,
            { propagated: false, newPageId: null, note: null },
          ]),
        );
      } catch (error) {
        this.searchError = error instanceof ApiError ? error : new ApiError("unknown_error", String(error), 0);
        this.results = null;
      } finally {
        this.inFlight = null;
        this.renderResults();
        if (this.searchQueued) {
          this.searchQueued = false;
          void this.runSearch();
        }
      }
    };
    this.inFlight = run();
    return this.inFlight;
  }

  /** Activations are queued first-in first-out, one request at a time. */
  activate(group: GroupWire): Promise<void> {
    const next = this.activations.then(async () => {
      const state = this.cards.get(group.group_hash);
      if (!state) return;
      try {
        const response = await this.backend.propagate({
          page_id: this.pageId,
          group_hash: group.group_hash,
        });
        state.propagated = true;
        state.newPageId = response.new_page_id;
      } catch (error) {
        const apiError =
          error instanceof ApiError ? error : new ApiError("unknown_error", String(error), 0);
        if (apiError.errorCode === "duplicate_propagation") {
          if (state.note === null) {
            state.note = "Already propagated: this exact group was activated before.";
          }
        } else {
          state.note = `${apiError.errorCode}: ${apiError.message}`;
        }
      }
      this.renderResults();
    });
    this.activations = next;
    return next;
  }

  /** Settles once every pending search and queued activation has finished. */
  async idle(): Promise<void> {
    for (;;) {
      const pending = this.inFlight;
      await this.activations;
      if (pending) await pending;
      if (!this.inFlight && !this.searchQueued) return;
    }
  }

  handleChipClick(keyword: string): void {
    this.chips = this.chips.map((chip) => (chip.keyword === keyword ? cycleChip(chip) : chip));
    this.renderLeftPanel();
  }

  addManualChip(keyword: string): void {
    const trimmed = keyword.trim().toLowerCase();
    if (!trimmed || this.chips.some((chip) => chip.keyword === trimmed)) return;
    this.chips = [...this.chips, { keyword: trimmed, category: "must_all", origin: "manual" }];
    this.renderLeftPanel();
  }

  toggleDataType(name: string): void {
    if (this.dataTypes.has(name)) {
      this.dataTypes.delete(name);
    } else {
      this.dataTypes.add(name);
    }
    this.renderLeftPanel();
  }

  setPage(page: number): void {
    this.page = page;
    this.renderResults();
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = this.doc.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  private renderSkeleton(): void {
    this.root.textContent = "";
    const left = this.el("section", "left-panel");
    left.append(
      this.el("h2", "panel-title", `Reference page ${this.pageId}`),
      this.el("div", "chip-row"),
      buildManualEntry(this),
      this.el("div", "type-row"),
      this.el("div", "clause-bars"),
      buildSearchButton(this),
    );
    const right = this.el("section", "right-panel");
    right.append(this.el("div", "results"));
    this.root.append(left, right);
    this.renderLeftPanel();
    this.renderResults();
  }

  private renderLeftPanel(): void {
    const chipRow = this.root.querySelector(".chip-row") as HTMLElement;
    chipRow.textContent = "";
    for (const chip of this.chips) {
      const button = this.el("button", `chip ${CHIP_CLASS[chip.category]}`, chip.keyword);
      button.dataset.keyword = chip.keyword;
      button.dataset.origin = chip.origin;
      button.addEventListener("click", () => this.handleChipClick(chip.keyword));
      chipRow.append(button);
    }

    const typeRow = this.root.querySelector(".type-row") as HTMLElement;
    typeRow.textContent = "";
    for (const name of DATA_TYPES) {
      const active = this.dataTypes.has(name);
      const button = this.el("button", `chip chip-data-type${active ? " active" : ""}`, name);
      button.dataset.dataType = name;
      button.addEventListener("click", () => this.toggleDataType(name));
      typeRow.append(button);
    }

    const bars = this.root.querySelector(".clause-bars") as HTMLElement;
    bars.textContent = "";
    const body = foldChips(this.chips, [...this.dataTypes]);
    const rows: Array<[string, string[]]> = [
      ["must_all", body.must_all],
      ["must_some", body.must_some],
      ["must_not", body.must_not],
      ["data_types", body.data_types],
    ];
    for (const [name, values] of rows) {
      const bar = this.el("div", `clause-bar clause-${name}`);
      bar.append(
        this.el("span", "clause-name", name),
        this.el("span", "clause-values", values.join(" ")),
      );
      bars.append(bar);
    }
  }

  private renderResults(): void {
    const host = this.root.querySelector(".results") as HTMLElement;
    host.textContent = "";

    if (this.searchError) {
      host.append(
        this.el(
          "div",
          "error-banner",
          `${this.searchError.errorCode}: ${this.searchError.message}`,
        ),
      );
      return;
    }
    if (!this.results) {
      host.append(this.el("div", "loading", "Searching..."));
      return;
    }
    if (this.results.count === 0) {
      host.append(this.el("div", "empty-state", "No candidates match this query."));
      return;
    }

    host.append(this.el("div", "result-count", `${this.results.count} candidate groups`));
    const start = this.page * PAGE_SIZE;
    for (const group of this.results.groups.slice(start, start + PAGE_SIZE)) {
      host.append(this.renderCard(group));
    }
    if (this.results.groups.length > PAGE_SIZE) {
      host.append(this.renderPager(this.results.groups.length));
    }
  }

  private renderCard(group: GroupWire): HTMLElement {
    const state = this.cards.get(group.group_hash);
    const card = this.el("article", "card");
    card.dataset.groupHash = group.group_hash;

    const header = this.el("header", "card-header");
    header.append(
      this.el("span", "card-rank", `#${group.rank}`),
      this.el("span", "card-score", group.score.toFixed(4)),
    );
    if (state?.propagated) {
      const badge = this.el("span", "badge-propagated", "propagated");
      if (state.newPageId) badge.title = state.newPageId;
      header.append(badge);
    }

    const tick = this.el("button", "tick", "✓ activate");
    if (!group.validation.passed) {
      tick.disabled = true;
      tick.title = group.validation.reason ?? "validation failed";
    } else {
      tick.addEventListener("click", () => void this.activate(group));
    }
    header.append(tick);
    card.append(header);

    const table = this.el("table", "members");
    for (let i = 0; i < group.ordered_member_ids.length; i += 1) {
      const row = this.el("tr", "member-row");
      const idCell = this.el("td", "member-id", group.ordered_member_ids[i]);
      const annCell = this.el("td", "member-annotations");
      for (const annotation of displayAnnotations(group.annotations[i] ?? [])) {
        annCell.append(
          this.el(
            "span",
            `ann ${ANNOTATION_CLASS[annotation.status] ?? "ann-unmatched"}`,
            annotation.keyword,
          ),
        );
      }
      row.append(idCell, annCell);
      table.append(row);
    }
    card.append(table);

    if (!group.validation.passed && group.validation.reason) {
      card.append(this.el("div", "card-validation", group.validation.reason));
    }
    if (state?.note) {
      card.append(this.el("div", "card-note", state.note));
    }
    return card;
  }

  private renderPager(total: number): HTMLElement {
    const pager = this.el("nav", "pager");
    const pages = Math.ceil(total / PAGE_SIZE);
    const prev = this.el("button", "pager-prev", "previous");
    prev.disabled = this.page === 0;
    prev.addEventListener("click", () => this.setPage(this.page - 1));
    const next = this.el("button", "pager-next", "next");
    next.disabled = this.page >= pages - 1;
    next.addEventListener("click", () => this.setPage(this.page + 1));
    pager.append(prev, this.el("span", "pager-at", `page ${this.page + 1} of ${pages}`), next);
    return pager;
  }
}

function queryToChips(query: QueryBody): KeywordChipState[] {
  const chips: KeywordChipState[] = [];
  const take = (keywords: readonly string[], category: KeywordChipState["category"]) => {
    for (const keyword of keywords) chips.push({ keyword, category, origin: "reference" });
  };
  take(query.must_all, "must_all");
  take(query.must_some, "must_some");
  take(query.must_not, "must_not");
  chips.sort((a, b) => (a.keyword < b.keyword ? -1 : a.keyword > b.keyword ? 1 : 0));
  return chips;
}

function buildManualEntry(app: App): HTMLElement {
  const doc = app.root.ownerDocument;
  const holder = doc.createElement("div");
  holder.className = "manual-entry";
  const input = doc.createElement("input");
  input.className = "manual-input";
  input.placeholder = "add keyword";
  const button = doc.createElement("button");
  button.className = "manual-add";
  button.textContent = "add";
  button.addEventListener("click", () => {
    app.addManualChip(input.value);
    input.value = "";
  });
  holder.append(input, button);
  return holder;
}

function buildSearchButton(app: App): HTMLElement {
  const button = app.root.ownerDocument.createElement("button");
  button.className = "search-submit";
  button.textContent = "Search";
  button.addEventListener("click", () => void app.runSearch());
  return button;
}
