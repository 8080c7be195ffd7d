/**
 * Access matrix: participants down, places across, effective decision per
 * cell. Clicking a cell shows where the decision comes from (static rule,
 * dynamic grant sequence, or default deny) and offers grant/revoke shortcuts
 * when the session may administer that place.
 */

import { ApiError } from "../api.js";
import { cellKey, cellOf } from "../matrix.js";
import type { ConsoleStore } from "../store.js";
import { el, replaceChildren } from "./dom.js";

export class MatrixView {
  readonly root: HTMLElement;
  private readonly tableHost: HTMLElement;
  private readonly detail: HTMLElement;
  private selected: { participantId: string; placeId: string } | null = null;
  private actionNote = "";

  constructor(private readonly store: ConsoleStore) {
    this.tableHost = el("div", { class: "matrix-host" });
    this.detail = el("div", { class: "cell-detail" });
    this.root = el(
      "section",
      { class: "view matrix" },
      el("h2", {}, "Access matrix"),
      el("p", { class: "hint" }, "Effective physical-entry decision right now; click a cell for the reason."),
      this.tableHost,
      this.detail,
    );
  }

  update(): void {
    if (!this.store.world) return;
    const matrix = this.store.matrix();
    const header = el(
      "tr",
      {},
      el("th", {}, ""),
      ...matrix.places.map((place) => el("th", { title: place.description }, place.placeId)),
    );
    const rows = matrix.participants.map((participant) =>
      el(
        "tr",
        {},
        el("th", { title: `${participant.displayName} (${participant.role})` }, participant.participantId),
        ...matrix.places.map((place) => {
          const cell = cellOf(matrix, participant.participantId, place.placeId)!;
          const isSelected =
            this.selected !== null &&
            cellKey(this.selected.participantId, this.selected.placeId) ===
              cellKey(participant.participantId, place.placeId);
          return el(
            "td",
            {
              class: `cell ${cell.decision.outcome.toLowerCase()}${isSelected ? " selected" : ""}`,
              title: cell.explain,
              "data-cell": `${participant.participantId}:${place.placeId}`,
              onClick: () => {
                this.selected = { participantId: participant.participantId, placeId: place.placeId };
                this.actionNote = "";
                this.update();
              },
            },
            cell.decision.outcome,
          );
        }),
      ),
    );
    replaceChildren(this.tableHost, el("table", { class: "matrix-table" }, el("thead", {}, header), el("tbody", {}, ...rows)));
    this.renderDetail();
  }

  private renderDetail(): void {
    if (!this.selected || !this.store.world) {
      replaceChildren(this.detail);
      return;
    }
    const { participantId, placeId } = this.selected;
    const matrix = this.store.matrix();
    const cell = cellOf(matrix, participantId, placeId);
    if (!cell) {
      replaceChildren(this.detail);
      return;
    }
    const place = this.store.world.places.find((p) => p.placeId === placeId)!;
    const may = this.store.capabilities().administerAccessTo(place);
    replaceChildren(
      this.detail,
      el("h3", {}, `${participantId} at ${placeId}`),
      el("p", { class: "explain" }, cell.explain),
      el(
        "div",
        { class: "cell-actions" },
        el(
          "button",
          { disabled: !may, onClick: () => void this.change("grant", participantId, placeId) },
          "Grant",
        ),
        el(
          "button",
          { disabled: !may, onClick: () => void this.change("revoke", participantId, placeId) },
          "Revoke",
        ),
      ),
      this.actionNote ? el("p", { class: "note" }, this.actionNote) : null,
    );
  }

  private async change(kind: "grant" | "revoke", participantId: string, placeId: string): Promise<void> {
    try {
      const result =
        kind === "grant"
          ? await this.store.api.grant(participantId, placeId)
          : await this.store.api.revoke(participantId, placeId);
      this.actionNote = `${kind} committed in block ${result.blockHeight} (tx ${result.txId.slice(0, 12)})`;
    } catch (err) {
      this.actionNote = err instanceof ApiError ? err.message : String(err);
    }
    this.update();
  }
}
