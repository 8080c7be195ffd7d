/**
 * Historian browser: the committed audit trail with participant, type, time
 * range and limit filters. The gateway scopes what a session may see; this
 * view just passes filters through and renders what comes back.
 */

import { ApiError } from "../api.js";
import { coordOf, timeOf } from "../format.js";
import type { ConsoleStore } from "../store.js";
import type { HistorianRecord } from "../types.js";
import { el, replaceChildren } from "./dom.js";

const TX_TYPES = [
  "",
  "CheckAccess",
  "GrantAccess",
  "RevokeAccess",
  "DelegateAuthority",
  "RevokeDelegation",
  "RegisterParticipant",
  "RegisterPlace",
  "RegisterDepartment",
  "RevokeCard",
  "Bootstrap",
];

export class HistorianView {
  readonly root: HTMLElement;
  private readonly participantInput: HTMLInputElement;
  private readonly typeSelect: HTMLSelectElement;
  private readonly limitInput: HTMLInputElement;
  private readonly tableBody: HTMLElement;
  private readonly note: HTMLElement;
  private loadedOnce = false;

  constructor(private readonly store: ConsoleStore) {
    this.participantInput = el("input", { type: "text", placeholder: "any participant" });
    this.typeSelect = el("select", {}, ...TX_TYPES.map((t) => el("option", { value: t }, t || "any type")));
    this.limitInput = el("input", { type: "number", min: "1", placeholder: "limit" });
    this.tableBody = el("tbody", {});
    this.note = el("div", { class: "tx-result" });
    this.root = el(
      "section",
      { class: "view historian" },
      el("h2", {}, "Historian"),
      el(
        "div",
        { class: "form-row" },
        el("label", {}, "Participant ", this.participantInput),
        el("label", {}, "Type ", this.typeSelect),
        el("label", {}, "Limit ", this.limitInput),
        el("button", { class: "load-historian", onClick: () => void this.load() }, "Load"),
      ),
      this.note,
      el(
        "table",
        { class: "listing" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "block"),
            el("th", {}, "time"),
            el("th", {}, "type"),
            el("th", {}, "participant"),
            el("th", {}, "valid"),
            el("th", {}, "outcome"),
            el("th", {}, "events"),
          ),
        ),
        this.tableBody,
      ),
    );
  }

  update(): void {
    if (!this.loadedOnce && this.store.world) {
      this.loadedOnce = true;
      void this.load();
    }
  }

  async load(): Promise<void> {
    try {
      const records = await this.store.api.historian({
        participant: this.participantInput.value || undefined,
        type: this.typeSelect.value || undefined,
        limit: this.limitInput.value ? Number(this.limitInput.value) : undefined,
      });
      replaceChildren(this.note);
      this.renderRecords(records);
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status} ${err.code}: ${err.message}` : String(err);
      replaceChildren(this.note, el("p", { class: "error" }, message));
    }
  }

  private renderRecords(records: HistorianRecord[]): void {
    // Newest last on the ledger; show newest first for reading.
    const rows = [...records].reverse().map((rec) =>
      el(
        "tr",
        {},
        el("td", {}, coordOf(rec.blockHeight, rec.txOffset)),
        el("td", {}, timeOf(rec.timestamp)),
        el("td", {}, rec.type),
        el("td", {}, rec.participantId),
        el("td", { class: rec.valid === "Valid" ? "ok" : "error" }, rec.valid),
        el("td", {}, rec.decision ? rec.decision.outcome : ""),
        el("td", {}, rec.events.join(", ")),
      ),
    );
    replaceChildren(this.tableBody, ...rows);
  }
}
