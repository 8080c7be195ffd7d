/**
 * Delegation manager: list active delegations, delegate a participant for a
 * department, revoke one. Form controls are enabled for Admin and CEO
 * sessions only; a 403 that slips through anyway renders inline.
 */

import { ApiError } from "../api.js";
import type { ConsoleStore } from "../store.js";
import { el, replaceChildren } from "./dom.js";

export class DelegationsView {
  readonly root: HTMLElement;
  private readonly tableBody: HTMLElement;
  private readonly participantSelect: HTMLSelectElement;
  private readonly departmentSelect: HTMLSelectElement;
  private readonly addButton: HTMLButtonElement;
  private readonly note: HTMLElement;

  constructor(private readonly store: ConsoleStore) {
    this.tableBody = el("tbody", {});
    this.participantSelect = el("select", {});
    this.departmentSelect = el("select", {});
    this.addButton = el("button", { onClick: () => void this.delegate() }, "Delegate");
    this.note = el("div", { class: "tx-result" });
    this.root = el(
      "section",
      { class: "view delegations" },
      el("h2", {}, "Delegations"),
      el(
        "table",
        { class: "listing" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "participant"),
            el("th", {}, "department"),
            el("th", {}, "delegated by"),
            el("th", {}, ""),
          ),
        ),
        this.tableBody,
      ),
      el(
        "div",
        { class: "form-row" },
        el("label", {}, "Participant ", this.participantSelect),
        el("label", {}, "Department ", this.departmentSelect),
        this.addButton,
      ),
      this.note,
    );
  }

  update(): void {
    const world = this.store.world;
    if (!world) return;
    const caps = this.store.capabilities();
    replaceChildren(
      this.tableBody,
      ...world.delegations.map((entry) =>
        el(
          "tr",
          {},
          el("td", {}, entry.participantId),
          el("td", {}, entry.departmentId),
          el("td", {}, entry.delegatedBy),
          el(
            "td",
            {},
            el(
              "button",
              {
                class: "revoke-delegation",
                disabled: !caps.manageDelegationFor(entry.departmentId),
                onClick: () => void this.revoke(entry.participantId, entry.departmentId),
              },
              "Revoke",
            ),
          ),
        ),
      ),
    );
    const current = this.participantSelect.value;
    replaceChildren(
      this.participantSelect,
      ...world.participants.map((p) => el("option", { value: p.participantId }, p.participantId)),
    );
    if (world.participants.some((p) => p.participantId === current)) {
      this.participantSelect.value = current;
    }
    const currentDept = this.departmentSelect.value;
    replaceChildren(
      this.departmentSelect,
      ...world.departments.map((d) => el("option", { value: d.departmentId }, d.departmentId)),
    );
    if (world.departments.some((d) => d.departmentId === currentDept)) {
      this.departmentSelect.value = currentDept;
    }
    this.addButton.disabled = !caps.manageAnyDelegation;
  }

  private async delegate(): Promise<void> {
    await this.run(() =>
      this.store.api.delegate(this.participantSelect.value, this.departmentSelect.value),
    );
  }

  private async revoke(participantId: string, departmentId: string): Promise<void> {
    await this.run(() => this.store.api.revokeDelegation(participantId, departmentId));
  }

  private async run(work: () => Promise<{ txId: string; blockHeight: number }>): Promise<void> {
    try {
      const result = await work();
      replaceChildren(
        this.note,
        el("p", { class: "ok" }, `committed in block ${result.blockHeight} (tx ${result.txId.slice(0, 12)})`),
      );
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status} ${err.code}: ${err.message}` : String(err);
      replaceChildren(this.note, el("p", { class: "error" }, message));
    }
  }
}
