/**
 * Grant and revoke forms. Submission shows the committed txId and validity;
 * gateway rejections (403 unauthorized, 409 conflicts, 404 unknown ids)
 * render inline next to the form instead of clearing it.
 */

import { ApiError } from "../api.js";
import type { ConsoleStore } from "../store.js";
import type { TxResult } from "../types.js";
import { el, replaceChildren } from "./dom.js";

export class FormsView {
  readonly root: HTMLElement;
  private readonly participantSelect: HTMLSelectElement;
  private readonly placeSelect: HTMLSelectElement;
  private readonly result: HTMLElement;
  private readonly buttons: HTMLButtonElement[];

  constructor(private readonly store: ConsoleStore) {
    this.participantSelect = el("select", { class: "pick-participant" });
    this.placeSelect = el("select", { class: "pick-place", onChange: () => this.gate() });
    this.result = el("div", { class: "tx-result" });
    const grantButton = el(
      "button",
      { class: "do-grant", onClick: () => void this.submit("grant") },
      "Grant access",
    );
    const revokeButton = el(
      "button",
      { class: "do-revoke", onClick: () => void this.submit("revoke") },
      "Revoke access",
    );
    this.buttons = [grantButton, revokeButton];
    this.root = el(
      "section",
      { class: "view forms" },
      el("h2", {}, "Grant / revoke access"),
      el(
        "div",
        { class: "form-row" },
        el("label", {}, "Participant ", this.participantSelect),
        el("label", {}, "Place ", this.placeSelect),
        grantButton,
        revokeButton,
      ),
      this.result,
    );
  }

  update(): void {
    const world = this.store.world;
    if (!world) return;
    refreshOptions(this.participantSelect, world.participants.map((p) => p.participantId));
    refreshOptions(this.placeSelect, world.places.map((p) => p.placeId));
    this.gate();
  }

  /** Disable submission when the node would certainly refuse (display gating). */
  private gate(): void {
    const world = this.store.world;
    if (!world) return;
    const place = world.places.find((p) => p.placeId === this.placeSelect.value);
    const may = place !== undefined && this.store.capabilities().administerAccessTo(place);
    for (const button of this.buttons) button.disabled = !may;
  }

  private async submit(kind: "grant" | "revoke"): Promise<void> {
    const participantId = this.participantSelect.value;
    const placeId = this.placeSelect.value;
    try {
      const result: TxResult =
        kind === "grant"
          ? await this.store.api.grant(participantId, placeId)
          : await this.store.api.revoke(participantId, placeId);
      replaceChildren(
        this.result,
        el(
          "p",
          { class: "ok" },
          `${kind === "grant" ? "Granted" : "Revoked"}: tx ${result.txId} ` +
            `${result.valid ? "valid" : "INVALID"} in block ${result.blockHeight}`,
        ),
      );
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status} ${err.code}: ${err.message}` : String(err);
      replaceChildren(this.result, el("p", { class: "error" }, message));
    }
  }
}

function refreshOptions(select: HTMLSelectElement, ids: string[]): void {
  const current = select.value;
  replaceChildren(select, ...ids.map((id) => el("option", { value: id }, id)));
  if (ids.includes(current)) select.value = current;
}
