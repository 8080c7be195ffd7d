/**
 * Chain inspector: network summary, block browser with per-transaction
 * validity flags, and an integrity check button that reports either the
 * verified height or the first height at which verification fails.
 */

import { ApiError } from "../api.js";
import { shortHex, timeOf } from "../format.js";
import type { ConsoleStore } from "../store.js";
import type { BlockInfo, VerifyReport } from "../types.js";
import { el, replaceChildren } from "./dom.js";

export function renderVerifyReport(report: VerifyReport): HTMLElement {
  if (report.ok) {
    return el(
      "p",
      { class: "verify ok" },
      `Chain verified: ${report.height + 1} blocks (heights 0..${report.height}) intact`,
    );
  }
  return el(
    "p",
    { class: "verify error" },
    `Verification FAILED at height ${report.height}` + (report.reason ? `: ${report.reason}` : ""),
  );
}

export function renderBlock(block: BlockInfo): HTMLElement {
  return el(
    "div",
    { class: "block-card" },
    el("h3", {}, `Block ${block.height}`),
    el(
      "dl",
      {},
      el("dt", {}, "hash"),
      el("dd", { title: block.blockHash }, shortHex(block.blockHash, 16)),
      el("dt", {}, "prev"),
      el("dd", { title: block.prevHash }, shortHex(block.prevHash, 16)),
      el("dt", {}, "time"),
      el("dd", {}, timeOf(block.timestamp)),
    ),
    el(
      "table",
      { class: "listing" },
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "#"),
          el("th", {}, "tx"),
          el("th", {}, "type"),
          el("th", {}, "submitter"),
          el("th", {}, "validity"),
        ),
      ),
      el(
        "tbody",
        {},
        ...block.transactions.map((tx, i) =>
          el(
            "tr",
            {},
            el("td", {}, String(i)),
            el("td", { title: tx.txId }, shortHex(tx.txId)),
            el("td", {}, tx.type),
            el("td", {}, tx.participantId),
            el("td", { class: tx.valid === "Valid" ? "ok" : "error" }, tx.valid),
          ),
        ),
      ),
    ),
  );
}

export class ChainView {
  readonly root: HTMLElement;
  private readonly summary: HTMLElement;
  private readonly verifyHost: HTMLElement;
  private readonly heightInput: HTMLInputElement;
  private readonly blockHost: HTMLElement;

  constructor(private readonly store: ConsoleStore) {
    this.summary = el("div", { class: "net-summary" });
    this.verifyHost = el("div", { class: "verify-host" });
    this.heightInput = el("input", { type: "number", min: "0", value: "0" });
    this.blockHost = el("div", { class: "block-host" });
    this.root = el(
      "section",
      { class: "view chain" },
      el("h2", {}, "Chain"),
      this.summary,
      el(
        "div",
        { class: "form-row" },
        el("button", { class: "do-verify", onClick: () => void this.verify() }, "Verify chain"),
      ),
      this.verifyHost,
      el(
        "div",
        { class: "form-row" },
        el("label", {}, "Height ", this.heightInput),
        el("button", { onClick: () => void this.loadBlock() }, "Load block"),
        el("button", { onClick: () => void this.step(-1) }, "Prev"),
        el("button", { onClick: () => void this.step(1) }, "Next"),
      ),
      this.blockHost,
    );
  }

  update(): void {
    const world = this.store.world;
    if (!world) return;
    const info = world.info;
    replaceChildren(
      this.summary,
      el(
        "p",
        {},
        `${info.name}: height ${info.height}, block size ${info.maxBlockSize}, ` +
          `intrusion threshold ${info.intrusionThreshold}, peers ` +
          info.peers.map((p) => `${p.id}@${p.height}`).join(", "),
      ),
    );
  }

  async verify(): Promise<void> {
    try {
      const report = await this.store.api.verifyChain();
      replaceChildren(this.verifyHost, renderVerifyReport(report));
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status} ${err.code}: ${err.message}` : String(err);
      replaceChildren(this.verifyHost, el("p", { class: "error" }, message));
    }
  }

  private async step(delta: number): Promise<void> {
    const next = Number(this.heightInput.value || "0") + delta;
    if (next < 0) return;
    this.heightInput.value = String(next);
    await this.loadBlock();
  }

  async loadBlock(): Promise<void> {
    try {
      const block = await this.store.api.block(Number(this.heightInput.value || "0"));
      replaceChildren(this.blockHost, renderBlock(block));
    } catch (err) {
      const message = err instanceof ApiError ? `${err.status} ${err.code}: ${err.message}` : String(err);
      replaceChildren(this.blockHost, el("p", { class: "error" }, message));
    }
  }
}
