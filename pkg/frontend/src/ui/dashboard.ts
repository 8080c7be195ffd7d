/**
 * Dashboard: live event ticker plus intrusion banners.
 *
 * Banners stay up until acknowledged; the ticker shows the newest stream
 * records with their ledger coordinates.
 */

import { coordOf } from "../format.js";
import type { ConsoleStore } from "../store.js";
import { el, replaceChildren } from "./dom.js";

export class DashboardView {
  readonly root: HTMLElement;
  private readonly banners: HTMLElement;
  private readonly tickerBody: HTMLElement;

  constructor(private readonly store: ConsoleStore) {
    this.banners = el("div", { class: "banners" });
    this.tickerBody = el("tbody", {});
    this.root = el(
      "section",
      { class: "view dashboard" },
      this.banners,
      el("h2", {}, "Live events"),
      el(
        "table",
        { class: "ticker" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "at"),
            el("th", {}, "kind"),
            el("th", {}, "participant"),
            el("th", {}, "place"),
            el("th", {}, "detail"),
          ),
        ),
        this.tickerBody,
      ),
    );
  }

  update(): void {
    replaceChildren(
      this.banners,
      ...this.store.alerts.active.map((alert) =>
        el(
          "div",
          { class: "banner alert", "data-alert-id": alert.id },
          el(
            "span",
            {},
            `Intrusion alert: ${alert.participantId} at ${alert.placeId ?? "?"} ` +
              `(${alert.count ?? "?"} consecutive denials)`,
          ),
          el(
            "button",
            { class: "ack", onClick: () => this.store.alerts.acknowledge(alert.id) },
            "Acknowledge",
          ),
        ),
      ),
    );
    replaceChildren(
      this.tickerBody,
      ...this.store.ticker.entries.map((record) =>
        el(
          "tr",
          { class: record.event.kind === "IntrusionAlert" ? "row-alert" : "" },
          el("td", {}, coordOf(record.blockHeight, record.txOffset)),
          el("td", {}, record.event.kind),
          el("td", {}, record.event.participantId),
          el("td", {}, record.event.placeId ?? ""),
          el("td", {}, record.event.detail),
        ),
      ),
    );
  }
}
