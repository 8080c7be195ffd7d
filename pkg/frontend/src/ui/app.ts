/**
 * Application shell: login screen, header with session and stream status,
 * tab navigation, and the view container. A lost event stream shows a
 * reconnecting banner; the stream client resumes from the last seen event id
 * by itself once the gateway is back.
 */

import { GatewayApi } from "../api.js";
import { CardIdentity } from "../card.js";
import { ConsoleStore } from "../store.js";
import { ChainView } from "./chainView.js";
import { DashboardView } from "./dashboard.js";
import { DelegationsView } from "./delegationsView.js";
import { el, replaceChildren } from "./dom.js";
import { FormsView } from "./formsView.js";
import { HistorianView } from "./historianView.js";
import { MatrixView } from "./matrixView.js";

interface ViewController {
  root: HTMLElement;
  update(): void;
}

const TABS: { id: string; label: string }[] = [
  { id: "dashboard", label: "Dashboard" },
  { id: "matrix", label: "Access matrix" },
  { id: "forms", label: "Grant / revoke" },
  { id: "delegations", label: "Delegations" },
  { id: "historian", label: "Historian" },
  { id: "chain", label: "Chain" },
];

export class App {
  readonly root: HTMLElement;
  private store: ConsoleStore | null = null;
  private views = new Map<string, ViewController>();
  private activeTab = "dashboard";
  private readonly header: HTMLElement;
  private readonly statusBanner: HTMLElement;
  private readonly nav: HTMLElement;
  private readonly main: HTMLElement;
  private readonly loginNote: HTMLElement;

  constructor(private readonly defaultGateway: string) {
    this.header = el("header", {});
    this.statusBanner = el("div", { class: "status-banner" });
    this.nav = el("nav", {});
    this.main = el("main", {});
    this.loginNote = el("p", { class: "error" });
    this.root = el("div", { class: "app" }, this.header, this.statusBanner, this.nav, this.main);
    this.renderLogin();
  }

  private renderLogin(): void {
    const gatewayInput = el("input", { type: "text", value: this.defaultGateway, class: "gateway-url" });
    const fileInput = el("input", { type: "file", accept: ".card,application/json" });
    replaceChildren(this.header, el("h1", {}, "doorchain console"));
    replaceChildren(
      this.main,
      el(
        "section",
        { class: "login" },
        el("h2", {}, "Sign in with your card"),
        el("p", { class: "hint" }, "The card file stays in this browser; only signatures are sent."),
        el("label", {}, "Gateway ", gatewayInput),
        el("label", {}, "Card file ", fileInput),
        el(
          "button",
          {
            onClick: () => {
              const file = fileInput.files?.[0];
              if (file) void this.connect(gatewayInput.value, file);
            },
          },
          "Connect",
        ),
        this.loginNote,
      ),
    );
  }

  private async connect(gatewayUrl: string, file: File): Promise<void> {
    try {
      const identity = CardIdentity.parse(await file.text());
      const store = new ConsoleStore(new GatewayApi(gatewayUrl));
      await store.connect(identity);
      this.attach(store);
    } catch (err) {
      this.loginNote.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  /** Bind a connected store and switch from the login screen to the tabs. */
  attach(store: ConsoleStore): void {
    this.store = store;
    this.views = new Map<string, ViewController>([
      ["dashboard", new DashboardView(store)],
      ["matrix", new MatrixView(store)],
      ["forms", new FormsView(store)],
      ["delegations", new DelegationsView(store)],
      ["historian", new HistorianView(store)],
      ["chain", new ChainView(store)],
    ]);
    replaceChildren(
      this.nav,
      ...TABS.map(({ id, label }) =>
        el(
          "button",
          {
            class: "tab",
            "data-tab": id,
            onClick: () => {
              this.activeTab = id;
              this.update();
            },
          },
          label,
        ),
      ),
    );
    store.subscribe(() => this.update());
    this.update();
  }

  update(): void {
    const store = this.store;
    if (!store) return;
    const name = store.world?.info.name ?? "";
    const session = store.session;
    replaceChildren(
      this.header,
      el("h1", {}, `doorchain console${name ? ` · ${name}` : ""}`),
      session
        ? el("span", { class: "session-badge" }, `${session.participantId} (${session.role})`)
        : null,
      el("span", { class: `stream-badge ${store.streamStatus}` }, store.streamStatus),
    );
    replaceChildren(
      this.statusBanner,
      store.streamStatus === "reconnecting"
        ? el(
            "div",
            { class: "banner reconnect" },
            "Connection to the gateway lost; reconnecting. Events resume from the last seen id.",
          )
        : null,
    );
    for (const [id, view] of this.views) {
      view.root.style.display = id === this.activeTab ? "" : "none";
    }
    replaceChildren(this.main, ...[...this.views.values()].map((v) => v.root));
    for (const view of this.views.values()) view.update();
  }
}
