/**
 * Console store: one place that owns the session, the cached world state and
 * the live event stream, and tells views when to re-render.
 *
 * State updates are event-driven: a committed AccessGrantChanged or
 * DelegationChanged arriving on the stream triggers a refetch of just that
 * query, so the matrix and tables track the ledger without page reloads and
 * without the console ever mutating state locally on its own.
 */

import { AlertCenter, Ticker } from "./alerts.js";
import { GatewayApi } from "./api.js";
import type { CardIdentity } from "./card.js";
import { EventStream, type StreamStatus } from "./events.js";
import { buildMatrix, type AccessMatrix } from "./matrix.js";
import { capabilitiesFor, identityOf, type Capabilities, type SessionIdentity } from "./session.js";
import type {
  Department,
  DelegationEntry,
  EventRecord,
  GrantEntry,
  NetworkInfo,
  Participant,
  PhysicalPlace,
} from "./types.js";

export interface WorldState {
  info: NetworkInfo;
  participants: Participant[];
  places: PhysicalPlace[];
  departments: Department[];
  grants: GrantEntry[];
  delegations: DelegationEntry[];
}

export interface StoreOptions {
  retryMs?: number;
  streamFetcher?: typeof fetch;
}

export class ConsoleStore {
  readonly ticker = new Ticker(100);
  readonly alerts = new AlertCenter(() => this.notify());
  streamStatus: StreamStatus = "stopped";
  world: WorldState | null = null;
  session: SessionIdentity | null = null;
  lastRefreshError: string | null = null;

  private stream: EventStream | null = null;
  private listeners = new Set<() => void>();

  constructor(
    readonly api: GatewayApi,
    private readonly options: StoreOptions = {},
  ) {}

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async connect(identity: CardIdentity): Promise<void> {
    const login = await this.api.login(identity);
    await this.loadAll();
    this.session = identityOf(login.participantId, login.role, this.world!.participants);
    this.startStream();
    this.notify();
  }

  async loadAll(): Promise<void> {
    const [info, participants, places, departments, grants, delegations] = await Promise.all([
      this.api.networkInfo(),
      this.api.participants(),
      this.api.places(),
      this.api.departments(),
      this.api.grants(),
      this.api.delegations(),
    ]);
    this.world = { info, participants, places, departments, grants, delegations };
    if (this.session) {
      this.session = identityOf(this.session.participantId, this.session.role, participants);
    }
    this.notify();
  }

  matrix(atMicros: number = Date.now() * 1000): AccessMatrix {
    const world = this.requireWorld();
    return buildMatrix(world.info.rules, world.participants, world.places, world.grants, atMicros);
  }

  capabilities(): Capabilities {
    if (!this.session) throw new Error("no session");
    return capabilitiesFor(this.session, this.requireWorld().delegations);
  }

  requireWorld(): WorldState {
    if (!this.world) throw new Error("world state not loaded");
    return this.world;
  }

  handleRecord(record: EventRecord): void {
    this.ticker.push(record);
    this.alerts.ingest(record);
    const kind = record.event.kind;
    if (kind === "AccessGrantChanged") void this.refreshGrants();
    if (kind === "DelegationChanged") void this.refreshDelegations();
    this.notify();
  }

  async refreshGrants(): Promise<void> {
    await this.refresh(async () => {
      this.requireWorld().grants = await this.api.grants();
    });
  }

  async refreshDelegations(): Promise<void> {
    await this.refresh(async () => {
      this.requireWorld().delegations = await this.api.delegations();
    });
  }

  /** Registrations change the participant and place axes, so reload those too. */
  async refreshEntities(): Promise<void> {
    await this.refresh(async () => {
      const world = this.requireWorld();
      const [participants, places, departments] = await Promise.all([
        this.api.participants(),
        this.api.places(),
        this.api.departments(),
      ]);
      world.participants = participants;
      world.places = places;
      world.departments = departments;
    });
  }

  private async refresh(work: () => Promise<void>): Promise<void> {
    try {
      await work();
      this.lastRefreshError = null;
    } catch (err) {
      this.lastRefreshError = err instanceof Error ? err.message : String(err);
    }
    this.notify();
  }

  startStream(): void {
    if (this.stream) return;
    const target = this.api.streamTarget();
    this.stream = new EventStream({
      url: target.url,
      token: target.token,
      onRecord: (record) => this.handleRecord(record),
      onStatus: (status) => {
        this.streamStatus = status;
        this.notify();
      },
      retryMs: this.options.retryMs,
      fetcher: this.options.streamFetcher,
    });
    this.stream.start();
  }

  disconnect(): void {
    this.stream?.stop();
    this.stream = null;
  }
}
