/**
 * Gateway API client: challenge-response login plus signed submissions.
 *
 * Every transaction payload is signed client-side over its canonical JSON
 * bytes; the gateway re-derives the same bytes and verifies against the card.
 * Errors surface as ApiError with the gateway's status and error code, so
 * views can render 403/409 responses inline instead of crashing.
 */

import { b64decode, b64encode, type Json } from "./canonical.js";
import type { CardIdentity } from "./card.js";
import type {
  BlockInfo,
  CheckResult,
  Department,
  DelegationEntry,
  GrantEntry,
  HistorianRecord,
  LoginResult,
  NetworkInfo,
  Participant,
  PhysicalPlace,
  Role,
  TxResult,
  VerifyReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(`${status} ${code}: ${message}`);
  }
}

export interface HistorianQuery {
  participant?: string;
  type?: string;
  from?: string;
  to?: string;
  limit?: number;
}

type Fetcher = typeof fetch;
type Params = Record<string, string | number | undefined>;

export class GatewayApi {
  token: string | null = null;
  participantId: string | null = null;
  role: Role | null = null;
  identity: CardIdentity | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetcher: Fetcher = fetch,
  ) {}

  private url(path: string, params?: Params): string {
    const u = new URL(path, this.baseUrl);
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) u.searchParams.set(key, String(value));
    }
    return u.toString();
  }

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async result(response: Response): Promise<any> {
    let data: any = {};
    try {
      data = await response.json();
    } catch {
      // non-JSON body, fall through to the status check
    }
    if (!response.ok) {
      throw new ApiError(
        response.status,
        data.error ?? "http-error",
        data.message ?? response.statusText,
      );
    }
    return data;
  }

  private async post(path: string, body: Json): Promise<any> {
    const response = await this.fetcher(this.url(path), {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(body),
    });
    return this.result(response);
  }

  private async get(path: string, params?: Params): Promise<any> {
    const response = await this.fetcher(this.url(path, params), { headers: this.headers() });
    return this.result(response);
  }

  // -- session ---------------------------------------------------------------

  async login(identity: CardIdentity): Promise<LoginResult> {
    const opened = await this.post("/api/session", { card: identity.publicCard as unknown as Json });
    // The login challenge is signed raw, not as canonical JSON.
    const challenge = b64decode(opened.challenge);
    const done: LoginResult = await this.post("/api/session", {
      sessionId: opened.sessionId,
      signature: b64encode(identity.sign(challenge)),
    });
    this.token = done.token;
    this.participantId = done.participantId;
    this.role = done.role;
    this.identity = identity;
    return done;
  }

  private signed(): CardIdentity {
    if (!this.identity) throw new ApiError(401, "no-session", "log in before submitting");
    return this.identity;
  }

  // -- signed transactions ---------------------------------------------------

  async grant(targetParticipantId: string, placeId: string): Promise<TxResult> {
    const payload = { type: "GrantAccess", targetParticipantId, placeId };
    return this.post("/api/tx/grant", {
      targetParticipantId,
      placeId,
      signature: this.signed().signPayload(payload),
    });
  }

  async revoke(targetParticipantId: string, placeId: string): Promise<TxResult> {
    const payload = { type: "RevokeAccess", targetParticipantId, placeId };
    return this.post("/api/tx/revoke", {
      targetParticipantId,
      placeId,
      signature: this.signed().signPayload(payload),
    });
  }

  async delegate(delegateParticipantId: string, departmentId: string): Promise<TxResult> {
    const payload = { type: "DelegateAuthority", delegateParticipantId, departmentId };
    return this.post("/api/tx/delegate", {
      delegateParticipantId,
      departmentId,
      signature: this.signed().signPayload(payload),
    });
  }

  async revokeDelegation(delegateParticipantId: string, departmentId: string): Promise<TxResult> {
    const payload = { type: "RevokeDelegation", delegateParticipantId, departmentId };
    return this.post("/api/tx/revoke-delegation", {
      delegateParticipantId,
      departmentId,
      signature: this.signed().signPayload(payload),
    });
  }

  async registerParticipant(participant: Participant): Promise<TxResult> {
    const payload = { type: "RegisterParticipant", participant } as unknown as Json;
    return this.post("/api/tx/register/participant", {
      participant: participant as unknown as Json,
      signature: this.signed().signPayload(payload),
    });
  }

  async registerPlace(place: PhysicalPlace): Promise<TxResult> {
    const payload = { type: "RegisterPlace", place } as unknown as Json;
    return this.post("/api/tx/register/place", {
      place: place as unknown as Json,
      signature: this.signed().signPayload(payload),
    });
  }

  async registerDepartment(department: Department): Promise<TxResult> {
    const payload = { type: "RegisterDepartment", department } as unknown as Json;
    return this.post("/api/tx/register/department", {
      department: department as unknown as Json,
      signature: this.signed().signPayload(payload),
    });
  }

  async revokeCard(cardId: string): Promise<TxResult> {
    const payload = { type: "RevokeCard", cardId };
    return this.post("/api/tx/revoke-card", {
      cardId,
      signature: this.signed().signPayload(payload),
    });
  }

  async checkAccess(placeId: string): Promise<CheckResult> {
    const payload = { type: "CheckAccess", placeId };
    return this.post("/api/access/check", {
      placeId,
      signature: this.signed().signPayload(payload),
    });
  }

  // -- reads -----------------------------------------------------------------

  async historian(query: HistorianQuery = {}): Promise<HistorianRecord[]> {
    const data = await this.get("/api/historian", {
      participant: query.participant,
      type: query.type,
      from: query.from,
      to: query.to,
      limit: query.limit,
    });
    return data.records;
  }

  async participants(): Promise<Participant[]> {
    return (await this.get("/api/state/participants")).participants;
  }

  async places(): Promise<PhysicalPlace[]> {
    return (await this.get("/api/state/places")).places;
  }

  async departments(): Promise<Department[]> {
    return (await this.get("/api/state/departments")).departments;
  }

  async grants(participant?: string): Promise<GrantEntry[]> {
    return (await this.get("/api/state/grants", { participant })).grants;
  }

  async delegations(): Promise<DelegationEntry[]> {
    return (await this.get("/api/state/delegations")).delegations;
  }

  networkInfo(): Promise<NetworkInfo> {
    return this.get("/api/network");
  }

  block(height: number): Promise<BlockInfo> {
    return this.get(`/api/blocks/${height}`);
  }

  verifyChain(): Promise<VerifyReport> {
    return this.get("/api/chain/verify");
  }

  /** Connection target for the SSE stream; the stream client adds cursors. */
  streamTarget(params: { kinds?: string; place?: string } = {}): { url: string; token: string } {
    if (!this.token) throw new ApiError(401, "no-session", "log in before streaming");
    return { url: this.url("/api/events/stream", params), token: this.token };
  }
}
