/**
 * Wire types for the gateway HTTP API.
 *
 * These mirror the JSON the gateway emits one-to-one; the console never
 * invents fields. Everything here is a plain shape, no behavior.
 */

export type Role = "Admin" | "CEO" | "Manager" | "Employee";
export type Action = "Create" | "Read" | "Update" | "Delete";
export type Operation = "Allow" | "Deny";

export interface Participant {
  participantId: string;
  displayName: string;
  role: Role;
  departmentId: string | null;
}

export interface PhysicalPlace {
  placeId: string;
  description: string;
  departmentId: string;
}

export interface Department {
  departmentId: string;
  name: string;
  ceoParticipantId: string;
}

export interface Condition {
  kind: "Always" | "TimeWindow" | "DepartmentMatch";
  startMinuteOfDay?: number;
  endMinuteOfDay?: number;
}

export interface AclRule {
  ruleId: string;
  roles: Role[];
  resourcePattern: string;
  actions: Action[];
  operation: Operation;
  condition: Condition;
}

export interface DecisionSource {
  kind: "static" | "dynamic" | "default-deny";
  ruleId?: string;
  seq?: number;
}

export interface Decision {
  outcome: Operation;
  source: DecisionSource;
}

/** Entry from /api/state/grants: latest dynamic grant or revoke per pair. */
export interface GrantEntry {
  participantId: string;
  placeId: string;
  effect: "Grant" | "Revoke";
  grantedBy: string;
  seq: number;
}

export interface DelegationEntry {
  participantId: string;
  departmentId: string;
  delegatedBy: string;
}

export interface NetworkInfo {
  name: string;
  height: number;
  intrusionThreshold: number;
  maxBlockSize: number;
  rules: AclRule[];
  peers: { id: string; org: string; height: number }[];
}

export interface TxResult {
  txId: string;
  valid: boolean;
  blockHeight: number;
  txOffset: number;
  response: { status: string; decision?: Decision };
}

/** Flattened result of /api/access/check. */
export interface CheckResult {
  txId: string;
  valid: boolean;
  blockHeight: number;
  decision: Decision | null;
}

export interface HistorianRecord {
  txId: string;
  type: string;
  participantId: string;
  timestamp: string;
  valid: string;
  decision: Decision | null;
  events: string[];
  blockHeight: number;
  txOffset: number;
}

export interface ChainEvent {
  kind: "AccessGranted" | "AccessDenied" | "AccessGrantChanged" | "DelegationChanged" | "IntrusionAlert";
  participantId: string;
  placeId: string | null;
  detail: string;
  txId: string;
  count: number | null;
}

/** One server-sent event: a committed chain event plus its ledger coordinate. */
export interface EventRecord {
  id: string;
  blockHeight: number;
  txOffset: number;
  eventIndex: number;
  event: ChainEvent;
}

export interface BlockTx {
  txId: string;
  type: string;
  participantId: string;
  proposedAt: string;
  valid: string;
  response: { status: string; [k: string]: unknown };
  events: ChainEvent[];
}

export interface BlockInfo {
  height: number;
  prevHash: string;
  dataHash: string;
  timestamp: string;
  blockHash: string;
  transactions: BlockTx[];
}

export interface VerifyReport {
  ok: boolean;
  height: number;
  reason: string | null;
}

export interface LoginResult {
  token: string;
  participantId: string;
  role: Role;
}

/** Card file as written by the authority tooling (includes the private key). */
export interface CardFile {
  cardId: string;
  participantId: string;
  publicKey: string;
  certificate: string;
  issuedAt: string;
  privateKey: string;
}
