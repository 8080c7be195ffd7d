/**
 * Display-side mirror of the node's access decision semantics.
 *
 * The matrix view derives its cells from state queries (static rules from
 * /api/network, overlay from /api/state/grants) instead of firing CheckAccess
 * transactions, which would write denial counters. This module exists only
 * for that display; the gateway's decision in a CheckAccess response is
 * always the authoritative one, and both produce the same Decision shape so
 * they can be compared directly.
 */

import type { AclRule, Action, Decision, GrantEntry, Participant, PhysicalPlace } from "./types.js";

export function minuteOfDay(micros: number): number {
  return Math.floor(micros / 60_000_000) % 1440;
}

export function matchesPlace(pattern: string, place: PhysicalPlace): boolean {
  if (pattern === "*") return true;
  if (pattern.startsWith("dept:") && pattern.endsWith(":*")) {
    return pattern.slice(5, -2) === place.departmentId;
  }
  return pattern === place.placeId;
}

export function conditionSatisfied(
  rule: AclRule,
  participant: Participant,
  place: PhysicalPlace,
  atMicros: number,
): boolean {
  const cond = rule.condition;
  if (cond.kind === "Always") return true;
  if (cond.kind === "DepartmentMatch") {
    return participant.departmentId !== null && participant.departmentId === place.departmentId;
  }
  const minute = minuteOfDay(atMicros);
  const start = cond.startMinuteOfDay!;
  const end = cond.endMinuteOfDay!;
  if (start === end) return false; // degenerate window is empty, not full-day
  if (start < end) return start <= minute && minute < end;
  return minute >= start || minute < end; // wraps midnight
}

function matchRule(
  rule: AclRule,
  participant: Participant,
  place: PhysicalPlace,
  action: Action,
  atMicros: number,
): boolean {
  return (
    rule.roles.includes(participant.role) &&
    matchesPlace(rule.resourcePattern, place) &&
    rule.actions.includes(action) &&
    conditionSatisfied(rule, participant, place, atMicros)
  );
}

export function decideStatic(
  rules: AclRule[],
  participant: Participant,
  place: PhysicalPlace,
  action: Action,
  atMicros: number,
): Decision {
  for (const rule of rules) {
    if (matchRule(rule, participant, place, action, atMicros)) {
      return { outcome: rule.operation, source: { kind: "static", ruleId: rule.ruleId } };
    }
  }
  return { outcome: "Deny", source: { kind: "default-deny" } };
}

export function decideEffective(
  rules: AclRule[],
  overlay: GrantEntry[],
  participant: Participant,
  place: PhysicalPlace,
  action: Action,
  atMicros: number,
): Decision {
  if (action === "Read") {
    let latest: GrantEntry | null = null;
    for (const entry of overlay) {
      if (
        entry.participantId === participant.participantId &&
        entry.placeId === place.placeId &&
        (latest === null || entry.seq > latest.seq)
      ) {
        latest = entry;
      }
    }
    if (latest !== null) {
      return {
        outcome: latest.effect === "Grant" ? "Allow" : "Deny",
        source: { kind: "dynamic", seq: latest.seq },
      };
    }
  }
  return decideStatic(rules, participant, place, action, atMicros);
}
