/**
 * Session capabilities: which controls a logged-in identity gets to use.
 *
 * This is display gating only. It mirrors who the node will actually
 * authorize (Admin anywhere; a CEO inside their department; a delegate for
 * departments delegated to them) so the console can disable forms that would
 * certainly be rejected, but the node remains the authority: a 403 from the
 * gateway is always handled and shown, never assumed impossible.
 */

import type { DelegationEntry, Participant, PhysicalPlace, Role } from "./types.js";

export interface SessionIdentity {
  participantId: string;
  role: Role;
  departmentId: string | null;
}

export interface Capabilities {
  /** Register participants, places, departments and revoke cards: Admin only. */
  registerEntities: boolean;
  /** May manage some delegation, so the delegation form is worth showing. */
  manageAnyDelegation: boolean;
  manageDelegationFor(departmentId: string): boolean;
  /** Grant or revoke physical access to this place. */
  administerAccessTo(place: PhysicalPlace): boolean;
  administerAnyAccess: boolean;
}

export function capabilitiesFor(
  identity: SessionIdentity,
  delegations: DelegationEntry[],
): Capabilities {
  const admin = identity.role === "Admin";
  const ceo = identity.role === "CEO";
  const ownDelegations = new Set(
    delegations
      .filter((d) => d.participantId === identity.participantId)
      .map((d) => d.departmentId),
  );

  const manageDelegationFor = (departmentId: string): boolean =>
    admin || (ceo && identity.departmentId === departmentId);

  const administerAccessTo = (place: PhysicalPlace): boolean =>
    admin ||
    (ceo && identity.departmentId === place.departmentId) ||
    ownDelegations.has(place.departmentId);

  return {
    registerEntities: admin,
    manageAnyDelegation: admin || ceo,
    manageDelegationFor,
    administerAccessTo,
    administerAnyAccess: admin || ceo || ownDelegations.size > 0,
  };
}

export function identityOf(
  participantId: string,
  role: Role,
  participants: Participant[],
): SessionIdentity {
  const self = participants.find((p) => p.participantId === participantId);
  return { participantId, role, departmentId: self?.departmentId ?? null };
}
