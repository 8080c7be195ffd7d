import { describe, expect, it } from "vitest";
import { capabilitiesFor, identityOf } from "../src/session.js";
import type { DelegationEntry, Participant, PhysicalPlace } from "../src/types.js";

const engDoor: PhysicalPlace = { placeId: "door-1", description: "", departmentId: "eng" };
const opsVault: PhysicalPlace = { placeId: "vault", description: "", departmentId: "ops" };

const none: DelegationEntry[] = [];
const danHasEng: DelegationEntry[] = [
  { participantId: "dan", departmentId: "eng", delegatedBy: "carol" },
];

describe("capabilities", () => {
  it("lets an Admin do everything", () => {
    const caps = capabilitiesFor({ participantId: "root", role: "Admin", departmentId: null }, none);
    expect(caps.registerEntities).toBe(true);
    expect(caps.manageAnyDelegation).toBe(true);
    expect(caps.manageDelegationFor("eng")).toBe(true);
    expect(caps.administerAccessTo(engDoor)).toBe(true);
    expect(caps.administerAccessTo(opsVault)).toBe(true);
  });

  it("limits a CEO to their own department", () => {
    const caps = capabilitiesFor({ participantId: "carol", role: "CEO", departmentId: "eng" }, none);
    expect(caps.registerEntities).toBe(false);
    expect(caps.manageDelegationFor("eng")).toBe(true);
    expect(caps.manageDelegationFor("ops")).toBe(false);
    expect(caps.administerAccessTo(engDoor)).toBe(true);
    expect(caps.administerAccessTo(opsVault)).toBe(false);
  });

  it("extends access administration to an active delegate", () => {
    const caps = capabilitiesFor({ participantId: "dan", role: "Employee", departmentId: "ops" }, danHasEng);
    expect(caps.administerAccessTo(engDoor)).toBe(true);
    expect(caps.administerAccessTo(opsVault)).toBe(false);
    expect(caps.administerAnyAccess).toBe(true);
    // Delegation does not confer delegation management or registration.
    expect(caps.manageAnyDelegation).toBe(false);
    expect(caps.manageDelegationFor("eng")).toBe(false);
    expect(caps.registerEntities).toBe(false);
  });

  it("gives plain staff nothing to administer", () => {
    for (const role of ["Manager", "Employee"] as const) {
      const caps = capabilitiesFor({ participantId: "mia", role, departmentId: "ops" }, danHasEng);
      expect(caps.administerAnyAccess).toBe(false);
      expect(caps.administerAccessTo(opsVault)).toBe(false);
      expect(caps.registerEntities).toBe(false);
    }
  });
});

describe("identityOf", () => {
  const people: Participant[] = [
    { participantId: "carol", displayName: "Carol", role: "CEO", departmentId: "eng" },
  ];

  it("resolves the department from the participant record", () => {
    expect(identityOf("carol", "CEO", people)).toEqual({
      participantId: "carol",
      role: "CEO",
      departmentId: "eng",
    });
  });

  it("defaults to no department when the record is missing", () => {
    expect(identityOf("ghost", "Employee", people).departmentId).toBeNull();
  });
});
