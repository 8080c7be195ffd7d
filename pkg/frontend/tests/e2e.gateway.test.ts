/**
 * End-to-end against a real gateway: scaffolds a node with the companion
 * CLI, serves it on a free port, and exercises the console's full client
 * path: card login, signed transactions, state queries, the SSE stream with
 * banner latency, and chain verification. Skipped when the node package is
 * not importable.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import fs from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { GatewayApi } from "../src/api.js";
import { CardIdentity } from "../src/card.js";
import { cellOf } from "../src/matrix.js";
import { ConsoleStore } from "../src/store.js";
import { until } from "./util.js";

const HAVE_NODE_PKG =
  spawnSync("python3", ["-c", "import doorchain"], { timeout: 20000 }).status === 0;

const MIDNIGHT = 0; // fixed matrix evaluation time; dynamic entries are time-independent

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = net.createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const { port } = probe.address() as net.AddressInfo;
      probe.close(() => resolve(port));
    });
  });
}

async function waitUp(base: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await fetch(`${base}/api/network`); // any HTTP answer means the server is up
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("gateway did not come up in time");
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
}

function cli(args: string[], cwd: string): void {
  const out = spawnSync("python3", ["-m", "doorchain.cli", ...args], { cwd, timeout: 60000 });
  if (out.status !== 0) {
    throw new Error(`cli ${args[0]} failed: ${out.stdout}${out.stderr}`);
  }
}

describe.skipIf(!HAVE_NODE_PKG)("live gateway", () => {
  let dir: string;
  let base: string;
  let server: ChildProcess;
  let serverLog = "";
  let admin: GatewayApi;
  let adminIdentity: CardIdentity;
  let eve: GatewayApi;
  let store: ConsoleStore;

  beforeAll(async () => {
    dir = fs.mkdtempSync(path.join(os.tmpdir(), "console-e2e-"));
    cli(["init", "--dir", dir, "--network-name", "console-e2e"], dir);

    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    const configPath = path.join(dir, "config.toml");
    const config = fs
      .readFileSync(configPath, "utf-8")
      .replace("port = 8443", `port = ${port}`)
      .replace("batch_timeout_ms = 1000", "batch_timeout_ms = 100");
    fs.writeFileSync(configPath, config);

    server = spawn("python3", ["-m", "doorchain.cli", "serve", "--config", configPath], {
      cwd: dir,
    });
    server.stdout?.on("data", (d) => (serverLog += d));
    server.stderr?.on("data", (d) => (serverLog += d));
    await waitUp(base);

    adminIdentity = CardIdentity.parse(fs.readFileSync(path.join(dir, "admin.card"), "utf-8"));
    admin = new GatewayApi(base);
    await admin.login(adminIdentity);

    // World: one department with a CEO, one place, one employee.
    await admin.registerParticipant({ participantId: "carol", displayName: "Carol", role: "CEO", departmentId: "eng" });
    await admin.registerDepartment({ departmentId: "eng", name: "Engineering", ceoParticipantId: "carol" });
    await admin.registerPlace({ placeId: "lab", description: "Laser lab", departmentId: "eng" });
    await admin.registerParticipant({ participantId: "eve", displayName: "Eve", role: "Employee", departmentId: "eng" });

    const eveCard = path.join(dir, "eve.card");
    cli(
      ["card", "issue", "--participant", "eve", "--out", eveCard, "--authority-key", path.join(dir, "authority.key"), "--offline"],
      dir,
    );
    eve = new GatewayApi(base);
    await eve.login(CardIdentity.parse(fs.readFileSync(eveCard, "utf-8")));

    // The console session under test: its own connection with a live stream.
    store = new ConsoleStore(new GatewayApi(base), { retryMs: 200 });
    await store.connect(adminIdentity);
  }, 120000);

  afterAll(async () => {
    store?.disconnect();
    if (server && server.exitCode === null) {
      server.kill("SIGTERM");
      await new Promise((resolve) => {
        server.once("exit", resolve);
        setTimeout(resolve, 10000);
      });
    }
    if (dir) fs.rmSync(dir, { recursive: true, force: true });
    if (process.env.E2E_DEBUG) console.log(serverLog);
  });

  it("logs in through the challenge handshake and sees the network", async () => {
    expect(admin.role).toBe("Admin");
    expect(store.session?.role).toBe("Admin");
    const info = store.world!.info;
    expect(info.name).toBe("console-e2e");
    expect(info.rules.length).toBeGreaterThan(0);
    expect(store.world!.participants.map((p) => p.participantId)).toContain("eve");
    await until(() => store.streamStatus === "live", 5000);
  });

  it("flips the matrix cell after a grant, driven only by the event stream", async () => {
    const before = cellOf(store.matrix(MIDNIGHT), "eve", "lab")!;
    expect(before.decision.outcome).toBe("Deny");
    expect(before.decision.source.kind).toBe("default-deny");

    const result = await store.api.grant("eve", "lab");
    expect(result.valid).toBe(true);
    expect(result.txId).toMatch(/^[0-9a-f]{64}$/);

    // No manual refresh: the committed event must reach the store via SSE.
    await until(() => cellOf(store.matrix(MIDNIGHT), "eve", "lab")!.decision.source.kind === "dynamic", 5000);
    const after = cellOf(store.matrix(MIDNIGHT), "eve", "lab")!;
    expect(after.decision.outcome).toBe("Allow");
    expect(after.explain).toContain("by admin");
  });

  it("raises an intrusion banner within two seconds of the third outside denial", async () => {
    // Put eve under a dynamic revoke so her checks are denied at any hour.
    await store.api.revoke("eve", "lab");
    await until(() => {
      const cell = cellOf(store.matrix(MIDNIGHT), "eve", "lab")!;
      return cell.decision.source.kind === "dynamic" && cell.decision.outcome === "Deny";
    }, 5000);

    // Three denials driven outside the console, as a door terminal would.
    for (let i = 0; i < 3; i++) {
      const check = await eve.checkAccess("lab");
      expect(check.valid).toBe(true);
      expect(check.decision?.outcome).toBe("Deny");
      expect(check.decision?.source.kind).toBe("dynamic");
    }
    // The banner must arrive over the stream within 2s of the third denial.
    await until(() => store.alerts.active.length > 0, 2000);
    const banner = store.alerts.active[0]!;
    expect(banner.participantId).toBe("eve");
    expect(banner.placeId).toBe("lab");
    expect(banner.count).toBe(3);

    const kinds = store.ticker.entries.map((r) => r.event.kind);
    expect(kinds.filter((k) => k === "AccessDenied").length).toBeGreaterThanOrEqual(3);

    store.alerts.acknowledge(banner.id);
    expect(store.alerts.active.length).toBe(0);
  });

  it("verifies the chain and reports the live height", async () => {
    const report = await store.api.verifyChain();
    expect(report.ok).toBe(true);
    expect(report.reason).toBeNull();
    const info = await store.api.networkInfo();
    expect(report.height).toBe(info.height);
    expect(report.height).toBeGreaterThanOrEqual(1);
  });

  it("scopes the historian to the session for plain staff", async () => {
    const mine = await eve.historian();
    expect(mine.length).toBeGreaterThanOrEqual(3);
    for (const rec of mine) expect(rec.participantId).toBe("eve");
    // The admin console sees the full trail, including eve's checks.
    const all = await store.api.historian({ type: "CheckAccess" });
    expect(all.filter((r) => r.participantId === "eve").length).toBeGreaterThanOrEqual(3);
  });
});
