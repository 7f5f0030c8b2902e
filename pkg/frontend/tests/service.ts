/**
 * Test harness: a real planning service as a child process.
 *
 * The UI is exercised against the actual HTTP surface, never against
 * in-process fakes, so these helpers spawn `ugsopt serve` on a free
 * port and generate instances through the CLI.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

const run = promisify(execFile);

export async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.on("error", reject);
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      server.close(() => resolve(address.port));
    });
  });
}

export async function scratchDir(prefix: string): Promise<string> {
  return mkdtemp(join(tmpdir(), prefix));
}

export interface GenSettings {
  seed: number;
  n_neighborhoods?: number;
  demand_points_per_nbhd?: number;
  parks_per_nbhd?: number;
  candidates_per_nbhd?: number;
}

/** Generate a synthetic instance document through the CLI. */
export async function generateInstance(
  dir: string,
  settings: GenSettings,
): Promise<string> {
  const cfgPath = join(dir, `gen-${settings.seed}.json`);
  const outPath = join(dir, `instance-${settings.seed}.json`);
  await writeFile(cfgPath, JSON.stringify(settings));
  await run("ugsopt", ["gen", cfgPath, "-o", outPath]);
  return readFile(outPath, "utf8");
}

export interface LiveService {
  baseUrl: string;
  stop(): Promise<void>;
}

export async function startService(storeDir: string): Promise<LiveService> {
  const port = await freePort();
  const baseUrl = `http://127.0.0.1:${port}`;
  const child: ChildProcess = spawn(
    "ugsopt",
    ["serve", "--store", storeDir, "--bind", `127.0.0.1:${port}`],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const exited = new Promise<void>((resolve) => {
    child.on("exit", () => resolve());
  });

  const deadline = Date.now() + 20_000;
  for (;;) {
    try {
      const res = await fetch(`${baseUrl}/runs`);
      if (res.ok) break;
    } catch {
      // not listening yet
    }
    if (child.exitCode !== null) {
      throw new Error(`service exited early: ${stderr.slice(-400)}`);
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service never came up: ${stderr.slice(-400)}`);
    }
    await new Promise((r) => setTimeout(r, 100));
  }

  return {
    baseUrl,
    async stop() {
      child.kill("SIGTERM");
      await Promise.race([exited, new Promise((r) => setTimeout(r, 5000))]);
      if (child.exitCode === null) child.kill("SIGKILL");
    },
  };
}
