/** Boots the backend fixture server once for the whole suite. */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));
const portFile = join(here, ".server-port");

let server: ChildProcess | null = null;

export default async function setup(): Promise<() => void> {
  const script = join(here, "..", "scripts", "fixture_server.py");
  server = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });

  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("fixture server never became ready")), 90000);
    let buffer = "";
    server!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/READY (\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server!.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`fixture server exited early (code ${code})`));
    });
  });

  const base = `http://127.0.0.1:${port}`;
  // wait until the API answers
  const deadline = Date.now() + 60000;
  for (;;) {
    try {
      const response = await fetch(`${base}/experiments`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("fixture server never answered");
    await new Promise((r) => setTimeout(r, 100));
  }

  mkdirSync(here, { recursive: true });
  writeFileSync(portFile, String(port));

  return () => {
    server?.kill();
  };
}
