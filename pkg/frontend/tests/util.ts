/** Shared test helpers. */

export async function until(
  predicate: () => boolean,
  timeoutMs: number = 5000,
  stepMs: number = 10,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error("condition not reached in time");
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}

export function utf8(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}
