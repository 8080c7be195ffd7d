/**
 * Canonical JSON and base64 helpers.
 *
 * Transaction signatures cover the canonical JSON bytes of the payload, so
 * this encoder must produce exactly the bytes the node hashes: object keys
 * sorted by code point, compact separators, UTF-8, integers only. Anything
 * that cannot round-trip byte-identically (floats, non-string keys) is
 * rejected instead of silently normalized.
 */

export type Json = null | boolean | number | string | Json[] | { [key: string]: Json };

function codePointCompare(a: string, b: string): number {
  // Key order must match code-point sorting, not UTF-16 code unit order.
  const pa = Array.from(a);
  const pb = Array.from(b);
  const n = Math.min(pa.length, pb.length);
  for (let i = 0; i < n; i++) {
    const ca = pa[i]!.codePointAt(0)!;
    const cb = pb[i]!.codePointAt(0)!;
    if (ca !== cb) return ca - cb;
  }
  return pa.length - pb.length;
}

function encodeValue(value: Json, out: string[]): void {
  if (value === null) {
    out.push("null");
  } else if (typeof value === "boolean") {
    out.push(value ? "true" : "false");
  } else if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new Error(`canonical JSON allows integers only, got ${value}`);
    }
    out.push(String(value));
  } else if (typeof value === "string") {
    out.push(JSON.stringify(value));
  } else if (Array.isArray(value)) {
    out.push("[");
    value.forEach((item, i) => {
      if (i > 0) out.push(",");
      encodeValue(item, out);
    });
    out.push("]");
  } else if (typeof value === "object") {
    const keys = Object.keys(value).sort(codePointCompare);
    out.push("{");
    keys.forEach((key, i) => {
      if (i > 0) out.push(",");
      out.push(JSON.stringify(key), ":");
      encodeValue(value[key]!, out);
    });
    out.push("}");
  } else {
    throw new Error(`value is not canonical JSON: ${typeof value}`);
  }
}

export function canonicalJson(value: Json): string {
  const out: string[] = [];
  encodeValue(value, out);
  return out.join("");
}

export function canonicalJsonBytes(value: Json): Uint8Array {
  return new TextEncoder().encode(canonicalJson(value));
}

export function b64encode(bytes: Uint8Array): string {
  let binary = "";
  for (let i = 0; i < bytes.length; i += 0x1000) {
    binary += String.fromCharCode(...bytes.subarray(i, i + 0x1000));
  }
  return btoa(binary);
}

export function b64decode(text: string): Uint8Array {
  const binary = atob(text);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}
