/** Small display formatting helpers shared by the views. */

export function shortHex(hex: string, keep: number = 12): string {
  return hex.length <= keep ? hex : `${hex.slice(0, keep)}…`;
}

export function coordOf(blockHeight: number, txOffset: number): string {
  return `${blockHeight}.${txOffset}`;
}

export function timeOf(rfc3339: string): string {
  const t = new Date(rfc3339);
  return Number.isNaN(t.getTime()) ? rfc3339 : t.toISOString().replace("T", " ").slice(0, 19);
}
