/**
 * Intrusion alert banners and the live event ticker.
 *
 * Alerts stay visible until someone acknowledges them; the ticker is a
 * bounded newest-first window over everything the stream delivers.
 */

import type { EventRecord } from "./types.js";

export interface AlertBanner {
  /** Event id of the IntrusionAlert record, unique per alert. */
  id: string;
  participantId: string;
  placeId: string | null;
  count: number | null;
  detail: string;
  txId: string;
}

export class AlertCenter {
  private banners: AlertBanner[] = [];

  constructor(private readonly onChange?: () => void) {}

  get active(): readonly AlertBanner[] {
    return this.banners;
  }

  ingest(record: EventRecord): boolean {
    if (record.event.kind !== "IntrusionAlert") return false;
    if (this.banners.some((b) => b.id === record.id)) return false;
    this.banners.push({
      id: record.id,
      participantId: record.event.participantId,
      placeId: record.event.placeId,
      count: record.event.count,
      detail: record.event.detail,
      txId: record.event.txId,
    });
    this.onChange?.();
    return true;
  }

  acknowledge(id: string): void {
    const before = this.banners.length;
    this.banners = this.banners.filter((b) => b.id !== id);
    if (this.banners.length !== before) this.onChange?.();
  }
}

export class Ticker {
  private records: EventRecord[] = [];

  constructor(readonly capacity: number = 100) {}

  get entries(): readonly EventRecord[] {
    return this.records;
  }

  push(record: EventRecord): void {
    this.records.unshift(record);
    if (this.records.length > this.capacity) this.records.length = this.capacity;
  }
}
