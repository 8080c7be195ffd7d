/**
 * Holder card handling: parsing the card file and client-side signing.
 *
 * The private key never leaves the browser. The card file is loaded with a
 * file picker, the Ed25519 seed is expanded locally, and only signatures and
 * the public card record ever go over the wire.
 */

import nacl from "tweetnacl";
import { b64decode, b64encode, canonicalJsonBytes, type Json } from "./canonical.js";
import type { CardFile } from "./types.js";

export class CardError extends Error {}

const REQUIRED: (keyof CardFile)[] = [
  "cardId",
  "participantId",
  "publicKey",
  "certificate",
  "issuedAt",
  "privateKey",
];

export class CardIdentity {
  readonly cardId: string;
  readonly participantId: string;
  private readonly secretKey: Uint8Array;
  /** Card record as sent in the session handshake, private key stripped. */
  readonly publicCard: Omit<CardFile, "privateKey">;

  constructor(file: CardFile) {
    for (const field of REQUIRED) {
      if (typeof file[field] !== "string" || file[field] === "") {
        throw new CardError(`card file is missing field ${String(field)}`);
      }
    }
    const seed = b64decode(file.privateKey);
    if (seed.length !== 32) {
      throw new CardError(`private key must be a 32-byte seed, got ${seed.length}`);
    }
    const pair = nacl.sign.keyPair.fromSeed(seed);
    if (b64encode(pair.publicKey) !== file.publicKey) {
      throw new CardError("private key does not match the card's public key");
    }
    this.cardId = file.cardId;
    this.participantId = file.participantId;
    this.secretKey = pair.secretKey;
    this.publicCard = {
      cardId: file.cardId,
      participantId: file.participantId,
      publicKey: file.publicKey,
      certificate: file.certificate,
      issuedAt: file.issuedAt,
    };
  }

  static parse(text: string): CardIdentity {
    let data: unknown;
    try {
      data = JSON.parse(text);
    } catch {
      throw new CardError("card file is not valid JSON");
    }
    if (typeof data !== "object" || data === null || Array.isArray(data)) {
      throw new CardError("card file must be a JSON object");
    }
    return new CardIdentity(data as CardFile);
  }

  sign(message: Uint8Array): Uint8Array {
    return nacl.sign.detached(message, this.secretKey);
  }

  /** Base64 signature over the canonical JSON bytes of a transaction payload. */
  signPayload(payload: Json): string {
    return b64encode(this.sign(canonicalJsonBytes(payload)));
  }
}
