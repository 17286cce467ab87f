// Origin-scoped pseudonymous identity. The hash is 32 lowercase hex chars
// (128 bits), generated once and kept in storage; it is sent to the server
// inside documents but must never be rendered or put in a URL the user sees.

const IDENTITY_KEY = 'voicecollect.phone_hash';

export function newPhoneHash(): string {
  const bytes = new Uint8Array(16);
  if (typeof crypto !== 'undefined' && crypto.getRandomValues) {
    crypto.getRandomValues(bytes);
  } else {
    for (let i = 0; i < bytes.length; i++) bytes[i] = Math.floor(Math.random() * 256);
  }
  return Array.from(bytes, (b) => b.toString(16).padStart(2, '0')).join('');
}

// Sample ids share the 128-bit hex format but are never persisted here;
// one is minted per recording event as the upload's idempotency key.
export const newSampleId = newPhoneHash;

export function ensurePhoneHash(storage: Storage): string {
  const existing = storage.getItem(IDENTITY_KEY);
  if (existing && /^[0-9a-f]{32}$/.test(existing)) return existing;
  const fresh = newPhoneHash();
  storage.setItem(IDENTITY_KEY, fresh);
  return fresh;
}
