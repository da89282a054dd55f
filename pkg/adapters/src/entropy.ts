import { AdapterError } from "./errors.js";

/**
 * Shannon entropy of the byte-value distribution, in bits per byte.
 *
 * Matches the trainer's file-level entropy feature: 0 for a constant
 * file, 8 for a uniform one. Empty input has no distribution.
 */
export function shannonEntropy(bytes: Uint8Array): number {
  if (bytes.length === 0) {
    throw new AdapterError("entropy of empty input is undefined");
  }
  const counts = new Uint32Array(256);
  for (let i = 0; i < bytes.length; i++) {
    counts[bytes[i]] += 1;
  }
  let h = 0;
  for (let v = 0; v < 256; v++) {
    if (counts[v] === 0) continue;
    const p = counts[v] / bytes.length;
    h -= p * Math.log2(p);
  }
  return h;
}
