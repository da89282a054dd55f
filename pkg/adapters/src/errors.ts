/** Raised when an export, trace, or sample directory violates the contract. */
export class AdapterError extends Error {}

/** Suffix a message with " [path:line]" the same way the ingest side does. */
export function atLocation(message: string, path?: string, line?: number): string {
  if (path === undefined) {
    return line === undefined ? message : `${message} [line ${line}]`;
  }
  return line === undefined ? `${message} [${path}]` : `${message} [${path}:${line}]`;
}
