import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // conformance spawns the trainer's ingest CLI; give it headroom
    testTimeout: 30000,
  },
});
