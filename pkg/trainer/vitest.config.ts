import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 240_000,
    // the overfit acceptance check trains for up to 2000 steps
    slowTestThreshold: 60_000,
    pool: "forks",
  },
});
