import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 40_000,
    hookTimeout: 40_000,
    // the e2e suite owns a live server; keep files sequential
    fileParallelism: false,
  },
});
