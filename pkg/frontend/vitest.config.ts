import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    globalSetup: ["tests/global-setup.ts"],
    // the integration tests ride real solves on a real service
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
