import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // parity tests spawn the Python CLI many times
    testTimeout: 600_000,
    hookTimeout: 120_000,
  },
});
