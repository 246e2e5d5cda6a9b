import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'happy-dom',
    include: ['tests/**/*.test.ts'],
    // the round-trip test drives a real service subprocess
    testTimeout: 30000,
    hookTimeout: 60000,
    fileParallelism: false,
  },
});
