import { defineConfig } from 'vitest/config'

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      '/api': 'http://127.0.0.1:8000',
      '/health': 'http://127.0.0.1:8000',
    },
  },
  test: {
    environment: 'node',
    testTimeout: 30000,
    hookTimeout: 60000,
  },
})
