import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
    target: "es2020",
  },
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
  },
});
