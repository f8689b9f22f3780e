/** Browser entry point: wires the app to a service base URL. */

import { App } from "./app.js";
import { HttpBackend } from "./api.js";

const DEFAULT_BASE_URL = "http://127.0.0.1:8765";

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("base") ?? DEFAULT_BASE_URL;
  const pageId = params.get("page") ?? "pg-ref1";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(root, new HttpBackend(baseUrl), pageId);
  void app.init();
}

start();
