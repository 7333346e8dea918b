// Browser entry point: resolve the server and session from the URL, creating
// a fresh session when none is named, then mount the app.

import { createApp } from "./app";

async function resolveSession(base: string): Promise<string> {
  const params = new URLSearchParams(window.location.search);
  const named = params.get("session");
  if (named) return named;

  const response = await fetch(`${base}/session`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({}),
  });
  if (!response.ok) {
    throw new Error(`session create failed: HTTP ${response.status}`);
  }
  const doc = await response.json() as { session_id: string };
  params.set("session", doc.session_id);
  window.history.replaceState(null, "",
                              `${window.location.pathname}?${params}`);
  return doc.session_id;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("server") ?? window.location.origin;
  const sessionId = await resolveSession(base);
  createApp(document, { baseHttp: base, sessionId });
}

boot().catch((error) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${error}`;
  console.error(error);
});
