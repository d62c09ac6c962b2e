import { httpClient } from "./api.js";
import { createTriageApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
// served by the app server under /ui, so the API lives at the same origin
createTriageApp(root, httpClient(""));
