import { ApiClient } from "./api.js";
import { StudyApp } from "./app.js";

// API base: ?api=http://host:port wins, else same origin.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
new StudyApp(root, new ApiClient(baseUrl));
