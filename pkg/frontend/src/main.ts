import { ApiClient } from "./api.js";
import { ConsoleApp } from "./app.js";

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/api/stream`;
}

window.addEventListener("load", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new ConsoleApp({
    root,
    api: new ApiClient(""),
    wsUrl: wsUrl(),
    socketFactory: (url) => new WebSocket(url),
  });
  app.mount();
  app.start();
});
