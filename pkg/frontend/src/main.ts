import { httpService } from "./api.js";
import { JudgeApp } from "./app.js";

function workerEntry(root: HTMLElement): void {
  const box = document.createElement("div");
  box.className = "worker-entry";
  const h = document.createElement("h2");
  h.textContent = "Explanation judging";
  const input = document.createElement("input");
  input.placeholder = "worker id";
  input.value = localStorage.getItem("ratattn-worker") ?? "";
  const button = document.createElement("button");
  button.textContent = "Start";
  button.addEventListener("click", () => {
    const workerId = input.value.trim();
    if (!workerId) {
      input.focus();
      return;
    }
    localStorage.setItem("ratattn-worker", workerId);
    void new JudgeApp(root, workerId, httpService).start();
  });
  box.append(h, input, button);
  root.replaceChildren(box);
}

const root = document.getElementById("app");
if (root) {
  workerEntry(root);
}
