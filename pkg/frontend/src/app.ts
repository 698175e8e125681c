// Console bootstrap: login gate, view switching, poll loop.

import { ApiClient } from "./api.js";
import { renderActionResults, renderAlerts, renderBanner, renderFleet, renderTimeline } from "./dom.js";
import { DashboardViewModel } from "./viewmodel.js";

const DEFAULT_SERVER = "http://127.0.0.1:8787";
const POLL_INTERVAL_MS = 2000;

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function main(): void {
  const serverInput = byId("server") as HTMLInputElement;
  serverInput.value = DEFAULT_SERVER;
  const loginForm = byId("login-form") as HTMLFormElement;
  const loginError = byId("login-error");
  const loginView = byId("login-view");
  const dashView = byId("dashboard-view");

  let vm: DashboardViewModel | null = null;

  function showLogin(): void {
    vm?.stop();
    vm = null;
    dashView.hidden = true;
    loginView.hidden = false;
  }

  loginForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      const api = new ApiClient(serverInput.value.replace(/\/$/, ""));
      try {
        const session = await api.login(
          (byId("user") as HTMLInputElement).value,
          (byId("password") as HTMLInputElement).value);
        loginError.textContent = "";
        byId("whoami").textContent = `${session.role}`;
        vm = new DashboardViewModel(api, POLL_INTERVAL_MS);
        api.onAuthExpired = showLogin;  // expired token forces re-login
        loginView.hidden = true;
        dashView.hidden = false;
        vm.start();
        const repaint = () => {
          if (!vm) return;
          renderBanner(vm, byId("banner"));
          renderAlerts(vm, byId("alerts"));
          renderFleet(vm, byId("fleet"), (agentId) => {
            void vm?.loadTimeline(agentId).then(() => {
              byId("timeline-title").textContent = `timeline: ${agentId}`;
              if (vm) renderTimeline(vm, byId("timeline"));
            });
          });
          renderActionResults(vm, byId("action-results"));
          if (vm.needsLogin) showLogin();
        };
        repaint();
        setInterval(repaint, POLL_INTERVAL_MS / 2);
      } catch (err) {
        loginError.textContent = err instanceof Error ? err.message : String(err);
      }
    })();
  });
}

document.addEventListener("DOMContentLoaded", main);
