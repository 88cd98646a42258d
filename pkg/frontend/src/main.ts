/** Entry point: tab switching and API selection (live vs fixture mode). */

import { FixtureApi, HttpApi, type Api } from "./api";
import { Dashboard } from "./dashboard";
import { StudentPanel } from "./student";

function selectApi(): Api {
  const params = new URLSearchParams(window.location.search);
  return params.get("fixture") === "1" ? new FixtureApi() : new HttpApi();
}

function activate(tab: "student" | "dashboard"): void {
  for (const name of ["student", "dashboard"] as const) {
    document.getElementById(`panel-${name}`)!.hidden = name !== tab;
    document.getElementById(`tab-${name}`)!.classList.toggle("active", name === tab);
  }
}

function boot(): void {
  const api = selectApi();
  const student = new StudentPanel(api, document.getElementById("panel-student")!);
  const dashboard = new Dashboard(api, document.getElementById("panel-dashboard")!);
  student.mount();
  dashboard.mount();
  document.getElementById("tab-student")!.addEventListener("click", () => activate("student"));
  document
    .getElementById("tab-dashboard")!
    .addEventListener("click", () => activate("dashboard"));
  activate("student");
}

document.addEventListener("DOMContentLoaded", boot);
