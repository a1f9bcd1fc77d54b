/** Browser bootstrap: wires the controller to the DOM.
 *
 * All interactive elements carry data-action attributes, so a single
 * delegated listener per event type covers the whole page, including
 * markup swapped in by re-renders.
 */

import { CyriClient } from "./api.js";
import { TriageController } from "./controller.js";

const POLL_MS = 15_000;

const root = document.getElementById("app");
const list = document.getElementById("email-list");
const datePicker = document.getElementById("date-picker");
if (!root || !list) throw new Error("missing #app or #email-list mount");

const controller = new TriageController(new CyriClient(""));

function renderList(): void {
  const rows = controller.emails.map((email) => {
    const verdict = email.verdict
      ? `<span class="tag ${email.verdict.label}">${email.verdict.label}</span>`
      : email.analyzed
        ? ""
        : '<span class="tag pending">new</span>';
    const selected = controller.email?.id === email.id ? " selected" : "";
    return (
      `<li class="email-row${selected}" data-action="select-email"` +
      ` data-id="${email.id}">` +
      `<strong>${escapeText(email.subject)}</strong><br>` +
      `<small>${escapeText(email.sender_address)}</small> ${verdict}</li>`
    );
  });
  list!.innerHTML =
    rows.length > 0 ? rows.join("") : '<li class="muted">No emails.</li>';
}

function escapeText(value: string): string {
  const div = document.createElement("div");
  div.textContent = value;
  return div.innerHTML;
}

controller.onChange = () => {
  root.innerHTML = controller.render();
  renderList();
  // put the caret back after a failed query so retry is one keystroke away
  if (controller.pendingInput) {
    const input = root.querySelector<HTMLInputElement>('input[name="query"]');
    input?.focus();
    input?.setSelectionRange(input.value.length, input.value.length);
  }
  scrollActiveSpanIntoView();
};

function scrollActiveSpanIntoView(): void {
  const index = controller.activeFinding;
  if (index < 0) return;
  const row = root!.querySelectorAll(".finding")[index];
  const name = row?.querySelector("strong")?.textContent;
  if (!name) return;
  const mark = root!.querySelector(`mark[data-feature="${CSS.escape(name)}"]`);
  mark?.scrollIntoView({ block: "center", behavior: "smooth" });
}

document.addEventListener("click", (event) => {
  const el = (event.target as HTMLElement).closest<HTMLElement>(
    "[data-action]",
  );
  if (!el) return;
  switch (el.dataset.action) {
    case "select-email":
      void controller.select(el.dataset.id ?? "");
      break;
    case "toggle-feature":
      controller.toggleFeature(el.dataset.feature ?? "");
      break;
    case "toggle-order":
      controller.toggleOrder();
      break;
    case "next-finding":
      controller.cycleFinding();
      break;
    case "goto-finding":
      controller.gotoFinding(Number(el.dataset.index));
      break;
    case "analyze":
      void controller.analyze();
      break;
    case "speak":
      controller.speakExplanation();
      break;
    default:
      break;
  }
});

document.addEventListener("submit", (event) => {
  const form = (event.target as HTMLElement).closest<HTMLFormElement>(
    'form[data-action="submit-query"]',
  );
  if (!form) return;
  event.preventDefault();
  const input = form.elements.namedItem("query") as HTMLInputElement | null;
  if (input) void controller.submitQuery(input.value);
});

datePicker?.addEventListener("change", (event) => {
  const value = (event.target as HTMLInputElement).value || null;
  void controller.loadDate(value);
});

// keep the selected day fresh; reads only, never mutates
setInterval(() => {
  void controller.loadDate(controller.selectedDate);
}, POLL_MS);

void controller
  .loadCatalog()
  .then(() => controller.loadDate(null))
  .catch((error) => {
    root.innerHTML = `<p class="error">Cannot reach the triage service: ${escapeText(String(error))}</p>`;
  });
