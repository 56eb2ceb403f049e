/** DOM wiring for the demo page; all behavior lives in form.ts. */

import { SuggestClient } from "./api.js";
import { FIELDS, FieldName, FormSnapshot, ProvisionActivityForm } from "./form.js";

const DEFAULT_SERVICE_URL = "http://localhost:8750";

function fieldInput(field: FieldName): HTMLInputElement {
  return document.getElementById(`${field}-input`) as HTMLInputElement;
}

function suggestionList(field: FieldName): HTMLUListElement {
  return document.getElementById(`${field}-suggestions`) as HTMLUListElement;
}

function render(snapshot: FormSnapshot, form: ProvisionActivityForm): void {
  const banner = document.getElementById("error-banner") as HTMLDivElement;
  banner.textContent = snapshot.error ?? "";
  banner.hidden = snapshot.error === null;

  for (const field of FIELDS) {
    const input = fieldInput(field);
    if (input.value !== snapshot.values[field]) {
      input.value = snapshot.values[field];
    }
    const list = suggestionList(field);
    list.replaceChildren();
    for (const suggestion of snapshot.suggestions[field]) {
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = `${suggestion.value} (${(suggestion.confidence * 100).toFixed(1)}%)`;
      button.addEventListener("click", () => form.select(field, suggestion.value));
      item.appendChild(button);
      list.appendChild(item);
    }
  }
}

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const serviceUrl = params.get("service") ?? DEFAULT_SERVICE_URL;
  const client = new SuggestClient(serviceUrl);

  const form: ProvisionActivityForm = new ProvisionActivityForm(client, (snapshot) =>
    render(snapshot, form),
  );

  for (const field of FIELDS) {
    fieldInput(field).addEventListener("input", (event) => {
      form.onFieldChange(field, (event.target as HTMLInputElement).value);
    });
  }

  const status = document.getElementById("service-status") as HTMLSpanElement;
  status.textContent = `checking ${serviceUrl} ...`;
  void client.healthy().then((ok) => {
    status.textContent = ok ? `connected to ${serviceUrl}` : `service unreachable at ${serviceUrl}`;
    status.className = ok ? "status-ok" : "status-down";
  });
}

document.addEventListener("DOMContentLoaded", start);
