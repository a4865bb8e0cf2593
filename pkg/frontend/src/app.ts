import { PlannerApi } from "./api.js";
import { PlanningSession } from "./session.js";
import type { ViewState } from "./session.js";
import type { ControlErrors, ControlId } from "./controls.js";
import { controlRanges } from "./controls.js";
import { renderMap } from "./map.js";
import { poolView, renderPoolTable } from "./table.js";
import { escapeHtml, km, musd, mw } from "./format.js";

/**
 * Browser entry point: renders session state into #app and forwards DOM
 * events back to the session. All logic lives in the session; this file
 * is templates and listeners only.
 */

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8000";

const session = new PlanningSession(new PlannerApi(apiBase));
const root = document.getElementById("app");
if (!root) {
  throw new Error("#app missing from the page");
}

function fieldError(errors: ControlErrors, id: ControlId): string {
  const message = errors[id];
  return message ? `<span class="field-error">${escapeHtml(message)}</span>` : "";
}

function numberField(
  id: ControlId,
  label: string,
  value: number | null,
  attrs: string,
  disabled: boolean,
  errors: ControlErrors,
  hint = ""
): string {
  const v = value === null ? "" : String(value);
  return (
    `<label class="field"><span>${escapeHtml(label)}</span>` +
    `<input type="number" data-control="${id}" value="${escapeHtml(v)}" ${attrs}` +
    `${disabled ? " disabled" : ""}>` +
    `${hint}${fieldError(errors, id)}</label>`
  );
}

function toggleField(
  id: ControlId,
  label: string,
  checked: boolean,
  disabled: boolean,
  errors: ControlErrors
): string {
  return (
    `<label class="field field-toggle">` +
    `<input type="checkbox" data-control="${id}"${checked ? " checked" : ""}` +
    `${disabled ? " disabled" : ""}>` +
    `<span>${escapeHtml(label)}</span>${fieldError(errors, id)}</label>`
  );
}

function controlsHtml(state: ViewState): string {
  const { network, controls, controlErrors } = state;
  if (!network || !controls) {
    return `<p class="muted">waiting for the service…</p>`;
  }
  const ranges = controlRanges(network);
  const busy = state.phase === "solving";
  const floorMax = ranges.minFreeFlowingKm.max;
  const hhMax = ranges.maxHouseholds.max;
  const parts = [
    numberField(
      "energyPrice",
      "Energy price ($/kWh)",
      controls.energyPrice,
      `min="${ranges.energyPrice.min}" step="0.001"`,
      busy,
      controlErrors
    ),
    numberField(
      "minFreeFlowingKm",
      "Min free-flowing river (km)",
      controls.minFreeFlowingKm,
      `min="${ranges.minFreeFlowingKm.min}"` +
        (floorMax !== null ? ` max="${floorMax}"` : "") +
        ` step="0.1"`,
      busy,
      controlErrors,
      floorMax !== null ? `<span class="hint">baseline ${km(floorMax)} km</span>` : ""
    ),
    numberField(
      "maxHouseholds",
      "Max households flooded",
      controls.maxHouseholds,
      `min="${ranges.maxHouseholds.min}"` +
        (hhMax !== null ? ` max="${hhMax}"` : "") +
        ` step="1" placeholder="no cap"`,
      busy,
      controlErrors
    ),
    toggleField(
      "blockRailwayFlooding",
      "Forbid railway flooding",
      controls.blockRailwayFlooding,
      busy,
      controlErrors
    ),
    toggleField(
      "blockProtectedAreas",
      "Forbid protected-area flooding",
      controls.blockProtectedAreas,
      busy,
      controlErrors
    ),
  ];
  const submitLabel = state.activeRunId === null ? "Solve baseline" : "Run what-if";
  const formError = state.formError
    ? `<div class="banner banner-error">${escapeHtml(state.formError)}</div>`
    : "";
  return (
    `<form id="whatif-form">${parts.join("\n")}` +
    `<button type="submit" id="submit-whatif"${busy ? " disabled" : ""}>` +
    `${busy ? "solving…" : submitLabel}</button>${formError}</form>`
  );
}

function progressHtml(state: ViewState): string {
  if (state.phase !== "solving") {
    return "";
  }
  const p = state.job?.progress;
  const bits: string[] = [`job ${state.job?.job_id ?? "queued"}`];
  if (p?.pool_size != null) {
    bits.push(`${p.pool_size} plan${p.pool_size === 1 ? "" : "s"}`);
  }
  if (p?.objective != null) {
    bits.push(`best ${musd(p.objective)} M$/yr`);
  }
  if (p?.gap != null) {
    bits.push(`gap ${(p.gap * 100).toFixed(2)}%`);
  }
  if (p?.lp_solves != null) {
    bits.push(`${p.lp_solves} LP solves`);
  }
  return `<div class="banner banner-progress">${escapeHtml(bits.join(" · "))}</div>`;
}

function runPickerHtml(state: ViewState): string {
  if (state.runs.length === 0) {
    return `<span class="muted">no runs yet</span>`;
  }
  const options = state.runs
    .map((r) => {
      const selected = r.run_id === state.activeRunId ? " selected" : "";
      const disabled = r.status === "complete" ? "" : " disabled";
      return (
        `<option value="${escapeHtml(r.run_id)}"${selected}${disabled}>` +
        `${escapeHtml(r.run_id)} (${escapeHtml(r.status)})</option>`
      );
    })
    .join("");
  return `<select id="run-picker"${state.phase === "solving" ? " disabled" : ""}>${options}</select>`;
}

function selectionHtml(state: ViewState): string {
  const alt = state.selectedAlternative;
  if (!alt) {
    return "";
  }
  const s = alt.summary;
  return (
    `<p class="selection-caption">selected plan: ${musd(alt.objective_usd_per_yr)} M$/yr, ` +
    `${s.project_count} projects, ${mw(s.installed_mw)} MW, ` +
    `${km(s.free_flowing_km)} km free-flowing</p>`
  );
}

const MAP_LEGEND =
  `<ul class="legend">` +
  `<li><span class="swatch swatch-free"></span>free-flowing</li>` +
  `<li><span class="swatch swatch-fragmented"></span>fragmented</li>` +
  `<li><span class="swatch swatch-dam"></span>dam</li>` +
  `<li><span class="swatch swatch-passable"></span>passable dam</li>` +
  `<li><span class="swatch swatch-natural"></span>natural barrier</li>` +
  `</ul>`;

function ledgerHtml(): string {
  const lines = session.ledger();
  if (lines.length === 0) {
    return `<p class="muted">no what-if history for this run</p>`;
  }
  return `<ul class="ledger">${lines
    .map((line) => `<li>${escapeHtml(line.text)}</li>`)
    .join("")}</ul>`;
}

function render(state: ViewState): void {
  if (state.phase === "loading") {
    root!.innerHTML = `<p class="muted">loading basin…</p>`;
    return;
  }
  const lastError = state.lastError
    ? `<div class="banner banner-error">${escapeHtml(state.lastError)}</div>`
    : "";
  const model = session.mapModel();
  const pool = state.pool ? renderPoolTable(poolView(state.pool), state.selectedIndex) : "";
  root!.innerHTML = `
    ${lastError}
    <header>
      <h1>River basin planning console</h1>
      <div class="run-bar">${runPickerHtml(state)}</div>
    </header>
    <main>
      <section class="panel panel-controls">
        <h2>What-if controls</h2>
        ${controlsHtml(state)}
      </section>
      <section class="panel panel-pool">
        <h2>Solution pool</h2>
        ${progressHtml(state)}
        ${pool || `<p class="muted">no run loaded</p>`}
      </section>
      <section class="panel panel-map">
        <h2>Fragmentation map</h2>
        ${selectionHtml(state)}
        ${model ? renderMap(model) : ""}
        ${MAP_LEGEND}
      </section>
      <section class="panel panel-ledger">
        <h2>Revenue-loss ledger</h2>
        ${ledgerHtml()}
      </section>
    </main>`;
}

function readControl(input: HTMLInputElement): void {
  const id = input.dataset["control"] as ControlId | undefined;
  if (!id) {
    return;
  }
  if (input.type === "checkbox") {
    session.setControls({ [id]: input.checked });
    return;
  }
  if (input.value.trim() === "" && id === "maxHouseholds") {
    session.setControls({ maxHouseholds: null });
    return;
  }
  session.setControls({ [id]: Number(input.value) });
}

root.addEventListener("change", (ev) => {
  const target = ev.target as HTMLElement;
  if (target instanceof HTMLInputElement && target.dataset["control"]) {
    readControl(target);
  } else if (target instanceof HTMLSelectElement && target.id === "run-picker") {
    void session.selectRun(target.value);
  }
});

root.addEventListener("click", (ev) => {
  const row = (ev.target as HTMLElement).closest("tr.pool-row");
  if (row instanceof HTMLTableRowElement && row.dataset["index"] !== undefined) {
    void session.selectAlternative(Number(row.dataset["index"]));
  }
});

root.addEventListener("submit", (ev) => {
  if ((ev.target as HTMLElement).id === "whatif-form") {
    ev.preventDefault();
    void session.submitWhatIf();
  }
});

session.subscribe(render);
render(session.state);
void session.load();
