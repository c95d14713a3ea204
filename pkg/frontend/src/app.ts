/**
 * DOM wiring for the scenario explorer: load a model, click elements to cycle
 * Force True / Force False / clear (patched to the service immediately), pick
 * objectives in lexicographic click order, run, and read the outcome off the
 * highlighted graph plus the exact-value panel.
 */

import { Client, Graph, ServiceError } from "./api.js";
import { layeredLayout } from "./layout.js";
import { renderSvg } from "./render.js";
import { ScenarioState } from "./state.js";
import { displayRational, formatApprox, parseRational } from "./rationals.js";

interface App {
  client: Client;
  modelId: string;
  scenarioId: string;
  graph: Graph;
  state: ScenarioState;
}

let app: App | null = null;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function banner(text: string, kind: "error" | "info" = "error"): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = text;
  box.className = kind;
  box.style.display = text ? "block" : "none";
}

function redraw(): void {
  if (!app) return;
  const layout = layeredLayout(app.graph);
  el<HTMLDivElement>("graph").innerHTML = renderSvg(app.graph, layout, app.state);
  for (const g of document.querySelectorAll<SVGGElement>("g.element")) {
    g.addEventListener("click", () => cycleMark(g.dataset.element!));
  }
  renderObjectives();
  renderValues();
}

function renderObjectives(): void {
  if (!app) return;
  const picker = el<HTMLDivElement>("objectives");
  picker.innerHTML = "";
  for (const o of app.graph.objectives) {
    const btn = document.createElement("button");
    const at = app.state.lexOrder.indexOf(o.id);
    btn.textContent = at >= 0 ? `${at + 1}. ${o.id}` : o.id;
    btn.className = at >= 0 ? "objective picked" : "objective";
    btn.onclick = () => {
      app!.state.toggleObjective(o.id);
      renderObjectives();
    };
    picker.appendChild(btn);
  }
}

function renderValues(): void {
  if (!app) return;
  const view = app.state.outcome;
  const panel = el<HTMLDivElement>("values");
  const lines: string[] = [];
  if (view.status) lines.push(`<b>status:</b> ${view.status}${view.attained ? "" : " (not attained)"}`);
  view.objectiveValues.forEach((v, i) => {
    const name = app!.state.lexOrder[i] ?? `objective ${i + 1}`;
    const exact = displayRational(v);
    const approx = formatApprox(parseRational(v));
    lines.push(`<b>${name}</b> = ${exact} <span class="approx">(~${approx}, approximate)</span>`);
  });
  for (const item of view.coreItems) lines.push(`<span class="core-item">${item}</span>`);
  panel.innerHTML = lines.join("<br>");
}

async function cycleMark(label: string): Promise<void> {
  if (!app || app.state.pending) return;
  const next = app.state.cycleMark(label);
  try {
    const updated = await app.client.patchAssertions(app.scenarioId, { [label]: next });
    app.state.applyServerAssertions(updated.assertions); // read back server state
    banner("");
  } catch (e) {
    banner(String(e));
  }
  redraw();
}

async function run(): Promise<void> {
  if (!app || app.state.pending) return;
  app.state.pending = true;
  const button = el<HTMLButtonElement>("run");
  button.disabled = true;
  try {
    const outcome = await app.client.solve(app.scenarioId, {
      lex: app.state.lexOrder,
      mode: app.state.lexOrder.length ? "optimize" : "check",
    });
    app.state.applyOutcome(outcome);
    banner("");
  } catch (e) {
    if (e instanceof ServiceError) banner(`${e.body.code}: ${e.body.message}`);
    else banner(String(e));
  } finally {
    app.state.pending = false;
    button.disabled = false;
    redraw();
  }
}

async function loadModel(): Promise<void> {
  const base = el<HTMLInputElement>("service").value.replace(/\/$/, "");
  const dsl = el<HTMLTextAreaElement>("dsl").value;
  const client = new Client(base);
  try {
    const modelId = await client.addModelDsl(dsl);
    const graph = await client.graph(modelId);
    const scenarioId = await client.newScenario(modelId);
    app = { client, modelId, scenarioId, graph, state: new ScenarioState(graph) };
    // scenario starts from the model's own marks
    await client.patchAssertions(
      scenarioId,
      Object.fromEntries(Object.entries(graph.assertions)),
    );
    banner("");
    redraw();
  } catch (e) {
    if (e instanceof ServiceError) banner(`${e.body.code}: ${e.body.message}`);
    else banner(String(e));
  }
}

export function boot(): void {
  el<HTMLButtonElement>("load").onclick = () => void loadModel();
  el<HTMLButtonElement>("run").onclick = () => void run();
}

if (typeof document !== "undefined" && document.getElementById("load")) {
  boot();
}
