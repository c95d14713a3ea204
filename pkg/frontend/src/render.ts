/**
 * SVG rendering of the goal graph: rounded rectangles for requirements,
 * ovals for intermediate goals, hexagons for tasks, plain rectangles for
 * domain assumptions, labelled bullets for refinements.  The current
 * realization is highlighted; denied elements stay visible unhighlighted;
 * unsat-core members get an outline.
 */

import type { Graph } from "./api.js";
import type { Layout } from "./layout.js";
import { ScenarioState, edgeKey } from "./state.js";

const W = 132;
const H = 46;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function wrapLabel(text: string): string[] {
  const words = text.replace(/([a-z])([A-Z])/g, "$1 $2").split(/\s+/);
  const lines: string[] = [];
  let line = "";
  for (const w of words) {
    if ((line + " " + w).trim().length > 16 && line) {
      lines.push(line.trim());
      line = w;
    } else {
      line = (line + " " + w).trim();
    }
  }
  if (line) lines.push(line);
  return lines.slice(0, 3);
}

function shape(role: string, x: number, y: number, classes: string): string {
  const cx = x;
  const cy = y;
  if (role === "requirement") {
    return `<rect class="node ${classes}" x="${cx - W / 2}" y="${cy - H / 2}" width="${W}" height="${H}" rx="14"/>`;
  }
  if (role === "intermediate") {
    return `<ellipse class="node ${classes}" cx="${cx}" cy="${cy}" rx="${W / 2}" ry="${H / 2 + 4}"/>`;
  }
  if (role === "task") {
    const dx = W / 2;
    const dy = H / 2;
    const cut = 16;
    const points = [
      [cx - dx + cut, cy - dy], [cx + dx - cut, cy - dy], [cx + dx, cy],
      [cx + dx - cut, cy + dy], [cx - dx + cut, cy + dy], [cx - dx, cy],
    ].map((p) => p.join(",")).join(" ");
    return `<polygon class="node ${classes}" points="${points}"/>`;
  }
  return `<rect class="node ${classes}" x="${cx - W / 2}" y="${cy - H / 2}" width="${W}" height="${H}"/>`;
}

export function renderSvg(graph: Graph, layout: Layout, state: ScenarioState): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ${layout.height}" width="${layout.width}" height="${layout.height}">`,
  );
  const view = state.outcome;
  const roles = new Map(graph.nodes.map((n) => [n.id, n.role]));

  // refinement edges: sources -> bullet -> target
  for (const r of graph.refinements) {
    const bullet = layout.refinements.get(r.id)!;
    const target = layout.elements.get(r.target)!;
    const sat = view.highlight.has(r.id) ? " sat" : "";
    const core = view.coreRefinements.has(r.id) ? " core" : "";
    for (const s of r.sources) {
      const p = layout.elements.get(s)!;
      out.push(
        `<line class="refedge${sat}" x1="${p.x}" y1="${p.y - H / 2}" x2="${bullet.x}" y2="${bullet.y}"/>`,
      );
    }
    out.push(
      `<line class="refedge arrow${sat}" x1="${bullet.x}" y1="${bullet.y}" x2="${target.x}" y2="${target.y + H / 2}"/>`,
    );
    out.push(
      `<circle class="bullet${sat}${core}" data-refinement="${esc(r.id)}" cx="${bullet.x}" cy="${bullet.y}" r="9"/>` +
      `<text class="bullet-label" x="${bullet.x + 12}" y="${bullet.y + 4}">${esc(r.id)}</text>`,
    );
  }

  // relation edges
  for (const e of graph.edges) {
    const inCore = view.coreEdges.has(edgeKey(e.a, e.b));
    const a = e.kind === "binding" ? layout.refinements.get(e.a)! : layout.elements.get(e.a)!;
    const b = e.kind === "binding" ? layout.refinements.get(e.b)! : layout.elements.get(e.b)!;
    const mid = { x: (a.x + b.x) / 2, y: (a.y + b.y) / 2 - 8 };
    const label = { contribution: "++", mutual: "++", conflict: "--", binding: "~" }[e.kind];
    out.push(
      `<line class="rel ${e.kind}${inCore ? " core" : ""}" data-edge="${esc(edgeKey(e.a, e.b))}"` +
      ` x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}"/>` +
      `<text class="rel-label ${e.kind}" x="${mid.x}" y="${mid.y}">${label}</text>`,
    );
  }

  // element nodes
  for (const n of graph.nodes) {
    const p = layout.elements.get(n.id)!;
    const classes: string[] = [n.role];
    if (view.highlight.has(n.id)) classes.push("sat");
    if (view.coreElements.has(n.id)) classes.push("core");
    const mark = state.markOf(n.id);
    out.push(`<g class="element" data-element="${esc(n.id)}">`);
    out.push(shape(n.role, p.x, p.y, classes.join(" ")));
    const lines = wrapLabel(n.displayName);
    lines.forEach((line, i) => {
      const dy = p.y + (i - (lines.length - 1) / 2) * 13 + 4;
      out.push(`<text class="label" x="${p.x}" y="${dy}">${esc(line)}</text>`);
    });
    if (mark !== undefined) {
      out.push(
        `<circle class="mark ${mark ? "mark-true" : "mark-false"}" cx="${p.x + W / 2 - 6}" cy="${p.y - H / 2 + 6}" r="8"/>` +
        `<text class="mark-text" x="${p.x + W / 2 - 6}" y="${p.y - H / 2 + 10}">${mark ? "T" : "F"}</text>`,
      );
    }
    out.push("</g>");
  }
  out.push("</svg>");
  return out.join("\n");
}
