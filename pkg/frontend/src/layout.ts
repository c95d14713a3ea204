/**
 * Deterministic layered layout for the goal DAG: requirements at the top,
 * refinements as bullet nodes between their target and sources.  No physics,
 * no randomness — identical graphs always produce identical coordinates, so
 * screenshots are stable.
 */

import type { Graph } from "./api.js";

export interface Point {
  x: number;
  y: number;
}

export interface Layout {
  elements: Map<string, Point>;
  refinements: Map<string, Point>;
  width: number;
  height: number;
}

const COL = 168;
const ROW = 120;
const PAD = 60;

export function layeredLayout(graph: Graph): Layout {
  // element depth: longest refinement path from a root (targets above sources)
  const depth = new Map<string, number>();
  const byTarget = new Map<string, string[][]>();
  for (const r of graph.refinements) {
    if (!byTarget.has(r.target)) byTarget.set(r.target, []);
    byTarget.get(r.target)!.push(r.sources);
  }
  const ids = graph.nodes.map((n) => n.id);
  const visiting = new Set<string>();

  // depth(source) >= depth(target) + 1 for every refinement
  const parents = new Map<string, string[]>();
  for (const r of graph.refinements) {
    for (const s of r.sources) {
      if (!parents.has(s)) parents.set(s, []);
      parents.get(s)!.push(r.target);
    }
  }

  function elementDepth(id: string): number {
    const cached = depth.get(id);
    if (cached !== undefined) return cached;
    if (visiting.has(id)) return 0; // defensive; validated models are acyclic
    visiting.add(id);
    const above = parents.get(id) ?? [];
    const d = above.length === 0 ? 0 : Math.max(...above.map(elementDepth)) + 1;
    visiting.delete(id);
    depth.set(id, d);
    return d;
  }
  ids.forEach(elementDepth);

  const layers = new Map<number, string[]>();
  for (const id of ids) {
    const d = depth.get(id)!;
    if (!layers.has(d)) layers.set(d, []);
    layers.get(d)!.push(id);
  }
  const layerKeys = [...layers.keys()].sort((a, b) => a - b);

  // a few barycenter passes for readable orderings, ties broken by id
  const order = new Map<string, number>();
  for (const d of layerKeys) {
    layers.get(d)!.sort();
    layers.get(d)!.forEach((id, i) => order.set(id, i));
  }
  const neighbours = new Map<string, string[]>();
  for (const r of graph.refinements) {
    for (const s of r.sources) {
      if (!neighbours.has(s)) neighbours.set(s, []);
      neighbours.get(s)!.push(r.target);
      if (!neighbours.has(r.target)) neighbours.set(r.target, []);
      neighbours.get(r.target)!.push(s);
    }
  }
  for (let pass = 0; pass < 3; pass++) {
    for (const d of layerKeys) {
      const layer = layers.get(d)!;
      const score = (id: string): number => {
        const ns = neighbours.get(id) ?? [];
        if (ns.length === 0) return order.get(id)!;
        return ns.map((n) => order.get(n)!).reduce((a, b) => a + b, 0) / ns.length;
      };
      layer.sort((a, b) => {
        const sa = score(a);
        const sb = score(b);
        return sa === sb ? (a < b ? -1 : 1) : sa - sb;
      });
      layer.forEach((id, i) => order.set(id, i));
    }
  }

  const elements = new Map<string, Point>();
  let width = 0;
  for (const d of layerKeys) {
    const layer = layers.get(d)!;
    layer.forEach((id, i) => {
      elements.set(id, { x: PAD + i * COL, y: PAD + d * ROW });
      width = Math.max(width, PAD + i * COL);
    });
  }

  // refinement bullets sit between their target and the mean of their sources
  const refinements = new Map<string, Point>();
  const sorted = [...graph.refinements].sort((a, b) => (a.id < b.id ? -1 : 1));
  const used = new Map<string, number>();
  for (const r of sorted) {
    const t = elements.get(r.target)!;
    const ss = r.sources.map((s) => elements.get(s)!);
    const mx = ss.reduce((a, p) => a + p.x, 0) / ss.length;
    const my = ss.reduce((a, p) => a + p.y, 0) / ss.length;
    const key = `${r.target}`;
    const bump = used.get(key) ?? 0;
    used.set(key, bump + 1);
    refinements.set(r.id, {
      x: (t.x + mx) / 2 + bump * 26,
      y: (t.y + my) / 2,
    });
  }

  const height = PAD * 2 + (layerKeys.length ? layerKeys[layerKeys.length - 1] * ROW : 0) + ROW;
  return { elements, refinements, width: width + COL + PAD, height };
}
