/**
 * The scenario view model: assertion marks, objective selection, and the last
 * outcome translated into highlight/outline sets.  All state derives from
 * service responses plus local edits; there is no client-side solving.
 */

import type { Graph, OutcomeJson } from "./api.js";

export type Mark = true | false | undefined;

export interface OutcomeView {
  status: "realizable" | "unrealizable" | "budget" | null;
  highlight: Set<string>; // satisfied labels (elements + refinements)
  coreElements: Set<string>; // elements outlined as core members
  coreEdges: Set<string>; // edge keys "a--b" outlined as core members
  coreRefinements: Set<string>;
  objectiveValues: string[]; // exact "num/den" strings from the service
  attained: boolean;
  coreItems: string[];
}

export function emptyOutcome(): OutcomeView {
  return {
    status: null,
    highlight: new Set(),
    coreElements: new Set(),
    coreEdges: new Set(),
    coreRefinements: new Set(),
    objectiveValues: [],
    attained: true,
    coreItems: [],
  };
}

export class ScenarioState {
  assertions: Map<string, boolean> = new Map();
  lexOrder: string[] = [];
  directions: Map<string, string> = new Map();
  outcome: OutcomeView = emptyOutcome();
  pending = false;

  constructor(public graph: Graph) {
    for (const [label, value] of Object.entries(graph.assertions)) {
      this.assertions.set(label, value);
    }
  }

  /** Click cycle: unmarked -> true -> false -> unmarked. */
  cycleMark(label: string): boolean | null {
    const current = this.assertions.get(label);
    let next: boolean | null;
    if (current === undefined) next = true;
    else if (current === true) next = false;
    else next = null;
    if (next === null) this.assertions.delete(label);
    else this.assertions.set(label, next);
    return next;
  }

  markOf(label: string): Mark {
    return this.assertions.get(label);
  }

  toggleObjective(id: string): void {
    const at = this.lexOrder.indexOf(id);
    if (at >= 0) this.lexOrder.splice(at, 1);
    else this.lexOrder.push(id);
  }

  applyServerAssertions(assertions: Record<string, boolean>): void {
    this.assertions = new Map(Object.entries(assertions));
  }

  applyOutcome(outcome: OutcomeJson): OutcomeView {
    const view = emptyOutcome();
    view.status = outcome.status;
    const realization = outcome.realization ?? outcome.bestSoFar;
    if (realization) {
      for (const label of realization.satisfied) view.highlight.add(label);
      view.objectiveValues = realization.objectiveValues ?? [];
      view.attained = realization.attained;
    }
    if (outcome.boundsSoFar && view.objectiveValues.length === 0) {
      view.objectiveValues = outcome.boundsSoFar;
      view.attained = false;
    }
    for (const item of outcome.core ?? []) {
      view.coreItems.push(item);
      this.outlineCoreItem(item, view);
    }
    this.outcome = view;
    return view;
  }

  /** Map a core tag like "RelationEdge(3:A -- B)" back onto graph entities. */
  private outlineCoreItem(item: string, view: OutcomeView): void {
    const m = /^([A-Za-z]+)\((.*)\)$/.exec(item);
    if (!m) return;
    const origin = m[1];
    const payload = m[2];
    const refinementIds = new Set(this.graph.refinements.map((r) => r.id));
    const elementIds = new Set(this.graph.nodes.map((n) => n.id));
    if (origin === "RelationEdge") {
      const desc = payload.slice(payload.indexOf(":") + 1);
      const em = /^(\S+) (->|<->|--|~) (\S+)$/.exec(desc);
      if (em) view.coreEdges.add(edgeKey(em[1], em[3]));
      return;
    }
    const ref = payload.split(":")[0];
    if (elementIds.has(ref)) view.coreElements.add(ref);
    else if (refinementIds.has(ref)) view.coreRefinements.add(ref);
  }
}

export function edgeKey(a: string, b: string): string {
  return `${a}--${b}`;
}
