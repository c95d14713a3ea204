/** Typed client for the cgm HTTP service; the only backend the UI talks to. */

export interface GraphNode {
  id: string;
  displayName: string;
  kind: "goal" | "assumption";
  role: "requirement" | "intermediate" | "task" | "assumption";
  attrOnSat: Record<string, string>;
}

export interface GraphRefinement {
  id: string;
  target: string;
  sources: string[];
}

export interface GraphEdge {
  kind: "contribution" | "mutual" | "conflict" | "binding";
  a: string;
  b: string;
}

export interface Graph {
  nodes: GraphNode[];
  refinements: GraphRefinement[];
  edges: GraphEdge[];
  preferences: { preferred: string; over: string }[];
  classification: Record<string, string[]>;
  assertions: Record<string, boolean>;
  objectives: { id: string; direction: string }[];
}

export interface RealizationJson {
  satisfied: string[];
  numericValues: Record<string, string>;
  objectiveValues?: string[];
  attained: boolean;
}

export interface OutcomeJson {
  status: "realizable" | "unrealizable" | "budget";
  realization?: RealizationJson;
  core?: string[];
  bestSoFar?: RealizationJson;
  boundsSoFar?: string[];
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  constructor(public status: number, public body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json();
  if (!response.ok) {
    throw new ServiceError(response.status, body as ApiError);
  }
  return body as T;
}

export class Client {
  constructor(public base: string) {}

  async addModelDsl(dsl: string): Promise<string> {
    const out = await request<{ modelId: string }>(`${this.base}/models`, {
      method: "POST",
      headers: { "content-type": "text/plain" },
      body: dsl,
    });
    return out.modelId;
  }

  graph(modelId: string): Promise<Graph> {
    return request(`${this.base}/models/${modelId}/graph`);
  }

  async newScenario(modelId: string): Promise<string> {
    const out = await request<{ id: string }>(
      `${this.base}/models/${modelId}/scenarios`,
      { method: "POST", headers: { "content-type": "application/json" }, body: "{}" },
    );
    return out.id;
  }

  patchAssertions(
    scenarioId: string,
    patch: Record<string, boolean | null>,
  ): Promise<{ assertions: Record<string, boolean> }> {
    return request(`${this.base}/scenarios/${scenarioId}/assertions`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  solve(
    scenarioId: string,
    body: { mode?: string; lex?: string[]; directions?: Record<string, string>; timeout?: number },
  ): Promise<OutcomeJson> {
    return request(`${this.base}/scenarios/${scenarioId}/solve`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
