"""HTTP/JSON API over models, scenarios and reasoning operations.

Scenarios are pure data: a base model id plus an assertion overlay and an
objective selection.  Solves are synchronous with a server-enforced maximum
timeout (interactive default 60 s); an exhausted budget is a 200 response
with status "budget" carrying the best realization found so far.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import reason
from .dsl import (
    model_from_json,
    model_to_json,
    outcome_to_json,
    parse_model,
    realization_to_json,
)
from .dsl.jsonio import JsonSchemaError
from .model import CGM, InvalidModel, Kind, classify


@dataclass
class ScenarioRecord:
    id: str
    model_id: str
    assertions: Dict[str, bool] = field(default_factory=dict)
    objectives: List[str] = field(default_factory=list)
    directions: Dict[str, str] = field(default_factory=dict)
    created_at: float = field(default_factory=time.time)

    def to_json(self) -> Dict:
        return {
            "id": self.id,
            "modelId": self.model_id,
            "assertions": dict(self.assertions),
            "objectives": list(self.objectives),
            "directions": dict(self.directions),
            "createdAt": self.created_at,
        }


class Store:
    """In-memory store with optional append-only JSON-lines persistence."""

    def __init__(self, state_path: Optional[str] = None):
        self.lock = threading.Lock()
        self.models: Dict[str, CGM] = {}
        self.scenarios: Dict[str, ScenarioRecord] = {}
        self.counter = 0
        self.state_path = state_path
        if state_path:
            self._replay()

    def _append(self, event: Dict) -> None:
        if self.state_path:
            with open(self.state_path, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        try:
            fh = open(self.state_path)
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                op = event["op"]
                if op == "model":
                    self.models[event["id"]] = model_from_json(event["model"])
                elif op == "scenario":
                    s = event["scenario"]
                    self.scenarios[s["id"]] = ScenarioRecord(
                        id=s["id"], model_id=s["modelId"],
                        assertions=dict(s.get("assertions", {})),
                        objectives=list(s.get("objectives", [])),
                        directions=dict(s.get("directions", {})),
                        created_at=s.get("createdAt", 0.0),
                    )
                elif op == "assertions":
                    rec = self.scenarios[event["id"]]
                    rec.assertions = dict(event["assertions"])
                elif op == "objectives":
                    rec = self.scenarios[event["id"]]
                    rec.objectives = list(event["objectives"])
                    rec.directions = dict(event.get("directions", {}))
                self.counter = max(self.counter, int(event.get("seq", 0)))

    def next_id(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    body = {"code": code, "message": message}
    body.update(extra)
    return JSONResponse(status_code=status, content=body)


def scenario_model(store: Store, rec: ScenarioRecord) -> CGM:
    m = store.models[rec.model_id]
    for label, value in rec.assertions.items():
        m = m.with_assertion(label, value)
    return m


def create_app(state_path: Optional[str] = None, max_timeout: float = 60.0, seed: int = 0) -> FastAPI:
    app = FastAPI(title="cgm service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = Store(state_path)
    app.state.store = store

    @app.get("/healthz")
    def healthz():
        return Response(content="ok", media_type="text/plain")

    @app.get("/api")
    def api_index():
        return {
            "routes": [
                "POST /models",
                "GET /models/{id}",
                "GET /models/{id}/graph",
                "POST /models/{id}/scenarios",
                "PATCH /scenarios/{id}/assertions",
                "POST /scenarios/{id}/objectives",
                "POST /scenarios/{id}/solve",
                "POST /scenarios/{id}/core",
                "GET /scenarios/{id}/realizations",
                "GET /healthz",
            ]
        }

    @app.post("/models")
    async def add_model(request: Request):
        content_type = request.headers.get("content-type", "")
        raw = await request.body()
        try:
            if content_type.startswith("application/json"):
                body = json.loads(raw)
                if isinstance(body, dict) and "dsl" in body:
                    model = parse_model(body["dsl"], "<request>")
                else:
                    model = model_from_json(body)
            else:
                model = parse_model(raw.decode(), "<request>")
        except InvalidModel as e:
            return _error(400, "InvalidModel", "model rejected",
                          report=[str(v) for v in e.report.violations])
        except (JsonSchemaError, json.JSONDecodeError) as e:
            return _error(400, "JsonSchemaError", str(e))
        with store.lock:
            model_id = store.next_id("m")
            store.models[model_id] = model
            store._append({"op": "model", "id": model_id,
                           "model": model_to_json(model), "seq": store.counter})
        return {"modelId": model_id, "labels": len(model.labels())}

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        m = store.models.get(model_id)
        if m is None:
            return _error(404, "UnknownReference", f"no model {model_id}")
        return model_to_json(m)

    @app.get("/models/{model_id}/graph")
    def get_graph(model_id: str):
        m = store.models.get(model_id)
        if m is None:
            return _error(404, "UnknownReference", f"no model {model_id}")
        cls = classify(m)

        def role(e) -> str:
            if e.kind == Kind.ASSUMPTION:
                return "assumption"
            if e.id in cls.requirements:
                return "requirement"
            if e.id in cls.tasks:
                return "task"
            return "intermediate"

        nodes = [
            {
                "id": e.id,
                "displayName": e.display_name or e.id,
                "kind": e.kind.value,
                "role": role(e),
                "attrOnSat": {a: str(v) for a, v in e.attr_on_sat},
            }
            for e in m.elements
        ]
        refinements = [
            {"id": r.id, "target": r.target, "sources": list(r.sources)}
            for r in m.refinements
        ]
        edges = [{"kind": e.kind, "a": e.a, "b": e.b} for e in m.relation_edges]
        prefs = [{"preferred": p.preferred, "over": p.over} for p in m.preferences]
        return {
            "nodes": nodes,
            "refinements": refinements,
            "edges": edges,
            "preferences": prefs,
            "classification": {
                "roots": sorted(cls.roots),
                "leaves": sorted(cls.leaves),
                "internals": sorted(cls.internals),
                "requirements": sorted(cls.requirements),
                "tasks": sorted(cls.tasks),
                "mandatory": sorted(cls.mandatory),
            },
            "assertions": dict(m.assertions),
            "objectives": [
                {"id": o.id, "direction": o.direction} for o in m.objectives
            ] + [{"id": name, "direction": "min"} for name in
                 ("Weight", "numUnsatPrefs", "numUnsatRequirements", "numSatTasks")
                 if m.objective(name) is None],
        }

    @app.post("/models/{model_id}/scenarios")
    async def add_scenario(model_id: str, request: Request):
        if model_id not in store.models:
            return _error(404, "UnknownReference", f"no model {model_id}")
        body = {}
        raw = await request.body()
        if raw:
            body = json.loads(raw)
        with store.lock:
            sid = store.next_id("s")
            rec = ScenarioRecord(
                id=sid,
                model_id=model_id,
                assertions=dict(body.get("assertions", {})),
                objectives=list(body.get("objectives", [])),
                directions=dict(body.get("directions", {})),
            )
            err = _validate_assertions(store, rec, rec.assertions)
            if err is not None:
                return err
            store.scenarios[sid] = rec
            store._append({"op": "scenario", "scenario": rec.to_json(), "seq": store.counter})
        return rec.to_json()

    def _validate_assertions(store: Store, rec: ScenarioRecord, patch: Dict) -> Optional[JSONResponse]:
        m = store.models[rec.model_id]
        for label, value in patch.items():
            kind = m.kind_of(label)
            if kind is None:
                return _error(404, "UnknownReference", f"no label {label!r} in model")
            if kind not in (Kind.GOAL, Kind.ASSUMPTION):
                return _error(409, "LabelKindConflict",
                              f"{label!r} is a {kind.value}; only elements can be asserted")
            if value is not None and not isinstance(value, bool):
                return _error(400, "BadValue", f"assertion for {label!r} must be true/false/null")
        return None

    @app.get("/scenarios/{sid}")
    def get_scenario(sid: str):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        return rec.to_json()

    @app.patch("/scenarios/{sid}/assertions")
    async def patch_assertions(sid: str, request: Request):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        patch = json.loads(await request.body())
        err = _validate_assertions(store, rec, patch)
        if err is not None:
            return err
        with store.lock:
            for label, value in patch.items():
                if value is None:
                    rec.assertions.pop(label, None)
                else:
                    rec.assertions[label] = bool(value)
            store._append({"op": "assertions", "id": sid,
                           "assertions": rec.assertions, "seq": store.counter})
        return rec.to_json()

    @app.post("/scenarios/{sid}/objectives")
    async def set_objectives(sid: str, request: Request):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        body = json.loads(await request.body())
        with store.lock:
            rec.objectives = list(body.get("lex", []))
            rec.directions = dict(body.get("directions", {}))
            store._append({"op": "objectives", "id": sid, "objectives": rec.objectives,
                           "directions": rec.directions, "seq": store.counter})
        return rec.to_json()

    @app.post("/scenarios/{sid}/solve")
    async def solve(sid: str, request: Request):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        body = {}
        raw = await request.body()
        if raw:
            body = json.loads(raw)
        timeout = min(float(body.get("timeout", max_timeout)), max_timeout)
        lex = list(body.get("lex", rec.objectives))
        directions = dict(body.get("directions", rec.directions))
        mode = body.get("mode", "optimize" if lex else "check")
        m = scenario_model(store, rec)
        try:
            if mode == "check" or not lex:
                out = reason.check_realizability(m, budget=timeout, seed=seed)
            else:
                out = reason.optimize(m, lex, budget=timeout, directions=directions, seed=seed)
        except Exception as e:  # encoding errors (unknown objective ids etc.)
            return _error(400, type(e).__name__, str(e))
        return outcome_to_json(out)

    @app.post("/scenarios/{sid}/core")
    def scenario_core(sid: str):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        m = scenario_model(store, rec)
        out = reason.check_realizability(m, budget=max_timeout, seed=seed)
        return outcome_to_json(out)

    @app.get("/scenarios/{sid}/realizations")
    def realizations(sid: str, limit: int = 10):
        rec = store.scenarios.get(sid)
        if rec is None:
            return _error(404, "UnknownReference", f"no scenario {sid}")
        if limit < 1:
            return _error(400, "BadValue", "limit must be >= 1")
        m = scenario_model(store, rec)
        out = [
            realization_to_json(r)
            for r in reason.enumerate_realizations(m, limit=limit, budget=max_timeout, seed=seed)
        ]
        return {"realizations": out, "count": len(out)}

    return app


def main(argv=None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="cgm-service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8722)
    parser.add_argument("--state", help="append-only JSON-lines persistence file")
    parser.add_argument("--max-timeout", type=float, default=60.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    app = create_app(state_path=args.state, max_timeout=args.max_timeout, seed=args.seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
