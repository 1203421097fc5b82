"""Read-only HTTP/JSON API over one immutable artifact snapshot.

The service loads catalog, cohort, dependency graph, and risk model from
an artifacts directory at startup and never mutates them; every response
is a pure function of (snapshot, request).  Counterfactual requests run
the same engine the command line uses.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import naive, plausibility, propagate, riskmodel
from .catalog import FeatureCatalog, TaxonomyClass, load_catalog
from .cohort import Cohort, Period, load_cohort
from .depgraph import DependencyGraph, graph_from_json
from .errors import SeqcfError
from .plausibility import audit_naive
from .cascade import full_report
from .results import vector_json

ARTIFACT_FILES = ("catalog.json", "cohort.csv", "graph.json", "model.json")


@dataclass(frozen=True)
class ServiceState:
    snapshot_id: str
    catalog: FeatureCatalog
    cohort: Cohort
    graph: DependencyGraph
    model: riskmodel.RiskModel
    scores: np.ndarray  # predicted risk per patient, cohort order
    epsilon: float


def load_state(artifacts_dir: str | Path) -> ServiceState:
    root = Path(artifacts_dir)
    missing = [name for name in ARTIFACT_FILES if not (root / name).exists()]
    if missing:
        raise SeqcfError(f"artifacts directory {root} is missing: {', '.join(missing)}")

    digest = hashlib.sha256()
    for name in ARTIFACT_FILES:
        digest.update(name.encode())
        digest.update((root / name).read_bytes())
    snapshot_id = digest.hexdigest()[:16]

    catalog = load_catalog((root / "catalog.json").read_text())
    cohort = load_cohort((root / "cohort.csv").read_text(), catalog)
    graph = graph_from_json((root / "graph.json").read_text(), catalog)
    model = riskmodel.RiskModel.from_json((root / "model.json").read_text())
    if model.d != catalog.d:
        raise SeqcfError(
            f"artifact mismatch: model expects d={model.d}, catalog has d={catalog.d}"
        )
    scores = riskmodel.score_matrix(model, cohort.X)
    epsilon = plausibility.calibrate_epsilon(graph, cohort)
    return ServiceState(snapshot_id, catalog, cohort, graph, model, scores, epsilon)


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body: dict[str, Any] = {"error": {"code": code, "message": message}}
    if field is not None:
        body["error"]["field"] = field
    return JSONResponse(status_code=status, content=body)


def create_app(
    artifacts_dir: str | Path | None = None,
    allow_origin: str | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="sequential counterfactual service")
    app.state.engine = None

    if allow_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[allow_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.on_event("startup")
    def _load() -> None:
        if artifacts_dir is not None:
            app.state.engine = load_state(artifacts_dir)

    def state() -> ServiceState | None:
        return app.state.engine

    @app.exception_handler(SeqcfError)
    def _seqcf_error(_: Request, exc: SeqcfError) -> JSONResponse:
        return _error(400, "invalid_request", str(exc))

    @app.get("/health")
    def health():
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        return {"status": "ok", "snapshot_id": st.snapshot_id}

    @app.get("/catalog")
    def catalog():
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        return st.catalog.to_json()

    @app.get("/patients")
    def patients(limit: int = 50, offset: int = 0, min_risk: float = 0.0):
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        if limit < 0 or offset < 0:
            return _error(400, "invalid_request", "limit and offset must be non-negative")
        immutable_idx = [
            f.index for f in st.catalog.by_class(TaxonomyClass.IMMUTABLE)
        ]
        keep = np.flatnonzero(st.scores >= min_risk)
        rows = []
        for i in keep[offset : offset + limit]:
            i = int(i)
            rows.append(
                {
                    "patient_id": st.cohort.patient_ids[i],
                    "y": int(st.cohort.y[i]),
                    "score": float(st.scores[i]),
                    "flags": {
                        "has_immutable_conditions": bool(
                            st.cohort.X[i, int(Period.HISTORY), immutable_idx].any()
                        )
                    },
                }
            )
        return {"total": int(keep.size), "offset": offset, "limit": limit, "patients": rows}

    @app.get("/patients/{patient_id}")
    def patient_detail(patient_id: str):
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        if patient_id not in st.cohort.patient_ids:
            return _error(404, "not_found", f"unknown patient id: {patient_id}")
        i = st.cohort.patient_ids.index(patient_id)
        patient = st.cohort.patient_at(i)
        periods = {}
        for period in Period:
            periods[period.suffix] = [
                {
                    "code": f.code,
                    "label": f.label,
                    "taxonomy": f.taxonomy.value,
                }
                for f in st.catalog.features
                if patient.features.get(f.index, period) == 1
            ]
        return {
            "patient_id": patient_id,
            "y": patient.outcome,
            "score": float(st.scores[i]),
            "periods": periods,
            "present": vector_json(patient.features, st.catalog),
        }

    @app.get("/audit")
    def audit():
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        return audit_naive(st.cohort, st.catalog, st.graph).to_json()

    @app.get("/cascade")
    def cascade():
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        return full_report(st.cohort)

    @app.post("/counterfactual")
    async def counterfactual(request: Request):
        st = state()
        if st is None:
            return _error(503, "loading", "artifact snapshot not loaded yet")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "invalid_request", "request body must be JSON")

        patient_id = body.get("patient_id")
        if not isinstance(patient_id, str):
            return _error(400, "invalid_request", "patient_id is required", "patient_id")
        if patient_id not in st.cohort.patient_ids:
            return _error(404, "not_found", f"unknown patient id: {patient_id}")
        mode = body.get("mode", "sequential")
        if mode not in ("naive", "sequential"):
            return _error(400, "invalid_request", "mode must be 'naive' or 'sequential'", "mode")
        theta = float(body.get("theta", 0.5))
        seed = int(body.get("seed", 7))
        samples = int(body.get("samples", 200))
        patient = st.cohort.patient(patient_id)

        if mode == "naive":
            try:
                config = naive.NaiveCfConfig(risk_threshold=theta)
                result = naive.generate_naive(
                    st.model, patient, config, st.graph, st.epsilon
                )
            except SeqcfError as exc:
                return _error(400, "invalid_request", str(exc))
            if isinstance(result, naive.NotFound):
                return _error(422, "not_found_counterfactual", result.message)
            return result.to_json()

        interventions = []
        for k, item in enumerate(body.get("interventions", [])):
            try:
                iv = propagate.Intervention(
                    code=item["code"],
                    period=Period.from_suffix(item.get("period", "history")),
                    action=item.get("action", "add"),
                )
                iv.validate(st.catalog)
            except (KeyError, TypeError):
                return _error(
                    400, "invalid_request", "interventions need code/period/action",
                    f"interventions[{k}]",
                )
            except SeqcfError as exc:
                return _error(400, "invalid_intervention", str(exc), f"interventions[{k}]")
            interventions.append(iv)
        sampling_mode = body.get("propagation", "deterministic")
        try:
            config = propagate.PropagationConfig(
                mode=sampling_mode,
                n_samples=samples,
                seed=seed,
                risk_threshold=theta,
                epsilon=st.epsilon,
            )
            result = propagate.propagate(st.graph, st.model, patient, interventions, config)
        except SeqcfError as exc:
            return _error(400, "invalid_request", str(exc))
        return result.to_json()

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
