"""HTTP facade: every registered type served under ``/v1`` immediately.

The app never declares per-type routes. Type names arrive as path
parameters and are resolved against the live registry on each request,
so registering a model makes its endpoints answer at once — interpretive
adapters instead of generated code. Principals for access control come
from the ``X-NIM-Principals`` header, comma-separated; there is no
authentication layer.
"""

from __future__ import annotations

import json
from datetime import datetime

from fastapi import Body, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .errors import (
    AccessDeniedError,
    AmbiguousPathError,
    IngestRejected,
    SchemaViolation,
    UnknownEntryError,
    UnknownInstanceError,
    UnknownTypeError,
    VirtualTypeError,
)
from .node import NimNode
from .store import REJECTED
from .transform import instance_to_document
from .util import format_instant, parse_instant

PRINCIPALS_HEADER = "X-NIM-Principals"


def _principals(request: Request) -> tuple[str, ...]:
    raw = request.headers.get(PRINCIPALS_HEADER, "")
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def _instant(raw: str | None, param: str) -> datetime | None:
    if raw is None:
        return None
    try:
        return parse_instant(raw)
    except ValueError:
        raise HTTPException(400, f"query parameter '{param}' is not a valid instant")


def create_app(node: NimNode) -> FastAPI:
    app = FastAPI(title="nim node", docs_url=None, redoc_url=None)

    # -- error mapping -----------------------------------------------------

    def _handler(status: int):
        def handle(request: Request, exc: Exception):
            return JSONResponse({"detail": str(exc)}, status_code=status)

        return handle

    for exc_type, status in (
        (UnknownTypeError, 404),
        (UnknownInstanceError, 404),
        (UnknownEntryError, 404),
        (VirtualTypeError, 409),
        (AmbiguousPathError, 409),
        (AccessDeniedError, 403),
    ):
        app.add_exception_handler(exc_type, _handler(status))

    @app.exception_handler(SchemaViolation)
    def _schema(request: Request, exc: SchemaViolation):
        return JSONResponse({"errors": exc.errors}, status_code=422)

    @app.exception_handler(IngestRejected)
    def _rejected(request: Request, exc: IngestRejected):
        return JSONResponse(
            {"status": REJECTED, "reason": exc.reason, "detail": exc.detail},
            status_code=422,
        )

    # -- models --------------------------------------------------------------

    @app.post("/v1/models", status_code=201)
    async def register_model(request: Request):
        body = await request.body()
        result = node.register_model(body)
        if not result.ok:
            return JSONResponse(
                {"diagnostics": [d.to_dict() for d in result.diagnostics]},
                status_code=422,
            )
        descriptor = next(
            d for d in node.list_models() if d.model_id == result.model_id
        )
        payload = descriptor.to_dict()
        if result.diagnostics:
            payload["diagnostics"] = [d.to_dict() for d in result.diagnostics]
        return payload

    @app.get("/v1/models")
    def list_models():
        return [d.to_dict() for d in node.list_models()]

    @app.get("/v1/models/{model_id}")
    def get_model(model_id: str):
        return PlainTextResponse(node.registry.model_source(model_id))

    # -- instances -------------------------------------------------------------

    @app.post("/v1/types/{qname}/instances", status_code=201)
    def ingest_instance(qname: str, payload: dict = Body(...)):
        if isinstance(payload.get("document"), dict):
            document = payload["document"]
            instance_id = node.ingest(
                qname,
                document,
                policies=payload.get("policies"),
                units=payload.get("units"),
                ranges=payload.get("ranges"),
            )
        else:
            instance_id = node.ingest(qname, payload)
        return {"instanceId": instance_id}

    @app.get("/v1/types/{qname}/instances")
    def get_instances(qname: str, request: Request, at: str | None = None):
        when = _instant(at, "at")
        instances = node.query(qname, _principals(request), when)
        return [instance_to_document(inst) for inst in instances]

    @app.get("/v1/types/{qname}/instances/{iid}")
    def get_instance(qname: str, iid: str, request: Request, at: str | None = None):
        when = _instant(at, "at")
        return instance_to_document(
            node.get_instance(qname, iid, _principals(request), when)
        )

    # -- entries ------------------------------------------------------------------

    @app.post("/v1/types/{qname}/instances/{iid}/entries/{field}/values")
    def append_value(qname: str, iid: str, field: str, payload: dict = Body(...)):
        if "value" not in payload:
            raise HTTPException(422, "body must contain 'value'")
        timestamp = _body_instant(payload, "timestamp")
        expiry = _body_instant(payload, "expiry")
        result = node.append_value(
            qname, iid, field, payload["value"], timestamp=timestamp, expiry=expiry
        )
        if result.status == REJECTED:
            return JSONResponse(
                {"status": REJECTED, "reason": result.reason}, status_code=422
            )
        return {"status": result.status}

    @app.get("/v1/types/{qname}/instances/{iid}/entries/{field}/value")
    def entry_value(
        qname: str, iid: str, field: str, request: Request, at: str | None = None
    ):
        when = _instant(at, "at")
        tv = node.current_value(qname, iid, field, _principals(request), when)
        if tv is None:
            return {"value": None}
        return {
            "value": _wire_value(tv.value),
            "timestamp": format_instant(tv.timestamp),
            "expiry": format_instant(tv.expiry) if tv.expiry else None,
        }

    @app.get("/v1/types/{qname}/instances/{iid}/entries/{field}/history")
    def history(
        qname: str,
        iid: str,
        field: str,
        request: Request,
    ):
        # "from" cannot be a Python parameter name; read the raw params
        params = request.query_params
        start = _instant(params.get("from"), "from")
        end = _instant(params.get("to"), "to")
        if start is None or end is None:
            raise HTTPException(400, "query parameters 'from' and 'to' are required")
        when = _instant(params.get("at"), "at")
        try:
            values = node.history(
                qname, iid, field, start, end, _principals(request), when
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return [
            {
                "value": _wire_value(tv.value),
                "timestamp": format_instant(tv.timestamp),
                "expiry": format_instant(tv.expiry) if tv.expiry else None,
            }
            for tv in values
        ]

    @app.post(
        "/v1/types/{qname}/instances/{iid}/entries/{field}/forecasts",
        status_code=201,
    )
    def post_forecast(qname: str, iid: str, field: str, payload: dict = Body(...)):
        source = payload.get("source")
        points = payload.get("points")
        if not isinstance(source, str) or not isinstance(points, list):
            raise HTTPException(422, "body must contain 'source' and 'points'")
        series = []
        for point in points:
            if not isinstance(point, dict) or "t" not in point or "v" not in point:
                raise HTTPException(422, "each point must carry 't' and 'v'")
            try:
                series.append((parse_instant(str(point["t"])), point["v"]))
            except ValueError:
                raise HTTPException(422, f"point time {point['t']!r} is not an instant")
        created = _body_instant(payload, "createdAt")
        result = node.add_forecast(
            qname, iid, field, source, series, created_at=created
        )
        if result.status == REJECTED:
            return JSONResponse(
                {"status": REJECTED, "reason": result.reason}, status_code=422
            )
        return {"status": result.status}

    @app.get("/v1/types/{qname}/instances/{iid}/entries/{field}/forecasts")
    def get_forecasts(
        qname: str,
        iid: str,
        field: str,
        request: Request,
        source: str | None = None,
    ):
        return node.forecasts(qname, iid, field, _principals(request), source)

    # -- admin ------------------------------------------------------------------

    @app.post("/v1/admin/purge")
    async def purge(request: Request):
        body = await request.body()
        now = None
        if body:
            try:
                payload = json.loads(body)
            except ValueError:
                raise HTTPException(400, "purge body must be JSON")
            if isinstance(payload, dict) and payload.get("now"):
                now = _instant(str(payload["now"]), "now")
        return {"deleted": node.purge(now)}

    @app.get("/v1/generic/components")
    def generic_components():
        return {"instances": node.generic_components()}

    if node.journal_warning:
        app.state.journal_warning = node.journal_warning
    app.state.node = node
    return app


def _body_instant(payload: dict, key: str) -> datetime | None:
    raw = payload.get(key)
    if raw is None:
        return None
    try:
        return parse_instant(str(raw))
    except ValueError:
        raise HTTPException(422, f"'{key}' is not a valid instant")


def _wire_value(value):
    if isinstance(value, datetime):
        return format_instant(value)
    return value
