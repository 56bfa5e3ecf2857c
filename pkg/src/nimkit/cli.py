"""``nim`` command line: offline validation plus thin HTTP clients.

Exit codes mirror the HTTP outcome: 0 for success, 1 for client-side
rejections (4xx), 2 for server errors (5xx), 3 when the server cannot
be reached. ``validate`` runs the exact registration pipeline offline
(builtins preloaded), so it accepts and rejects the same inputs as a
live server.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .builtins import load_builtins
from .registry import ModelRegistry

DEFAULT_SERVER = "http://127.0.0.1:8080"


@click.group()
def main() -> None:
    """Neighbourhood data-model integration tool."""


# -- offline -----------------------------------------------------------------


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate(file: Path) -> None:
    """Check an NDF file offline (parse + context conditions)."""
    registry = ModelRegistry()
    load_builtins(registry)
    result = registry.register_model(file.read_bytes())
    for diag in result.diagnostics:
        click.echo(f"{file}:{diag.render()}", err=True)
    if not result.ok:
        sys.exit(1)
    click.echo(f"{file}: ok")


@main.command()
@click.option("--port", default=8080, show_default=True, help="TCP port to listen on.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--location",
    default="local",
    show_default=True,
    help="Node location matched against storage policies.",
)
@click.option(
    "--data",
    "data_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Data directory for the journal (omit for in-memory).",
)
@click.option("--no-builtins", is_flag=True, help="Start without the builtin models.")
def serve(port: int, host: str, location: str, data_dir: Path | None, no_builtins: bool) -> None:
    """Run a node, replaying its journal first."""
    import uvicorn

    from .node import NimNode
    from .service import create_app
    from .store import StoreConfig

    if data_dir is not None:
        data_dir.mkdir(parents=True, exist_ok=True)
    node = NimNode(StoreConfig(node_location=location, data_dir=data_dir))
    if node.journal_warning:
        click.echo(f"warning: {node.journal_warning}", err=True)
    if not no_builtins:
        node.load_builtins()
    app = create_app(node)
    click.echo(f"serving on http://{host}:{port} (location={location})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


# -- remote commands -----------------------------------------------------------


def _remote_options(fn):
    fn = click.option(
        "--server", default=DEFAULT_SERVER, show_default=True, help="Node base URL."
    )(fn)
    fn = click.option(
        "--role",
        "roles",
        multiple=True,
        help="Principal role (repeatable); sent as X-NIM-Principals.",
    )(fn)
    fn = click.option(
        "--format",
        "fmt",
        type=click.Choice(["json", "table"]),
        default="json",
        show_default=True,
    )(fn)
    return fn


def _headers(roles: tuple[str, ...]) -> dict[str, str]:
    return {"X-NIM-Principals": ",".join(roles)} if roles else {}


def _request(method: str, url: str, **kwargs) -> httpx.Response:
    try:
        return httpx.request(method, url, timeout=30.0, **kwargs)
    except httpx.ConnectError:
        click.echo(f"error: cannot connect to {url}", err=True)
        sys.exit(3)


def _finish(response: httpx.Response, fmt: str) -> None:
    try:
        payload = response.json()
    except ValueError:
        payload = response.text
    if response.is_success:
        _emit(payload, fmt)
        sys.exit(0)
    _emit(payload, "json")
    sys.exit(1 if response.status_code < 500 else 2)


def _emit(payload, fmt: str) -> None:
    if fmt == "table" and isinstance(payload, list):
        click.echo(_render_table(payload))
        return
    if isinstance(payload, str):
        click.echo(payload)
        return
    click.echo(json.dumps(payload, indent=2, sort_keys=False))


def _render_table(rows: list) -> str:
    if not rows:
        return "(empty)"
    if not all(isinstance(r, dict) for r in rows):
        return "\n".join(str(r) for r in rows)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    cells = [
        [_cell(row.get(col)) for col in columns] for row in rows
    ]
    widths = [
        max(len(columns[i]), *(len(r[i]) for r in cells)) for i in range(len(columns))
    ]
    lines = [
        "  ".join(col.ljust(widths[i]) for i, col in enumerate(columns)),
        "  ".join("-" * widths[i] for i in range(len(columns))),
    ]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(len(columns))) for r in cells]
    return "\n".join(lines)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_remote_options
def register(file: Path, server: str, roles: tuple[str, ...], fmt: str) -> None:
    """Upload an NDF model to a running node."""
    response = _request(
        "POST",
        f"{server}/v1/models",
        content=file.read_bytes(),
        headers={"Content-Type": "text/plain", **_headers(roles)},
    )
    _finish(response, fmt)


@main.command()
@click.argument("type_name")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_remote_options
def ingest(type_name: str, file: Path, server: str, roles: tuple[str, ...], fmt: str) -> None:
    """Ingest a JSON document as an instance of TYPE_NAME."""
    document = json.loads(file.read_text(encoding="utf-8"))
    response = _request(
        "POST",
        f"{server}/v1/types/{type_name}/instances",
        json=document,
        headers=_headers(roles),
    )
    _finish(response, fmt)


@main.command()
@click.argument("type_name")
@click.option("--at", default=None, help="Evaluation instant (ISO-8601).")
@_remote_options
def query(type_name: str, at: str | None, server: str, roles: tuple[str, ...], fmt: str) -> None:
    """List all instances of TYPE_NAME (virtual types included)."""
    params = {"at": at} if at else {}
    response = _request(
        "GET",
        f"{server}/v1/types/{type_name}/instances",
        params=params,
        headers=_headers(roles),
    )
    _finish(response, fmt)


@main.command()
@click.argument("type_name")
@click.argument("instance_id")
@click.argument("field")
@click.option("--from", "start", required=True, help="Window start (ISO-8601).")
@click.option("--to", "end", required=True, help="Window end (ISO-8601).")
@click.option("--at", default=None, help="Evaluation instant for expiry filtering.")
@_remote_options
def history(
    type_name: str,
    instance_id: str,
    field: str,
    start: str,
    end: str,
    at: str | None,
    server: str,
    roles: tuple[str, ...],
    fmt: str,
) -> None:
    """Show the value history of one entry."""
    params = {"from": start, "to": end}
    if at:
        params["at"] = at
    response = _request(
        "GET",
        f"{server}/v1/types/{type_name}/instances/{instance_id}/entries/{field}/history",
        params=params,
        headers=_headers(roles),
    )
    _finish(response, fmt)


@main.command()
@click.option("--now", default=None, help="Purge as of this instant (ISO-8601).")
@_remote_options
def purge(now: str | None, server: str, roles: tuple[str, ...], fmt: str) -> None:
    """Physically delete expired values on the node."""
    body = {"now": now} if now else {}
    response = _request(
        "POST", f"{server}/v1/admin/purge", json=body, headers=_headers(roles)
    )
    _finish(response, fmt)


if __name__ == "__main__":
    main()
