"""Command line entry points: serve, simulate, and small admin helpers."""

from __future__ import annotations

import json
import logging
import sys
import tempfile
from pathlib import Path

import click

from .engine import EngineRegistry, parse_engine_flag
from .simulator import ScenarioSpec, report_to_doc, run_scenario, verify_report


@click.group()
@click.option("--verbose", is_flag=True, help="Log at debug level.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-root", required=True, type=click.Path(path_type=Path))
@click.option(
    "--default-config-number",
    type=int,
    default=None,
    help="Install a bundled free-recording config under this number if absent.",
)
@click.option(
    "--engine",
    "engines",
    multiple=True,
    metavar="<number>=<kind[:url]>",
    help="Register an engine, e.g. 1=echo or 2=remote:http://host/infer.",
)
def serve(port: int, host: str, data_root: Path, default_config_number: int | None, engines) -> None:
    """Run the collection server."""
    import uvicorn

    from .server import CollectionService, create_app

    registry = EngineRegistry()
    for flag in engines:
        registry.register(parse_engine_flag(flag))
    service = CollectionService(
        data_root, default_config_number=default_config_number, registry=registry
    )
    app = create_app(service)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        service.close()


@main.command()
@click.option("--phones", required=True, type=int)
@click.option("--samples-per-phone", required=True, type=int)
@click.option("--uptime", required=True, type=float)
@click.option("--seed", required=True, type=int)
@click.option("--server-url", required=True)
@click.option("--config-number", required=True, type=int)
@click.option("--engine-number", default=0, show_default=True, type=int)
@click.option(
    "--data-root",
    type=click.Path(path_type=Path),
    default=None,
    help="Server data root; enables the full on-disk verification.",
)
@click.option(
    "--work-dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Where per-phone client state lives (default: a temp directory).",
)
def simulate(
    phones: int,
    samples_per_phone: int,
    uptime: float,
    seed: int,
    server_url: str,
    config_number: int,
    engine_number: int,
    data_root: Path | None,
    work_dir: Path | None,
) -> None:
    """Drive simulated phones against a server and verify the result."""
    spec = ScenarioSpec(
        phones=phones,
        samples_per_phone=samples_per_phone,
        uptime_fraction=uptime,
        seed=seed,
        config_number=config_number,
        engine_number=engine_number,
    )
    if work_dir is not None:
        report = run_scenario(spec, server_url, work_dir)
    else:
        with tempfile.TemporaryDirectory(prefix="simphones-") as tmp:
            report = run_scenario(spec, server_url, tmp)

    if data_root is not None:
        violations = verify_report(report, spec, data_root)
    else:
        # Without the server's directory we can still check the client side.
        violations = []
        expected = phones * samples_per_phone
        if report.queue_residue != 0:
            violations.append(f"queue residue: {report.queue_residue}")
        if report.delivered != expected:
            violations.append(f"delivered {report.delivered}, expected {expected}")

    click.echo(json.dumps(report_to_doc(report, spec, violations), indent=2))
    sys.exit(0 if not violations else 1)


@main.command("push-config")
@click.option("--server-url", required=True)
@click.argument("config_file", type=click.Path(path_type=Path, exists=True))
def push_config(server_url: str, config_file: Path) -> None:
    """Install or replace a runtime config on a live server."""
    from .client.transport import HttpTransport, TransportError

    transport = HttpTransport(server_url)
    try:
        result = transport.upload_config(config_file.read_bytes())
    except TransportError as exc:
        raise click.ClickException(str(exc)) from exc
    finally:
        transport.close()
    click.echo(json.dumps(result))


@main.command("get-config")
@click.option("--server-url", required=True)
@click.argument("number", type=int)
def get_config(server_url: str, number: int) -> None:
    """Fetch an installed runtime config and print it."""
    from .client.transport import HttpTransport, TransportError

    transport = HttpTransport(server_url)
    try:
        raw = transport.fetch_config(number, timeout=10.0)
    except TransportError as exc:
        raise click.ClickException(str(exc)) from exc
    finally:
        transport.close()
    sys.stdout.write(raw.decode("utf-8"))


@main.command()
@click.option("--server-url", required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.argument("day")
def export(server_url: str, out: Path | None, day: str) -> None:
    """Download the daily export archive."""
    import httpx

    url = f"{server_url.rstrip('/')}/export/{day}"
    try:
        with httpx.Client() as client:
            resp = client.get(url)
            resp.raise_for_status()
    except httpx.HTTPError as exc:
        raise click.ClickException(str(exc)) from exc
    target = out or Path(f"{day}.zip")
    target.write_bytes(resp.content)
    click.echo(f"wrote {target} ({len(resp.content)} bytes)")


if __name__ == "__main__":
    main()
