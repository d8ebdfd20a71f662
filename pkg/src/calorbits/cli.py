"""Command-line client for the calibration-orbit service.

Subcommands wrap the HTTP endpoints; by default the service app runs
in-process, and --server points the client at a remote instance instead.
Reports are deterministic JSON (sorted keys) written to stdout or --out.

Exit codes: 0 all checks pass, 1 a mathematical check failed (the report
carries the failure record), 2 configuration or input error.
"""

from __future__ import annotations

import json
import sys

import click


def _client(server):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def _emit(report, out):
    text = json.dumps(report, sort_keys=True, indent=2, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _post(ctx, path, payload):
    resp = _client(ctx.obj.get("server")).post(path, json=payload)
    if resp.status_code in (400, 404, 422):
        _emit({"error": resp.json() if resp.headers.get("content-type", "")
               .startswith("application/json") else resp.text},
              ctx.obj.get("out"))
        sys.exit(2)
    if resp.status_code == 409:
        _emit({"error": resp.json()}, ctx.obj.get("out"))
        sys.exit(1)
    resp.raise_for_status()
    return resp.json()


def _structure_payload(structure, dim, m, complex_dim):
    payload = {"structure": structure}
    if dim is not None:
        payload["dim"] = dim
    if m is not None:
        payload["m"] = m
    if complex_dim is not None:
        payload["complex_dim"] = complex_dim
    return payload


structure_opts = [
    click.option("--structure", required=True,
                 type=click.Choice(["symplectic", "degenerate2form", "sl",
                                    "cy", "hk", "g2", "spin7"])),
    click.option("--dim", type=int, default=None),
    click.option("--m", type=int, default=None),
    click.option("--complex-dim", "complex_dim", type=int, default=None),
]


def _with(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
@click.option("--server", default=None,
              help="base URL of a running service (default: in-process)")
@click.option("--out", default=None, help="write the JSON report to a file")
@click.option("--format", "fmt", type=click.Choice(["json"]), default="json")
@click.pass_context
def main(ctx, server, out, fmt):
    """Analyze calibration orbits, their complexes, and deformations."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    ctx.obj["out"] = out


@main.command()
@_with(structure_opts)
@click.option("--trials", type=int, default=64)
@click.option("--seed", type=int, default=0)
@click.option("--scalar", type=click.Choice(["float", "rational"]),
              default="float")
@click.pass_context
def info(ctx, structure, dim, m, complex_dim, trials, seed, scalar):
    """Orbit summary: isotropy, level dimensions, predicates."""
    payload = _structure_payload(structure, dim, m, complex_dim)
    payload.update({"trials": trials, "seed": seed, "scalar": scalar})
    _emit(_post(ctx, "/orbit/info", payload), ctx.obj["out"])


@main.command()
@_with(structure_opts)
@click.option("--trials", type=int, default=64)
@click.option("--seed", type=int, default=0)
@click.option("--scalar", type=click.Choice(["float", "rational"]),
              default="float")
@click.pass_context
def elliptic(ctx, structure, dim, m, complex_dim, trials, seed, scalar):
    """Symbol-sequence exactness verdict (witness covector on failure)."""
    payload = _structure_payload(structure, dim, m, complex_dim)
    payload.update({"trials": trials, "seed": seed, "scalar": scalar})
    rep = _post(ctx, "/orbit/elliptic", payload)
    _emit(rep, ctx.obj["out"])
    sys.exit(0 if rep.get("verdict") else 1)


@main.command()
@click.option("--trials", type=int, default=100)
@click.option("--freq", type=int, default=2)
@click.option("--seed", type=int, default=0)
@click.option("--scalar", type=click.Choice(["float", "rational"]),
              default="float")
@click.option("--tol", type=float, default=1e-10)
@click.pass_context
def verify(ctx, trials, freq, seed, scalar, tol):
    """Randomized operator-identity suite on torus fields."""
    rep = _post(ctx, "/verify", {"trials": trials, "freq": freq,
                                 "seed": seed, "scalar": scalar, "tol": tol})
    _emit(rep, ctx.obj["out"])
    sys.exit(0 if rep.get("passed") else 1)


@main.command()
@_with(structure_opts)
@click.option("--freq", type=int, default=2)
@click.pass_context
def cohomology(ctx, structure, dim, m, complex_dim, freq):
    """Per-frequency cohomology of the restricted complex."""
    payload = _structure_payload(structure, dim, m, complex_dim)
    payload["freq"] = freq
    rep = _post(ctx, "/cohomology", payload)
    _emit(rep, ctx.obj["out"])
    ok = rep.get("p1_injective") and rep.get("p2_injective")
    if rep.get("singular_witnesses"):
        ok = False
    dirac = rep.get("dirac")
    if dirac is not None and not dirac.get(
            "all_nonzero_frequencies_injective"):
        ok = False
    sys.exit(0 if ok else 1)


@main.command()
@_with(structure_opts)
@click.option("--freq", type=int, default=2)
@click.option("--order", type=int, default=4)
@click.option("--t", type=float, default=None)
@click.option("--tol", type=float, default=1e-9)
@click.option("--in", "seed_path", required=True,
              type=click.Path(exists=True),
              help="seed endomorphism field (JSON)")
@click.pass_context
def deform(ctx, structure, dim, m, complex_dim, freq, order, t, tol,
           seed_path):
    """Order-by-order deformation run from a seed field."""
    with open(seed_path) as fh:
        seed_field = json.load(fh)
    payload = _structure_payload(structure, dim, m, complex_dim)
    payload.update({"freq": freq, "order": order, "tol": tol,
                    "seed_field": seed_field})
    if t is not None:
        payload["t"] = t
    rep = _post(ctx, "/deform", payload)
    _emit(rep, ctx.obj["out"])
    ok = not rep.get("obstructed")
    for rec in rep.get("per_order", []):
        if rec["closure_residual"] > tol or rec["two_path_residual"] > tol:
            ok = False
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
