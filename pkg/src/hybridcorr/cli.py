"""Command-line interface: a thin client of the HTTP service.

By default the CLI talks to the FastAPI app in-process (no server needed);
pass --server URL to target a running instance instead.  All reports are
JSON with sorted keys, so identical argv + seed give byte-identical output.

Exit codes: 0 success, 1 domain/validation failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

from .matrices import load_matrix, matrix_from_dict, matrix_to_csv, matrix_to_dict

DEFAULT_SEED = 7


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service.app import app

    return TestClient(app, raise_server_exceptions=False)


def _call(ctx, path: str, payload: dict) -> dict:
    with _client(ctx.obj["server"]) as client:
        resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json()
        except ValueError:
            detail = {"error": "HTTPError", "detail": resp.text}
        click.echo(json.dumps(detail, sort_keys=True), err=True)
        raise SystemExit(1)
    return resp.json()


def _emit(ctx, data: dict):
    """Write a response: matrix payloads honor --format csv, else JSON."""
    fmt = ctx.obj["format"]
    out = ctx.obj["out"]
    if fmt == "csv" and "matrix" in data:
        text = matrix_to_csv(matrix_from_dict(data["matrix"]))
    else:
        text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _tol_payload(ctx) -> dict:
    tol = {"l1_eps": ctx.obj["eps"]}
    if ctx.obj["tol_residual"] is not None:
        tol["residual_tol"] = ctx.obj["tol_residual"]
    return tol


def _search_payload(ctx, seed=None, starts=None) -> dict:
    payload = {"seed": ctx.obj["seed"] if seed is None else seed, "eps": ctx.obj["eps"]}
    if starts is not None:
        payload["n_starts"] = starts
    return payload


def _matrix_payload(path: str) -> dict:
    return matrix_to_dict(load_matrix(path))


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; default is in-process.")
@click.option("--seed", default=DEFAULT_SEED, type=int, show_default=True, help="Global RNG seed.")
@click.option("--tol-residual", default=None, type=float, help="Override the residual tolerance.")
@click.option("--eps", default=0.0, type=float, show_default=True, help="L1 approximation budget (0 = exact).")
@click.option("--out", default=None, type=click.Path(), help="Write output here instead of stdout.")
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "csv"]), show_default=True)
@click.option("--cap", default=4096, type=int, show_default=True, help="Size cap for generated matrices.")
@click.pass_context
def main(ctx, server, seed, tol_residual, eps, out, fmt, cap):
    """Generate, factorize, bound, partition, and simulate classical correlations."""
    ctx.obj = {
        "server": server,
        "seed": seed,
        "tol_residual": tol_residual,
        "eps": eps,
        "out": out,
        "format": fmt,
        "cap": cap,
    }


# --- gen --------------------------------------------------------------------


@main.group()
def gen():
    """Construct matrices from the named families."""


@gen.command("edm")
@click.option("--points", required=True, help="Comma-separated distinct reals, e.g. 0,1,2.")
@click.option("--normalize", is_flag=True, help="Normalize to a correlation.")
@click.pass_context
def gen_edm(ctx, points, normalize):
    pts = [float(v) for v in points.split(",")]
    _emit(ctx, _call(ctx, "/gen/edm", {"points": pts, "normalize": normalize}))


@gen.command("tensor")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--power", required=True, type=int)
@click.pass_context
def gen_tensor(ctx, input_, power):
    payload = {"matrix": _matrix_payload(input_), "power": power, "cap": ctx.obj["cap"]}
    _emit(ctx, _call(ctx, "/gen/tensor", payload))


@gen.command("blockdiag")
@click.option("--inputs", required=True, help="Comma-separated matrix files.")
@click.option("--weights", required=True, help="Comma-separated probabilities.")
@click.pass_context
def gen_blockdiag(ctx, inputs, weights):
    payload = {
        "parts": [_matrix_payload(p) for p in inputs.split(",")],
        "weights": [float(w) for w in weights.split(",")],
    }
    _emit(ctx, _call(ctx, "/gen/blockdiag", payload))


@gen.command("ipsq")
@click.option("--n", required=True, type=int)
@click.pass_context
def gen_ipsq(ctx, n):
    _emit(ctx, _call(ctx, "/gen/ipsq", {"n": n}))


# --- factorize --------------------------------------------------------------


@main.group()
def factorize():
    """Search factorizations (PSD, nonnegative, k-block PSD)."""


@factorize.command("psd")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--r", "r", required=True, type=int)
@click.option("--seed", default=None, type=int, help="Override the global seed.")
@click.option("--starts", default=None, type=int, help="Multi-start count.")
@click.pass_context
def factorize_psd(ctx, input_, r, seed, starts):
    payload = {
        "matrix": _matrix_payload(input_),
        "r": r,
        "search": _search_payload(ctx, seed, starts),
        "tolerances": _tol_payload(ctx),
    }
    _emit(ctx, _call(ctx, "/factorize/psd", payload))


@factorize.command("nmf")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--r", "r", required=True, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--starts", default=None, type=int)
@click.pass_context
def factorize_nmf(ctx, input_, r, seed, starts):
    payload = {
        "matrix": _matrix_payload(input_),
        "r": r,
        "search": _search_payload(ctx, seed, starts),
        "tolerances": _tol_payload(ctx),
    }
    _emit(ctx, _call(ctx, "/factorize/nmf", payload))


@factorize.command("kblock")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--k", "k", required=True, type=int)
@click.option("--r", "r", required=True, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--starts", default=None, type=int)
@click.pass_context
def factorize_kblock(ctx, input_, k, r, seed, starts):
    payload = {
        "matrix": _matrix_payload(input_),
        "k": k,
        "r": r,
        "search": _search_payload(ctx, seed, starts),
        "tolerances": _tol_payload(ctx),
    }
    _emit(ctx, _call(ctx, "/factorize/kblock", payload))


# --- bounds -----------------------------------------------------------------


@main.command("bounds")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--k", "ks", default="2", show_default=True, help="Comma-separated block sizes.")
@click.option("--budget", default=20, type=int, show_default=True, help="Multi-start count per search.")
@click.option("--seed", default=None, type=int)
@click.option("--csv", "as_csv", is_flag=True, help="Emit a flat CSV table instead of JSON.")
@click.pass_context
def bounds_cmd(ctx, input_, ks, budget, seed, as_csv):
    """Compute the certified bounds report for a correlation."""
    payload = {
        "matrix": _matrix_payload(input_),
        "ks": [int(v) for v in ks.split(",")],
        "search": _search_payload(ctx, seed, budget),
        "tolerances": _tol_payload(ctx),
    }
    data = _call(ctx, "/bounds", payload)
    if as_csv:
        report = data["report"]
        lines = ["field,key,value"]
        for field in ("rank", "prank_lb", "prank_ub", "nnr_ub", "t_lb", "t_ub"):
            lines.append(f"{field},,{report[field]}")
        for field in ("kprank_lb", "kprank_ub", "hybrid_bits"):
            for key, val in sorted(report[field].items()):
                lines.append(f"{field},{key},{val}")
        text = "\n".join(lines) + "\n"
        if ctx.obj["out"]:
            with open(ctx.obj["out"], "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
    else:
        _emit(ctx, data)


# --- partition --------------------------------------------------------------


@main.command("partition")
@click.option("--input", "input_", required=True, type=click.Path(exists=True))
@click.option("--k", "k", required=True, type=int)
@click.option("--exact/--greedy", "exact", default=False, help="Exact branch-and-bound vs greedy.")
@click.option("--seed", default=None, type=int)
@click.pass_context
def partition_cmd(ctx, input_, k, exact, seed):
    """Find a k-partition into rectangles of PSD rank at most k."""
    payload = {
        "matrix": _matrix_payload(input_),
        "k": k,
        "mode": "exact" if exact else "greedy",
        "search": _search_payload(ctx, seed),
        "tolerances": _tol_payload(ctx),
    }
    _emit(ctx, _call(ctx, "/partition", payload))


# --- protocol ---------------------------------------------------------------


@main.group()
def protocol():
    """Build, simulate, and verify sampling protocols."""


@protocol.command("build")
@click.option("--factorization", "fact", required=True, type=click.Path(exists=True), help="Block factorization JSON.")
@click.option("--mode", default="cq", type=click.Choice(["cq", "qc"]), show_default=True)
@click.option("--s", "s", required=True, type=int, help="Quantum capability in qubits.")
@click.option("--target", default=None, type=click.Path(exists=True), help="Target correlation for ledger checks.")
@click.pass_context
def protocol_build(ctx, fact, mode, s, target):
    with open(fact, "r", encoding="utf-8") as fh:
        bf = json.load(fh)
    if "factorization" in bf:  # accept a whole factorize-kblock report
        bf = bf["factorization"]
    payload = {"factorization": bf, "mode": mode, "s": s, "tolerances": _tol_payload(ctx)}
    if target:
        payload["target"] = _matrix_payload(target)
    _emit(ctx, _call(ctx, "/protocol/build", payload))


def _load_protocol(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data["protocol"] if "protocol" in data else data


@protocol.command("simulate")
@click.option("--proto", required=True, type=click.Path(exists=True), help="Hybrid protocol JSON.")
@click.option("--n", "n", default=1000, type=int, show_default=True)
@click.option("--seed", default=None, type=int)
@click.option("--out", "samples_out", default=None, type=click.Path(), help="Write samples CSV here.")
@click.pass_context
def protocol_simulate(ctx, proto, n, seed, samples_out):
    payload = {
        "protocol": _load_protocol(proto),
        "n": n,
        "seed": ctx.obj["seed"] if seed is None else seed,
        "tolerances": _tol_payload(ctx),
    }
    data = _call(ctx, "/protocol/simulate", payload)
    samples = data.pop("samples")
    csv_text = "x,y\n" + "".join(f"{x},{y}\n" for x, y in samples)
    if samples_out:
        with open(samples_out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        _emit(ctx, data)
    elif ctx.obj["out"]:
        with open(ctx.obj["out"], "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        _emit(ctx, data)
    else:
        click.echo(csv_text, nl=False)
        click.echo(json.dumps(data, sort_keys=True, indent=2))


@protocol.command("verify")
@click.option("--proto", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, type=click.Path(exists=True))
@click.option("--n", "n", default=1_000_000, type=int, show_default=True)
@click.option("--seed", default=None, type=int)
@click.pass_context
def protocol_verify(ctx, proto, target, n, seed):
    payload = {
        "protocol": _load_protocol(proto),
        "target": _matrix_payload(target),
        "n": n,
        "seed": ctx.obj["seed"] if seed is None else seed,
        "tolerances": _tol_payload(ctx),
    }
    data = _call(ctx, "/protocol/verify", payload)
    _emit(ctx, data)
    if not data.get("passed", False):
        raise SystemExit(1)


# --- demo & serve -----------------------------------------------------------


@main.command("demo")
@click.argument("name")
@click.option("--seed", default=None, type=int)
@click.pass_context
def demo_cmd(ctx, name, seed):
    """Run a named end-to-end scenario: eq2-diag, q2-tensor, or tradeoff."""
    payload = {
        "name": name,
        "seed": ctx.obj["seed"] if seed is None else seed,
        "tolerances": _tol_payload(ctx),
    }
    data = _call(ctx, "/demo", payload)
    _emit(ctx, data)
    if not data["report"]["all_passed"]:
        raise SystemExit(1)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
def serve(host, port):
    """Run the HTTP service with uvicorn."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
