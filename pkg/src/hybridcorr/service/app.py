"""FastAPI service wrapping the core package.

Every endpoint is a pure function of its request body; stochastic endpoints
take an explicit seed and embed it in the response, so identical requests
return identical responses.  Domain errors map to HTTP 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from scipy.stats import chisquare

from .. import __version__
from ..bounds import bounds_report
from ..demos import run_demo
from ..errors import HybridcorrError
from ..factorization import (
    SearchConfig,
    certify_block_factorization,
    kblock_factorize,
    nmf,
    psd_factorize,
    reconstruct,
)
from ..generators import (
    block_diagonal_mix,
    edm,
    inner_product_squared_matrix,
    normalize_to_correlation,
    tensor_power,
)
from ..matrices import l1_distance
from ..partitions import CapabilityOracle, k_partition_exact, k_partition_greedy
from ..protocols import (
    build_cq_hybrid,
    build_qc_hybrid,
    hybrid_exact_distribution,
    make_ledger,
    simulate_hybrid,
)
from .models import (
    SCHEMA_VERSION,
    BlockDiagRequest,
    BlockFactorizationModel,
    BoundsRequest,
    DemoRequest,
    EdmRequest,
    HybridProtocolModel,
    IpsqRequest,
    KblockRequest,
    MatrixModel,
    NmfRequest,
    PartitionRequest,
    ProtocolBuildRequest,
    PsdFactorizationModel,
    PsdFactorizeRequest,
    SimulateRequest,
    TensorRequest,
    VerifyRequest,
)

app = FastAPI(title="hybridcorr", version=__version__)


@app.exception_handler(HybridcorrError)
async def _domain_error(request: Request, exc: HybridcorrError):
    return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})


def _search(m) -> SearchConfig:
    return SearchConfig(seed=m.seed, n_starts=m.n_starts, max_iter=m.max_iter, eps=m.eps)


def _envelope(payload: dict, tolerances=None, seed=None) -> dict:
    out = {"schema_version": SCHEMA_VERSION}
    if seed is not None:
        out["seed"] = seed
    if tolerances is not None:
        out["tolerances"] = tolerances.model_dump()
    out.update(payload)
    return out


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__, "schema_version": SCHEMA_VERSION}


# --- generators -------------------------------------------------------------


@app.post("/gen/edm")
def gen_edm(req: EdmRequest):
    M = edm(req.points)
    if req.normalize:
        M = normalize_to_correlation(M)
    return _envelope({"matrix": MatrixModel.from_array(M).model_dump()})


@app.post("/gen/tensor")
def gen_tensor(req: TensorRequest):
    M = tensor_power(req.matrix.to_array(), req.power, cap=req.cap)
    return _envelope({"matrix": MatrixModel.from_array(M).model_dump()})


@app.post("/gen/blockdiag")
def gen_blockdiag(req: BlockDiagRequest):
    M = block_diagonal_mix([p.to_array() for p in req.parts], req.weights)
    return _envelope({"matrix": MatrixModel.from_array(M).model_dump()})


@app.post("/gen/ipsq")
def gen_ipsq(req: IpsqRequest):
    return _envelope({"matrix": MatrixModel.from_array(inner_product_squared_matrix(req.n)).model_dump()})


# --- factorization ----------------------------------------------------------


@app.post("/factorize/psd")
def factorize_psd(req: PsdFactorizeRequest):
    P = req.matrix.to_array()
    F, residual = psd_factorize(P, req.r, _search(req.search), req.tolerances.to_config())
    payload = {
        "r": F.r,
        "residual": residual,
        "factorization": PsdFactorizationModel.from_value(F).model_dump(),
        "reconstruction": MatrixModel.from_array(np.clip(reconstruct(F), 0, None)).model_dump(),
    }
    return _envelope(payload, req.tolerances, req.search.seed)


@app.post("/factorize/nmf")
def factorize_nmf(req: NmfRequest):
    P = req.matrix.to_array()
    W, H, residual = nmf(P, req.r, _search(req.search), req.tolerances.to_config())
    payload = {
        "r": req.r,
        "residual": residual,
        "w": W.tolist(),
        "h": H.tolist(),
    }
    return _envelope(payload, req.tolerances, req.search.seed)


@app.post("/factorize/kblock")
def factorize_kblock(req: KblockRequest):
    P = req.matrix.to_array()
    tol = req.tolerances.to_config()
    BF, residual = kblock_factorize(P, req.k, req.r, _search(req.search), tol)
    cert = certify_block_factorization(P, BF, tol)
    payload = {
        "residual": residual,
        "factorization": BlockFactorizationModel.from_value(BF).model_dump(),
        "certification": cert.as_dict(),
    }
    return _envelope(payload, req.tolerances, req.search.seed)


# --- bounds -----------------------------------------------------------------


@app.post("/bounds")
def bounds(req: BoundsRequest):
    P = req.matrix.to_array()
    report = bounds_report(P, ks=tuple(req.ks), search=_search(req.search), tol=req.tolerances.to_config())
    return _envelope({"report": report.as_dict()}, req.tolerances, req.search.seed)


# --- partitions -------------------------------------------------------------


@app.post("/partition")
def partition(req: PartitionRequest):
    P = req.matrix.to_array()
    tol = req.tolerances.to_config()
    search = _search(req.search)
    solver = k_partition_exact if req.mode == "exact" else k_partition_greedy
    rects = solver(P, req.k, search, tol)
    oracle = CapabilityOracle(P, req.k, search, tol)
    payload = {
        "size": len(rects),
        "k": req.k,
        "mode": req.mode,
        "rectangles": [
            {"rows": list(r.rows), "cols": list(r.cols), "verdict": oracle.verdict(r)[0]}
            for r in rects
        ],
    }
    return _envelope(payload, req.tolerances, req.search.seed)


# --- protocols --------------------------------------------------------------


@app.post("/protocol/build")
def protocol_build(req: ProtocolBuildRequest):
    BF = req.factorization.to_value()
    tol = req.tolerances.to_config()
    target = req.target.to_array() if req.target is not None else None
    if req.mode == "qc":
        H, ledger = build_qc_hybrid(BF, req.s, target=target, tol=tol)
    else:
        H = build_cq_hybrid(BF, req.s, tol)
        ledger = make_ledger(H, target=target, tol=tol)
    payload = {
        "mode": req.mode,
        "protocol": HybridProtocolModel.from_value(H).model_dump(),
        "ledger": ledger.as_dict(),
    }
    return _envelope(payload, req.tolerances)


@app.post("/protocol/simulate")
def protocol_simulate(req: SimulateRequest):
    H = req.protocol.to_value()
    tol = req.tolerances.to_config()
    target = req.target.to_array() if req.target is not None else None
    samples, ledger = simulate_hybrid(H, req.seed, req.n, target=target, tol=tol)
    payload = {
        "n": req.n,
        "samples": samples.tolist(),
        "ledger": ledger.as_dict(),
    }
    return _envelope(payload, req.tolerances, req.seed)


@app.post("/protocol/verify")
def protocol_verify(req: VerifyRequest):
    H = req.protocol.to_value()
    tol = req.tolerances.to_config()
    target = req.target.to_array()
    exact = hybrid_exact_distribution(H)
    if exact.shape != target.shape:
        from ..errors import ShapeMismatch

        raise ShapeMismatch(f"protocol emits {exact.shape}, target is {target.shape}")
    gap = l1_distance(exact, target)
    samples, ledger = simulate_hybrid(H, req.seed, req.n, target=target, tol=tol)
    counts = np.zeros(exact.size)
    np.add.at(counts, samples[:, 0] * exact.shape[1] + samples[:, 1], 1)
    expected = (exact / exact.sum()).ravel() * req.n
    keep = expected > 0
    stat, pvalue = chisquare(counts[keep], expected[keep] * counts[keep].sum() / expected[keep].sum())
    payload = {
        "exact_l1_gap": gap,
        "chi2_statistic": float(stat),
        "chi2_pvalue": float(pvalue),
        "significance": req.significance,
        "passed": bool(gap <= max(tol.residual_tol * 10, 1e-6) and pvalue >= req.significance),
        "ledger": ledger.as_dict(),
    }
    return _envelope(payload, req.tolerances, req.seed)


# --- demos ------------------------------------------------------------------


@app.post("/demo")
def demo(req: DemoRequest):
    report = run_demo(req.name, seed=req.seed, tol=req.tolerances.to_config())
    return _envelope({"report": report}, req.tolerances, req.seed)
