"""Pydantic request/response models for the HTTP service.

These mirror the on-disk wire formats: matrices as {rows, cols, entries},
block factorizations as {k, r, weights, branches: [{row_factors,
col_factors}]}, protocols as {s, c, weights, branches: [{r, state,
alice_povm, bob_povm}]}.
"""

from __future__ import annotations

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..factorization import BlockPsdFactorization, PsdFactorization
from ..matrices import ToleranceConfig, as_matrix, matrix_to_dict
from ..protocols import HybridProtocol, QuantumSeedProtocol

SCHEMA_VERSION = "1"


class MatrixModel(BaseModel):
    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    entries: list[float]

    @field_validator("entries")
    @classmethod
    def _finite(cls, v):
        if any(math.isnan(x) or math.isinf(x) for x in v):
            raise ValueError("entries must be finite")
        return v

    def to_array(self) -> np.ndarray:
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(f"expected {self.rows * self.cols} entries, got {len(self.entries)}")
        return as_matrix(np.asarray(self.entries).reshape(self.rows, self.cols))

    @classmethod
    def from_array(cls, M) -> "MatrixModel":
        return cls(**matrix_to_dict(M))


class ToleranceModel(BaseModel):
    rank_rel_tol: float = 1e-9
    psd_min_eig: float = -1e-9
    residual_tol: float = 1e-8
    l1_eps: float = 0.0

    def to_config(self) -> ToleranceConfig:
        return ToleranceConfig(**self.model_dump())


class SearchModel(BaseModel):
    seed: int = 0
    n_starts: int = Field(default=20, gt=0)
    max_iter: int = Field(default=5000, gt=0)
    eps: float = Field(default=0.0, ge=0.0)


class PsdFactorizationModel(BaseModel):
    row_factors: list[list[list[float]]]
    col_factors: list[list[list[float]]]

    def to_value(self) -> PsdFactorization:
        return PsdFactorization(np.asarray(self.row_factors), np.asarray(self.col_factors))

    @classmethod
    def from_value(cls, F: PsdFactorization) -> "PsdFactorizationModel":
        return cls(row_factors=F.row_factors.tolist(), col_factors=F.col_factors.tolist())


class BlockFactorizationModel(BaseModel):
    k: int = Field(gt=0)
    r: int = Field(gt=0)
    weights: list[float]
    branches: list[PsdFactorizationModel]

    def to_value(self) -> BlockPsdFactorization:
        return BlockPsdFactorization(
            block_size=self.k,
            weights=np.asarray(self.weights),
            branches=tuple(b.to_value() for b in self.branches),
        )

    @classmethod
    def from_value(cls, BF: BlockPsdFactorization) -> "BlockFactorizationModel":
        return cls(
            k=BF.block_size,
            r=BF.branch_count,
            weights=[float(w) for w in BF.weights],
            branches=[PsdFactorizationModel.from_value(b) for b in BF.branches],
        )


class SeedProtocolModel(BaseModel):
    r: int = Field(gt=0)
    state: list[float]
    alice_povm: list[list[list[float]]]
    bob_povm: list[list[list[float]]]

    def to_value(self) -> QuantumSeedProtocol:
        return QuantumSeedProtocol(
            state=np.asarray(self.state),
            alice_povm=np.asarray(self.alice_povm),
            bob_povm=np.asarray(self.bob_povm),
        )

    @classmethod
    def from_value(cls, p: QuantumSeedProtocol) -> "SeedProtocolModel":
        return cls(
            r=p.r,
            state=p.state.tolist(),
            alice_povm=p.alice_povm.tolist(),
            bob_povm=p.bob_povm.tolist(),
        )


class HybridProtocolModel(BaseModel):
    s: int = Field(ge=0)
    c: int = Field(ge=0)
    weights: list[float]
    branches: list[SeedProtocolModel]

    def to_value(self) -> HybridProtocol:
        return HybridProtocol(
            weights=np.asarray(self.weights),
            branches=tuple(b.to_value() for b in self.branches),
            s=self.s,
        )

    @classmethod
    def from_value(cls, H: HybridProtocol) -> "HybridProtocolModel":
        return cls(
            s=H.s,
            c=H.classical_bits,
            weights=[float(w) for w in H.weights],
            branches=[SeedProtocolModel.from_value(b) for b in H.branches],
        )


# --- requests ---------------------------------------------------------------


class EdmRequest(BaseModel):
    points: list[float] = Field(min_length=2)
    normalize: bool = False


class TensorRequest(BaseModel):
    matrix: MatrixModel
    power: int = Field(gt=0)
    cap: int = Field(default=4096, gt=0)


class BlockDiagRequest(BaseModel):
    parts: list[MatrixModel] = Field(min_length=1)
    weights: list[float]


class IpsqRequest(BaseModel):
    n: int = Field(gt=0, le=10)


class PsdFactorizeRequest(BaseModel):
    matrix: MatrixModel
    r: int = Field(gt=0)
    search: SearchModel = SearchModel()
    tolerances: ToleranceModel = ToleranceModel()


class NmfRequest(BaseModel):
    matrix: MatrixModel
    r: int = Field(gt=0)
    search: SearchModel = SearchModel()
    tolerances: ToleranceModel = ToleranceModel()


class KblockRequest(BaseModel):
    matrix: MatrixModel
    k: int = Field(gt=0)
    r: int = Field(gt=0)
    search: SearchModel = SearchModel()
    tolerances: ToleranceModel = ToleranceModel()


class BoundsRequest(BaseModel):
    matrix: MatrixModel
    ks: list[int] = [2]
    search: SearchModel = SearchModel()
    tolerances: ToleranceModel = ToleranceModel()


class PartitionRequest(BaseModel):
    matrix: MatrixModel
    k: int = Field(gt=0)
    mode: Literal["exact", "greedy"] = "greedy"
    search: SearchModel = SearchModel()
    tolerances: ToleranceModel = ToleranceModel()


class ProtocolBuildRequest(BaseModel):
    factorization: BlockFactorizationModel
    mode: Literal["cq", "qc"] = "cq"
    s: int = Field(ge=0)
    target: Optional[MatrixModel] = None
    tolerances: ToleranceModel = ToleranceModel()


class SimulateRequest(BaseModel):
    protocol: HybridProtocolModel
    n: int = Field(gt=0, le=10_000_000)
    seed: int = 42
    target: Optional[MatrixModel] = None
    tolerances: ToleranceModel = ToleranceModel()


class VerifyRequest(BaseModel):
    protocol: HybridProtocolModel
    target: MatrixModel
    n: int = Field(default=1_000_000, gt=0, le=10_000_000)
    seed: int = 42
    significance: float = Field(default=0.01, gt=0, lt=1)
    tolerances: ToleranceModel = ToleranceModel()


class DemoRequest(BaseModel):
    name: str
    seed: int = 7
    tolerances: ToleranceModel = ToleranceModel()
