"""Hybrid quantum/classical generation of bipartite classical correlations.

Core machinery: PSD and block PSD factorization search, rectangle
partitions, rank-based cost bounds, and runnable seed-state sampling
protocols with resource accounting.  A FastAPI service wraps the package;
the CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .matrices import (  # noqa: F401
    DEFAULT_TOL,
    ToleranceConfig,
    is_psd,
    l1_distance,
    normalize_to_correlation,
    numerical_rank,
)

from .generators import (  # noqa: F401
    block_diagonal_mix,
    edm,
    edm_correlation,
    inner_product_squared_matrix,
    tensor_power,
)

from .factorization import (  # noqa: F401
    BlockPsdFactorization,
    PsdFactorization,
    SearchConfig,
    certify_block_factorization,
    edm_psd_factorization,
    kblock_factorize,
    nmf,
    psd_factorize,
    reconstruct,
    tensor_compose,
)

from .bounds import (  # noqa: F401
    bounds_report,
    hybrid_classical_cost,
    kprank_lower_bound,
    prank_lower_bound,
    qc_hybrid_cost_upper,
    structured_prank_lower_bound,
    t_bounds,
    tradeoff_check,
)

from .partitions import (  # noqa: F401
    Rectangle,
    k_partition_exact,
    k_partition_greedy,
    partition_to_block_factorization,
    rectangle_within_capability,
    validate_partition,
)

from .protocols import (  # noqa: F401
    build_cq_hybrid,
    build_qc_hybrid,
    build_seed_protocol,
    exact_distribution,
    hybrid_exact_distribution,
    majorized_by,
    sample,
    schmidt_vector,
    simulate_hybrid,
)
