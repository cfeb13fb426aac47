"""Quantum OBDD laboratory: pointer-jumping constructions, memoryless protocols and
subfunction-counting bounds, checked against classical oracles."""

from .constructions import (
    BUILDERS,
    BuildError,
    MxpjBuildParams,
    PjBuildParams,
    build_mxpj_program,
    build_pj_program,
    build_xrpj_program,
)
from .functions import (
    BlockEncoding,
    DomainError,
    LayeredPointerInput,
    PointerPair,
    UnsupportedParameters,
    XrpjLayout,
    distinguishing_gamma,
    mxpj_bool,
    mxpj_eval,
    pj_bool,
    pj_eval,
    sigma_generate,
    xrpj_eval,
)
from .qobdd import (
    HybridProgram,
    StateRecord,
    accept_probability,
    decide,
    is_commutative,
    load_program,
    run,
    save_program,
    xor_reorder_transform,
)
from .subfunctions import BoundQuery, CutPartition, count_subfunctions, log2_bound

__version__ = "0.1.0"
