from covtail.linalg.symmetric import (
    Eigendecomposition,
    SymMatrix,
    as_sym,
    is_psd,
    load_matrix_csv,
    op_norm,
    op_norm_and_min_eig,
    psd_power,
    psd_pseudoinverse,
    psd_sqrt,
    psd_sqrt_pseudoinverse,
    range_basis,
    range_projector,
    save_matrix_csv,
    sym_eigendecomposition,
)

__all__ = [
    "Eigendecomposition",
    "SymMatrix",
    "as_sym",
    "is_psd",
    "load_matrix_csv",
    "op_norm",
    "op_norm_and_min_eig",
    "psd_power",
    "psd_pseudoinverse",
    "psd_sqrt",
    "psd_sqrt_pseudoinverse",
    "range_basis",
    "range_projector",
    "save_matrix_csv",
    "sym_eigendecomposition",
]
