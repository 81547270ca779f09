"""Networked tensor time series models (tensor graph convolution + tensor LSTM)."""

from ._net3 import (
    ShapeError,
    UsageError,
    ValidationError,
    core_dims,
    count_params_mlstm,
    count_params_tlstm,
    flatten_kronecker,
    fold,
    hosvd,
    kronecker,
    laplacian,
    load_dataset,
    mode_product,
    pearson_adjacency,
    rho_upper_bound,
    save_dataset,
    symmetric_normalize,
    synthesize,
    tgcl_flops,
    train,
    unfold,
)

__all__ = [
    "ShapeError",
    "UsageError",
    "ValidationError",
    "core_dims",
    "count_params_mlstm",
    "count_params_tlstm",
    "flatten_kronecker",
    "fold",
    "hosvd",
    "kronecker",
    "laplacian",
    "load_dataset",
    "mode_product",
    "pearson_adjacency",
    "rho_upper_bound",
    "save_dataset",
    "symmetric_normalize",
    "synthesize",
    "tgcl_flops",
    "train",
    "unfold",
]
