from app.core.data_io.dataset import (
    Dataset,
    load_dataset,
    parse_dataset,
    parse_dense_csv,
    split_train_validation,
    write_dataset,
)

__all__ = [
    "Dataset",
    "load_dataset",
    "parse_dataset",
    "parse_dense_csv",
    "split_train_validation",
    "write_dataset",
]
