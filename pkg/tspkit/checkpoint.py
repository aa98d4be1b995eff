"""
Text Checkpoints
================

Line-oriented checkpoint encoding shared by the embedding and head-tail models.

Floats are written with Python's shortest round-trip ``repr`` so reloading
reproduces every parameter bit for bit.

KGE layout::

    <kind> <dim> <n_entities> <n_relations> <lambda> <alpha>
    one row per entity   (hake: modulus then phase; pairre: vector)
    one row per relation (hake: modulus, phase, bias; pairre: head, tail)

Sectioned layout (head-tail model), after a model-specific header line::

    [<tensor name>] <shape...>
    rows of the tensor reshaped to (shape[0], -1); a scalar is one row
"""

from typing import Dict, Iterator, Mapping, TextIO

import numpy as np
import torch


def format_row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_matrix(handle: TextIO, matrix):
    if isinstance(matrix, torch.Tensor):
        matrix = matrix.detach().cpu().numpy()
    for row in np.asarray(matrix, dtype=np.float64).tolist():
        handle.write(format_row(row) + "\n")


def read_matrix(lines: Iterator[str], n_rows: int, n_cols: int) -> np.ndarray:
    matrix = np.empty((n_rows, n_cols), dtype=np.float64)
    for i in range(n_rows):
        values = next(lines).split()
        if len(values) != n_cols:
            raise ValueError(f"checkpoint row {i} has {len(values)} values, expected {n_cols}")
        matrix[i] = [float(v) for v in values]
    return matrix


def write_sections(handle: TextIO, tensors: Mapping[str, torch.Tensor]):
    for name, tensor in tensors.items():
        array = tensor.detach().cpu().numpy().astype(np.float64)
        shape = " ".join(str(s) for s in array.shape)
        handle.write(f"[{name}] {shape}".rstrip() + "\n")
        rows = array.reshape(1, -1) if array.ndim == 0 else array.reshape(array.shape[0], -1)
        write_matrix(handle, rows)


def read_sections(lines: Iterator[str]) -> Dict[str, np.ndarray]:
    sections = {}
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if not line.startswith("["):
            raise ValueError(f"expected a section header, got {line[:40]!r}")
        name, _, shape_text = line[1:].partition("]")
        shape = tuple(int(s) for s in shape_text.split())
        n_rows = shape[0] if shape else 1
        n_cols = int(np.prod(shape[1:])) if len(shape) > 1 else 1
        sections[name] = read_matrix(lines, n_rows, n_cols).reshape(shape)
    return sections
