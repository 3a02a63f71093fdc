import numpy as np

from quantum_nft.solver.simcore import DensityMatrix

CITY_PLOT_ID = "city"
HINTON_PLOT_ID = "hinton"


def basis_labels(n_qubits: int) -> list[str]:
    """Computational basis labels, qubit n-1 leftmost: ["00", "01", "10", "11"] for two qubits."""
    return [format(i, f"0{n_qubits}b") for i in range(1 << n_qubits)]


def _heatmap_trace(name: str, z_data: list[list[float]], labels: list[str], axes: str) -> dict:
    x_axis, y_axis = axes
    return {
        "type": "heatmap",
        "name": name,
        "z": z_data,
        "x": labels,
        "y": labels,
        "xaxis": x_axis,
        "yaxis": y_axis,
        "colorscale": "RdBu",
        "zmid": 0.0,
        "showscale": True,
    }


def export_city(rho: DensityMatrix) -> dict:
    """
    City plot data of a density matrix.

    Returns a plotly-style dictionary with one heatmap trace per part (real
    on the left, imaginary on the right) and the labelled matrices under
    "matrices". Row i, column j of each matrix is <i|rho|j>.
    """
    title = f"Density matrix city plot ({rho.n_qubits} qubits)"
    labels = basis_labels(rho.n_qubits)
    real_part = np.real(rho.entries).tolist()
    imag_part = np.imag(rho.entries).tolist()

    plot_config = {
        "id": CITY_PLOT_ID,
        "title": title,
        "data": [
            _heatmap_trace("Re(rho)", real_part, labels, ("x", "y")),
            _heatmap_trace("Im(rho)", imag_part, labels, ("x2", "y2")),
        ],
        "layout": {
            "title": {
                "text": title
            },
            "grid": {"rows": 1, "columns": 2, "pattern": "independent"},
            "xaxis": {"title": "Column basis state"},
            "yaxis": {"title": "Row basis state", "autorange": "reversed"},
            "xaxis2": {"title": "Column basis state"},
            "yaxis2": {"autorange": "reversed"},
            "annotations": [],
            "margin": {},
        },
        "matrices": {
            "labels": labels,
            "real": real_part,
            "imag": imag_part,
        },
    }
    return plot_config


def _hinton_cells(part: np.ndarray, labels: list[str]) -> list[dict]:
    scale = float(np.max(np.abs(part))) or 1.0
    cells = []
    for row, row_label in enumerate(labels):
        for col, col_label in enumerate(labels):
            value = float(part[row, col])
            cells.append(
                {
                    "row": row,
                    "col": col,
                    "row_label": row_label,
                    "col_label": col_label,
                    "value": value,
                    "magnitude": abs(value) / scale,
                    "sign": int(np.sign(value)),
                }
            )
    return cells


def _hinton_trace(name: str, cells: list[dict], axes: str) -> dict:
    x_axis, y_axis = axes
    return {
        "type": "scatter",
        "mode": "markers",
        "name": name,
        "x": [cell["col_label"] for cell in cells],
        "y": [cell["row_label"] for cell in cells],
        "xaxis": x_axis,
        "yaxis": y_axis,
        "marker": {
            "symbol": "square",
            "size": [40 * cell["magnitude"] for cell in cells],
            "color": ["rgb(0,83,138)" if cell["sign"] >= 0 else "rgb(212,73,30)" for cell in cells],
        },
        "showlegend": False,
    }


def export_hinton(rho: DensityMatrix) -> dict:
    """
    Hinton plot data: one cell record per matrix entry and part.

    Each cell carries row/col indices and labels, the signed value, its
    magnitude normalized to the largest entry of that part, and the sign.
    Both parts hold 2^n x 2^n cells.
    """
    title = f"Density matrix Hinton plot ({rho.n_qubits} qubits)"
    labels = basis_labels(rho.n_qubits)
    real_cells = _hinton_cells(np.real(rho.entries), labels)
    imag_cells = _hinton_cells(np.imag(rho.entries), labels)

    return {
        "id": HINTON_PLOT_ID,
        "title": title,
        "data": [
            _hinton_trace("Re(rho)", real_cells, ("x", "y")),
            _hinton_trace("Im(rho)", imag_cells, ("x2", "y2")),
        ],
        "layout": {
            "title": {
                "text": title
            },
            "grid": {"rows": 1, "columns": 2, "pattern": "independent"},
            "xaxis": {"title": "Column basis state"},
            "yaxis": {"title": "Row basis state", "autorange": "reversed"},
            "xaxis2": {"title": "Column basis state"},
            "yaxis2": {"autorange": "reversed"},
            "annotations": [],
            "margin": {},
        },
        "cells": {
            "labels": labels,
            "real": real_cells,
            "imag": imag_cells,
        },
    }
