"""Built-in example matrices and their reference monotone values.

The eight matrices exercise every monotone: for each one there is a pair in
the gallery whose inequivalence only that monotone detects.  The reference
table records the known exact values (quantum dimension as a point value)
for consistency checking.
"""

from __future__ import annotations

from fractions import Fraction

from .matrix import CommMatrix, make_D

__all__ = ["gallery", "reference_monotones", "GALLERY_ORDER"]

GALLERY_ORDER = ["K_plus", "K", "K_minus", "D_3_1/3", "A", "B", "C", "D"]


def gallery() -> dict[str, CommMatrix]:
    h = "1/2"
    mats = {
        "K_plus": [
            [h, h, 0, 0],
            [h, 0, h, 0],
            [h, 0, 0, h],
            [0, h, 0, h],
            [0, 0, h, h],
        ],
        "K": [
            [h, h, 0, 0],
            [h, 0, h, 0],
            [0, h, 0, h],
            [0, 0, h, h],
        ],
        "K_minus": [
            [h, h, 0, 0],
            [h, 0, h, 0],
            [0, h, 0, h],
        ],
        "A": [
            [1, 0, 0],
            [h, h, 0],
            [h, 0, h],
        ],
        "B": [
            ["2/3", "1/3", 0],
            [0, "2/3", "1/3"],
            ["1/3", 0, "2/3"],
        ],
        "C": [
            [1, 0, 0],
            [0, h, h],
            [h, 0, h],
        ],
        "D": [
            [1, 0, 0],
            [0, h, h],
            [0, 0, 1],
        ],
    }
    out = {name: CommMatrix.from_rows(rows) for name, rows in mats.items()}
    out["D_3_1/3"] = make_D(3, Fraction(1, 3))
    return {name: out[name] for name in GALLERY_ORDER}


def reference_monotones() -> dict[str, dict]:
    """Known values: rank, nonnegative rank, quantum dimension, lambda_min,
    iota, lambda_max, per gallery matrix.
    """
    f = Fraction
    table = {
        "K_plus": (4, 4, 3, f(0), 2, f(2)),
        "K": (3, 4, 3, f(0), 2, f(2)),
        "K_minus": (3, 3, 3, f(0), 2, f(2)),
        "D_3_1/3": (3, 3, 2, f(-1, 2), 1, f(2)),
        "A": (3, 3, 3, f(-1, 2), 1, f(2)),
        "B": (3, 3, 3, f(0), 1, f(2)),
        "C": (3, 3, 3, f(0), 2, f(2)),
        "D": (3, 3, 3, f(0), 2, f(5, 2)),
    }
    return {
        name: {
            "rank": v[0],
            "nneg_rank": v[1],
            "psd_rank": v[2],
            "lambda_min": v[3],
            "iota": v[4],
            "lambda_max": v[5],
        }
        for name, v in table.items()
    }
