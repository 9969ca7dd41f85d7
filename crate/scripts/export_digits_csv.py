#!/usr/bin/env python3
"""Export scikit-learn's bundled UCI handwritten-digits table to CSV.

The bundled table is the test partition of the UCI "Optical Recognition of
Handwritten Digits" dataset: 1797 rows, 64 integer features (8x8 images),
10 classes. It ships inside scikit-learn, so this works offline.
Output: data/digits_uci.csv with the label in the last column, no header.
"""
from pathlib import Path

from sklearn.datasets import load_digits


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "data" / "digits_uci.csv"
    digits = load_digits()
    lines = []
    for row, label in zip(digits.data, digits.target):
        cells = [str(int(v)) for v in row] + [str(int(label))]
        lines.append(",".join(cells))
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(lines)} rows)")


if __name__ == "__main__":
    main()
