#!/usr/bin/env python3
"""Fetch the UCI Pen-Based Recognition of Handwritten Digits dataset.

Requires network access to archive.ics.uci.edu. Writes
data/pendigits_train.csv and data/pendigits_test.csv (16 features + label,
comma-separated, no header) — the format configs/pendigits_svm.json expects.
"""
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/pendigits"
FILES = {
    "pendigits.tra": "pendigits_train.csv",
    "pendigits.tes": "pendigits_test.csv",
}


def main() -> None:
    data_dir = Path(__file__).resolve().parent.parent / "data"
    data_dir.mkdir(exist_ok=True)
    for remote, local in FILES.items():
        url = f"{BASE}/{remote}"
        target = data_dir / local
        print(f"fetching {url}")
        with urllib.request.urlopen(url, timeout=60) as resp:
            text = resp.read().decode("ascii")
        rows = [line.strip().replace(", ", ",") for line in text.splitlines() if line.strip()]
        target.write_text("\n".join(rows) + "\n")
        print(f"wrote {target} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
