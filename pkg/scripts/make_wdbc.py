"""Write data/wdbc.data in the UCI layout (id, M/B, 30 features) from scikit-learn's bundled copy.

scikit-learn ships the 569 x 30 Wisconsin diagnostic table without the
original patient IDs; the row number stands in for the ID column.
"""

import csv
from pathlib import Path

from sklearn.datasets import load_breast_cancer

OUT = Path(__file__).resolve().parent.parent / "data" / "wdbc.data"


def main():
    bunch = load_breast_cancer()
    # scikit-learn codes malignant as 0 and benign as 1
    labels = ["M" if t == 0 else "B" for t in bunch.target]
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for i, (lab, row) in enumerate(zip(labels, bunch.data), start=1):
            writer.writerow([i, lab, *[repr(float(v)) for v in row]])
    print(f"wrote {len(labels)} rows to {OUT}")


if __name__ == "__main__":
    main()
