"""Convert the whitespace-separated UCI Statlog credit files into CSV + schema pairs.

    python data/convert_statlog.py german-numeric data/german.data-numeric data/german_numeric
    python data/convert_statlog.py german data/german.data data/german
    python data/convert_statlog.py australian australian.dat data/australian

Each call writes ``<stem>.csv`` and ``<stem>.schema.json``.
"""

import csv
import json
import sys

# 1-based attribute numbers that are categorical in the source documentation
CATEGORICAL = {
    "german": {1, 3, 4, 6, 7, 9, 10, 12, 14, 15, 17, 19, 20},
    "german-numeric": set(),
    "australian": {1, 4, 5, 6, 8, 9, 11, 12},
}
LABELS = {
    "german": {"1": "good", "2": "bad"},
    "german-numeric": {"1": "good", "2": "bad"},
    "australian": {"0": "rejected", "1": "approved"},
}


def convert(kind, src, stem):
    with open(src, encoding="ascii") as fh:
        rows = [line.split() for line in fh if line.strip()]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SystemExit(f"{src}: ragged rows")
    m = width - 1
    names = [f"A{j}" for j in range(1, m + 1)]
    features = []
    for j, name in enumerate(names, 1):
        if j in CATEGORICAL[kind]:
            vocab = sorted({r[j - 1] for r in rows}, key=lambda v: (len(v), v))
            features.append({"name": name, "kind": "categorical", "vocabulary": vocab, "closed": True})
        else:
            features.append({"name": name, "kind": "continuous"})
    labels = LABELS[kind]
    with open(stem + ".csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["class"])
        for r in rows:
            w.writerow(r[:m] + [labels[r[m]]])
    schema = {"label_column": "class", "features": features}
    with open(stem + ".schema.json", "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    print(f"{stem}.csv: {len(rows)} rows, {m} features")


if __name__ == "__main__":
    if len(sys.argv) != 4 or sys.argv[1] not in CATEGORICAL:
        raise SystemExit(__doc__)
    convert(*sys.argv[1:])
