#!/usr/bin/env python3
"""Download the Cora citation graph and write it in the autograph dataset format.

The raw LINQS files (cora.content, cora.cites) ship inside the pgl wheel on
PyPI. Split: the first 20 nodes of each class (file order) are training
nodes; of the rest, 500 are skipped (validation in the usual public split)
and the next 1000 are test nodes.
"""

import argparse
import io
import json
import pathlib
import subprocess
import sys
import tempfile
import zipfile


def fetch_raw(tmp: pathlib.Path) -> tuple[str, str]:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet", "-d", str(tmp), "pgl==2.2.6"],
        check=True,
    )
    wheel = next(tmp.glob("pgl-*.whl"))
    with zipfile.ZipFile(wheel) as z:
        names = z.namelist()
        content = next(n for n in names if n.endswith("cora/cora.content"))
        cites = next(n for n in names if n.endswith("cora/cora.cites"))
        return z.read(content).decode(), z.read(cites).decode()


def convert(content: str, cites: str, out: pathlib.Path, per_class: int, n_val: int, n_test: int) -> None:
    ids, feats, names = [], [], []
    for line in content.splitlines():
        parts = line.split()
        if not parts:
            continue
        ids.append(parts[0])
        feats.append(parts[1:-1])
        names.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    classes = sorted(set(names))
    labels = [classes.index(c) for c in names]
    n = len(ids)

    edges = set()
    for line in cites.splitlines():
        parts = line.split()
        if len(parts) != 2 or parts[0] not in index or parts[1] not in index:
            continue
        a, b = index[parts[1]], index[parts[0]]
        if a != b:
            edges.add((min(a, b), max(a, b)))

    train, seen = [], [0] * len(classes)
    for i, y in enumerate(labels):
        if seen[y] < per_class:
            seen[y] += 1
            train.append(i)
    train_set = set(train)
    rest = [i for i in range(n) if i not in train_set]
    test = rest[n_val : n_val + n_test]

    out.mkdir(parents=True, exist_ok=True)
    meta = {"n_nodes": n, "n_classes": len(classes), "directed": False, "weighted": False,
            "time_budget_seconds": 600, "classes": classes}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    with open(out / "edges.tsv", "w") as f:
        f.write("src\tdst\tweight\n")
        for a, b in sorted(edges):
            f.write(f"{a}\t{b}\t1\n")
    with open(out / "features.tsv", "w") as f:
        f.write("node_id\t" + "\t".join(f"f{k}" for k in range(len(feats[0]))) + "\n")
        for i, row in enumerate(feats):
            f.write(f"{i}\t" + "\t".join(row) + "\n")
    with open(out / "labels_train.tsv", "w") as f:
        f.write("node_id\tlabel\n")
        for i in sorted(train):
            f.write(f"{i}\t{labels[i]}\n")
    with open(out / "test_ids.tsv", "w") as f:
        f.write("node_id\n")
        for i in test:
            f.write(f"{i}\n")
    with open(out / "labels_test.tsv", "w") as f:
        f.write("node_id\tlabel\n")
        for i in test:
            f.write(f"{i}\t{labels[i]}\n")
    print(f"{out}: {n} nodes, {len(edges)} edges, {len(feats[0])} features, "
          f"{len(classes)} classes, {len(train)} train, {len(test)} test")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/cora", type=pathlib.Path)
    ap.add_argument("--per-class", default=20, type=int)
    ap.add_argument("--val", default=500, type=int)
    ap.add_argument("--test", default=1000, type=int)
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        content, cites = fetch_raw(pathlib.Path(tmp))
    convert(content, cites, args.out, args.per_class, args.val, args.test)


if __name__ == "__main__":
    main()
