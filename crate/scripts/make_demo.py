"""Regenerate the synthetic demo inputs under data/demo/.

A small 3x4 table with a tree, and a 21-location table (3 patients x 7
samples) over 40 taxa with a random tree, metadata, a taxon graph and
per-taxon values. Output is deterministic for a fixed numpy seed.
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data" / "demo"
rng = np.random.default_rng(20170601)


def write_table(path, row_labels, col_labels, counts):
    lines = ["\t".join(["location", *col_labels])]
    for label, row in zip(row_labels, counts):
        lines.append("\t".join([label, *(str(int(v)) for v in row)]))
    path.write_text("\n".join(lines) + "\n")


def random_newick(labels):
    # Random coalescent-style joins with lengths rounded to 3 decimals.
    nodes = [(name, 0.0) for name in labels]
    while len(nodes) > 1:
        i, j = sorted(rng.choice(len(nodes), size=2, replace=False))
        b, a = nodes.pop(j), nodes.pop(i)
        la, lb = np.round(rng.uniform(0.05, 1.0, size=2), 3)
        nodes.append((f"({a[0]}:{la},{b[0]}:{lb})", 0.0))
    return nodes[0][0] + ";\n"


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    mini = np.array([[10, 5, 0, 1], [2, 8, 6, 0], [0, 1, 9, 12]])
    write_table(OUT / "mini_table.tsv", ["site1", "site2", "site3"], ["a", "b", "c", "d"], mini)
    (OUT / "mini_tree.nwk").write_text("((a:0.3,b:0.5):0.4,(c:0.2,d:0.6):0.1);\n")

    n_taxa = 40
    taxa = [f"otu{j + 1:02d}" for j in range(n_taxa)]
    patients = ["P1", "P2", "P3"]
    base = rng.dirichlet(np.full(n_taxa, 0.6), size=len(patients))
    rows, labels, meta = [], [], []
    for p, patient in enumerate(patients):
        for day in range(7):
            profile = rng.dirichlet(base[p] * 60 + 0.05)
            rows.append(rng.multinomial(int(rng.integers(400, 900)), profile))
            labels.append(f"{patient}_d{day + 1}")
            meta.append((labels[-1], patient, "early" if day < 3 else "late"))
    counts = np.array(rows)
    keep = counts.sum(axis=0) > 0
    counts = counts[:, keep]
    taxa = [t for t, k in zip(taxa, keep) if k]
    write_table(OUT / "table.tsv", labels, taxa, counts)
    (OUT / "tree.nwk").write_text(random_newick(taxa))
    (OUT / "metadata.tsv").write_text(
        "location\tpatient\tphase\n" + "".join(f"{a}\t{b}\t{c}\n" for a, b, c in meta)
    )

    # Path over the taxa plus a few random chords.
    edges = [(taxa[i], taxa[i + 1], 1.0) for i in range(len(taxa) - 1)]
    for _ in range(8):
        i, j = sorted(rng.choice(len(taxa), size=2, replace=False))
        if j > i + 1:
            edges.append((taxa[i], taxa[j], float(np.round(rng.uniform(0.2, 2.0), 3))))
    seen, lines = set(), ["# taxon graph: u v weight"]
    for u, v, w in edges:
        if (u, v) not in seen:
            seen.add((u, v))
            lines.append(f"{u} {v} {w}")
    (OUT / "graph.txt").write_text("\n".join(lines) + "\n")

    values = np.round(np.sin(np.arange(len(taxa)) / 4.0) + rng.normal(0, 0.2, len(taxa)), 6)
    (OUT / "values.csv").write_text(
        "vertex,value\n" + "".join(f"{t},{v}\n" for t, v in zip(taxa, values))
    )


if __name__ == "__main__":
    main()
