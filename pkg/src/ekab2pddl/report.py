"""Scaling report: rewriting size against TBox size, as CSV and PNG."""
from __future__ import annotations

import csv
import os
import time
from dataclasses import asdict, dataclass

from .bench import scaling_query, scaling_tbox
from .rewriter import RewritingSet
from .rewriter.core import rule_count

COLUMNS = ("axioms", "concepts", "roles", "symbols", "rules", "predicted_rules",
           "max_arity", "rewrite_ms")


@dataclass
class ScaleRow:
    axioms: int
    concepts: int
    roles: int
    symbols: int
    rules: int
    predicted_rules: int
    max_arity: int
    rewrite_ms: float


def scale_rows(sizes) -> list[ScaleRow]:
    q = scaling_query()
    rows = []
    for n in sizes:
        tbox = scaling_tbox(n)
        t0 = time.perf_counter()
        rs = RewritingSet(tbox, [q])
        ms = (time.perf_counter() - t0) * 1000
        L = rs.layout
        rows.append(ScaleRow(n, len(L.concepts), len(L.roles), len(L.concepts) + len(L.roles),
                             len(rs.program.rules), rule_count(tbox, [q]),
                             rs.program.max_arity(), round(ms, 2)))
    return rows


def write_csv(rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))


def write_png(rows, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    xs = [r.axioms for r in rows]
    a.plot(xs, [r.rules for r in rows], "o", label="emitted")
    a.plot(xs, [r.predicted_rules for r in rows], "-", label="closed form")
    a.set_xlabel("axioms in T")
    a.set_ylabel("Datalog rules")
    a.legend()
    b.plot([r.symbols for r in rows], [r.max_arity for r in rows], "s-")
    b.set_xlabel("layout concepts + roles")
    b.set_ylabel("max predicate arity")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def scale_report(out_dir: str, sizes=range(2, 31)) -> tuple[str, str, list[ScaleRow]]:
    os.makedirs(out_dir, exist_ok=True)
    rows = scale_rows(sizes)
    csv_path = os.path.join(out_dir, "scale.csv")
    png_path = os.path.join(out_dir, "scale.png")
    write_csv(rows, csv_path)
    write_png(rows, png_path)
    return csv_path, png_path, rows
