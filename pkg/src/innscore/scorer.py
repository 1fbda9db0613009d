"""Cleanliness scores from predictions along segments to nearest neighbors.

The integral score for a sample (x, y) averages, over its L nearest
neighbors x~, the integral of f_y along the straight segment from x to
x~, approximated with an H-trapezoid rule whose nodes include both
endpoints. The midpoint variant evaluates f_y once per neighbor at
(x + x~)/2. Any object with a predict_proba(points) -> (n, K) method can
serve as the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# cap on probe rows evaluated per forward call
_CHUNK_ROWS = 262144


@dataclass
class ScorerConfig:
    trapezoids: int = 10  # H
    n_neighbors: int = 10  # L
    mode: str = "integral"  # integral | midpoint

    def validate(self):
        if self.trapezoids < 1:
            raise ValueError("trapezoids must be >= 1")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.mode not in ("integral", "midpoint"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ScoreTable:
    """Per-sample score columns for one checkpoint epoch."""

    epoch: int
    ids: np.ndarray
    values: dict = field(default_factory=dict)  # kind -> (n,) array

    def add(self, kind, column):
        column = np.asarray(column, dtype=np.float64)
        if column.shape != self.ids.shape:
            raise ValueError("score column must align with ids")
        self.values[kind] = column
        return self

    def kinds(self):
        return sorted(self.values)


@dataclass
class ConsistencyStats:
    """Group means of f_y at the samples and at 1-NN midpoints.

    e_cor / e_inc average f_y(x) over clean / noisy samples; em_cor and
    em_inc do the same for f_y((x + x~)/2) with x~ the single nearest
    neighbor. Empty groups are flagged in `missing` and left as None.
    """

    e_cor: float | None
    e_inc: float | None
    em_cor: float | None
    em_inc: float | None
    epoch: int | None = None
    missing: tuple = ()


def trapezoid_weights(trapezoids):
    w = np.full(trapezoids + 1, 1.0 / trapezoids)
    w[0] = w[-1] = 0.5 / trapezoids
    return w


def segment_integral(model, x, x_tilde, label, trapezoids):
    """Trapezoid approximation of the integral of f_label from x to x_tilde."""
    if trapezoids < 1:
        raise ValueError("trapezoids must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x.shape != x_tilde.shape:
        raise ValueError("endpoint shapes differ")
    t = np.arange(trapezoids + 1) / trapezoids
    nodes = (1.0 - t)[:, None] * x + t[:, None] * x_tilde
    p = model.predict_proba(nodes)[:, label]
    return float(trapezoid_weights(trapezoids) @ p)


def _check_cover(dataset, sets, n_neighbors):
    if len(sets) != dataset.n:
        raise ValueError("neighbor sets must cover every sample")
    owners = sorted(s.owner for s in sets)
    if owners != list(range(dataset.n)):
        raise ValueError("neighbor sets must cover every sample exactly once")
    for s in sets:
        if len(s.ids) < n_neighbors:
            raise ValueError(f"sample {s.owner}: fewer than L={n_neighbors} neighbors")


def inn_scores(model, dataset, sets, config, epoch=None):
    """Score every sample; returns a ScoreTable with one column.

    Column kind is "inn" in integral mode and "midpoint" in midpoint
    mode. Neighbor sets longer than config.n_neighbors are truncated to
    their first (nearest) L entries.
    """
    config.validate()
    L = config.n_neighbors
    _check_cover(dataset, sets, L)
    by_owner = sorted(sets, key=lambda s: s.owner)
    nbr = np.stack([s.ids[:L] for s in by_owner])  # (n, L) row indices

    X = dataset.features
    y = dataset.observed_labels
    n = dataset.n
    if config.mode == "midpoint":
        probes = 0.5 * (X[:, None, :] + X[nbr])  # (n, L, d)
        per_node = _eval_label_probs(model, probes.reshape(n * L, -1), np.repeat(y, L))
        scores = per_node.reshape(n, L).mean(axis=1)
    else:
        H = config.trapezoids
        t = np.arange(H + 1) / H
        # (n, L, H+1, d): straight-line nodes from each sample to each neighbor
        probes = (1.0 - t)[None, None, :, None] * X[:, None, None, :] + t[
            None, None, :, None
        ] * X[nbr][:, :, None, :]
        per_node = _eval_label_probs(
            model, probes.reshape(n * L * (H + 1), -1), np.repeat(y, L * (H + 1))
        )
        w = trapezoid_weights(H)
        scores = (per_node.reshape(n, L, H + 1) @ w).mean(axis=1)

    kind = "inn" if config.mode == "integral" else "midpoint"
    return ScoreTable(epoch, dataset.ids.copy()).add(kind, scores)


def _eval_label_probs(model, points, labels):
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, points.shape[0])
        probs = model.predict_proba(points[start:stop])
        out[start:stop] = probs[np.arange(stop - start), labels[start:stop]]
    return out


def consistency_stats(model, dataset, sets, epoch=None):
    """The four clean/noisy expectations of f_y at samples and 1-NN midpoints."""
    if dataset.true_labels is None:
        raise ValueError("consistency stats require true labels")
    _check_cover(dataset, sets, 1)
    by_owner = sorted(sets, key=lambda s: s.owner)
    nearest = np.array([s.ids[0] for s in by_owner])

    X = dataset.features
    y = dataset.observed_labels
    idx = np.arange(dataset.n)
    p_self = model.predict_proba(X)[idx, y]
    p_mid = model.predict_proba(0.5 * (X + X[nearest]))[idx, y]

    clean = dataset.clean_mask()
    missing = []
    if not clean.any():
        missing.append("clean")
    if clean.all():
        missing.append("noisy")

    def group_mean(values, mask):
        return float(values[mask].mean()) if mask.any() else None

    return ConsistencyStats(
        e_cor=group_mean(p_self, clean),
        e_inc=group_mean(p_self, ~clean),
        em_cor=group_mean(p_mid, clean),
        em_inc=group_mean(p_mid, ~clean),
        epoch=epoch,
        missing=tuple(missing),
    )


# --- score files --------------------------------------------------------


def write_score_csv(tables, path, append=False):
    """Long-format CSV `id,epoch,score_kind,value`, deterministically ordered."""
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="\n") as fh:
        if not append:
            fh.write("id,epoch,score_kind,value\n")
        for table in tables:
            for kind in table.kinds():
                col = table.values[kind]
                for i, sid in enumerate(table.ids):
                    fh.write(f"{sid},{table.epoch},{kind},{float(col[i])!r}\n")
    return path


def write_score_summary(tables, config, path):
    """JSON companion to the score CSV: config echo plus table shape."""
    import json

    payload = {
        "config": {
            "trapezoids": config.trapezoids,
            "n_neighbors": config.n_neighbors,
            "mode": config.mode,
        },
        "epochs": [t.epoch for t in tables],
        "kinds": sorted({k for t in tables for k in t.values}),
        "n_samples": int(tables[0].ids.shape[0]) if tables else 0,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_score_csv(path):
    """Read back a score CSV; returns ScoreTables sorted by epoch."""
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "id,epoch,score_kind,value":
            raise ValueError(f"{path}: not a score CSV")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 4:
                continue
            sid, epoch, kind, value = int(parts[0]), int(parts[1]), parts[2], float(parts[3])
            rows.setdefault(epoch, {}).setdefault(kind, []).append((sid, value))
    tables = []
    for epoch in sorted(rows):
        kinds = rows[epoch]
        first = next(iter(kinds.values()))
        ids = np.array([sid for sid, _ in first], dtype=np.int64)
        table = ScoreTable(epoch, ids)
        for kind, pairs in kinds.items():
            got = np.array([sid for sid, _ in pairs], dtype=np.int64)
            if not np.array_equal(got, ids):
                raise ValueError(f"{path}: inconsistent id sets across kinds at epoch {epoch}")
            table.add(kind, np.array([v for _, v in pairs]))
        tables.append(table)
    return tables
