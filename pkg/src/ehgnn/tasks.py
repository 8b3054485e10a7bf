"""Training loops, metrics and the compression report."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Adam, add, backward, cross_entropy, mse_loss, no_grad, scale
from .errors import DimensionError, TrainingError
from .models import ClassificationModel, build_reconstruction_model
from .pooling import num_pooled

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "accuracy", "exact_match")


@dataclass
class Metrics:
    accuracy: float | None = None
    exact_match: float | None = None
    mse: float | None = None
    node_accuracy: float | None = None
    edge_accuracy: float | None = None


@dataclass
class TrainResult:
    history: list = field(default_factory=list)
    best_epoch: int = 0
    test_accuracy: float | None = None
    stopped_early: bool = False


def snapshot(params):
    return [p.data.copy() for p in params]


def restore(params, saved):
    for p, data in zip(params, saved):
        p.data = data.copy()


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in history:
            writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in HISTORY_COLUMNS})


def _labels(t):
    return t.data.argmax(axis=1)


# ---------------------------------------------------------------- reconstruction


def _part_loss(pred, target, categorical):
    if categorical:
        return cross_entropy(pred, _labels(target))
    return mse_loss(pred, target.data)


def reconstruction_loss(model, g, outputs=None):
    x_rec, e_rec = model(g) if outputs is None else outputs
    loss = None
    if x_rec is not None:
        loss = _part_loss(x_rec, g.node_features, model.categorical_nodes)
    if e_rec is not None:
        part = _part_loss(e_rec, g.edge_features, model.categorical_edges)
        loss = part if loss is None else add(loss, part)
    return loss


class _Tally:
    """Accumulates per-graph prediction quality into :class:`Metrics`."""

    def __init__(self):
        self.correct = {"node": 0, "edge": 0}
        self.total = {"node": 0, "edge": 0}
        self.sq_err, self.sq_count = 0.0, 0
        self.exact, self.graphs, self.categorical = 0, 0, False

    def add(self, g, x_rec, e_rec, model):
        all_ok = True
        parts = (
            ("node", x_rec, g.node_features, model.categorical_nodes),
            ("edge", e_rec, g.edge_features, model.categorical_edges),
        )
        for name, pred, target, categorical in parts:
            if pred is None:
                continue
            if categorical:
                self.categorical = True
                hits = _labels(pred) == _labels(target)
                self.correct[name] += int(hits.sum())
                self.total[name] += hits.size
                all_ok &= bool(hits.all())
            else:
                diff = pred.data - target.data
                self.sq_err += float(np.sum(diff * diff))
                self.sq_count += diff.size
        if self.categorical:
            self.exact += int(all_ok)
        self.graphs += 1

    def metrics(self):
        m = Metrics()
        total = sum(self.total.values())
        if total:
            m.accuracy = sum(self.correct.values()) / total
            m.exact_match = self.exact / max(self.graphs, 1)
        for name in ("node", "edge"):
            if self.total[name]:
                setattr(m, f"{name}_accuracy", self.correct[name] / self.total[name])
        if self.sq_count:
            m.mse = self.sq_err / self.sq_count
        return m


def evaluate(model, dataset, hard=False):
    """Metrics over ``dataset``; categorical parts are argmax-decoded."""
    tally = _Tally()
    with no_grad():
        for g in dataset:
            x_rec, e_rec = model(g, hard=hard)
            tally.add(g, x_rec, e_rec, model)
    return tally.metrics()


def _check_dataset(dataset):
    if not dataset:
        raise ValueError("dataset is empty")
    d = dataset[0].node_features.cols
    d_edge = dataset[0].edge_features.cols
    for i, g in enumerate(dataset):
        if g.node_features.cols != d or g.edge_features.cols != d_edge:
            raise DimensionError(
                f"graph {i} has feature widths ({g.node_features.cols}, {g.edge_features.cols}), "
                f"expected ({d}, {d_edge})"
            )


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    size = min(batch_size, n)
    return [order[i : i + size] for i in range(0, n, size)]


def _finite(loss, epoch, index):
    value = loss.item()
    if not math.isfinite(value):
        raise TrainingError(f"non-finite loss {value} at epoch {epoch}, graph {index}")
    return value


def train_reconstruction(
    model,
    dataset,
    epochs,
    lr_node=5e-3,
    lr_edge=1e-3,
    seed=0,
    batch_size=128,
    patience=200,
    val_dataset=None,
    eval_every=1,
):
    """Fit the autoencoders; returns ``(model, TrainResult)``.

    Graphs are processed one at a time with gradients averaged over each
    batch. Without ``val_dataset`` the monitored loss and metrics come
    from the training pass itself. Parameters at the lowest monitored loss
    are restored at the end.
    """
    _check_dataset(dataset)
    rng = np.random.default_rng(seed)
    optims = []
    if model.node_ae is not None:
        optims.append(Adam(model.node_ae.parameters(), lr=lr_node))
    if model.edge_ae is not None:
        optims.append(Adam(model.edge_ae.parameters(), lr=lr_edge))
    params = model.parameters()

    result = TrainResult()
    best_loss, best_params, since_best = math.inf, snapshot(params), 0
    for epoch in range(1, epochs + 1):
        tally, total = _Tally(), 0.0
        for batch in _batches(len(dataset), batch_size, rng):
            for opt in optims:
                opt.zero_grad()
            for i in batch:
                g = dataset[i]
                outputs = model(g)
                loss = reconstruction_loss(model, g, outputs)
                total += _finite(loss, epoch, int(i))
                backward(scale(loss, 1.0 / len(batch)))
                tally.add(g, outputs[0], outputs[1], model)
            for opt in optims:
                opt.step()
        train_loss = total / len(dataset)

        if val_dataset is not None and (epoch % eval_every == 0 or epoch == epochs):
            with no_grad():
                val_loss = float(np.mean([reconstruction_loss(model, g).item() for g in val_dataset]))
            metrics = evaluate(model, val_dataset)
        elif val_dataset is None:
            val_loss, metrics = train_loss, tally.metrics()
        else:
            result.history.append({"epoch": epoch, "train_loss": train_loss})
            continue
        result.history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "val_loss": val_loss,
                "accuracy": metrics.accuracy,
                "exact_match": metrics.exact_match,
                "mse": metrics.mse,
            }
        )
        if val_loss < best_loss:
            best_loss, best_params, since_best = val_loss, snapshot(params), 0
            result.best_epoch = epoch
        else:
            since_best += eval_every if val_dataset is not None else 1
            if since_best >= patience:
                result.stopped_early = True
                break
    restore(params, best_params)
    return model, result


# ---------------------------------------------------------------- compression


def original_size(g):
    return g.num_nodes * g.node_features.cols + g.num_edges * g.edge_features.cols


def _part_size(rows, width, clusters=None, pooled_width=None):
    """Raw ``rows x width``, or ``clusters x pooled_width`` plus one cluster index per row."""
    if clusters is None:
        return rows * width
    return clusters * (width if pooled_width is None else pooled_width) + rows


def node_only_size(g, node_ratio):
    """Stored numbers when only nodes are pooled and edge features stay raw."""
    nodes = _part_size(g.num_nodes, g.node_features.cols, num_pooled(g.num_nodes, node_ratio))
    return nodes + _part_size(g.num_edges, g.edge_features.cols)


def model_size(model, g, node_ratio=None):
    """Stored numbers for ``g`` under ``model``'s pooling.

    Without a node autoencoder the node part is charged as pooled at
    ``node_ratio`` (raw when that is ``None``), the same as the node-only
    baseline, so the two differ only in how edges are stored. A baseline
    edge model stores pooled node rows from which edges are rebuilt.
    """
    n, m = g.num_nodes, g.num_edges
    d, d_edge = g.node_features.cols, g.edge_features.cols
    if model.node_ae is not None:
        nodes = _part_size(n, d, model.node_ae.n_pool, model.node_ae.assign.d_in)
    else:
        nodes = _part_size(n, d, None if node_ratio is None else num_pooled(n, node_ratio))
    ae = model.edge_ae
    if ae is None:
        edges = _part_size(m, d_edge)
    elif hasattr(ae, "m_pool"):
        edges = _part_size(m, d_edge, ae.m_pool, ae.assign.d_in)
    else:
        edges = _part_size(n, d_edge, ae.n_pool, ae.assign.d_in)
    return nodes + edges


def compression_report(model, g, node_ratio=None, edge_ratio=None):
    """Relative stored size of ``g`` under ``model`` and its hard-decoded accuracy."""
    metrics = evaluate(model, [g], hard=True)
    report = {
        "relative_size": model_size(model, g, node_ratio) / original_size(g),
        "edge_accuracy": metrics.edge_accuracy,
        "node_accuracy": metrics.node_accuracy,
        "node_ratio": node_ratio,
        "edge_ratio": edge_ratio,
    }
    if node_ratio is not None:
        report["node_only_relative_size"] = node_only_size(g, node_ratio) / original_size(g)
    return report


def tune_compression(g, edge_ratios, node_ratio=0.15, accuracy=0.75, hidden=32, epochs=300, lr_edge=5e-3, seed=0):
    """Try ``edge_ratios`` in ascending order; stop at the first reaching ``accuracy``.

    The pooled width equals the input width, so the stored code is no
    wider than the data it replaces. Returns ``(report, model)``; the
    report lists every ratio tried.
    """
    tried = []
    for ratio in sorted(edge_ratios):
        model = build_reconstruction_model(
            g, hidden=hidden, edge_ratio=ratio, categorical=True, seed=seed, pool_dim="input"
        )
        train_reconstruction(model, [g], epochs, lr_edge=lr_edge, seed=seed, patience=epochs)
        report = compression_report(model, g, node_ratio, ratio)
        tried.append({k: report[k] for k in ("edge_ratio", "edge_accuracy", "relative_size")})
        if report["edge_accuracy"] >= accuracy:
            break
    report["tried"] = tried
    return report, model


# ---------------------------------------------------------------- classification


def stratified_split(dataset, fractions=(0.8, 0.1, 0.1), seed=0):
    """Split labelled graphs into train/val/test preserving class proportions."""
    labels = np.array([g.label for g in dataset])
    if len(np.unique(labels)) < 2:
        raise ValueError("classification needs at least two distinct labels")
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        n_train = int(round(fractions[0] * len(idx)))
        n_val = int(round(fractions[1] * len(idx)))
        parts[0].extend(idx[:n_train])
        parts[1].extend(idx[n_train : n_train + n_val])
        parts[2].extend(idx[n_train + n_val :])
    return tuple([dataset[i] for i in sorted(p)] for p in parts)


def _class_pass(model, dataset, keep_ratio):
    losses, correct = [], 0
    with no_grad():
        for g in dataset:
            logits = model(g, keep_ratio)
            losses.append(cross_entropy(logits, [g.label]).item())
            correct += int(np.argmax(logits.data[0]) == g.label)
    return float(np.mean(losses)), correct / len(dataset)


def build_classification_model(sample, num_classes, hidden=32, keep_ratio=0.5, seed=0, num_layers=3):
    rng = np.random.default_rng(seed)
    return ClassificationModel(
        sample.node_features.cols, sample.edge_features.cols, hidden, num_classes, keep_ratio, rng, num_layers
    )


def train_classification(
    model,
    dataset,
    epochs,
    keep_ratio=None,
    seed=0,
    splits=None,
    lr=5e-3,
    batch_size=128,
    patience=200,
):
    """Train on a stratified split; report test accuracy at the best-validation epoch.

    ``splits`` is ``(train, val, test)``; when omitted an 80/10/10
    stratified split of ``dataset`` is drawn with ``seed``.
    """
    labels = {g.label for g in dataset}
    if None in labels:
        raise ValueError("every graph needs an integer label")
    if len(labels) < 2:
        raise ValueError("classification needs at least two distinct labels")
    train, val, test = splits if splits is not None else stratified_split(dataset, seed=seed)
    keep = model.keep_ratio if keep_ratio is None else keep_ratio
    rng = np.random.default_rng(seed)
    params = model.parameters()
    opt = Adam(params, lr=lr)

    result = TrainResult()
    best_key, since_best = None, 0
    for epoch in range(1, epochs + 1):
        total = 0.0
        for batch in _batches(len(train), batch_size, rng):
            opt.zero_grad()
            for i in batch:
                loss = cross_entropy(model(train[i], keep), [train[i].label])
                total += _finite(loss, epoch, int(i))
                backward(scale(loss, 1.0 / len(batch)))
            opt.step()
        val_loss, val_acc = _class_pass(model, val, keep)
        _, test_acc = _class_pass(model, test, keep)
        result.history.append(
            {"epoch": epoch, "train_loss": total / len(train), "val_loss": val_loss, "accuracy": val_acc,
             "test_accuracy": test_acc}
        )
        key = (val_acc, -val_loss)
        if best_key is None or key > best_key:
            best_key, since_best = key, 0
            result.best_epoch, result.test_accuracy = epoch, test_acc
        else:
            since_best += 1
            if since_best >= patience:
                result.stopped_early = True
                break
    return model, result
