"""Teacher-forced training with Adam, evaluation, and checkpointing.

Checkpoints are a single self-describing file: an 8-byte magic string, a
length-prefixed JSON header (config, vocabulary, label set, character
inventory, parameter names/shapes), then the raw float64 bytes of every
parameter in header order. Writing is fully deterministic so identical
training runs produce identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .bleu import corpus_bleu
from .embeddings import Vocab
from .model import LabelVocab, Model, ModelConfig

MAGIC = b"AMR2TX01"


@dataclass
class TrainConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    epochs: int = 10
    batch_size: int = 8
    eval_beam: int = 1
    seed: int = 1
    stop_accuracy: float = 0.0  # 0 disables early stopping
    accuracy_check_every: int = 5


def clip_gradients(params, max_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = np.sqrt(total)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


def adam_step(params, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam update with bias correction; frozen parameters are skipped."""
    for p in params:
        if p.frozen or p.grad is None:
            continue
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * p.grad
        p.v = beta2 * p.v + (1.0 - beta2) * (p.grad * p.grad)
        m_hat = p.m / (1.0 - beta1 ** p.step)
        v_hat = p.v / (1.0 - beta2 ** p.step)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _bucketed_batches(pairs, batch_size, rng):
    """Group examples of similar size, then visit batches in random order."""
    sizes = [len(g.nodes) + (len(s) if s else 0) for g, s in pairs]
    order = sorted(range(len(pairs)), key=lambda i: (sizes[i], i))
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    rng.shuffle(batches)
    return batches


def token_accuracy(model: Model, pairs) -> float:
    """Teacher-forced argmax accuracy with dropout off."""
    correct = total = 0
    for graph, sentence in pairs:
        stats = model.example_loss(graph, sentence, train=False)
        correct += stats.n_correct
        total += stats.n_tokens
    return correct / total if total else 0.0


def corpus_loss(model: Model, pairs) -> float:
    """Teacher-forced negative log likelihood per token with dropout off."""
    loss = total = 0.0
    for graph, sentence in pairs:
        stats = model.example_loss(graph, sentence, train=False)
        loss += stats.loss.item()
        total += stats.n_tokens
    return loss / total if total else 0.0


def evaluate_bleu(model: Model, pairs, beam: int = 1) -> float:
    hyps = [model.generate(g, beam=beam) for g, _ in pairs]
    return corpus_bleu(hyps, [s for _, s in pairs])


def train(model: Model, train_pairs, dev_pairs, tconf: TrainConfig, log_path=None, checkpoint_path=None):
    """Per-epoch training; returns the history [(epoch, train_loss, dev_bleu)].

    After every epoch the devset BLEU is measured and the best-scoring
    parameter snapshot is retained; it is restored into the model (and written
    to checkpoint_path) when training ends.
    """
    if not train_pairs:
        raise ValueError("empty training corpus")
    if not dev_pairs:
        raise ValueError("empty dev corpus")
    params = model.parameters()
    rng = np.random.default_rng(tconf.seed)
    history = []
    best_bleu = -1.0
    best_epoch = 0
    best_snapshot = None
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, tconf.epochs + 1):
            loss_sum = 0.0
            token_sum = 0
            for batch in _bucketed_batches(train_pairs, tconf.batch_size, rng):
                ad.zero_grad(params)
                stats = [model.example_loss(*train_pairs[i], train=True, rng=rng) for i in batch]
                n_tokens = sum(s.n_tokens for s in stats)
                losses = [s.loss for s in stats]
                total = ad.add_n(losses) if len(losses) > 1 else losses[0]
                scaled = ad.mul(total, ad.constant([[1.0 / n_tokens]]))
                ad.backward(scaled)
                clip_gradients(params, tconf.clip_norm)
                adam_step(params, tconf.lr, tconf.beta1, tconf.beta2, tconf.eps)
                loss_sum += total.item()
                token_sum += n_tokens
            train_loss = loss_sum / token_sum
            dev_bleu = evaluate_bleu(model, dev_pairs, beam=tconf.eval_beam)
            history.append((epoch, train_loss, dev_bleu))
            line = f"{epoch}\t{train_loss:.6f}\t{dev_bleu:.4f}"
            if log_file:
                log_file.write(line + "\n")
                log_file.flush()
            # ties keep the most recent snapshot so late accuracy gains survive
            if dev_bleu >= best_bleu:
                best_bleu = dev_bleu
                best_epoch = epoch
                best_snapshot = [p.data.copy() for p in params]
            if tconf.stop_accuracy and epoch % tconf.accuracy_check_every == 0:
                if token_accuracy(model, train_pairs) >= tconf.stop_accuracy:
                    break
    finally:
        if log_file:
            log_file.close()
    if best_snapshot is not None:
        for p, data in zip(params, best_snapshot):
            p.data = data
    if checkpoint_path:
        checkpoint_save(model, checkpoint_path, meta={"best_dev_bleu": best_bleu, "best_epoch": best_epoch})
    return history


def checkpoint_save(model: Model, path, meta=None) -> None:
    params = model.parameters()
    header = {
        "config": model.config.to_dict(),
        "vocab": model.vocab.tokens,
        "labels": model.label_vocab.labels,
        "charset": model.charset,
        "frozen": [p.name for p in params if p.frozen],
        "params": [{"name": p.name, "shape": list(p.shape)} for p in params],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for p in params:
            f.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def checkpoint_load(path) -> Model:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    offset = len(MAGIC)
    (blob_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    try:
        header = json.loads(raw[offset : offset + blob_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ValueError(f"corrupted checkpoint header: {err}")
    offset += blob_len
    config = ModelConfig(**header["config"])
    model = Model(config, Vocab(header["vocab"]), LabelVocab(header["labels"]), charset=header["charset"])
    params = model.parameters()
    declared = {entry["name"]: tuple(entry["shape"]) for entry in header["params"]}
    if [e["name"] for e in header["params"]] != [p.name for p in params]:
        raise ValueError("checkpoint parameter set does not match the rebuilt model")
    for p in params:
        if tuple(p.shape) != declared[p.name]:
            raise ValueError(f"shape mismatch for {p.name}: file {declared[p.name]}, model {tuple(p.shape)}")
        n = int(np.prod(p.shape)) * 8
        chunk = raw[offset : offset + n]
        if len(chunk) != n:
            raise ValueError("truncated checkpoint file")
        p.data = np.frombuffer(chunk, dtype="<f8").reshape(p.shape).copy()
        p.frozen = p.name in header["frozen"]
        offset += n
    if offset != len(raw):
        raise ValueError("trailing bytes in checkpoint file")
    model.meta = header.get("meta", {})
    return model
