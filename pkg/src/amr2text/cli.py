"""Command line interface: preprocess, stats, train, generate, eval, gradcheck.

Runtime settings (beam size, thread count, output paths) always come from
flags. Structural settings (encoder kind, sizes, copy/char switches) come
from flags when building a new model and from the checkpoint header when
loading one, so a checkpoint is always decoded by the network that wrote it.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import autodiff as ad
from .amr import AmrParseError, diameter_histogram, linearize, parse_penman, read_corpus
from .bleu import corpus_bleu, read_sentences
from .embeddings import Vocab, load_pretrained
from .model import LabelVocab, Model, ModelConfig, build_vocabularies
from .reports import (
    adjacency_token_distances,
    write_diameter_report,
    write_distance_report,
    write_training_report,
)
from .training import TrainConfig, checkpoint_load, train

# small fixed network exercised by `gradcheck`: every component on, tiny sizes
GRADCHECK_PENMAN = "(s / see-01 :arg0 (b / boy) :arg1 (d / dog :mod (r / red)))"
GRADCHECK_TARGET = "the boy sees a red dog"
GRADCHECK_FILLER = ["see", "cat", "runs", "girl", "big", "blue", "walks", "has", "old", "new"]


def _add_model_flags(parser):
    parser.add_argument("--encoder", choices=("seq", "graph"), default="graph", help="encoder architecture")
    parser.add_argument("--copy", action="store_true", help="enable the copy mechanism")
    parser.add_argument("--char", action="store_true", help="enable character LSTM features")
    parser.add_argument("--steps", type=int, default=9, help="graph state transition steps T")
    parser.add_argument("--hidden", type=int, default=300, help="hidden vector size")
    parser.add_argument("--dropout", type=float, default=0.1, help="dropout rate during training")
    parser.add_argument("--seed", type=int, default=1, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amr2text", description="Graph-to-sequence AMR-to-text toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="tokenize a corpus and build vocabularies")
    p.add_argument("--amr", required=True, help="AMR corpus file")
    p.add_argument("--snt", help="sentence file when sentences are not inline")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--min-count", type=int, default=1, help="minimum token frequency kept in the vocabulary")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("stats", help="corpus diameter and serialization distance reports")
    p.add_argument("--amr", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model and write checkpoint, log, and curves")
    p.add_argument("--amr", required=True)
    p.add_argument("--snt", help="sentence file when sentences are not inline")
    p.add_argument("--dev-amr", help="dev corpus; training corpus doubles as dev when omitted")
    p.add_argument("--dev-snt")
    p.add_argument("--out-dir", required=True)
    _add_model_flags(p)
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--eval-beam", type=int, default=1, help="beam size for per-epoch dev evaluation")
    p.add_argument("--stop-accuracy", type=float, default=0.0, help="stop once train token accuracy reaches this")
    p.add_argument("--embeddings", help="pretrained word vectors; loaded rows are frozen")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="decode an AMR file with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--amr", required=True)
    p.add_argument("--out", help="write sentences here instead of stdout")
    p.add_argument("--beam", type=int, default=5, help="beam size")
    p.add_argument("--greedy", action="store_true", help="shorthand for --beam 1")
    p.add_argument("--max-len", type=int, help="decoding length limit (default from checkpoint)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for node-state updates")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="corpus BLEU between hypothesis and reference files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of every parameter group")
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def cmd_preprocess(args) -> int:
    pairs = read_corpus(args.amr, args.snt)
    vocab, labels, charset = build_vocabularies(pairs, min_count=args.min_count)
    os.makedirs(args.out_dir, exist_ok=True)
    vocab.save(os.path.join(args.out_dir, "vocab.txt"))
    with open(os.path.join(args.out_dir, "labels.txt"), "w", encoding="utf-8") as f:
        for label in labels.labels:
            f.write(label + "\n")
    with open(os.path.join(args.out_dir, "charset.txt"), "w", encoding="utf-8") as f:
        f.write(charset + "\n")
    with open(os.path.join(args.out_dir, "linearized.txt"), "w", encoding="utf-8") as f:
        for graph, _ in pairs:
            f.write(" ".join(linearize(graph)) + "\n")
    with open(os.path.join(args.out_dir, "sentences.txt"), "w", encoding="utf-8") as f:
        for _, sentence in pairs:
            f.write((" ".join(sentence) if sentence else "") + "\n")
    with open(os.path.join(args.out_dir, "edges.tsv"), "w", encoding="utf-8") as f:
        f.write("graph\tsrc\ttgt\tlabel\n")
        for idx, (graph, _) in enumerate(pairs):
            for i, j, label in graph.edge_triples():
                f.write(f"{idx}\t{i}\t{j}\t{label}\n")
    print(f"{len(pairs)} pairs, vocabulary {len(vocab)}, edge labels {len(labels)}, charset {len(charset)}")
    return 0


def _format_cumulative(hist) -> str:
    return "{" + ", ".join(f"{d}: {hist[d]:.3f}" for d in sorted(hist)) + "}"


def cmd_stats(args) -> int:
    pairs = read_corpus(args.amr)
    graphs = [g for g, _ in pairs]
    hist = diameter_histogram(graphs)
    os.makedirs(args.out_dir, exist_ok=True)
    write_diameter_report(
        hist, os.path.join(args.out_dir, "diameters.tsv"), os.path.join(args.out_dir, "diameters.png")
    )
    distances = adjacency_token_distances(graphs)
    write_distance_report(
        distances,
        os.path.join(args.out_dir, "token_distances.tsv"),
        os.path.join(args.out_dir, "token_distances.png"),
    )
    print(f"graphs {len(graphs)}")
    print(f"cumulative {_format_cumulative(hist)}")
    if distances:
        print(f"adjacent-concept token distance: mean {sum(distances) / len(distances):.2f}, max {max(distances)}")
    return 0


def cmd_train(args) -> int:
    pairs = read_corpus(args.amr, args.snt)
    dev_pairs = read_corpus(args.dev_amr, args.dev_snt) if args.dev_amr else pairs
    missing = sum(1 for _, s in pairs if not s)
    if missing:
        raise ValueError(f"{missing} training graphs have no sentence")
    vocab, labels, charset = build_vocabularies(pairs, min_count=args.min_count)
    config = ModelConfig(
        encoder=args.encoder,
        hidden=args.hidden,
        steps=args.steps,
        use_copy=args.copy,
        use_char=args.char,
        dropout=args.dropout,
        seed=args.seed,
    )
    word_emb = None
    if args.embeddings:
        word_emb = load_pretrained(args.embeddings, vocab, dim=config.emb_dim, seed=config.seed)
    model = Model(config, vocab, labels, charset, word_emb=word_emb)
    tconf = TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        eval_beam=args.eval_beam,
        seed=args.seed,
        stop_accuracy=args.stop_accuracy,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    log_path = os.path.join(args.out_dir, "train_log.tsv")
    checkpoint_path = os.path.join(args.out_dir, "model.bin")
    history = train(model, pairs, dev_pairs, tconf, log_path=log_path, checkpoint_path=checkpoint_path)
    write_training_report(history, os.path.join(args.out_dir, "training.png"))
    epoch, loss, bleu = history[-1]
    print(f"trained {epoch} epochs: loss/token {loss:.4f}, dev BLEU {bleu:.2f}")
    print(f"checkpoint {checkpoint_path}")
    return 0


def cmd_generate(args) -> int:
    model = checkpoint_load(args.checkpoint)
    pairs = read_corpus(args.amr)
    beam = 1 if args.greedy else args.beam
    lines = [
        " ".join(model.generate(graph, beam=beam, max_len=args.max_len, threads=args.threads))
        for graph, _ in pairs
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for line in lines:
                f.write(line + "\n")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_eval(args) -> int:
    score = corpus_bleu(read_sentences(args.hyp), read_sentences(args.ref))
    print(f"BLEU = {score:.4f}")
    return 0


def gradcheck_model(hidden: int, steps: int, seed: int) -> tuple:
    """Complete graph encoder + char LSTM + copy network at check-friendly size."""
    graph = parse_penman(GRADCHECK_PENMAN)
    target = GRADCHECK_TARGET.split()
    vocab = Vocab(sorted(set(target)) + GRADCHECK_FILLER)
    labels = LabelVocab([l for _, _, l in graph.edges])
    charset = "".join(sorted(set("".join(vocab.tokens[4:]) + "".join(c for _, c in graph.nodes))))
    config = ModelConfig(
        encoder="graph", hidden=hidden, char_dim=hidden, steps=steps, seed=seed,
        dropout=0.0, use_copy=True, use_char=True,
    )
    return Model(config, vocab, labels, charset), graph, target


def cmd_gradcheck(args) -> int:
    model, graph, target = gradcheck_model(args.hidden, args.steps, args.seed)

    def loss():
        # taped encoder path; dropout is configured to zero so runs are repeatable
        return model.example_loss(graph, target, train=True).loss

    report = ad.finite_diff_report(loss, model.parameters(), eps=args.eps)
    width = max(len(name) for name in report)
    for name in sorted(report):
        print(f"{name:<{width}}  {report[name]:.3e}")
    worst = max(report.values())
    ok = worst < args.tolerance
    print(f"max relative error {worst:.3e} ({'OK' if ok else 'FAIL'} at tolerance {args.tolerance:g})")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, AmrParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
