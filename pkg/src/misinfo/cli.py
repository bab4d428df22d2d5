"""Command-line interface: train, eval, predict, gen-synth, entropy-report, ablate.

Every run writes a ``manifest.json`` (command, resolved flags, seed,
versions) beside its outputs so it can be reproduced from the manifest
alone.  Exit codes: 0 success, 1 runtime failure, 2 bad flags, 3 corpus
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __about__
from .data import load_corpus, write_corpus
from .diagnostics import entropy_report, plot_ablation_f1, run_ablations, write_ablation_csv
from .errors import CorpusError, MisinfoError
from .estimator import MisinformationDetector
from .synthetic import generate_synthetic
from .trainer import ABLATIONS, TrainConfig, config_to_dict

DESK_SCALE = {"embedding_dim": 32, "num_kernels": 10, "max_epochs": 200}


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="source of all randomness")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")


def _add_train_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--lambda", dest="trade_off", type=float, default=None,
                        help="weight of the consistency term (default 0.5)")
    parser.add_argument("--lr", type=float, default=None, help="learning rate (default 0.001)")
    parser.add_argument("--epochs", type=int, default=None, help="maximum epochs (default 100)")
    parser.add_argument("--dim", type=int, default=None,
                        help="embedding dimension for corpora without embeddings (default 512)")
    parser.add_argument("--kernels", type=int, default=None, help="kernel bank size (default 10)")
    parser.add_argument("--batch-size", type=int, default=None, help="minibatch size (default full batch)")
    parser.add_argument("--tau-mode", choices=["range-midpoint", "median", "off"], default=None)
    parser.add_argument("--link-mode", choices=["threshold", "full"], default=None)
    parser.add_argument("--aggregate", choices=["weighted", "threshold-mil"], default=None)
    parser.add_argument("--consistency", choices=["paper", "weighted"], default=None)
    parser.add_argument("--ablate", type=str, default=None,
                        help=f"comma-separated ablation flags from {sorted(ABLATIONS)}")
    parser.add_argument("--desk-scale", action="store_true",
                        help="small-problem preset: dim=32, kernels=10, epochs=200")


def _resolve_config(args) -> TrainConfig:
    values = {"seed": args.seed}
    if getattr(args, "desk_scale", False):
        values.update(DESK_SCALE)
    overrides = {
        "trade_off": args.trade_off,
        "learning_rate": args.lr,
        "max_epochs": args.epochs,
        "embedding_dim": args.dim,
        "num_kernels": args.kernels,
        "batch_size": args.batch_size,
        "tau_mode": args.tau_mode,
        "link_mode": args.link_mode,
        "aggregation": args.aggregate,
        "consistency": args.consistency,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    config = TrainConfig(**values)
    for flag in _ablation_list(args):
        from .trainer import apply_ablation

        config = apply_ablation(config, flag)
    return config


def _ablation_list(args) -> list[str]:
    raw = getattr(args, "ablate", None)
    if not raw:
        return []
    return [item.strip() for item in raw.split(",") if item.strip()]


def _write_manifest(args, out_dir: Path):
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "flags": flags,
        "seed": args.seed,
        "versions": {
            "misinfo": __about__.__version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _load(args):
    return load_corpus(args.corpus, dim=getattr(args, "dim", None))


def _write_loss_trace(trace, path: Path):
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for epoch, value in enumerate(trace):
            fh.write(f"{epoch},{value!r}\n")


def _write_link_dump(details, path: Path):
    with open(path, "w") as fh:
        for pred in details:
            if pred.link_scores is None:
                continue
            for i, linked in enumerate(pred.links):
                for j in linked:
                    fh.write(f"{pred.article_id}\t{i}\t{int(j)}\t{pred.link_scores[i, j]:.6f}\n")


def _metrics_dict(report):
    def as_dict(metrics):
        if metrics is None:
            return None
        return {
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1": metrics.f1,
            "accuracy": metrics.accuracy,
            "zero_division": metrics.zero_division,
        }

    return {"article": as_dict(report.article), "sentence": as_dict(report.sentence)}


# ----------------------------------------------------------------- commands
def _cmd_train(args) -> int:
    corpus = _load(args)
    config = _resolve_config(args)
    est = MisinformationDetector(**config_to_dict(config))
    est.fit(corpus)
    out = args.out
    _write_manifest(args, out)
    est.save(out / "model.npz")
    _write_loss_trace(est.loss_trace_, out / "loss_trace.csv")
    _write_link_dump(est.predict_details(corpus), out / "links.tsv")
    print(f"trained {est.epochs_run_} epochs; final loss {est.loss_trace_[-1]:.6f}; "
          f"checkpoint at {out / 'model.npz'}")
    return 0


def _cmd_eval(args) -> int:
    corpus = _load(args)
    est = MisinformationDetector.load(args.checkpoint)
    report = est.evaluate(corpus)
    _write_manifest(args, args.out)
    (args.out / "metrics.json").write_text(json.dumps(_metrics_dict(report), indent=2, sort_keys=True))
    a = report.article
    print(f"article  precision={a.precision:.3f} recall={a.recall:.3f} f1={a.f1:.3f} accuracy={a.accuracy:.3f}")
    if report.sentence is not None:
        s = report.sentence
        print(f"sentence precision={s.precision:.3f} recall={s.recall:.3f} f1={s.f1:.3f} accuracy={s.accuracy:.3f}")
    return 0


def _cmd_predict(args) -> int:
    corpus = _load(args)
    est = MisinformationDetector.load(args.checkpoint)
    details = est.predict_details(corpus)
    out = args.out
    _write_manifest(args, out)
    with open(out / "sentences.tsv", "w") as fh:
        for pred in details:
            for i, probs in enumerate(pred.sentence_probs):
                order = np.argsort(pred.tree_attention[i])[::-1] if pred.tree_attention[i].size else []
                top = ",".join(
                    f"{int(pred.links[i][k])}:{pred.tree_attention[i][k]:.4f}"
                    for k in order[:3]
                )
                fh.write(f"{pred.article_id}\t{i}\t{probs[0]:.6f}\t{top}\n")
    with open(out / "articles.tsv", "w") as fh:
        for pred in details:
            alpha = ",".join(f"{a:.4f}" for a in pred.alpha) if pred.alpha is not None else ""
            fh.write(f"{pred.article_id}\t{pred.y_hat[0]:.6f}\t{alpha}\n")
    _write_link_dump(details, out / "links.tsv")
    print(f"wrote predictions for {len(details)} articles to {out}")
    return 0


def _cmd_gen_synth(args) -> int:
    corpus = generate_synthetic(
        num_articles=args.articles,
        n_sentences=args.sentences,
        m_trees=args.trees,
        dim=args.dim if args.dim is not None else (32 if args.desk_scale else 512),
        misinform_rate=args.misinform_rate,
        noise=args.noise,
        seed=args.seed,
        fake_fraction=args.fake_fraction,
    )
    out = args.out
    _write_manifest(args, out)
    path = out / args.filename
    write_corpus(corpus, path)
    n_fake = sum(a.label == "fake" for a in corpus.articles)
    print(f"wrote {len(corpus)} articles ({n_fake} fake) to {path}")
    return 0


def _cmd_entropy_report(args) -> int:
    corpus = _load(args)
    config = _resolve_config(args)
    params = None
    if args.checkpoint is not None:
        est = MisinformationDetector.load(args.checkpoint)
        params = est.params_
        config = est._config()
    report = entropy_report(corpus, params=params, config=config)
    _write_manifest(args, args.out)
    with open(args.out / "entropy.csv", "w") as fh:
        fh.write("tree_id,posts,kernel_entropy,dot_product_entropy\n")
        for row in report.per_tree:
            fh.write(f"{row.tree_id},{row.posts},{row.kernel:.6f},{row.dot_product:.6f}\n")
    print(f"kernel attention mean entropy      {report.kernel_mean:.4f}")
    print(f"dot-product attention mean entropy {report.dot_product_mean:.4f}")
    return 0


def _cmd_ablate(args) -> int:
    corpus = _load(args)
    eval_corpus = load_corpus(args.eval_corpus) if args.eval_corpus else None
    config = _resolve_config(args)
    flags = _ablation_list(args) or sorted(ABLATIONS)
    rows = run_ablations(corpus, config, flags, eval_corpus=eval_corpus)
    _write_manifest(args, args.out)
    write_ablation_csv(rows, args.out / "ablations.csv")
    if args.plot:
        plot_ablation_f1(rows, args.out / "ablations.svg")
    for row in rows:
        a = row.report.article
        print(f"{row.name:<18} article_f1={a.f1:.3f} accuracy={a.accuracy:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="misinfo",
        description="Weakly supervised misinforming-sentence and fake-article detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model on a labeled corpus")
    p_train.add_argument("--corpus", type=Path, required=True)
    _add_common(p_train)
    _add_train_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p_eval.add_argument("--corpus", type=Path, required=True)
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--dim", type=int, default=None)
    _add_common(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_pred = sub.add_parser("predict", help="write sentence/article prediction dumps")
    p_pred.add_argument("--corpus", type=Path, required=True)
    p_pred.add_argument("--checkpoint", type=Path, required=True)
    p_pred.add_argument("--dim", type=int, default=None)
    _add_common(p_pred)
    p_pred.set_defaults(func=_cmd_predict)

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic labeled corpus")
    p_gen.add_argument("--articles", type=int, required=True)
    p_gen.add_argument("--sentences", type=int, default=5)
    p_gen.add_argument("--trees", type=int, default=6)
    p_gen.add_argument("--dim", type=int, default=None)
    p_gen.add_argument("--misinform-rate", type=float, default=0.35)
    p_gen.add_argument("--noise", type=float, default=0.1)
    p_gen.add_argument("--fake-fraction", type=float, default=0.5)
    p_gen.add_argument("--filename", type=str, default="corpus.jsonl")
    p_gen.add_argument("--desk-scale", action="store_true")
    _add_common(p_gen)
    p_gen.set_defaults(func=_cmd_gen_synth)

    p_ent = sub.add_parser("entropy-report", help="kernel vs dot-product attention entropy")
    p_ent.add_argument("--corpus", type=Path, required=True)
    p_ent.add_argument("--checkpoint", type=Path, default=None)
    _add_common(p_ent)
    _add_train_flags(p_ent)
    p_ent.set_defaults(func=_cmd_entropy_report)

    p_abl = sub.add_parser("ablate", help="train base + ablated variants and compare")
    p_abl.add_argument("--corpus", type=Path, required=True)
    p_abl.add_argument("--eval-corpus", type=Path, default=None)
    p_abl.add_argument("--plot", action="store_true", help="also write an SVG bar chart")
    _add_common(p_abl)
    _add_train_flags(p_abl)
    p_abl.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CorpusError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return 3
    except MisinfoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
