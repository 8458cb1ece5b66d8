"""
Command-line interface: ``vmfmix {train,infer,generate,eval}``.

Exit codes: 0 on success, 1 for bad input (unreadable or malformed files,
invalid flags, dimension mismatches), 2 for numerical failure.
The ``VMFMIX_NUM_THREADS`` environment variable sets the E-step thread count
outside ``--deterministic`` mode.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .core import Corpus
from .evaluate import assignment_accuracy, match_components
from .features import MAX_SWEEPS, REL_TOL, combine_and_infer, infer_state
from .generate import GenSpec, sample_corpus
from .inference import INIT_METHODS, FitConfig, NumericalError, elbo, fit

log = logging.getLogger("vmfmix")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fit_meta(config: FitConfig, report) -> dict:
    return {"iterations": report.iterations, "converged": report.converged, "seed": config.seed, "config": config.to_dict()}


def _train_one(corpus: Corpus, config: FitConfig, out_path: Path, label=None):
    params, state, report = fit(corpus, config)
    formats.write_json(out_path, formats.model_document(params, report.elbo_trace[-1], _fit_meta(config, report), label))
    log.info("%s: %d iterations, elbo %.6f, converged=%s", label or "model", report.iterations,
             report.elbo_trace[-1], report.converged)
    return [(it + 1, e, t * 1000.0) for it, (e, t) in enumerate(zip(report.elbo_trace, report.iter_times))]


def cmd_train(args) -> int:
    corpus = formats.read_corpus(args.corpus)
    config = FitConfig(
        K=args.k, alpha=args.alpha, max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed,
        init=args.init, kappa_init=args.kappa_init, deterministic=args.deterministic,
    )
    out = Path(args.out)
    if not args.per_label:
        rows = _train_one(corpus, config, out)
        if args.trace:
            formats.write_trace(args.trace, rows)
        return 0

    labels = corpus.labels
    if any(lab is None for lab in labels):
        raise UsageError("--per-label requires every document to carry a label")
    entries, trace_rows = [], []
    for label in sorted(set(labels)):
        sub = corpus.subset([i for i, lab in enumerate(labels) if lab == label])
        path = out.with_name(f"{out.stem}.{formats.safe_name(label)}.json")
        rows = _train_one(sub, config, path, label)
        entries.append((label, path.name))
        trace_rows += [(label,) + r for r in rows]
    formats.write_manifest(out, entries)
    if args.trace:
        formats.write_trace(args.trace, trace_rows, with_label=True)
    return 0


def cmd_infer(args) -> int:
    models = [params for path in args.models for _, params in formats.read_models(path)]
    corpus = formats.read_corpus(args.corpus)
    for params in models:
        if params.dim != corpus.dim:
            raise UsageError(f"model dimension {params.dim} does not match corpus dimension {corpus.dim}")
    features = combine_and_infer(models, corpus, args.max_sweeps, args.rel_tol)
    formats.write_features(args.out, features)
    return 0


def cmd_generate(args) -> int:
    try:
        spec = GenSpec(
            K=args.k, D=args.d, num_docs=args.docs, tokens_min=args.tokens_min, tokens_max=args.tokens_max,
            alpha=args.alpha, kappa=args.kappa, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    corpus, truth = sample_corpus(spec)
    formats.write_corpus(args.out, corpus)
    if args.truth:
        formats.write_truth(args.truth, corpus, truth)
    return 0


def cmd_eval(args) -> int:
    models = formats.read_models(args.model)
    params = models[0][1] if len(models) == 1 else type(models[0][1]).concatenate([m for _, m in models])
    truth, ids = formats.read_truth(args.truth)
    corpus = formats.read_corpus(args.corpus)
    if [d.id for d in corpus.docs] != ids or [len(z) for z in truth.z] != corpus.doc_lengths.tolist():
        raise UsageError("corpus and truth file describe different documents")
    if params.dim != corpus.dim or truth.params.dim != corpus.dim:
        raise UsageError("model, truth and corpus dimensions differ")
    if params.K != truth.params.K:
        raise UsageError(f"model has K={params.K} but truth has K={truth.params.K}")

    state, _, _ = infer_state(corpus, params)
    matching = match_components(params.mu, truth.params.mu)
    soft, hard = assignment_accuracy(state.pi, np.concatenate(truth.z), matching)
    print("true\tfitted\tcosine\tkappa_true\tkappa_fit")
    for k, (j, c) in enumerate(zip(matching.true_to_fit, matching.cosines)):
        print(f"{k}\t{j}\t{c:.6f}\t{truth.params.kappa[k]:.4f}\t{params.kappa[j]:.4f}")
    print(f"min_cosine\t{matching.cosines.min():.6f}")
    print(f"soft_accuracy\t{soft:.6f}")
    print(f"hard_accuracy\t{hard:.6f}")
    print(f"elbo\t{elbo(corpus, params, state):.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vmfmix", description="Multi-document von Mises-Fisher mixture with a Dirichlet prior.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit topic embeddings to a corpus")
    t.add_argument("corpus")
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--alpha", type=float, default=1.0)
    t.add_argument("--max-iters", type=int, default=100)
    t.add_argument("--rel-tol", type=float, default=1e-5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--init", choices=INIT_METHODS, default="seeded-tokens")
    t.add_argument("--kappa-init", type=float, default=10.0)
    t.add_argument("--per-label", action="store_true", help="fit one model per document label and write a manifest")
    t.add_argument("--deterministic", action="store_true", help="fixed reduction order, single thread")
    t.add_argument("--out", required=True)
    t.add_argument("--trace", help="CSV of the ELBO per iteration")
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("infer", help="topic-proportion features for a corpus")
    i.add_argument("models", nargs="+", help="model files or manifests; their components are concatenated")
    i.add_argument("--corpus", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--max-sweeps", type=int, default=MAX_SWEEPS)
    i.add_argument("--rel-tol", type=float, default=REL_TOL)
    i.set_defaults(func=cmd_infer)

    g = sub.add_parser("generate", help="sample a synthetic corpus")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--docs", type=int, required=True)
    g.add_argument("--tokens-min", type=int, default=10)
    g.add_argument("--tokens-max", type=int, default=50)
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--kappa", type=float, default=50.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("eval", help="compare a model with generator ground truth")
    e.add_argument("model")
    e.add_argument("truth")
    e.add_argument("corpus")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (NumericalError, FloatingPointError) as exc:
        print(f"vmfmix: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"vmfmix: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
