"""Command-line surface: training, batch recognition, evaluation, corpus
generation, and the local recognition service.

Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


class DataError(Exception):
    pass


def _load_corpus(path: str):
    from .corpus import corpus_from_dict

    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return corpus_from_dict(doc)
    except FileNotFoundError:
        raise DataError(f"corpus file not found: {path}")
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"bad corpus file {path}: {exc}")


def _stroke_samples(expressions, model):
    from .features import extract_features

    index = {label: i for i, label in enumerate(model.class_labels)}
    X, y = [], []
    for expr in expressions:
        for stroke in expr.session.strokes:
            label = expr.stroke_labels[stroke.id]
            if label not in index:
                raise DataError(f"corpus label {label!r} is not a model class")
            X.append(extract_features(stroke, model.feature_params))
            y.append(index[label])
    return np.asarray(X), np.asarray(y)


def _corpus_labels(expressions) -> list[str]:
    return sorted({label for e in expressions for label in e.stroke_labels.values()})


def _model_path(raw: str) -> Path:
    path = Path(raw)
    if path.is_dir():
        return path / "model.json"
    return path


def _load_model(raw: str):
    from .store import model_from_dict, read_json

    return model_from_dict(read_json(_model_path(raw), "model"))


def _load_knowledge(raw: str | None):
    from .store import default_knowledge, knowledge_from_dict, read_json

    if raw is None:
        return default_knowledge()
    return knowledge_from_dict(read_json(Path(raw), "knowledge"))


def cmd_train(args) -> int:
    from .features import SimplifyParams
    from .fuzzy import FuzzyModel, ModelConfig
    from .store import Store, atomic_write_json, model_to_dict
    from .train_cg import CGConfig, run_cg
    from .train_ga import GAConfig, run_ga

    if args.init == args.finetune:
        raise _UsageError("pass exactly one of --init / --finetune")

    if args.init:
        if not args.corpus or not args.model:
            raise _UsageError("--init needs --corpus and --model")
        expressions = _load_corpus(args.corpus)
        labels = _corpus_labels(expressions)
        model = FuzzyModel.initial(labels, SimplifyParams(),
                                   ModelConfig())
        X, y = _stroke_samples(expressions, model)
        config = GAConfig(
            population_size=args.population,
            generations=args.generations,
            rng_seed=args.seed,
        )
        result = run_ga(config, X, y, model)
        digest = hashlib.sha256(
            json.dumps({
                "corpus": args.corpus, "seed": args.seed,
                "population": args.population, "generations": args.generations,
            }, sort_keys=True).encode()
        ).hexdigest()[:16]
        provenance = {"trainer": "ga", "seed": args.seed, "config_digest": digest}
        atomic_write_json(_model_path(args.model), model_to_dict(result.model, provenance))
        print(f"trained {len(labels)} classes on {X.shape[0]} strokes; "
              f"final fitness {result.best_fitness:.17g}")
        print(f"model written to {_model_path(args.model)}")
        return EXIT_OK

    # --finetune: conjugate-gradient pass over the correction reservoir
    if not args.store:
        raise _UsageError("--finetune needs --store")
    store = Store(args.store)
    model = store.load_model()
    samples = store.load_corrections()
    index = {label: i for i, label in enumerate(model.class_labels)}
    pairs = [(f, index[label]) for f, label in samples
             if label in index and len(f) == model.feature_count]
    if not pairs:
        print("fine-tune skipped: correction reservoir is empty")
        return EXIT_OK
    pairs = pairs[-32:]
    X = np.asarray([p[0] for p in pairs])
    y = np.asarray([p[1] for p in pairs])
    result = run_cg(CGConfig(rng_seed=args.seed), model, X, y)
    store.save_model(result.model, provenance={"trainer": "cg", "seed": args.seed})
    print(f"fine-tuned on {X.shape[0]} samples: loss "
          f"{result.initial_loss:.6f} -> {result.final_loss:.6f} "
          f"({result.iterations} iterations, converged={result.converged})")
    return EXIT_OK


def cmd_recognize(args) -> int:
    from .engine import classify_stroke
    from .expr import node_to_dict
    from .ink import parse_ink
    from .render import RenderOptions, render, render_latex
    from .structure import RecognizedStroke, analyze
    from .ink import bbox_of

    model = _load_model(args.model)
    knowledge = _load_knowledge(args.knowledge)
    try:
        session = parse_ink(Path(args.ink).read_bytes())
    except FileNotFoundError:
        raise DataError(f"ink file not found: {args.ink}")

    recognized = []
    for stroke in session.strokes:
        label, confidence = classify_stroke(model, stroke)
        recognized.append(RecognizedStroke(stroke.id, label, bbox_of(stroke), confidence))
    result = analyze(recognized, knowledge.effective_table(), knowledge.effective_rules())
    rendered = render(result.tree, RenderOptions(target=args.format))
    out = {
        "symbols": [
            {"id": s.id, "label": s.label, "confidence": s.confidence,
             "strokes": list(s.stroke_ids)}
            for s in result.symbols
        ],
        "tree": node_to_dict(result.tree),
        args.format: rendered,
        "diagnostics": result.diagnostics,
    }
    if args.format != "latex":
        out["latex"] = render_latex(result.tree)
    text = json.dumps(out, ensure_ascii=False, indent=1)
    if args.out and args.out != "-":
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import evaluate

    model = _load_model(args.model)
    knowledge = _load_knowledge(args.knowledge)
    expressions = _load_corpus(args.corpus)
    report = evaluate(model, knowledge, expressions, oracle_labels=args.oracle_labels)
    print(f"stroke recognition:      {report.stroke_accuracy:8.4f}%  "
          f"({report.n_strokes} strokes)")
    print(f"symbol reconstruction:   {report.reconstruction_accuracy:8.4f}%  "
          f"({report.n_reconstructable} symbols with correct strokes)")
    print(f"structural analysis:     {report.structural_accuracy:8.4f}%  "
          f"({report.n_expressions} expressions)")
    print(f"latency per stroke:      mean {report.mean_latency_ms:.3f} ms, "
          f"p95 {report.p95_latency_ms:.3f} ms")
    if args.out and args.out != "-":
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    from .corpus import JitterParams, corpus_to_dict, generate_corpus
    from .store import atomic_write_json

    jitter = JitterParams(
        rotation_deg=args.rotation,
        scale_low=args.scale_low,
        scale_high=args.scale_high,
        point_noise=args.noise,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train = generate_corpus(args.seed, args.train_count, jitter, id_prefix="t")
    test = generate_corpus(args.seed + 1, args.test_count, jitter, id_prefix="v")
    atomic_write_json(out_dir / "train.json", corpus_to_dict(train, args.seed, jitter))
    atomic_write_json(out_dir / "test.json", corpus_to_dict(test, args.seed + 1, jitter))
    n_train = sum(len(e.session.strokes) for e in train)
    n_test = sum(len(e.session.strokes) for e in test)
    print(f"wrote {out_dir / 'train.json'} ({args.train_count} expressions, "
          f"{n_train} strokes)")
    print(f"wrote {out_dir / 'test.json'} ({args.test_count} expressions, "
          f"{n_test} strokes)")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .engine import Engine
    from .server import ServiceRunner
    from .store import Store

    store = Store(args.store) if args.store else None
    if store is not None and store.model_path.exists():
        model = store.load_model()
        knowledge = store.load_knowledge()
    elif args.model:
        model = _load_model(args.model)
        knowledge = _load_knowledge(args.knowledge)
    else:
        raise _UsageError("serve needs --store with a model.json, or --model")

    engine = Engine(model, knowledge, store=store)
    ui_dir = Path(args.ui) if args.ui else None
    runner = ServiceRunner(engine, host=args.host, port=args.port,
                           http_port=args.http_port, ui_dir=ui_dir)
    runner.start()
    host, port = runner.tcp_address
    print(f"ndjson protocol on {host}:{port}", flush=True)
    if runner.http_address:
        hhost, hport = runner.http_address
        print(f"http mapping on http://{hhost}:{hport}/rpc", flush=True)
    try:
        runner.serve_forever()
    except KeyboardInterrupt:
        runner.stop()
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="mathink",
                     description="handwritten math recognition engine")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="GA initial training / CG fine-tuning")
    train.add_argument("--init", action="store_true")
    train.add_argument("--finetune", action="store_true")
    train.add_argument("--corpus")
    train.add_argument("--model")
    train.add_argument("--store")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--population", type=int, default=40)
    train.add_argument("--generations", type=int, default=60)
    train.set_defaults(func=cmd_train)

    recognize = sub.add_parser("recognize", help="ink file in, tree and LaTeX out")
    recognize.add_argument("ink")
    recognize.add_argument("--model", required=True)
    recognize.add_argument("--knowledge")
    recognize.add_argument("--format", choices=["latex", "mathml"], default="latex")
    recognize.add_argument("--out")
    recognize.set_defaults(func=cmd_recognize)

    evaluate = sub.add_parser("eval", help="batch evaluation over a labeled corpus")
    evaluate.add_argument("--corpus", required=True)
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--knowledge")
    evaluate.add_argument("--oracle-labels", action="store_true",
                          help="bypass the classifier, use corpus labels")
    evaluate.add_argument("--out")
    evaluate.set_defaults(func=cmd_eval)

    gen = sub.add_parser("gen-corpus", help="synthetic labeled corpus")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--train-count", type=int, default=300)
    gen.add_argument("--test-count", type=int, default=150)
    gen.add_argument("--rotation", type=float, default=5.0)
    gen.add_argument("--scale-low", type=float, default=0.8)
    gen.add_argument("--scale-high", type=float, default=1.2)
    gen.add_argument("--noise", type=float, default=0.011)
    gen.set_defaults(func=cmd_gen_corpus)

    serve = sub.add_parser("serve", help="run the local recognition service")
    serve.add_argument("--store")
    serve.add_argument("--model")
    serve.add_argument("--knowledge")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8940)
    serve.add_argument("--http-port", type=int, default=8941)
    serve.add_argument("--ui", help="directory of workbench static files")
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    from .ink import InkError
    from .store import StoreError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, StoreError, InkError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 (CLI boundary)
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
