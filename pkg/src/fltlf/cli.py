"""Command-line front end.

Subcommands: parse, eval, refine, gen-data, train, test, bench.

Fuzzy traces travel as CSV with a header row of atom names and one row
per instant.  A flat KEY=VALUE configuration file (``--config``) supplies
defaults which individual flags override.

Exit codes: 0 success; 2 usage error (argparse); 3 formula/parse error;
4 data or I/O error; 5 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .datasets import (
    DatasetFormatError,
    SamplingPlan,
    attach_images,
    read_dataset,
    sample_symbolic_dataset,
    split_image_pools,
    write_dataset,
)
from .formulas import Alphabet, FormulaError, format_formula, parse_formula
from .fuzzy import evaluate, validate_fuzzy_trace
from .graph import compile_cached
from .mnist import IdxError, load_mnist_dir, synthetic_digit_store
from .patterns import PatternInstance, declare_pattern, template_arity
from .perception import load_checkpoint, save_checkpoint
from .refine import RefinementConfig, ilr_refine
from .training import (
    TrainConfig,
    evaluate_grounding,
    evaluate_sequence,
    run_benchmark,
    train,
)

EXIT_FORMULA = 3
EXIT_DATA = 4
EXIT_RUNTIME = 5


def _read_config_file(path) -> dict:
    """Flat KEY=VALUE lines; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetFormatError(f"{path}:{lineno}: expected KEY=VALUE")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config_defaults(args: argparse.Namespace, argv) -> None:
    """Precedence: explicit flag > config file entry > built-in default."""
    if not getattr(args, "config", None):
        return
    cfg = _read_config_file(args.config)
    tokens = list(argv if argv is not None else sys.argv[1:])
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        given = any(t == flag or t.startswith(flag + "=") for t in tokens)
        if hasattr(args, key) and not given:
            setattr(args, key, value)


def _alphabet(args) -> Alphabet:
    if not args.atoms:
        raise FormulaError("--atoms is required (comma-separated names)")
    return Alphabet([a.strip() for a in str(args.atoms).split(",")])


def _formula(args, alphabet: Alphabet):
    if getattr(args, "pattern", None):
        name = args.pattern
        atoms = alphabet.atoms[: template_arity(name)]
        return declare_pattern(PatternInstance(name, atoms))
    if not args.formula:
        raise FormulaError("a formula (or --pattern) is required")
    return parse_formula(args.formula, alphabet)


def _read_trace_csv(path, alphabet: Alphabet) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DatasetFormatError(f"{path}: empty trace file")
    header = [h.strip() for h in rows[0]]
    if header != list(alphabet.atoms):
        raise DatasetFormatError(
            f"{path}: header {header} does not match atoms {list(alphabet.atoms)}")
    try:
        values = np.array([[float(x) for x in row] for row in rows[1:]])
    except ValueError as e:
        raise DatasetFormatError(f"{path}: non-numeric trace entry ({e})") from e
    return validate_fuzzy_trace(values, alphabet)


def _write_trace_csv(values: np.ndarray, alphabet: Alphabet, out=None):
    writer = csv.writer(out or sys.stdout, lineterminator="\n")
    writer.writerow(alphabet.atoms)
    for row in values:
        writer.writerow([f"{x:.6f}" for x in row])


def _store(args, split: str):
    if getattr(args, "mnist_dir", None):
        return load_mnist_dir(args.mnist_dir, split)
    return synthetic_digit_store(60, split=split,
                                 seed=int(getattr(args, "seed", 0) or 0))


# -- subcommands -------------------------------------------------------------

def cmd_parse(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    print(format_formula(phi))
    return 0


def cmd_eval(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    trace = _read_trace_csv(args.trace, alphabet)
    print(f"{evaluate(trace, phi, alphabet):.6f}")
    return 0


def cmd_refine(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    trace = _read_trace_csv(args.trace, alphabet)
    cfg = RefinementConfig(target=float(args.target),
                           max_iterations=int(args.max_iters),
                           tolerance=float(args.eps))
    graph = compile_cached(phi, trace.shape[0], alphabet)
    result = ilr_refine(graph, trace, cfg=cfg)
    _write_trace_csv(result.trace, alphabet)
    print(f"value={float(result.value):.6f}")
    print(f"iterations={result.iterations}")
    print(f"converged={result.converged}")
    return 0


def cmd_gen_data(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    plan = SamplingPlan(alphabet=alphabet, mode=args.mode,
                        protocol=args.protocol,
                        min_len=int(args.min_len), max_len=int(args.max_len),
                        seed=int(args.seed))
    split = sample_symbolic_dataset(phi, plan)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split_name, labelled in (("train", split.train), ("test", split.test)):
        store = _store(args, split_name)
        pool = split_image_pools(store, seed=int(args.seed))[split_name]
        records = attach_images(labelled, phi, alphabet, args.mode, pool,
                                int(args.copies), int(args.seed))
        path = out / f"{split_name}.jsonl"
        write_dataset(records, path)
        print(f"{split_name}: {len(labelled)} symbolic traces, "
              f"{len(records)} image sequences -> {path}")
    return 0


def cmd_train(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    store = _store(args, "train")
    records = list(read_dataset(args.data, n_images=len(store)))
    cfg = TrainConfig(formula=format_formula(phi), alphabet=alphabet,
                      mode=args.mode, epochs=int(args.epochs),
                      batch_size=int(args.batch_size), lr=float(args.lr),
                      seed=int(args.seed),
                      timeout_minutes=float(args.timeout))
    model, metrics = train(cfg, records, store)
    if args.out:
        save_checkpoint(model, args.out)
        print(f"checkpoint -> {args.out}")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["epoch", "loss"])
    for i, loss in enumerate(metrics.epoch_losses, 1):
        writer.writerow([i, f"{loss:.6f}"])
    print(f"wall_minutes={metrics.wall_minutes:.3f} "
          f"timed_out={metrics.timed_out}")
    return 0


def cmd_test(args) -> int:
    alphabet = _alphabet(args)
    phi = _formula(args, alphabet)
    store = _store(args, "test")
    records = list(read_dataset(args.data, n_images=len(store)))
    model = load_checkpoint(args.checkpoint)
    cfg = TrainConfig(formula=format_formula(phi), alphabet=alphabet,
                      mode=args.mode, seed=int(args.seed))
    grounding, exact = evaluate_grounding(model, records, store, args.mode)
    seq = evaluate_sequence(model, records, store, cfg)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["metric", "value"])
    writer.writerow(["grounding_accuracy", f"{grounding:.2f}"])
    writer.writerow(["grounding_exact_match", f"{exact:.2f}"])
    writer.writerow(["sequence_accuracy", f"{seq:.2f}"])
    return 0


def cmd_bench(args) -> int:
    subset = None
    if args.subset:
        lo, _, hi = args.subset.partition(":")
        subset = slice(int(lo) if lo else None, int(hi) if hi else None)
    modes = tuple(m.strip() for m in args.modes.split(","))
    rows = run_benchmark(args.suite, args.out, modes=modes, subset=subset,
                         epochs=int(args.epochs), seed=int(args.seed),
                         timeout_minutes=float(args.timeout))
    print(f"{len(rows)} rows -> {args.out}")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fltlf",
        description="Fuzzy LTLf evaluation, refinement, and training")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formula=True):
        p.add_argument("--config", help="flat KEY=VALUE defaults file")
        p.add_argument("--atoms", help="comma-separated atom names")
        if formula:
            p.add_argument("formula", nargs="?", help="formula string")
            p.add_argument("--pattern", help="DECLARE template name")

    p = sub.add_parser("parse", help="parse and reprint a formula")
    common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="fuzzy value of a formula on a CSV trace")
    common(p)
    p.add_argument("--trace", required=True, help="CSV fuzzy trace file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("refine", help="ILR-refine a CSV trace toward a target")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--target", default="1.0")
    p.add_argument("--max-iters", default="10")
    p.add_argument("--eps", default="1e-6")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("gen-data", help="generate a labelled image-sequence dataset")
    common(p)
    p.add_argument("--mode", choices=("me", "nme"), default="me")
    p.add_argument("--protocol", choices=("exhaustive", "rq2"),
                   default="exhaustive")
    p.add_argument("--min-len", default="1")
    p.add_argument("--max-len", default="4")
    p.add_argument("--copies", default="5")
    p.add_argument("--seed", default="0")
    p.add_argument("--mnist-dir", help="directory with IDX files "
                                       "(omit for synthetic digits)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the perception model")
    common(p)
    p.add_argument("--data", required=True, help="JSONL dataset")
    p.add_argument("--mode", choices=("me", "nme"), default="me")
    p.add_argument("--epochs", default="20")
    p.add_argument("--batch-size", default="64")
    p.add_argument("--lr", default="0.001")
    p.add_argument("--seed", default="0")
    p.add_argument("--timeout", default="60", help="minutes")
    p.add_argument("--mnist-dir")
    p.add_argument("--out", help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("test", help="evaluate a checkpoint on a dataset")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("me", "nme"), default="me")
    p.add_argument("--seed", default="0")
    p.add_argument("--mnist-dir")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bench", help="run a benchmark suite to CSV")
    p.add_argument("suite", choices=("rq1", "rq2"))
    p.add_argument("--config", help="flat KEY=VALUE defaults file")
    p.add_argument("--out", required=True)
    p.add_argument("--modes", default="me,nme")
    p.add_argument("--subset", help="row slice LO:HI")
    p.add_argument("--epochs", default="20")
    p.add_argument("--seed", default="0")
    p.add_argument("--timeout", default="60", help="minutes per cell")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_defaults(args, argv)
        return args.func(args)
    except FormulaError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMULA
    except (DatasetFormatError, IdxError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
