"""Command-line front end.

    perturbshield train    --input train.jsonl --output model.json
    perturbshield attack   --input test.jsonl --style greedyflip --fraction 0.1 \\
                           --backend builtin:model.json --synonyms syn.txt --output attacked.jsonl
    perturbshield defend   --input attacked.jsonl --method rpd --l 7 --k 5 ...
    perturbshield evaluate --input test.jsonl --attacked attacked.jsonl --method rpd,ird ...
    perturbshield prob     --N 10 --m 20 --a 5 --k 41

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
Set PERTURBSHIELD_LOG=DEBUG|INFO|WARNING for log verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import analysis
from .attacksim import AttackSpec, AttackStyle, attack_corpus
from .classify import (
    BackendError,
    CountingStub,
    NaiveBayesBackend,
    NaiveBayesModel,
    RemoteBackend,
    TrainingError,
    train_nb,
)
from .defense import IrdConfig, RpdConfig, defend
from .lexicon import LexiconError, load_spell_lexicon, load_synonym_lexicon
from .perturb import ALL_KINDS, CorrectionKind, Lexicons, parse_kinds
from .rng import MAX_SEED, Rng
from .textcore import EmptyInput, Review, iter_jsonl, load_corpus, write_jsonl

log = logging.getLogger("perturbshield")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return n


def _alpha(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("alpha must be > 0")
    return x


def _kinds(value: str) -> tuple[CorrectionKind, ...]:
    try:
        return parse_kinds(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def read_config(path: "str | Path") -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; optional quotes around values."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file mirroring the flags; flags win")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--jobs", type=_positive, default=1, help="parallelism cap")
    common.add_argument("--input", help="input path")
    common.add_argument("--output", help="output path")

    lexicons = argparse.ArgumentParser(add_help=False)
    lexicons.add_argument("--spell-lexicon", help="word<space>count file")
    lexicons.add_argument("--synonyms", help="TAB-separated synonym groups")

    backend = argparse.ArgumentParser(add_help=False)
    backend.add_argument("--backend", help="builtin:<model>, remote:<url> or stub:<label>")
    backend.add_argument("--batch-size", type=_positive, default=32, help="remote batch size")
    backend.add_argument("--timeout", type=float, default=10.0, help="remote request timeout (s)")
    backend.add_argument("--retries", type=int, default=3, help="remote retries per request")

    defense = argparse.ArgumentParser(add_help=False)
    defense.add_argument("--l", type=_positive, default=7, help="RPD replicates per sentence")
    defense.add_argument("--k", type=_positive, help="RPD corrections per replicate (default 5) "
                                                      "or IRD replicates (default 41)")
    defense.add_argument("--ird-k", type=_positive, help="IRD replicates when both methods run")
    defense.add_argument("--kinds", type=_kinds, default=ALL_KINDS, help="e.g. spell,synonym,drop")

    p = _Parser(prog="perturbshield", description="Random-perturbation defenses for sentiment classifiers")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", parents=[common], help="train the naive Bayes backend")
    t.add_argument("--alpha", type=_alpha, default=1.0)

    a = sub.add_parser("attack", parents=[common, lexicons, backend], help="write an attacked corpus")
    a.add_argument("--style", choices=[s.value for s in AttackStyle], required=True)
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--budget", type=_positive, help="tokens perturbed per review")
    g.add_argument("--fraction", type=float, help="fraction of each review's tokens")
    a.add_argument("--keep-misclassified", action="store_true",
                   help="also attack reviews the target already gets wrong")

    d = sub.add_parser("defend", parents=[common, lexicons, backend, defense], help="run a defense")
    d.add_argument("--method", choices=["rpd", "ird"], default="rpd")
    d.add_argument("--audit", help="write replicate provenance (JSON Lines) here")

    e = sub.add_parser("evaluate", parents=[common, lexicons, backend, defense], help="accuracy report")
    e.add_argument("--attacked", required=False, help="attacked corpus (JSON Lines)")
    e.add_argument("--method", default="rpd", help="rpd, ird or rpd,ird")
    e.add_argument("--runs", type=_positive, default=5)
    e.add_argument("--table", help="text table path (default: <output>.txt)")
    e.add_argument("--timing", action="store_true", help="include wall-clock seconds (not reproducible)")
    e.add_argument("--outcomes", action="store_true", help="include per-review outcomes in the report")

    pr = sub.add_parser("prob", parents=[common], help="print the attack/defense probability model")
    pr.add_argument("--N", type=_positive, required=True, help="sentences per review")
    pr.add_argument("--m", type=float, required=True, help="average sentence length")
    pr.add_argument("--k", type=int, required=True)
    pr.add_argument("--l", type=_positive, help="RPD replicates; p_rpd is printed only when given")
    pr.add_argument("--a", type=int, default=0, help="attack perturbations")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subparsers), None)
    if early.config and command is not None:
        try:
            values = read_config(early.config)
        except OSError as exc:
            parser.exit(EXIT_USAGE, f"perturbshield: cannot read config: {exc}\n")
        except UsageError as exc:
            parser.exit(EXIT_USAGE, f"perturbshield: {exc}\n")
        sub = subparsers[command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in values.items():
            if key not in known or key in ("config", "help"):
                parser.exit(EXIT_USAGE, f"perturbshield: unknown config key {key!r} for {command}\n")
            action = known[key]
            if action.nargs == 0:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[key] = action.type(value) if action.type else value
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.exit(EXIT_USAGE, f"perturbshield: config key {key!r}: {exc}\n")
                if action.choices is not None and defaults[key] not in action.choices:
                    parser.exit(EXIT_USAGE, f"perturbshield: config key {key!r}: invalid choice {value!r}\n")
            action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------- wiring

def make_backend(args, required: bool = True):
    selector = getattr(args, "backend", None)
    if not selector:
        if required:
            raise UsageError("--backend is required (builtin:<model>, remote:<url> or stub:<label>)")
        return None
    kind, _, value = selector.partition(":")
    if kind == "builtin":
        try:
            return NaiveBayesBackend(NaiveBayesModel.load(value))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot load model {value!r}: {exc}") from exc
    if kind == "remote":
        return RemoteBackend(value, batch_size=args.batch_size, max_in_flight=args.jobs,
                             timeout=args.timeout, retries=args.retries)
    if kind == "stub":
        return CountingStub(value or "positive")
    raise UsageError(f"unknown backend selector {selector!r}")


def make_lexicons(args, kinds=ALL_KINDS) -> Lexicons:
    spell = synonyms = None
    if args.spell_lexicon:
        spell = load_spell_lexicon(args.spell_lexicon)
    elif CorrectionKind.SPELL in kinds:
        raise UsageError("spell correction is enabled; pass --spell-lexicon")
    if args.synonyms:
        synonyms = load_synonym_lexicon(args.synonyms)
    elif CorrectionKind.SYNONYM in kinds:
        raise UsageError("synonym substitution is enabled; pass --synonyms")
    return Lexicons(spell, synonyms)


def defense_configs(args, methods: Sequence[str]):
    out = []
    for method in methods:
        if method == "rpd":
            out.append(RpdConfig(l=args.l, k=args.k or 5, kinds=args.kinds, seed=args.seed))
        elif method == "ird":
            k = args.ird_k or (args.k if len(methods) == 1 and args.k else 41)
            out.append(IrdConfig(k=k, kinds=args.kinds, seed=args.seed))
        else:
            raise UsageError(f"unknown method {method!r}")
    return out


def _require(args, *names):
    for name in names:
        if not getattr(args, name, None):
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _read_rows(path) -> list[dict]:
    rows = list(iter_jsonl(path))
    if not rows:
        raise DataError(f"{path}: no rows")
    return rows


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    _require(args, "input", "output")
    reviews = load_corpus(args.input)
    corpus = [(r.text, r.gold_label) for r in reviews if r.gold_label is not None]
    model = train_nb(corpus, args.alpha)
    model.save(args.output)
    log.info("trained on %d reviews, vocabulary %d", len(corpus), len(model.vocabulary))
    return EXIT_OK


def cmd_attack(args) -> int:
    _require(args, "input", "output")
    reviews = load_corpus(args.input)
    if not reviews:
        raise DataError(f"{args.input}: corpus is empty")
    spec = AttackSpec(args.style, budget=args.budget, fraction=args.fraction, seed=args.seed)
    backend = make_backend(args, required=spec.style is AttackStyle.GREEDYFLIP)
    synonyms = load_synonym_lexicon(args.synonyms) if args.synonyms else None
    if spec.style is AttackStyle.SYNSWAP and synonyms is None:
        raise UsageError("synswap needs --synonyms")
    attacked = attack_corpus(reviews, spec, backend, synonyms,
                             skip_misclassified=not args.keep_misclassified, jobs=args.jobs)
    write_jsonl(args.output, [a.to_row(spec.budget_label) for a in attacked])
    log.info("attacked %d reviews, %d flipped", len(attacked), sum(a.flipped for a in attacked))
    return EXIT_OK


def _review_from_row(row: dict) -> Review:
    text = row.get("attacked_text", row.get("text"))
    if text is None or "id" not in row:
        raise DataError("rows need 'id' and 'attacked_text' or 'text'")
    return Review.from_text(row["id"], text, row.get("label"))


def cmd_defend(args) -> int:
    _require(args, "input", "output")
    reviews = [_review_from_row(r) for r in _read_rows(args.input)]
    backend = make_backend(args)
    cfg = defense_configs(args, [args.method])[0]
    lexicons = make_lexicons(args, cfg.kinds)
    root = Rng(args.seed).fork(cfg.method)
    keep = bool(args.audit)
    outcomes = _map(lambda r: defend(r, cfg, backend, lexicons, root.fork(r.id), keep_replicates=keep),
                    reviews, args.jobs)
    rows = []
    for review, o in zip(reviews, outcomes):
        row = o.to_json()
        if review.gold_label is not None:
            row["gold_label"] = review.gold_label.value
        rows.append(row)
    write_jsonl(args.output, rows)
    if keep:
        write_jsonl(args.audit, [rep.audit_row(o.review_id, i)
                                 for o in outcomes for i, rep in enumerate(o.replicates)])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require(args, "input", "attacked", "output")
    corpus = load_corpus(args.input)
    attacked = _read_rows(args.attacked)
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    configs = defense_configs(args, methods)
    kinds = tuple(sorted({k for c in configs for k in c.kinds}, key=ALL_KINDS.index))
    lexicons = make_lexicons(args, kinds)
    backend = make_backend(args)
    report = analysis.evaluate(corpus, attacked, configs, backend, lexicons,
                               runs=args.runs, seed=args.seed, jobs=args.jobs)
    doc = report.to_json(include_outcomes=args.outcomes, timing=args.timing)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    table = report.to_table(timing=args.timing)
    table_path = args.table or str(Path(args.output).with_suffix(".txt"))
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_prob(args) -> int:
    m = int(args.m) if float(args.m).is_integer() else args.m
    try:
        inp = analysis.ProbInputs(N=args.N, m=m, a=args.a, l=args.l or 1, k=args.k)
        pa = analysis.p_attack(inp)
        lines = [f"W          = {float(inp.W):g}", f"p_attack   = {pa:.6g}"]
        pi = analysis.p_ird(inp)
        lines.append(f"p_ird      = {pi:.6g}")
        holds = analysis.ird_dominates_attack(inp)
        cond = "k > a" if inp.k > inp.a else "k <= a (premise false)"
        lines.append(f"k > a => p_ird > p_attack: {'holds' if holds else 'FAILS'} ({cond})")
    except (analysis.InvalidBudget, analysis.InvalidParams) as exc:
        raise UsageError(str(exc)) from exc
    print("\n".join(lines))
    if args.l is not None:
        try:
            pr = analysis.p_rpd(inp)
            rearranged = analysis.p_rpd_rearranged(inp)
        except analysis.InvalidParams as exc:
            raise UsageError(f"p_rpd: {exc}") from exc
        flag = " (unnormalized, exceeds 1)" if pr > 1 else ""
        print(f"p_rpd      = {pr:.6g}{flag}")
        print(f"p_rpd rearranged = {rearranged:.6g}; > a: {rearranged > inp.a}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "attack": cmd_attack,
    "defend": cmd_defend,
    "evaluate": cmd_evaluate,
    "prob": cmd_prob,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("PERTURBSHIELD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"perturbshield {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"perturbshield {args.command}: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, TrainingError, LexiconError, EmptyInput, analysis.IdMismatch,
            OSError, ValueError, KeyError) as exc:
        print(f"perturbshield {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
