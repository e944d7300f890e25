#!/usr/bin/env python3
"""End-to-end synthetic experiment: train, attack, defend, report.

Prints a table of accuracy without and with each defense for every attack
style.  Everything is seeded; wall-clock columns are the only part that
changes between runs.
"""
import argparse
import json
import time

from perturbshield.analysis import evaluate
from perturbshield.attacksim import AttackSpec, attack_corpus
from perturbshield.classify import NaiveBayesBackend, train_nb
from perturbshield.defense import IrdConfig, RpdConfig
from perturbshield.perturb import Lexicons
from perturbshield.rng import Rng
from perturbshield.synth import NB_ALPHA, make_world


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train", type=int, default=2000)
    p.add_argument("--test", type=int, default=500)
    p.add_argument("--styles", default="greedyflip,synswap,charbug")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--l", type=int, default=7)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ird-k", type=int, default=41)
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--json", help="also write the full report here")
    args = p.parse_args()

    t0 = time.perf_counter()
    world = make_world()
    rng = Rng(args.seed)
    train = world.corpus(args.train, rng.fork("train"), "train")
    test = world.corpus(args.test, rng.fork("test"), "test")
    lexicons = Lexicons(world.spell_lexicon(rng.fork("spell")), world.synonyms)
    backend = NaiveBayesBackend(train_nb([(r.text, r.gold_label) for r in train], alpha=NB_ALPHA))

    rows = []
    for style in args.styles.split(","):
        spec = AttackSpec(style.strip(), fraction=args.fraction, seed=args.seed)
        rows += [a.to_row() for a in attack_corpus(test, spec, backend, world.synonyms, jobs=args.jobs)]

    configs = [RpdConfig(l=args.l, k=args.k), IrdConfig(k=args.ird_k)]
    report = evaluate(test, rows, configs, backend, lexicons, runs=args.runs, seed=args.seed, jobs=args.jobs)
    print(report.to_table(timing=True), end="")
    print(f"Total time: {time.perf_counter() - t0:.1f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report.to_json(timing=True), fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
