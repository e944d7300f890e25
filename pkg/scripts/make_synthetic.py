#!/usr/bin/env python3
"""Write a synthetic review bundle: train/test corpora plus both lexicons."""
import argparse

from perturbshield.synth import SynthConfig, write_bundle


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train", type=int, default=2000)
    p.add_argument("--test", type=int, default=500)
    p.add_argument("--noise", type=float, default=SynthConfig.noise)
    p.add_argument("--exclusive-rate", type=float, default=SynthConfig.exclusive_rate)
    args = p.parse_args()
    cfg = SynthConfig(noise=args.noise, exclusive_rate=args.exclusive_rate)
    for name, path in write_bundle(args.out_dir, args.seed, args.train, args.test, cfg).items():
        print(f"{name:9s} {path}")


if __name__ == "__main__":
    main()
