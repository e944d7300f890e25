#!/usr/bin/env python3
"""Flatten WordNet ``data.*`` files into the TAB-separated synonym format.

Each synset becomes one group.  Multi-word lemmas (``ice_cream``) are skipped
since a substitution replaces exactly one token; adjective markers such as
``(a)`` are stripped.  Groups left with fewer than two words are dropped.

    python scripts/wordnet_to_synonyms.py /usr/share/wordnet/dict synonyms.txt
"""
import argparse
import re
from pathlib import Path

POS_FILES = ("data.noun", "data.verb", "data.adj", "data.adv")
MARKER = re.compile(r"\([a-z]+\)$")


def synset_words(line):
    fields = line.split()
    # offset lex_filenum ss_type w_cnt (word lex_id)*
    n = int(fields[3], 16)
    words = []
    for i in range(n):
        w = MARKER.sub("", fields[4 + 2 * i]).lower()
        if "_" in w or not w.replace("-", "").replace("'", "").isalpha():
            continue
        if w not in words:
            words.append(w)
    return words


def convert(wordnet_dir, pos=POS_FILES):
    groups = []
    for name in pos:
        path = Path(wordnet_dir) / name
        with open(path, encoding="utf-8", errors="replace") as fh:
            for line in fh:
                if line.startswith("  "):  # license header
                    continue
                words = synset_words(line)
                if len(words) >= 2:
                    groups.append(words)
    return groups


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("wordnet_dir")
    p.add_argument("output")
    p.add_argument("--pos", default=",".join(POS_FILES), help="comma-separated data files to read")
    args = p.parse_args()
    groups = convert(args.wordnet_dir, args.pos.split(","))
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# flattened WordNet synsets, one group per line\n")
        for g in groups:
            fh.write("\t".join(g) + "\n")
    print(f"wrote {len(groups)} groups to {args.output}")


if __name__ == "__main__":
    main()
