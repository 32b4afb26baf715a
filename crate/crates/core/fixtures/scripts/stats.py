"""Write manifest.json: expected C/N/W/S per split of every bundled corpus.

Counted independently of the toolkit: a word is a maximal alphanumeric run,
a sentence is a non-blank segment ended by . ! or ? plus whitespace (or by the
end of the text).

Usage: python stats.py <fixtures-dir>
"""

import json
import re
import sys
from fractions import Fraction
from pathlib import Path

CORPORA = {"mini-multilabel": "multi-label", "mini-singlelabel": "single-label", "tiny": "multi-label"}
SPLITS = ["train", "val", "test"]

TOLERANCES = {
    # Stats are exact ratios; allow only float rounding.
    "stats_abs": 1e-9,
    # Soft capacity check: h=64 beats h=32 in at least this many of 5 seeds.
    "capacity_min_wins": 3,
    # Self-speedup must be 1.0 within this relative band.
    "self_speedup_rel": 0.2,
}


def words(text):
    return len(re.findall(r"[A-Za-z0-9]+", text))


def sentences(text):
    segments = re.split(r"[.!?](?=\s)", text)
    return sum(1 for s in segments if s.strip())


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent)
    corpora = {}
    for name, kind in CORPORA.items():
        docs = {s: [json.loads(l) for l in open(root / name / f"{s}.jsonl") if l.strip()] for s in SPLITS}
        classes = len({l for ds in docs.values() for d in ds for l in d["labels"]})
        splits = {}
        for s, ds in docs.items():
            n = len(ds)
            splits[s] = {
                "C": classes,
                "N": n,
                "W": float(Fraction(sum(words(d["text"]) for d in ds), n)),
                "S": float(Fraction(sum(sentences(d["text"]) for d in ds), n)),
            }
        corpora[name] = {"kind": kind, "splits": splits}
    with open(root / "manifest.json", "w") as f:
        json.dump({"corpora": corpora, "tolerances": TOLERANCES}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
