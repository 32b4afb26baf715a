"""Generate the bundled mini-corpora.

Documents are short synthetic news-style texts. Each class owns a small set of
topic words; some topic words are shared between neighbouring classes so the
task is not trivially separable, and a fraction of topic words is replaced by
generic filler. Every token carries a coarse POS tag aligned with the
toolkit's tokenizer (words split on whitespace, each punctuation character is
its own token).

Usage: python generate.py <fixtures-dir>
"""

import json
import random
import sys
from pathlib import Path

DETERMINERS = ["the", "a", "this", "that", "each", "every", "some", "its"]
ADPOSITIONS = ["in", "on", "at", "for", "with", "from", "after", "before", "over", "under"]
CONJUNCTIONS = ["and", "but", "while", "as"]
GENERIC_NOUNS = """
market report week year month quarter group company official analyst source
statement plan deal figure level rate share price region sector team board
office trader agency member party country city policy value order volume
period result session day outlook view estimate
""".split()
GENERIC_VERBS = """
said reported expected announced showed rose fell added noted reached held
remained signed agreed planned saw told confirmed raised cut moved
""".split()
GENERIC_ADJS = """
new major early late strong weak high low final local annual recent key
large small senior total further domestic foreign
""".split()

SYLLABLES = ["ka", "lo", "mi", "ra", "ten", "vor", "sul", "bri", "dan", "pex", "qui", "zor", "fen", "gal", "hu"]


def topic_word(rng, used):
    while True:
        w = "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3)))
        if w not in used:
            used.add(w)
            return w


def build_topics(rng, n_classes, per_class):
    """Topic nouns/verbs/adjectives per class; neighbours share a few words."""
    used = set(GENERIC_NOUNS + GENERIC_VERBS + GENERIC_ADJS + DETERMINERS + ADPOSITIONS + CONJUNCTIONS)
    topics = []
    for _ in range(n_classes):
        words = {
            "NOUN": [topic_word(rng, used) for _ in range(per_class)],
            "VERB": [topic_word(rng, used) + "ed" for _ in range(per_class // 3)],
            "ADJ": [topic_word(rng, used) + "ic" for _ in range(per_class // 3)],
        }
        topics.append(words)
    for c in range(n_classes):
        nxt = topics[(c + 1) % n_classes]
        topics[c]["NOUN"] += nxt["NOUN"][:3]
    return topics


def pick(rng, topics, labels, pos, generic, topic_rate):
    if rng.random() < topic_rate:
        return rng.choice(topics[rng.choice(labels)][pos])
    return rng.choice(generic)


def sentence(rng, topics, labels, topic_rate):
    toks, tags = [], []

    def add(word, tag):
        toks.append(word)
        tags.append(tag)

    def noun_phrase():
        add(rng.choice(DETERMINERS), "DET")
        if rng.random() < 0.5:
            add(pick(rng, topics, labels, "ADJ", GENERIC_ADJS, topic_rate), "ADJ")
        add(pick(rng, topics, labels, "NOUN", GENERIC_NOUNS, topic_rate), "NOUN")

    noun_phrase()
    add(pick(rng, topics, labels, "VERB", GENERIC_VERBS, topic_rate), "VERB")
    noun_phrase()
    for _ in range(rng.randint(0, 2)):
        add(rng.choice(ADPOSITIONS), "ADP")
        noun_phrase()
    if rng.random() < 0.3:
        add(",", "PUNCT")
        add(rng.choice(CONJUNCTIONS), "CCONJ")
        noun_phrase()
        add(pick(rng, topics, labels, "VERB", GENERIC_VERBS, topic_rate), "VERB")
    add(rng.choice([".", ".", ".", "!", "?"]), "PUNCT")
    return toks, tags


def render(toks):
    """Join tokens into text; punctuation attaches to the previous word."""
    out = ""
    for t in toks:
        if t in ",.!?" and out:
            out += t
        else:
            out += (" " if out else "") + t
    words = out.split(" ")
    # Capitalize sentence starts so the text looks natural (the tokenizer lowercases).
    cap = True
    for i, w in enumerate(words):
        if cap:
            words[i] = w[:1].upper() + w[1:]
        cap = w[-1:] in ".!?"
    return " ".join(words)


def document(rng, idx, topics, labels, n_sent, topic_rate):
    toks, tags = [], []
    for _ in range(n_sent):
        s, t = sentence(rng, topics, labels, topic_rate)
        toks += s
        tags += t
    return {"id": f"d{idx:05d}", "text": render(toks), "labels": labels, "pos": tags}


def multilabel_labels(rng, names):
    k = rng.choices([1, 2, 3], weights=[0.55, 0.35, 0.10])[0]
    first = rng.randrange(len(names))
    chosen = {first}
    while len(chosen) < k:
        # Co-occurring labels favour neighbours, like related topics.
        step = rng.choice([1, 1, 2, rng.randrange(1, len(names))])
        chosen.add((first + step) % len(names))
    return sorted(chosen)


def make_corpus(seed, names, sizes, multilabel, sent_range, topic_rate, per_class):
    rng = random.Random(seed)
    topics = build_topics(rng, len(names), per_class)
    splits = {}
    idx = 0
    for split, n in sizes.items():
        docs = []
        for _ in range(n):
            cls = multilabel_labels(rng, names) if multilabel else [rng.randrange(len(names))]
            doc = document(rng, idx, topics, cls, rng.randint(*sent_range), topic_rate)
            doc["labels"] = [names[c] for c in cls]
            docs.append(doc)
            idx += 1
        splits[split] = docs
    return splits


def write(dirpath, splits):
    dirpath.mkdir(parents=True, exist_ok=True)
    for split, docs in splits.items():
        with open(dirpath / f"{split}.jsonl", "w") as f:
            for d in docs:
                f.write(json.dumps(d, ensure_ascii=False) + "\n")


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent)
    topics10 = ["acq", "crude", "earn", "grain", "interest", "money", "ship", "trade", "coffee", "gold"]
    write(
        root / "mini-multilabel",
        make_corpus(7, topics10, {"train": 1400, "val": 300, "test": 300}, True, (2, 3), 0.22, 12),
    )
    write(
        root / "mini-singlelabel",
        make_corpus(11, ["world", "sports", "business", "science"], {"train": 280, "val": 60, "test": 60}, False, (2, 4), 0.3, 12),
    )
    write(
        root / "tiny",
        make_corpus(3, ["alpha", "beta", "gamma"], {"train": 24, "val": 8, "test": 8}, True, (1, 2), 0.5, 6),
    )


if __name__ == "__main__":
    main()
