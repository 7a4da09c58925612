#!/usr/bin/env python3
"""Author the toy embedding fixture and verify its geometry.

Words are placed by hand in a 4-dimensional space as tight clusters of
related words, with unrelated clusters kept far apart. The script checks
the near/far constraints with plain euclidean arithmetic (no project code
imported) and only then writes src/openpda/data/embeddings_toy.vec in
word2vec text format.

Run from the repository root:

    python3 scripts/make_toy_embeddings.py
"""
import math
import sys
from pathlib import Path

DIM = 4

# word -> vector; cluster members sit within ~0.9 of each other,
# cluster centers are >= 2.5 apart.
VECTORS = {
    # people / politics
    "obama":        (0.0, 0.0, 0.0, 0.0),
    "president":    (0.4, 0.0, 0.0, 0.0),
    # speaking verbs
    "speaks":       (0.0, 3.0, 0.0, 0.0),
    "greets":       (0.4, 3.0, 0.0, 0.0),
    "talks":        (0.2, 3.3, 0.0, 0.0),
    # media
    "media":        (3.0, 0.0, 0.0, 0.0),
    "press":        (3.4, 0.0, 0.0, 0.0),
    "news":         (3.2, 0.3, 0.0, 0.0),
    # places
    "illinois":     (0.0, 0.0, 3.0, 0.0),
    "chicago":      (0.4, 0.0, 3.0, 0.0),
    # music
    "band":         (0.0, 0.0, 0.0, 6.0),
    "plays":        (0.5, 0.0, 0.0, 6.0),
    "rock":         (0.0, 0.5, 0.0, 6.0),
    "concert":      (0.5, 0.5, 0.0, 6.0),
    # food
    "pizza":        (6.0, 6.0, 0.0, 0.0),
    "tastes":       (6.5, 6.0, 0.0, 0.0),
    "delicious":    (6.0, 6.5, 0.0, 0.0),
    "tonight":      (6.5, 6.5, 0.0, 0.0),
    # weather
    "rain":         (0.0, 6.0, 6.0, 0.0),
    "falls":        (0.5, 6.0, 6.0, 0.0),
    "outside":      (0.0, 6.5, 6.0, 0.0),
    "today":        (0.5, 6.5, 6.0, 0.0),
    # switching things at home
    "turn":         (10.0, 0.0, 0.0, 0.0),
    "switch":       (10.3, 0.0, 0.0, 0.0),
    "home":         (10.0, 1.5, 1.5, 0.0),
    # appliances
    "light":        (10.0, 3.0, 0.0, 0.0),
    "lights":       (10.4, 3.0, 0.0, 0.0),
    "lamp":         (10.2, 3.4, 0.0, 0.0),
    "computer":     (13.0, 3.0, 0.0, 0.0),
    "pc":           (13.4, 3.0, 0.0, 0.0),
    "air":          (13.0, 6.0, 0.0, 0.0),
    "conditioning": (13.4, 6.0, 0.0, 0.0),
    "conditioner":  (13.2, 6.3, 0.0, 0.0),
    # temperature control
    "temperature":  (16.0, 0.0, 0.0, 0.0),
    "degree":       (16.4, 0.0, 0.0, 0.0),
    "degrees":      (16.2, 0.3, 0.0, 0.0),
    "set":          (16.4, 0.4, 0.0, 0.0),
    "setup":        (16.3, 0.2, 0.2, 0.0),
    "change":       (16.2, 0.0, 0.4, 0.0),
    "heat":         (16.0, 0.0, 0.6, 0.0),
    "heater":       (16.2, 0.0, 0.8, 0.0),
    "hot":          (16.4, 0.0, 0.6, 0.0),
    "warm":         (16.0, 0.3, 0.6, 0.0),
    "limit":        (16.6, 0.2, 0.3, 0.0),
    "feel":         (16.5, 0.5, 0.5, 0.0),
    # calendar
    "remind":       (19.0, 0.0, 0.0, 0.0),
    "reminder":     (19.3, 0.0, 0.0, 0.0),
    "meet":         (19.0, 0.4, 0.0, 0.0),
    "meeting":      (19.3, 0.4, 0.0, 0.0),
    "calendar":     (19.2, 0.2, 0.3, 0.0),
}

NEAR_PAIRS = [
    ("obama", "president"),
    ("speaks", "greets"),
    ("media", "press"),
    ("illinois", "chicago"),
    ("light", "lights"),
    ("temperature", "degree"),
    ("set", "change"),
]

# each word of the left group must be far from every word of the right group
FAR_GROUPS = [
    (["obama", "president", "speaks", "greets", "media", "press", "illinois", "chicago"],
     ["band", "plays", "rock", "concert", "pizza", "tastes", "delicious", "tonight",
      "rain", "falls", "outside", "today"]),
    (["turn", "switch", "light", "lights"],
     ["temperature", "degree", "set", "change", "remind", "meet"]),
]

SENTENCES = {
    "obama": ["obama", "speaks", "media", "illinois"],
    "president": ["president", "greets", "press", "chicago"],
    "music": ["band", "plays", "rock", "concert"],
    "food": ["pizza", "tastes", "delicious", "tonight"],
    "weather": ["rain", "falls", "outside", "today"],
}


def dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(VECTORS[a], VECTORS[b])))


def mean_pairwise(words_a, words_b):
    # crude sentence distance: average of per-word nearest distances, both ways
    def one_sided(src, dst):
        return sum(min(dist(w, v) for v in dst) for w in src) / len(src)
    return max(one_sided(words_a, words_b), one_sided(words_b, words_a))


def verify():
    failures = []
    for a, b in NEAR_PAIRS:
        d = dist(a, b)
        if d > 0.6:
            failures.append(f"near pair ({a}, {b}) at distance {d:.3f}")
    for left, right in FAR_GROUPS:
        for a in left:
            for b in right:
                d = dist(a, b)
                if d < 2.0:
                    failures.append(f"far pair ({a}, {b}) at distance {d:.3f}")
    base = mean_pairwise(SENTENCES["obama"], SENTENCES["president"])
    for key in ("music", "food", "weather"):
        other = mean_pairwise(SENTENCES["obama"], SENTENCES[key])
        if not base < other:
            failures.append(f"sentence ranking: paraphrase {base:.3f} !< {key} {other:.3f}")
    if failures:
        for f in failures:
            print("FAIL:", f)
        sys.exit(1)
    print(f"geometry ok: {len(VECTORS)} words, dim {DIM}, "
          f"paraphrase bound {base:.3f}")


def write(path: Path):
    lines = [f"{len(VECTORS)} {DIM}"]
    for word, vec in VECTORS.items():
        assert len(vec) == DIM
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(VECTORS)} words)")


if __name__ == "__main__":
    verify()
    out = Path(__file__).resolve().parent.parent / "src" / "openpda" / "data" / "embeddings_toy.vec"
    write(out)
