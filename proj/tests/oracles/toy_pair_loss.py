"""Independent reimplementation of the toy encoder pair loss.

Prints values that are frozen into tests/test_oracles.cpp.
Pure Python; no project code is imported.
"""
import csv
import math
import pathlib

MASK = (1 << 64) - 1
WEIGHT_SALT = 0x70726F6A65637421
GOLDEN = 0x9E3779B97F4A7C15


def fnv1a(text):
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


class Gaussian:
    def __init__(self, seed):
        self.state = seed & MASK
        self.spare = None

    def uniform(self):
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        z ^= z >> 31
        return ((z >> 11) + 0.5) / 2.0**53

    def next(self):
        if self.spare is not None:
            s, self.spare = self.spare, None
            return s
        u1, u2 = self.uniform(), self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        phi = 2.0 * math.pi * u2
        self.spare = r * math.sin(phi)
        return r * math.cos(phi)


class Toy:
    def __init__(self, embed, pooled, seed, gain):
        self.d, self.p, self.seed = embed, pooled, seed
        g = Gaussian(seed ^ WEIGHT_SALT)
        scale = gain / math.sqrt(embed)
        self.w = [[g.next() * scale for _ in range(embed)] for _ in range(pooled)]

    def emb(self, word):
        g = Gaussian(fnv1a(word) ^ ((self.seed * GOLDEN) & MASK))
        return [g.next() for _ in range(self.d)]

    def pooled(self, prompt, token):
        words = []
        for raw in prompt.replace(".", " . ").split():
            words.append(raw)
        acc = [0.0] * self.d
        for w in words:
            e = token if w == "<CreTok>" else self.emb(w.lower())
            acc = [a + x for a, x in zip(acc, e)]
        n = len(words)
        return [math.tanh(sum(wi * a / n for wi, a in zip(row, acc))) for row in self.w]


def cos(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))


ENCODERS = [Toy(10, 5, 8, 2.5), Toy(14, 7, 108, 2.5)]
TOKENS = [e.emb("creative") for e in ENCODERS]
ADAPTIVE = "a photo of a <CreTok> mixture ."


def concat(prompt, tokens):
    out = []
    for enc, tok in zip(ENCODERS, tokens):
        out += enc.pooled(prompt, tok)
    return out


def pair_loss(t1, t2, theta):
    a = concat(ADAPTIVE, TOKENS)
    total = 0.0
    for x, y in ((t1, t2), (t2, t1)):
        r = concat(f"a {x} {y} .", TOKENS)
        total += 1.0 - min(cos(r, a), theta)
    return total / 2.0


def mean_cos(pairs):
    a = concat(ADAPTIVE, TOKENS)
    vals = []
    for t1, t2 in pairs:
        for x, y in ((t1, t2), (t2, t1)):
            vals.append(cos(concat(f"a {x} {y} .", TOKENS), a))
    return sum(vals) / len(vals)


if __name__ == "__main__":
    print(f"pair_loss(lettuce, mantis, 1.0) = {pair_loss('lettuce', 'mantis', 1.0):.17g}")
    print(f"pair_loss(lettuce, mantis, 0.5) = {pair_loss('lettuce', 'mantis', 0.5):.17g}")
    print(f"pair_loss(banana, gorilla, 0.3) = {pair_loss('banana', 'gorilla', 0.3):.17g}")
    data = pathlib.Path(__file__).resolve().parents[2] / "data" / "cangjie_train.csv"
    with open(data, newline="") as f:
        rows = [(r["first"], r["second"]) for r in csv.DictReader(f)]
    print(f"initial mean cos over {len(rows)} training pairs = {mean_cos(rows):.17g}")
