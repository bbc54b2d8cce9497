"""Line-oriented orbit-ball cache files.

Header: format version, config digest, depth, element count; one record per
element holding the word, the eight matrix entries, and the eigenvalue pair
when the element is hyperbolic.  Records follow the canonical ball order
(word length, then lexicographic word), so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import CacheError
from .groups import OrbitBall

FORMAT_VERSION = 1


def _record(ball, i):
    word = ball.word_tuple(i)
    wtxt = ",".join(str(s) for s in word) if word else "."
    ent = np.concatenate([ball.h1[i].ravel(), ball.h2[i].ravel()])
    etxt = " ".join(f"{v:.17g}" for v in ent)
    tr1 = ball.h1[i, 0, 0] + ball.h1[i, 1, 1]
    tr2 = ball.h2[i, 0, 0] + ball.h2[i, 1, 1]
    if abs(tr1) > 2.0 and abs(tr2) > 2.0:
        l1 = np.arccosh(abs(tr1) / 2.0)
        l2 = np.arccosh(abs(tr2) / 2.0)
        tail = f"{l1 + l2:.17g} {abs(l1 - l2):.17g}"
    else:
        tail = "- -"
    return f"{wtxt} {etxt} {tail}"


def write_cache(path, digest, ball):
    lines = [
        f"qfads-orbit-cache {FORMAT_VERSION}",
        f"digest {digest}",
        f"depth {ball.depth}",
        f"count {len(ball)}",
    ]
    lines.extend(_record(ball, i) for i in range(len(ball)))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cache(path, rep=None):
    """Load a cached ball; returns (digest, ball)."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    try:
        tag, version = lines[0].split()
        if tag != "qfads-orbit-cache" or int(version) != FORMAT_VERSION:
            raise CacheError(f"unsupported cache header {lines[0]!r}")
        digest = lines[1].split()[1]
        depth = int(lines[2].split()[1])
        count = int(lines[3].split()[1])
        body = lines[4:4 + count]
        if len(body) != count:
            raise CacheError(f"expected {count} records, found {len(body)}")
        n = count
        width = max(depth, 1)
        h1 = np.empty((n, 2, 2))
        h2 = np.empty((n, 2, 2))
        words = np.zeros((n, width), dtype=np.int8)
        wlen = np.zeros(n, dtype=np.int32)
        for i, line in enumerate(body):
            parts = line.split()
            wtxt = parts[0]
            ent = [float(v) for v in parts[1:9]]
            h1[i] = np.array(ent[:4]).reshape(2, 2)
            h2[i] = np.array(ent[4:]).reshape(2, 2)
            if wtxt != ".":
                syms = [int(s) for s in wtxt.split(",")]
                words[i, :len(syms)] = syms
                wlen[i] = len(syms)
    except (IndexError, ValueError) as exc:
        raise CacheError(f"malformed cache file {path}: {exc}") from exc
    return digest, OrbitBall(rep, depth, h1, h2, words, wlen)
