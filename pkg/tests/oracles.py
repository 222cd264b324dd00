"""Reference implementations used as test oracles.

Each one is deliberately naive (plain Python loops, brute force) and shares no
code with the package, so agreement is evidence rather than tautology.
"""

import itertools
import math


def woe_iv(positives, negatives, smoothing=0.0):
    """Per-category WoE and total IV from raw tallies."""
    k = len(positives)
    tp, tn = sum(positives), sum(negatives)
    woes, iv = [], 0.0
    for p, n in zip(positives, negatives):
        ps = (p + smoothing) / (tp + smoothing * k)
        ns = (n + smoothing) / (tn + smoothing * k)
        w = math.log(ps / ns)
        woes.append(w)
        iv += (ps - ns) * w
    return woes, iv


def maximal_cliques(vertices, edges):
    """All maximal cliques by enumerating every vertex subset."""
    vertices = list(vertices)
    adj = {v: set() for v in vertices}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    cliques = []
    for r in range(1, len(vertices) + 1):
        for sub in itertools.combinations(vertices, r):
            if all(b in adj[a] for a, b in itertools.combinations(sub, 2)):
                cliques.append(frozenset(sub))
    return {c for c in cliques if not any(c < other for other in cliques)}


def feasible(pos, neg, min_bin_fraction, min_class_count, smoothing):
    total = sum(pos) + sum(neg)
    p, n = sum(pos), sum(neg)
    if p + n < min_bin_fraction * total - 1e-9:
        return False
    if p < min_class_count or n < min_class_count:
        return False
    return smoothing > 0 or (p > 0 and n > 0)


def best_partition(positives, negatives, max_bins, min_bin_fraction=0.0, min_class_count=0, smoothing=0.5,
                   monotonic=False):
    """Max-IV contiguous partition by trying every cut set. Returns (iv, cuts) or None."""
    P = len(positives)
    total = sum(positives) + sum(negatives)
    best = None
    for k in range(1, min(max_bins, P) + 1):
        for cuts in itertools.combinations(range(1, P), k - 1):
            bounds = [0, *cuts, P]
            segs = [(sum(positives[a:b]), sum(negatives[a:b])) for a, b in zip(bounds, bounds[1:])]
            ok = True
            for sp, sn in segs:
                if sp + sn < min_bin_fraction * total - 1e-9 or sp < min_class_count or sn < min_class_count:
                    ok = False
                if smoothing == 0 and (sp == 0 or sn == 0):
                    ok = False
            if not ok:
                continue
            woes, iv = woe_iv([s[0] for s in segs], [s[1] for s in segs], smoothing)
            if monotonic and not (woes == sorted(woes) or woes == sorted(woes, reverse=True)):
                continue
            if best is None or iv > best[0]:
                best = (iv, cuts)
    return best


def pairwise_auc(y, scores):
    pos = [s for s, t in zip(scores, y) if t == 1]
    neg = [s for s, t in zip(scores, y) if t == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else (0.5 if a == b else 0.0)
    return total / (len(pos) * len(neg))


def shapley_by_coalitions(weights, intercept, x, mean):
    """Exact Shapley values of f(x) = w.x + b with absent features set to their mean."""
    k = len(weights)

    def value(coalition):
        z = [x[j] if j in coalition else mean[j] for j in range(k)]
        return sum(w * v for w, v in zip(weights, z)) + intercept

    phi = []
    for j in range(k):
        others = [i for i in range(k) if i != j]
        total = 0.0
        for r in range(len(others) + 1):
            for sub in itertools.combinations(others, r):
                s = set(sub)
                weight = math.factorial(len(s)) * math.factorial(k - len(s) - 1) / math.factorial(k)
                total += weight * (value(s | {j}) - value(s))
        phi.append(total)
    return phi


def central_difference(f, x, h=1e-6):
    grad = []
    for i in range(len(x)):
        up = list(x)
        down = list(x)
        up[i] += h
        down[i] -= h
        grad.append((f(up) - f(down)) / (2 * h))
    return grad


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)
