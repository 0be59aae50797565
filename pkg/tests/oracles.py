"""Independent re-derivations used as test oracles.

Nothing here imports the package's planners; costs are recomputed from the
memory table with exact rationals so a shared rounding bug cannot hide.
"""

import math
from fractions import Fraction as F

DTCM = 96 * 1024


def serial_pe_bytes(n_tgt, n_src, density, delay_range, shares, n_types=2):
    rate = F(density).limit_denominator(10**6)
    return (
        4 * n_tgt
        + 12
        + 4
        + math.ceil(F(4) * n_tgt * n_src * rate / shares)
        + 2 * n_tgt * delay_range * n_types
        + 56
        + 4 * (math.ceil(F(n_tgt, 32)) + 1)
        + 12 * n_tgt
        + 12
        + 6000
    )


def _even(n, k):
    return [n // k + (1 if i < n % k else 0) for i in range(k)]


def _slice_pes(n_tgt, n_src, density, d, budget):
    for k in range(1, min(4, n_src) + 1):
        if serial_pe_bytes(n_tgt, n_src, density, d, k) <= budget:
            return k
    if n_tgt == 1:
        return None
    a, b = math.ceil(n_tgt / 2), n_tgt // 2
    left, right = _slice_pes(a, n_src, density, d, budget), _slice_pes(b, n_src, density, d, budget)
    return None if left is None or right is None else left + right


def serial_count(n_src, n_tgt, density, d, budget=DTCM, cap=255):
    """Fewest serial PEs over every equal target split with slices <= cap."""
    sources = _even(n_src, math.ceil(n_src / cap))
    best = None
    for m in range(math.ceil(n_tgt / cap), n_tgt + 1):
        total = 0
        for t in _even(n_tgt, m):
            for s in sources:
                c = _slice_pes(t, s, density, d, budget)
                if c is None:
                    return best
                total += c
        if best is None or total < best:
            best = total
        if (m + 1) * len(sources) >= best:
            break
    return best


def pad(n, m):
    return -(-n // m) * m


def subordinate_bytes(rows, cols, delay_range, n_types=2):
    return pad(rows, 4) * pad(cols, 16) + 2 * rows * delay_range * n_types + 12 + 6000


def split_by_units(n, unit, k):
    """Unit-aligned near-equal ranges; earlier ranges take any extra unit."""
    groups = math.ceil(n / unit)
    out, lo = [], 0
    for g in _even(groups, k):
        hi = min(lo + g * unit, n)
        out.append((lo, hi))
        lo = hi
    return out


def exhaustive_split(n_rows, n_cols, budget, delay_range):
    """Enumerate the allowed (k, m) space in order and return the first fit.

    Stage 1: k = 1..G row chunks at m = 1. Stage 2: k = G, m = 2..C.
    Every slice is materialized and checked against the budget.
    """
    G, C = math.ceil(n_rows / 4), math.ceil(n_cols / 16)
    space = [(k, 1) for k in range(1, G + 1)] + [(G, m) for m in range(2, C + 1)]
    for k, m in space:
        rows = split_by_units(n_rows, 4, k)
        cols = split_by_units(n_cols, 16, m)
        if all(
            subordinate_bytes(r1 - r0, c1 - c0, delay_range) <= budget
            for r0, r1 in rows
            for c0, c1 in cols
        ):
            return k, m
    return None


def naive_best_stump(X, y, w):
    """Loop over every (feature, midpoint, polarity); first strict minimum wins.

    Iteration order is feature, then ascending threshold, then polarity
    +1 before -1, which is the documented tie rule.
    """
    best = None
    for f in range(len(X[0])):
        values = sorted(set(row[f] for row in X))
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            for pol in (1, -1):
                err = sum(
                    wi for row, yi, wi in zip(X, y, w) if (1 if pol * (row[f] - t) > 0 else -1) != yi
                )
                if best is None or err < best[0] - 1e-12:
                    best = (err, f, t, pol)
    return best


def naive_adaboost(X, y, rounds):
    """Reference discrete AdaBoost; returns ``[(feature, threshold, polarity, alpha)]``."""
    n = len(X)
    w = [1.0 / n] * n
    out = []
    for _ in range(rounds):
        found = naive_best_stump(X, y, w)
        if found is None:
            break
        err, f, t, pol = found
        eps = err / sum(w)
        if eps >= 0.5:
            break
        eps = max(eps, 1e-10)
        alpha = 0.5 * math.log((1 - eps) / eps)
        out.append((f, t, pol, alpha))
        w = [
            wi * math.exp(-alpha * yi * (1 if pol * (row[f] - t) > 0 else -1))
            for row, yi, wi in zip(X, y, w)
        ]
        s = sum(w)
        w = [wi / s for wi in w]
        if eps <= 1e-10:
            break
    return out


def scalar_lif(entries, n_source, n_target, alpha_q, v_th, spikes_in, T, recurrent=False, reset="subtract"):
    """Per-synapse, per-step LIF in plain Python integers.

    ``entries`` are ``(source, target, weight, delay)``; ``spikes_in`` is a
    set of ``(neuron, t)``. Returns the output spike set.
    """
    fired = {t: set() for t in range(T)}
    for n, t in spikes_in:
        if t < T:
            fired[t].add(n)
    v = [0] * n_target
    out = set()
    for t in range(T):
        exc = [0] * n_target
        inh = [0] * n_target
        for s, j, w, d in entries:
            if t - d >= 0 and s in fired[t - d]:
                if w > 0:
                    exc[j] += w
                else:
                    inh[j] += -w
        for j in range(n_target):
            x = exc[j] - inh[j] + ((v[j] * alpha_q) >> 15)
            x = max(-(2**31), min(2**31 - 1, x))
            if x >= v_th:
                out.add((j, t))
                x = x - v_th if reset == "subtract" else 0
                if recurrent:
                    fired[t].add(j)
            v[j] = x
    return out
