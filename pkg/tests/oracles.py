"""Independent reference computations used as test oracles.

Each one takes a deliberately different route from the package code: Pascal
rows built by addition instead of math.comb, normal equations with a
pseudo-inverse instead of lstsq, textbook sums instead of numpy reductions.
"""
from fractions import Fraction
import math

import numpy as np


def pascal_row(n):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def binomial_critical_k(n, alpha):
    """Scan k upward; the first k whose upper tail is <= alpha."""
    row = pascal_row(n)
    total = 2 ** n
    a = Fraction(str(alpha))
    for k in range(n + 1):
        if Fraction(sum(row[k:]), total) <= a:
            return k
    return None


def cvr_exact(n_e, n):
    half = Fraction(n, 2)
    return (Fraction(n_e) - half) / half


def pearson_sums(x, y):
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxx = sum(v * v for v in x)
    syy = sum(v * v for v in y)
    sxy = sum(a * b for a, b in zip(x, y))
    return (n * sxy - sx * sy) / math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))


def average_ranks(x):
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def vif_pinv(x):
    """VIF per column from normal equations solved with an explicit pseudo-inverse."""
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    out = []
    for j in range(k):
        y = x[:, j]
        a = np.column_stack([np.ones(n), np.delete(x, j, axis=1)])
        beta = np.linalg.pinv(a.T @ a) @ (a.T @ y)
        resid = y - a @ beta
        sse = float(resid @ resid)
        sst = float(((y - y.mean()) ** 2).sum())
        out.append(1.0 / (sse / sst))
    return out


def sample_var(v):
    m = sum(v) / len(v)
    return sum((a - m) ** 2 for a in v) / (len(v) - 1)


def alpha_direct(rows):
    k = len(rows[0])
    cols = [[r[j] for r in rows] for j in range(k)]
    totals = [sum(r) for r in rows]
    return k / (k - 1) * (1 - sum(sample_var(c) for c in cols) / sample_var(totals))


def quantile_type7(v, p):
    s = sorted(v)
    h = (len(s) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def fence_flags(column, fence=1.5):
    q1, q3 = quantile_type7(column, 0.25), quantile_type7(column, 0.75)
    iqr = q3 - q1
    return [v < q1 - fence * iqr or v > q3 + fence * iqr for v in column]
