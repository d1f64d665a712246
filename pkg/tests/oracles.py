"""Independent reference computations shared by unit and acceptance tests."""

import math

import numpy as np


def sg_oracle(x, window, k, deriv, delta, i):
    """Dense normal equations on the window around index i."""
    c = window // 2
    t = np.arange(-c, window - c, dtype=float)
    A = np.vander(t, k + 1, increasing=True)
    coef = np.linalg.solve(A.T @ A, A.T @ x[i - c:i - c + window])
    return math.factorial(deriv) * coef[deriv] / delta**deriv


def hp_oracle(y, lam):
    """Dense Cholesky solve of (I + lam D'D) tau = y."""
    n = len(y)
    D = np.diff(np.eye(n), 2, axis=0)
    M = np.eye(n) + lam * D.T @ D
    L = np.linalg.cholesky(M)
    return np.linalg.solve(L.T, np.linalg.solve(L, y))


def hp_matrix(n, lam):
    D = np.diff(np.eye(n), 2, axis=0)
    return np.eye(n) + lam * D.T @ D


def haar_oracle(x, t):
    """Pairwise Haar step written out by hand; odd lengths borrow the first sample."""
    x = list(map(float, x))
    n = len(x)
    if n % 2:
        x = x + [x[0]]
    out = []
    r = math.sqrt(2.0)
    for i in range(0, len(x), 2):
        a = (x[i] + x[i + 1]) / r
        d = (x[i] - x[i + 1]) / r
        d = math.copysign(max(abs(d) - t, 0.0), d)
        out += [(a + d) / r, (a - d) / r]
    return np.array(out[:n])


def render_dtree(node, indent=0):
    """Discourse tree as indented '<level> <TYPE> <REL>[(cue)] | <text>' lines."""
    rel = node.relation.kind.value + (f"({node.relation.cue})" if node.relation.cue else "")
    lines = [f"{'  ' * indent}{node.level} {node.ctype.value} {rel} | {node.text}"]
    for c in node.children:
        lines += render_dtree(c, indent + 1)
    return lines
