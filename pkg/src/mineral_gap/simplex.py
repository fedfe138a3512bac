"""Dense simplex for small LPs of the form  max c.x  s.t.  A x <= b,  x >= 0,  b >= 0.

Pivots run in exact rational arithmetic (``fractions.Fraction``), so the
answer carries no accumulated rounding; Bland's rule rules out cycling.
The origin is feasible because ``b >= 0``, so no phase one is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class UnboundedError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LPSolution:
    x: tuple[Fraction, ...]
    objective: Fraction
    pivots: int

    def as_floats(self) -> list[float]:
        return [float(v) for v in self.x]


def maximize(c, A, b, max_pivots: int = 10_000) -> LPSolution:
    m, n = len(A), len(c)
    if len(b) != m or any(len(row) != n for row in A):
        raise ValueError("shape mismatch between c, A and b")
    if any(v < 0 for v in b):
        raise ValueError("b must be non-negative (origin must be feasible)")

    # tableau rows: [A | I | b]; objective row holds reduced costs -c
    F = Fraction
    T = [[F(v) for v in A[i]] + [F(int(i == k)) for k in range(m)] + [F(b[i])] for i in range(m)]
    z = [-F(v) for v in c] + [F(0)] * m + [F(0)]
    basis = list(range(n, n + m))

    pivots = 0
    while True:
        entering = next((j for j in range(n + m) if z[j] < 0), None)
        if entering is None:
            break
        best, leaving = None, None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best, leaving = ratio, i
        if leaving is None:
            raise UnboundedError(f"objective unbounded along variable {entering}")
        _pivot(T, z, leaving, entering)
        basis[leaving] = entering
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit reached")

    x = [F(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    return LPSolution(tuple(x), z[-1], pivots)


def _pivot(T, z, row, col):
    p = T[row][col]
    T[row] = [v / p for v in T[row]]
    pr = T[row]
    for i, r in enumerate(T):
        if i != row and r[col] != 0:
            f = r[col]
            T[i] = [a - f * b for a, b in zip(r, pr)]
    f = z[col]
    if f != 0:
        z[:] = [a - f * b for a, b in zip(z, pr)]
