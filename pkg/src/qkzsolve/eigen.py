"""Exact rational linear algebra for the special-point Hamiltonians.

At the cube-root-of-unity point the loop weight equals one and every
generator matrix is rational, so the Hamiltonians below are exact rational
matrices on the pattern basis:

* family A:  H = e_1 + ... + e_N  with  e_N = S^-1 e_1 S  (periodic chain);
* family B:  H = e_1 + ... + e_{r-1}  (open chain);
* family C:  H = (e_1 + e_1')/2 + e_2 + ... + e_{r-1} + e_r;
* family D:  H = e_0 + e_1 + ... + e_{r-2} + (e_{r-1} + e_{r-1}')/2.

Eigenvalues are extracted from known right eigenvectors by Rayleigh
constancy; left null spaces come from fraction-free elimination; the
characteristic polynomial uses the Faddeev-LeVerrier recursion.  No
floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .algebra import AlgebraSpec, LinOp, build_algebra
from .arith import QLaurent
from .errors import IntegrityError, UsageError

Matrix = list[list[Fraction]]


def _to_rational(op: LinOp, size: int) -> Matrix:
    m = [[Fraction(0)] * size for _ in range(size)]
    for j, col in enumerate(op.cols):
        for i, c in col.items():
            m[i][j] += Fraction(c.eval_omega().as_rat())
    return m


def build_h(family: str, rank: int) -> Matrix:
    """The special-point Hamiltonian as an exact rational matrix."""
    fam = family.upper()
    spec = build_algebra(fam, rank)
    n = len(spec.index)
    if fam == "A":
        acc = spec.e[1]
        for i in range(2, rank):
            acc = acc + spec.e[i]
        s_inv = spec.rotation
        for _ in range(rank - 2):
            s_inv = s_inv @ spec.rotation  # rotation^(N-1) = rotation^-1
        e_n = s_inv @ spec.e[1] @ spec.rotation
        acc = acc + e_n
        return _to_rational(acc, n)
    if fam == "B":
        acc = spec.e[1]
        for i in range(2, rank):
            acc = acc + spec.e[i]
        return _to_rational(acc, n)
    if fam == "C":
        m = _to_rational(spec.e[1], n)
        mp = _to_rational(spec.e_conj, n)
        h = [[(a + b) / 2 for a, b in zip(ra, rb)] for ra, rb in zip(m, mp)]
        for i in range(2, rank + 1):
            mi = _to_rational(spec.e[i], n)
            h = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(h, mi)]
        return h
    if fam == "D":
        if spec.e0 is None:
            raise UsageError("the D Hamiltonian needs the odd-rank boundary operator")
        h = _to_rational(spec.e0, n)
        for i in range(1, rank - 1):
            mi = _to_rational(spec.e[i], n)
            h = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(h, mi)]
        m = _to_rational(spec.e[rank - 1], n)
        mp = _to_rational(spec.e_conj, n)
        return [[a + (b + c) / 2 for a, b, c in zip(ra, rb, rc)]
                for ra, rb, rc in zip(h, m, mp)]
    raise UsageError(f"unknown family {family!r}")


def rayleigh(h: Matrix, vec: list[int] | list[Fraction]) -> Fraction:
    """Eigenvalue from a known right eigenvector.

    Returns (H v)_k / v_k, asserting the ratio is constant over all k with
    v_k != 0 and that (H v)_k = 0 wherever v_k = 0.
    """
    n = len(h)
    if all(x == 0 for x in vec):
        raise UsageError("need a nonzero vector")
    hv = [sum(h[i][j] * Fraction(vec[j]) for j in range(n)) for i in range(n)]
    lam: Fraction | None = None
    for i in range(n):
        if vec[i]:
            ratio = hv[i] / Fraction(vec[i])
            if lam is None:
                lam = ratio
            elif ratio != lam:
                raise IntegrityError("vector is not an eigenvector (ratio varies)")
        elif hv[i]:
            raise IntegrityError("vector is not an eigenvector (image off support)")
    assert lam is not None
    return lam


def left_perron(h: Matrix, lam: Fraction) -> list[int]:
    """The one-dimensional left null space of (H - lam), scaled to coprime
    positive integers."""
    n = len(h)
    # left null space of M = null space of M^T
    m = [[h[j][i] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
    # gaussian elimination over Q
    cols = list(range(n))
    rix = 0
    piv_of_col: dict[int, int] = {}
    for j in range(n):
        piv = next((i for i in range(rix, n) if m[i][j]), None)
        if piv is None:
            continue
        m[rix], m[piv] = m[piv], m[rix]
        pv = m[rix][j]
        m[rix] = [x / pv for x in m[rix]]
        for i in range(n):
            if i != rix and m[i][j]:
                f = m[i][j]
                m[i] = [a - f * b for a, b in zip(m[i], m[rix])]
        piv_of_col[j] = rix
        rix += 1
    free = [j for j in range(n) if j not in piv_of_col]
    if len(free) != 1:
        raise IntegrityError(f"null space dimension {len(free)} != 1")
    f = free[0]
    v = [Fraction(0)] * n
    v[f] = Fraction(1)
    for j, i in piv_of_col.items():
        v[j] = -m[i][f]
    # scale to coprime integers, positive orientation
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    ints = [x // g for x in ints]
    if all(x <= 0 for x in ints):
        ints = [-x for x in ints]
    if any(x <= 0 for x in ints):
        raise IntegrityError("left null vector is not strictly positive")
    return ints


def bilinear(v: list[int], w: list[int]) -> int:
    if len(v) != len(w):
        raise UsageError("vector lengths differ")
    return sum(a * b for a, b in zip(v, w))


def char_poly(h: Matrix) -> list[Fraction]:
    """Characteristic polynomial coefficients [c_0..c_n] of det(xI - H),
    by the Faddeev-LeVerrier recursion (exact)."""
    n = len(h)
    coeff = [Fraction(0)] * (n + 1)
    coeff[n] = Fraction(1)
    m = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M <- H (M + c_{n-k+1} I)
        for i in range(n):
            m[i][i] += coeff[n - k + 1]
        m = [[sum(h[i][l] * m[l][j] for l in range(n)) for j in range(n)]
             for i in range(n)]
        tr = sum(m[i][i] for i in range(n))
        coeff[n - k] = -tr / k
    return coeff
