"""Exact scalar rings and sparse multivariate Laurent polynomial arithmetic.

Everything downstream (operator algebra, the triangular solver, the
specializations) is built on three exact scalar domains and one polynomial
container:

* ``Fraction`` (stdlib) is the big-rational scalar.
* ``QLaurent`` is a Laurent polynomial in the deformation parameter q with
  rational coefficients, stored as ``{exponent: Fraction}``.
* ``CycloQ`` is the field Q(w) with w a primitive cube root of unity
  (w^2 = -1 - w); it hosts the specialization q -> w.
* ``MultiPoly`` is a sparse Laurent polynomial in named variables over any
  of those scalars, stored as ``{exponent_vector: coeff}``.

No floating point appears anywhere.  All values are immutable after
construction and safe to share.  Coefficients that are rational integers are
stored as Python ``int`` (exact and much faster than ``Fraction``); the two
interoperate transparently.

For solver-critical work the convention is to treat q as an ordinary
variable of a ``MultiPoly`` over the rationals (variable name ``"q"``),
which keeps the hot loops flat.  ``as_q_outer`` regroups such a polynomial
into w-monomials with ``QLaurent`` coefficients for serialization and
degree bookkeeping.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

from .errors import IntegrityError, UsageError

Rat = int | Fraction


def _norm_rat(c: Rat) -> Rat:
    """Collapse integral Fractions to int (exactness-preserving fast path)."""
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def rat_to_str(c: Rat) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def rat_from_str(s: str) -> Rat:
    return _norm_rat(Fraction(s))


class QLaurent:
    """Laurent polynomial in q over the rationals; canonical, immutable."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, Rat] | None = None):
        t = {}
        if terms:
            for k, c in terms.items():
                c = _norm_rat(c)
                if c:
                    t[int(k)] = c
        self._terms = t

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls) -> QLaurent:
        return cls()

    @classmethod
    def one(cls) -> QLaurent:
        return cls({0: 1})

    @classmethod
    def q_power(cls, k: int, coeff: Rat = 1) -> QLaurent:
        return cls({k: coeff})

    @classmethod
    def from_rat(cls, c: Rat) -> QLaurent:
        return cls({0: c})

    @classmethod
    def beta(cls) -> QLaurent:
        """The loop weight -(q + 1/q)."""
        return cls({1: -1, -1: -1})

    # -- structure ----------------------------------------------------
    def items(self) -> list[tuple[int, Rat]]:
        """Term list in ascending q-exponent order (canonical)."""
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, QLaurent):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({0: _norm_rat(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        bits = []
        for k, c in self.items():
            if k == 0:
                bits.append(f"{c}")
            else:
                bits.append(f"{c}*q^{k}" if c != 1 else f"q^{k}")
        return " + ".join(bits)

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other: QLaurent) -> QLaurent:
        if not isinstance(other, QLaurent):
            return NotImplemented
        t = dict(self._terms)
        for k, c in other._terms.items():
            s = t.get(k, 0) + c
            if s:
                t[k] = _norm_rat(s)
            else:
                t.pop(k, None)
        out = QLaurent.__new__(QLaurent)
        out._terms = t
        return out

    def __neg__(self) -> QLaurent:
        out = QLaurent.__new__(QLaurent)
        out._terms = {k: -c for k, c in self._terms.items()}
        return out

    def __sub__(self, other: QLaurent) -> QLaurent:
        return self + (-other)

    def __mul__(self, other: QLaurent | Rat) -> QLaurent:
        if isinstance(other, (int, Fraction)):
            other = _norm_rat(other)
            if not other:
                return QLaurent()
            out = QLaurent.__new__(QLaurent)
            out._terms = {k: _norm_rat(c * other) for k, c in self._terms.items()}
            return out
        if not isinstance(other, QLaurent):
            return NotImplemented
        t: dict[int, Rat] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                k = k1 + k2
                s = t.get(k, 0) + c1 * c2
                if s:
                    t[k] = _norm_rat(s)
                else:
                    t.pop(k, None)
        out = QLaurent.__new__(QLaurent)
        out._terms = t
        return out

    __rmul__ = __mul__

    def div_exact(self, d: QLaurent) -> QLaurent:
        """Exact quotient in Q[q, 1/q]; IntegrityError if d does not divide."""
        if d.is_zero():
            raise UsageError("division by zero q-polynomial")
        if self.is_zero():
            return QLaurent()
        # Shift both to ordinary polynomials and long-divide.
        lo_s = min(self._terms)
        lo_d = min(d._terms)
        num = dict(self._terms)
        den = sorted(((k - lo_d, c) for k, c in d._terms.items()), reverse=True)
        lead_k, lead_c = den[0]
        q_terms: dict[int, Rat] = {}
        work = {k - lo_s: c for k, c in num.items()}
        deg = max(work)
        while work:
            top = max(work)
            if top < lead_k:
                raise IntegrityError("q-polynomial division is not exact")
            qk = top - lead_k
            qc = _norm_rat(Fraction(work[top]) / Fraction(lead_c))
            q_terms[qk] = qc
            for k, c in den:
                kk = qk + k
                s = work.get(kk, 0) - qc * c
                if s:
                    work[kk] = _norm_rat(s)
                else:
                    work.pop(kk, None)
            if len(q_terms) > deg + 1:
                raise IntegrityError("q-polynomial division diverged")
        return QLaurent({k + lo_s - lo_d: c for k, c in q_terms.items()})

    # -- specializations ----------------------------------------------
    def eval_rat(self, q: Rat) -> Rat:
        """Evaluate at a nonzero rational q."""
        if not q:
            raise UsageError("q must be nonzero")
        acc: Rat = 0
        for k, c in self._terms.items():
            acc += c * (Fraction(q) ** k)
        return _norm_rat(acc)

    def eval_omega(self) -> "CycloQ":
        """Evaluate at q = w, the primitive cube root of unity (q^3 = 1)."""
        a: Rat = 0
        b: Rat = 0
        for k, c in self._terms.items():
            r = k % 3
            if r == 0:
                a += c
            elif r == 1:
                b += c
            else:  # w^2 = -1 - w
                a -= c
                b -= c
        return CycloQ(a, b)

    # -- serialization -------------------------------------------------
    def to_json(self) -> list:
        return [[k, rat_to_str(c)] for k, c in self.items()]

    @classmethod
    def from_json(cls, data: Sequence) -> QLaurent:
        return cls({int(k): rat_from_str(c) for k, c in data})


class CycloQ:
    """Element a + b*w of Q(w), w^2 = -1 - w (so w^3 = 1).  A field."""

    __slots__ = ("a", "b")

    def __init__(self, a: Rat = 0, b: Rat = 0):
        self.a = _norm_rat(a)
        self.b = _norm_rat(b)

    @classmethod
    def omega(cls) -> CycloQ:
        return cls(0, 1)

    @classmethod
    def from_rat(cls, c: Rat) -> CycloQ:
        return cls(c, 0)

    def is_zero(self) -> bool:
        return not self.a and not self.b

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CycloQ):
            return self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __repr__(self) -> str:
        return f"CycloQ({self.a}, {self.b})"

    def __add__(self, other: CycloQ | Rat) -> CycloQ:
        if isinstance(other, (int, Fraction)):
            return CycloQ(self.a + other, self.b)
        return CycloQ(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other: CycloQ | Rat) -> CycloQ:
        if isinstance(other, (int, Fraction)):
            return CycloQ(self.a - other, self.b)
        return CycloQ(self.a - other.a, self.b - other.b)

    def __rsub__(self, other: Rat) -> CycloQ:
        return CycloQ(other - self.a, -self.b)

    def __neg__(self) -> CycloQ:
        return CycloQ(-self.a, -self.b)

    def __mul__(self, other: CycloQ | Rat) -> CycloQ:
        if isinstance(other, (int, Fraction)):
            return CycloQ(self.a * other, self.b * other)
        # (a + bw)(c + dw) = ac + (ad + bc)w + bd w^2, w^2 = -1 - w.
        a, b, c, d = self.a, self.b, other.a, other.b
        bd = b * d
        return CycloQ(a * c - bd, a * d + b * c - bd)

    __rmul__ = __mul__

    def norm(self) -> Rat:
        """Field norm a^2 - a b + b^2; zero iff the element is zero."""
        return _norm_rat(self.a * self.a - self.a * self.b + self.b * self.b)

    def inv(self) -> CycloQ:
        n = self.norm()
        if not n:
            raise UsageError("division by zero in Q(w)")
        # conjugate is a + b*w^2 = (a - b) - b*w
        return CycloQ(Fraction(self.a - self.b, 1) / n, Fraction(-self.b, 1) / n)

    def div_exact(self, other: CycloQ) -> CycloQ:
        return self * other.inv()

    def as_rat(self) -> Rat:
        if self.b:
            raise IntegrityError(f"{self!r} is not rational")
        return self.a

    def to_json(self) -> dict:
        return {"a": rat_to_str(self.a), "b": rat_to_str(self.b)}

    @classmethod
    def from_json(cls, data: Mapping) -> CycloQ:
        return cls(rat_from_str(data["a"]), rat_from_str(data["b"]))


Scalar = Rat | QLaurent | CycloQ


def scalar_to_json(c: Scalar):
    if isinstance(c, (int, Fraction)):
        return rat_to_str(c)
    if isinstance(c, QLaurent):
        return c.to_json()
    return c.to_json()


def scalar_div(num: Scalar, den: Scalar) -> Scalar:
    """Exact scalar division in whichever domain the operands live in."""
    if isinstance(den, (int, Fraction)):
        if not den:
            raise UsageError("scalar division by zero")
        if isinstance(num, (int, Fraction)):
            return _norm_rat(Fraction(num) / Fraction(den))
        return num * _norm_rat(Fraction(1) / Fraction(den))
    if isinstance(den, QLaurent):
        if isinstance(num, (int, Fraction)):
            num = QLaurent.from_rat(num)
        return num.div_exact(den)
    if isinstance(den, CycloQ):
        if isinstance(num, (int, Fraction)):
            num = CycloQ.from_rat(num)
        return num.div_exact(den)
    raise UsageError(f"unsupported scalar type {type(den)}")


class MultiPoly:
    """Sparse Laurent polynomial in an ordered tuple of named variables.

    ``terms`` maps exponent vectors (tuples of ints, negatives allowed) to
    nonzero scalar coefficients.  The scalar domain is fixed per instance
    and is whatever the coefficients are (int/Fraction, QLaurent, CycloQ).
    Canonical form (no zero coefficients) is enforced on construction;
    canonical term order for serialization/printing is lexicographic on the
    exponent vector.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[tuple, Scalar] | None = None,
                 _skip_norm: bool = False):
        self.vars = tuple(variables)
        if _skip_norm:
            self.terms = dict(terms) if terms is not None else {}
            return
        t: dict[tuple, Scalar] = {}
        n = len(self.vars)
        if terms:
            for e, c in terms.items():
                if len(e) != n:
                    raise UsageError(f"exponent vector {e} has wrong length for {self.vars}")
                if isinstance(c, Fraction):
                    c = _norm_rat(c)
                if c:
                    t[tuple(e)] = c
        self.terms = t

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, variables: Sequence[str]) -> MultiPoly:
        return cls(variables, {})

    @classmethod
    def const(cls, variables: Sequence[str], c: Scalar) -> MultiPoly:
        n = len(variables)
        return cls(variables, {(0,) * n: c})

    @classmethod
    def var(cls, variables: Sequence[str], name: str, power: int = 1, coeff: Scalar = 1) -> MultiPoly:
        variables = tuple(variables)
        i = variables.index(name)
        e = [0] * len(variables)
        e[i] = power
        return cls(variables, {tuple(e): coeff})

    @classmethod
    def monomial(cls, variables: Sequence[str], exps: Sequence[int], coeff: Scalar = 1) -> MultiPoly:
        return cls(variables, {tuple(exps): coeff})

    # -- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(f"{v}^{k}" for v, k in zip(self.vars, e) if k)
            bits.append(f"({c!r})" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)

    def n_terms(self) -> int:
        return len(self.terms)

    def _check_compat(self, other: MultiPoly) -> None:
        if self.vars != other.vars:
            raise UsageError(f"variable sets differ: {self.vars} vs {other.vars}")

    # -- ring operations ----------------------------------------------
    def __add__(self, other: MultiPoly) -> MultiPoly:
        self._check_compat(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e)
            if s is None:
                t[e] = c
            else:
                s = s + c
                if isinstance(s, Fraction):
                    s = _norm_rat(s)
                if s:
                    t[e] = s
                else:
                    del t[e]
        return MultiPoly(self.vars, t, _skip_norm=True)

    def __neg__(self) -> MultiPoly:
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()}, _skip_norm=True)

    def __sub__(self, other: MultiPoly) -> MultiPoly:
        return self + (-other)

    def __mul__(self, other: MultiPoly) -> MultiPoly:
        self._check_compat(other)
        # iterate over the smaller factor's terms in the outer loop
        a, b = (self.terms, other.terms) if len(self.terms) <= len(other.terms) else (other.terms, self.terms)
        t: dict[tuple, Scalar] = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                c = c1 * c2
                s = t.get(e)
                if s is None:
                    if c:
                        t[e] = c
                else:
                    s = s + c
                    if isinstance(s, Fraction):
                        s = _norm_rat(s)
                    if s:
                        t[e] = s
                    else:
                        del t[e]
        return MultiPoly(self.vars, t, _skip_norm=True)

    def scale(self, c: Scalar) -> MultiPoly:
        if isinstance(c, (int, Fraction)) and not c:
            return MultiPoly.zero(self.vars)
        if isinstance(c, (QLaurent, CycloQ)) and c.is_zero():
            return MultiPoly.zero(self.vars)
        out = {}
        for e, s in self.terms.items():
            v = s * c if not isinstance(s, (int, Fraction)) else c * s
            if isinstance(v, Fraction):
                v = _norm_rat(v)
            if v:
                out[e] = v
        return MultiPoly(self.vars, out, _skip_norm=True)

    def mul_monomial(self, exps: Sequence[int], coeff: Scalar = 1) -> MultiPoly:
        exps = tuple(exps)
        out = {}
        for e, c in self.terms.items():
            v = c * coeff
            if isinstance(v, Fraction):
                v = _norm_rat(v)
            if v:
                out[tuple(x + y for x, y in zip(e, exps))] = v
        return MultiPoly(self.vars, out, _skip_norm=True)

    def scalar_divide(self, c: Scalar) -> MultiPoly:
        return MultiPoly(self.vars, {e: scalar_div(s, c) for e, s in self.terms.items()})

    def div_exact(self, d: MultiPoly) -> MultiPoly:
        """Exact division in the Laurent ring; IntegrityError if not exact.

        Multivariate long division against the lex-leading term of d, with a
        lazy max-heap over the remainder so each step costs O(|d| log T).
        Operands are first shifted into the non-negative orthant (a
        Laurent-unit shift, so exactness is unaffected).
        """
        import heapq

        self._check_compat(d)
        if d.is_zero():
            raise UsageError("division by the zero polynomial")
        if self.is_zero():
            return MultiPoly.zero(self.vars)
        if len(d.terms) == 1:
            ((e, c),) = d.terms.items()
            return self.mul_monomial(tuple(-x for x in e), scalar_div(1, c))
        if len(d.terms) == 2:
            return self._div_exact_binomial(d)
        n = len(self.vars)
        shift_p = tuple(min(e[i] for e in self.terms) for i in range(n))
        shift_d = tuple(min(e[i] for e in d.terms) for i in range(n))
        work = {tuple(x - y for x, y in zip(e, shift_p)): c for e, c in self.terms.items()}
        den = {tuple(x - y for x, y in zip(e, shift_d)): c for e, c in d.terms.items()}
        lead = max(den)
        lead_c = den[lead]
        den_rest = [(e, c) for e, c in den.items() if e != lead]
        heap = [tuple(-x for x in e) for e in work]
        heapq.heapify(heap)
        quot: dict[tuple, Scalar] = {}
        while heap:
            top = tuple(-x for x in heapq.heappop(heap))
            if top not in work:
                continue  # stale entry
            qe = tuple(x - y for x, y in zip(top, lead))
            if any(x < 0 for x in qe):
                raise IntegrityError("polynomial division is not exact")
            qc = scalar_div(work.pop(top), lead_c)
            quot[qe] = qc
            for e, c in den_rest:
                ee = tuple(x + y for x, y in zip(qe, e))
                s = work.get(ee, None)
                v = qc * c
                if s is None:
                    work[ee] = -v
                    heapq.heappush(heap, tuple(-x for x in ee))
                else:
                    s = s - v
                    if isinstance(s, Fraction):
                        s = _norm_rat(s)
                    if s:
                        work[ee] = s
                    else:
                        del work[ee]
        if work:
            raise IntegrityError("polynomial division is not exact")
        delta = tuple(x - y for x, y in zip(shift_p, shift_d))
        return MultiPoly(self.vars, {tuple(x + y for x, y in zip(e, delta)): c for e, c in quot.items()},
                         _skip_norm=True)

    def _div_exact_binomial(self, d: MultiPoly) -> MultiPoly:
        """Linear-time exact division by a two-term divisor.

        The divisor's two exponents differ by a direction vector; the
        dividend splits into lattice lines parallel to it, and each line is
        divided synthetically.
        """
        (e_hi, e_lo) = sorted(d.terms, reverse=True)
        c_hi, c_lo = d.terms[e_hi], d.terms[e_lo]
        direction = tuple(x - y for x, y in zip(e_hi, e_lo))
        i0 = next(k for k, x in enumerate(direction) if x)
        step = direction[i0]
        # group dividend terms into lattice lines e = base + t*direction;
        # distinct lines never share a base key
        lines: dict[tuple, dict[int, Scalar]] = {}
        for e, c in self.terms.items():
            t = e[i0] // step
            base = tuple(x - t * y for x, y in zip(e, direction))
            lines.setdefault(base, {})[t] = c
        out: dict[tuple, Scalar] = {}
        for base, coeffs in lines.items():
            # along the line the divisor reads  c_hi*Y + c_lo  (Y = one step);
            # synthetic division top-down, quotient coefficient at Y^(t-1)
            hi, lo = max(coeffs), min(coeffs)
            for t in range(hi, lo, -1):
                cur = coeffs.pop(t, 0)
                if not cur:
                    continue
                qc = scalar_div(cur, c_hi)
                e = tuple(b + (t - 1) * x - y for b, x, y in zip(base, direction, e_lo))
                out[e] = qc
                low = coeffs.get(t - 1, 0) - qc * c_lo
                if isinstance(low, Fraction):
                    low = _norm_rat(low)
                coeffs[t - 1] = low
            if any(v for v in coeffs.values()):
                raise IntegrityError("polynomial division is not exact")
        return MultiPoly(self.vars, out, _skip_norm=True)

    # -- substitutions --------------------------------------------------
    def swap_vars(self, name_a: str, name_b: str) -> MultiPoly:
        """Interchange two variables (the exchange involution tau)."""
        i = self.vars.index(name_a)
        j = self.vars.index(name_b)
        out = {}
        for e, c in self.terms.items():
            l = list(e)
            l[i], l[j] = l[j], l[i]
            out[tuple(l)] = c
        return MultiPoly(self.vars, out, _skip_norm=True)

    def substitute_monomial(self, name: str, coeff: Scalar, exps: Sequence[int]) -> MultiPoly:
        """Substitute ``name -> coeff * prod(vars^exps)`` (an invertible monomial
        image, e.g. w -> c*w, w -> c/w, or a constant c with exps = 0).

        A constant image of zero is rejected when the variable occurs with a
        negative exponent.
        """
        i = self.vars.index(name)
        exps = tuple(exps)
        zero_c = (isinstance(coeff, (int, Fraction)) and not coeff) or \
                 (isinstance(coeff, (QLaurent, CycloQ)) and coeff.is_zero())
        powers: dict[int, Scalar] = {0: 1}
        t: dict[tuple, Scalar] = {}
        for e, c in self.terms.items():
            k = e[i]
            if k < 0 and zero_c:
                raise UsageError("zero substituted into a negative exponent")
            if zero_c and k > 0:
                continue
            ck = powers.get(k)
            if ck is None:
                if k >= 0:
                    ck = coeff
                    for _ in range(k - 1):
                        ck = ck * coeff
                else:
                    inv = scalar_div(1, coeff)
                    ck = inv
                    for _ in range(-k - 1):
                        ck = ck * inv
                powers[k] = ck
            base = list(e)
            base[i] = 0
            ee = tuple(b + k * x for b, x in zip(base, exps))
            v = c * ck if not isinstance(ck, (int, Fraction)) or not isinstance(c, (int, Fraction)) else _norm_rat(c * ck)
            s = t.get(ee)
            if s is None:
                if v:
                    t[ee] = v
            else:
                s = s + v
                if isinstance(s, Fraction):
                    s = _norm_rat(s)
                if s:
                    t[ee] = s
                else:
                    del t[ee]
        return MultiPoly(self.vars, t, _skip_norm=True)

    def substitute_scalar(self, name: str, value: Scalar) -> MultiPoly:
        return self.substitute_monomial(name, value, (0,) * len(self.vars))

    def eval(self, assignment: Mapping[str, Scalar]) -> Scalar:
        """Total evaluation; exact scalar result."""
        missing = set(self.vars) - set(assignment)
        if missing:
            raise UsageError(f"assignment missing variables {sorted(missing)}")
        vals = [assignment[v] for v in self.vars]
        acc: Scalar | None = None
        for e, c in self.terms.items():
            v = c
            for x, k in zip(vals, e):
                if k == 0:
                    continue
                if k < 0:
                    x = scalar_div(1, x)
                    k = -k
                for _ in range(k):
                    v = v * x
            acc = v if acc is None else acc + v
        if acc is None:
            return 0
        return _norm_rat(acc) if isinstance(acc, Fraction) else acc

    def divided_difference(self, name_i: str, name_j: str) -> MultiPoly:
        """(tau p - p) / (w_j - w_i) where tau swaps the two variables.

        Always exact (the numerator is antisymmetric); computed termwise via
        the telescoping identity, never by long division.
        """
        i = self.vars.index(name_i)
        j = self.vars.index(name_j)
        t: dict[tuple, Scalar] = {}

        def emit(e: tuple, c: Scalar) -> None:
            s = t.get(e)
            if s is None:
                t[e] = c
            else:
                s = s + c
                if isinstance(s, Fraction):
                    s = _norm_rat(s)
                if s:
                    t[e] = s
                else:
                    del t[e]

        for e, c in self.terms.items():
            a, b = e[i], e[j]
            if a == b:
                continue
            base = list(e)
            if a > b:
                # + sum_{k=0}^{a-b-1} w_i^(b+k) w_j^(a-1-k)
                for k in range(a - b):
                    base[i] = b + k
                    base[j] = a - 1 - k
                    emit(tuple(base), c)
            else:
                nc = -c
                for k in range(b - a):
                    base[i] = a + k
                    base[j] = b - 1 - k
                    emit(tuple(base), nc)
        return MultiPoly(self.vars, t, _skip_norm=True)

    # -- inspection ----------------------------------------------------
    def degree(self, name: str) -> int:
        """Max exponent of one variable (0 for the zero polynomial)."""
        if not self.terms:
            return 0
        i = self.vars.index(name)
        return max(e[i] for e in self.terms)

    def min_degree(self, name: str) -> int:
        if not self.terms:
            return 0
        i = self.vars.index(name)
        return min(e[i] for e in self.terms)

    def total_degrees(self) -> tuple[int, int]:
        """(min, max) total degree over all monomials."""
        if not self.terms:
            return (0, 0)
        sums = [sum(e) for e in self.terms]
        return (min(sums), max(sums))

    def is_homogeneous(self) -> bool:
        lo, hi = self.total_degrees()
        return lo == hi

    def map_coefficients(self, fn: Callable[[Scalar], Scalar]) -> MultiPoly:
        return MultiPoly(self.vars, {e: fn(c) for e, c in self.terms.items()})

    def restrict_vars(self, variables: Sequence[str]) -> MultiPoly:
        """Project onto a subset of variables; unused variables must not occur."""
        variables = tuple(variables)
        keep = [self.vars.index(v) for v in variables]
        drop = [k for k in range(len(self.vars)) if self.vars[k] not in variables]
        out = {}
        for e, c in self.terms.items():
            if any(e[k] for k in drop):
                raise UsageError("polynomial involves a dropped variable")
            out[tuple(e[k] for k in keep)] = c
        return MultiPoly(variables, out, _skip_norm=True)

    def extend_vars(self, variables: Sequence[str]) -> MultiPoly:
        """Reinterpret in a larger variable tuple (superset, any order)."""
        variables = tuple(variables)
        pos = [variables.index(v) for v in self.vars]
        n = len(variables)
        out = {}
        for e, c in self.terms.items():
            ee = [0] * n
            for p, k in zip(pos, e):
                ee[p] = k
            out[tuple(ee)] = c
        return MultiPoly(variables, out, _skip_norm=True)

    # -- q-outer view (for vars starting with "q") ----------------------
    def as_q_outer(self) -> dict[tuple, QLaurent]:
        """Regroup a rational-coefficient poly in (q, w...) as {w-monomial: QLaurent}."""
        if not self.vars or self.vars[0] != "q":
            raise UsageError("as_q_outer requires leading variable 'q'")
        out: dict[tuple, dict[int, Rat]] = {}
        for e, c in self.terms.items():
            w = e[1:]
            out.setdefault(w, {})[e[0]] = c
        return {w: QLaurent(t) for w, t in sorted(out.items())}

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "variables": list(self.vars),
            "terms": [[list(e), scalar_to_json(c)] for e, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping, scalar: str = "rat") -> MultiPoly:
        load = {"rat": rat_from_str, "qlaurent": QLaurent.from_json, "cyclo": CycloQ.from_json}[scalar]
        return cls(data["variables"], {tuple(e): load(c) for e, c in data["terms"]})

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True).encode()


class TruncSeries:
    """Power series in the expansion parameter h, truncated above ``order``.

    Coefficients are MultiPoly over the rationals in the additive variables
    (z_1..z_r, A).  Arithmetic is closed under the truncation.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Sequence[MultiPoly]):
        if len(coeffs) != order + 1:
            raise UsageError("need exactly order+1 coefficients")
        self.order = order
        self.coeffs = list(coeffs)

    @classmethod
    def zero(cls, order: int, variables: Sequence[str]) -> TruncSeries:
        return cls(order, [MultiPoly.zero(variables) for _ in range(order + 1)])

    def __add__(self, other: TruncSeries) -> TruncSeries:
        n = min(self.order, other.order)
        return TruncSeries(n, [self.coeffs[k] + other.coeffs[k] for k in range(n + 1)])

    def __mul__(self, other: TruncSeries) -> TruncSeries:
        n = min(self.order, other.order)
        vars_ = self.coeffs[0].vars
        out = [MultiPoly.zero(vars_) for _ in range(n + 1)]
        for a in range(n + 1):
            ca = self.coeffs[a]
            if ca.is_zero():
                continue
            for b in range(n + 1 - a):
                cb = other.coeffs[b]
                if cb.is_zero():
                    continue
                out[a + b] = out[a + b] + ca * cb
        return TruncSeries(n, out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def leading(self) -> tuple[int, MultiPoly]:
        """(order, coefficient) of the first nonzero term; IntegrityError if all vanish."""
        for k, c in enumerate(self.coeffs):
            if not c.is_zero():
                return k, c
        raise IntegrityError("series vanishes to the stated order")


def rational_jet(p: MultiPoly, n_w: int, order: int,
                 zvar_names: Sequence[str] | None = None) -> TruncSeries:
    """Expand a (q, w1..wn)-polynomial around the scaling point.

    Substitutes q = -exp(-h*A/2) and w_i = exp(-h*z_i) and returns the
    series in h to the requested order.  Each monomial c*q^k*w^e maps to
    c*(-1)^k * exp(-h*L) with the linear form L = k*A/2 + sum e_i z_i, so
    the h^m coefficient is an exact polynomial in (z_1..z_n, A).
    """
    if p.vars[0] != "q" or len(p.vars) != n_w + 1:
        raise UsageError("rational_jet expects variables (q, w1..wn)")
    zvars = tuple(zvar_names) if zvar_names else tuple(f"z{i}" for i in range(1, n_w + 1))
    out_vars = zvars + ("A",)
    nz = len(out_vars)
    coeffs: list[dict[tuple, Scalar]] = [dict() for _ in range(order + 1)]

    def emit(m: int, e: tuple, c: Scalar) -> None:
        t = coeffs[m]
        s = t.get(e)
        if s is None:
            if c:
                t[e] = c
        else:
            s = _norm_rat(s + c)
            if s:
                t[e] = s
            else:
                del t[e]

    one = (0,) * nz
    for e, c in p.terms.items():
        k = e[0]
        base_c = _norm_rat(-c if k % 2 else c)
        # the linear form -L over (z..., A)
        neg_l: dict[tuple, Scalar] = {}
        for i, x in enumerate(e[1:]):
            if x:
                ee = [0] * nz
                ee[i] = 1
                neg_l[tuple(ee)] = -x
        if k:
            ee = [0] * nz
            ee[-1] = 1
            neg_l[tuple(ee)] = _norm_rat(Fraction(-k, 2))
        # exp(-hL): the h^m coefficient is (-L)^m / m!
        emit(0, one, base_c)
        power: dict[tuple, Scalar] = {one: 1}
        for m in range(1, order + 1):
            new: dict[tuple, Scalar] = {}
            for pe, pc in power.items():
                for le, lv in neg_l.items():
                    ee = tuple(x + y for x, y in zip(pe, le))
                    s = new.get(ee, 0) + pc * lv
                    if s:
                        new[ee] = _norm_rat(s)
                    else:
                        new.pop(ee, None)
            power = new
            if not power:
                break
            inv_f = Fraction(1, factorial(m))
            for pe, pc in power.items():
                emit(m, pe, _norm_rat(base_c * pc * inv_f))
    return TruncSeries(order, [MultiPoly(out_vars, t) for t in coeffs])
