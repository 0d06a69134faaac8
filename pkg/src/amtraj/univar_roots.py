"""Univariate real-root machinery: Sturm sequences, root counting,
continued-fraction isolation of positive roots and root refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .exceptions import EndpointRootError, InvalidPolynomialError, NoSignChangeError

__all__ = [
    "UnivariatePolynomial",
    "SturmSequence",
    "sturm_sequence",
    "raw_sturm_chain",
    "sign_variations",
    "count_roots_in_interval",
    "isolate_positive_roots",
    "refine_root",
    "positive_roots",
]

ENDPOINT_TOL = 1e-10


class UnivariatePolynomial:
    """Real polynomial with ascending coefficients.

    Leading coefficients below ``1e-12 * max|c|`` are trimmed; the zero
    polynomial has an empty coefficient vector and degree -1.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        c = np.atleast_1d(np.asarray(coefficients, dtype=float)).ravel()
        deg = K.degree(c, K.TRIM_TOL) if c.size else -1
        c = c[: deg + 1].copy()
        c.setflags(write=False)
        self.coefficients = c

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def is_zero(self) -> bool:
        return self.coefficients.size == 0

    def __call__(self, t):
        if self.is_zero():
            return np.zeros_like(np.asarray(t, dtype=float))
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def derivative(self) -> "UnivariatePolynomial":
        return UnivariatePolynomial(np.polynomial.polynomial.polyder(self.coefficients)
                                    if self.degree > 0 else [])

    def __repr__(self) -> str:
        return f"UnivariatePolynomial({self.coefficients.tolist()})"


def _poly(p) -> UnivariatePolynomial:
    return p if isinstance(p, UnivariatePolynomial) else UnivariatePolynomial(p)


@dataclass(frozen=True)
class SturmSequence:
    """``g_0 = p, g_1 = p', g_{k+1} = -rem(g_{k-1}, g_k)``.

    Members are stored rescaled to unit max-coefficient; positive scaling
    leaves every sign variation unchanged.  ``square_free`` records that a
    vanishing remainder forced a restart on ``p / gcd(p, p')``.
    """

    polys: tuple[UnivariatePolynomial, ...]
    square_free: bool = False
    _chain: np.ndarray | None = None
    _degs: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.polys)


def sturm_sequence(p) -> SturmSequence:
    """Sturm sequence of ``p``.

    The raw chain stops at a constant or at a vanishing remainder.  In the
    latter case (repeated roots) the returned sequence is that of the
    square-free part, which counts the same distinct roots.
    """
    p = _poly(p)
    if p.is_zero():
        raise InvalidPolynomialError("Sturm sequence of the zero polynomial")
    chain, degs, length, restarted = K.sturm_chain(p.coefficients)
    polys = tuple(UnivariatePolynomial(chain[k, : degs[k] + 1]) for k in range(length))
    return SturmSequence(polys, restarted, chain, degs[:length].copy())


def raw_sturm_chain(p) -> list[UnivariatePolynomial]:
    """Remainder chain without square-free restart (stops at a zero remainder)."""
    p = _poly(p)
    if p.is_zero():
        raise InvalidPolynomialError("Sturm sequence of the zero polynomial")
    chain, degs, length, _ = K._raw_chain(p.coefficients.copy(), p.degree)
    return [UnivariatePolynomial(chain[k, : degs[k] + 1]) for k in range(length)]


def sign_variations(seq: SturmSequence, t: float) -> int:
    """Sign changes of the sequence evaluated at ``t``, zero values skipped."""
    if seq._chain is None:
        width = max(q.degree for q in seq.polys) + 1
        chain = np.zeros((len(seq.polys), width))
        for k, q in enumerate(seq.polys):
            chain[k, : q.degree + 1] = q.coefficients
        degs = np.array([q.degree for q in seq.polys], dtype=np.int64)
    else:
        chain, degs = seq._chain, seq._degs
    return int(K.variations_at(chain, degs, len(seq.polys), float(t)))


def count_roots_in_interval(p, a: float, b: float) -> int:
    """Number of distinct real roots of ``p`` in the open interval ``(a, b)``."""
    p = _poly(p)
    if not a < b:
        raise ValueError(f"need a < b, got ({a}, {b})")
    if p.is_zero():
        raise InvalidPolynomialError("root count of the zero polynomial")
    r = K.count_roots(p.coefficients, float(a), float(b), ENDPOINT_TOL)
    if r == K.STATUS_ENDPOINT_ROOT:
        raise EndpointRootError(f"an endpoint of ({a}, {b}) is a root")
    return int(r)


def isolate_positive_roots(p) -> list[tuple[float, float]]:
    """Disjoint intervals, each holding exactly one distinct positive root.

    Uses continued fractions with Moebius bookkeeping; the last interval is
    capped by the Cauchy root bound.  A degenerate interval ``(r, r)`` means
    ``r`` was hit exactly during the transforms.
    """
    p = _poly(p)
    if p.is_zero():
        raise InvalidPolynomialError("cannot isolate roots of the zero polynomial")
    iv = K.isolate_positive(p.coefficients)
    return sorted((float(lo), float(hi)) for lo, hi in iv)


def refine_root(p, interval, tol: float = 1e-12) -> float:
    """Root inside an isolating interval, located to width ``tol``."""
    p = _poly(p)
    lo, hi = float(interval[0]), float(interval[1])
    if lo == hi:
        return lo
    r = K.bisect_root(p.coefficients, min(lo, hi), max(lo, hi), float(tol))
    if np.isnan(r):
        raise NoSignChangeError(f"no sign change of p on [{lo}, {hi}]")
    return float(r)


def positive_roots(p, rel_tol: float = 1e-10) -> list[float]:
    """All distinct positive roots with an odd-multiplicity sign change,
    refined to relative width ``rel_tol``."""
    p = _poly(p)
    roots = []
    for lo, hi in isolate_positive_roots(p):
        try:
            roots.append(refine_root(p, (lo, hi), rel_tol * max(hi, 1e-300)))
        except NoSignChangeError:
            continue
    return roots
