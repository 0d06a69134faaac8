"""Compiled numeric kernels for univariate polynomials.

Coefficient arrays are float64, ascending powers.  The Python-facing API in
``univar_roots`` and ``feasibility`` wraps these; nothing here validates
inputs.
"""

import numpy as np
from numba import njit

# coefficients below TRIM_TOL * max|c| are dropped from the top
TRIM_TOL = 1e-12
# a Euclidean remainder below REM_TOL * scale counts as identically zero
REM_TOL = 1e-10
# a sequence value below ZERO_TOL * (sum |c_k| |x|^k) counts as zero
ZERO_TOL = 1e-12
# Descartes coefficients below this (relative) are ignored
DESCARTES_TOL = 1e-13

STATUS_OK = 0
STATUS_ZERO_POLY = -1
STATUS_ENDPOINT_ROOT = -2


@njit(cache=True)
def degree(c, tol):
    """Index of the highest coefficient above ``tol * max|c|``; -1 for zero."""
    m = 0.0
    for k in range(c.size):
        if abs(c[k]) > m:
            m = abs(c[k])
    if m == 0.0:
        return -1
    for k in range(c.size - 1, -1, -1):
        if abs(c[k]) > tol * m:
            return k
    return -1


@njit(cache=True)
def horner(c, deg, x):
    v = 0.0
    for k in range(deg, -1, -1):
        v = v * x + c[k]
    return v


@njit(cache=True)
def magnitude(c, deg, x):
    """``sum |c_k| |x|^k``, the natural scale of ``c(x)``'s rounding error."""
    v = 0.0
    ax = abs(x)
    for k in range(deg, -1, -1):
        v = v * ax + abs(c[k])
    return v


@njit(cache=True)
def _normalize(c, deg):
    m = 0.0
    for k in range(deg + 1):
        if abs(c[k]) > m:
            m = abs(c[k])
    if m > 0.0:
        for k in range(deg + 1):
            c[k] /= m


@njit(cache=True)
def remainder(num, dn, den, dd, out):
    """Euclidean remainder of ``num`` (degree ``dn``) by ``den`` (degree ``dd``).

    Writes into ``out`` and returns ``(degree, scale)``; degree is -1 for a
    vanishing remainder.  ``scale`` bounds the magnitude of terms that
    cancelled and is used for the vanishing test.
    """
    for k in range(out.size):
        out[k] = 0.0
    for k in range(dn + 1):
        out[k] = num[k]
    lead = den[dd]
    scale = 1.0
    for k in range(dn + 1):
        scale = max(scale, abs(num[k]))
    for top in range(dn, dd - 1, -1):
        q = out[top] / lead
        if abs(q) > scale:
            scale = abs(q)
        for j in range(dd + 1):
            out[top - dd + j] -= q * den[j]
        out[top] = 0.0
    r = dd - 1
    while r >= 0 and abs(out[r]) <= REM_TOL * scale:
        out[r] = 0.0
        r -= 1
    return r, scale


@njit(cache=True)
def _derivative(c, deg, out):
    for k in range(out.size):
        out[k] = 0.0
    for k in range(1, deg + 1):
        out[k - 1] = k * c[k]


@njit(cache=True)
def _quotient(num, dn, den, dd):
    """Polynomial quotient ``num // den``."""
    rem = num[: dn + 1].copy()
    q = np.zeros(dn - dd + 1)
    lead = den[dd]
    for top in range(dn, dd - 1, -1):
        f = rem[top] / lead
        q[top - dd] = f
        for j in range(dd + 1):
            rem[top - dd + j] -= f * den[j]
    return q


@njit(cache=True)
def _raw_chain(p, deg):
    """Signed remainder chain of ``p`` (degree ``deg >= 0``).

    Returns ``(chain, degs, length, vanished)``: rows of ``chain`` are
    normalized members, ``vanished`` is True when a remainder vanished
    before reaching a constant.
    """
    n = deg + 1
    chain = np.zeros((n + 1, n))
    degs = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        chain[0, k] = p[k]
    _normalize(chain[0], deg)
    degs[0] = deg
    if deg == 0:
        return chain, degs, 1, False
    _derivative(chain[0], deg, chain[1])
    degs[1] = deg - 1
    _normalize(chain[1], deg - 1)
    length = 2
    while degs[length - 1] > 0:
        r, _ = remainder(chain[length - 2], degs[length - 2], chain[length - 1],
                         degs[length - 1], chain[length])
        if r < 0:
            for k in range(n):
                chain[length, k] = 0.0
            return chain, degs, length, True
        for k in range(r + 1):
            chain[length, k] = -chain[length, k]
        degs[length] = r
        _normalize(chain[length], r)
        length += 1
    return chain, degs, length, False


@njit(cache=True)
def sturm_chain(c):
    """Sturm sequence of ``c`` with square-free restart.

    Returns ``(chain, degs, length, restarted)``.  When the remainder chain
    degenerates (repeated roots) the last nonconstant member is the gcd of
    ``c`` and ``c'``; the chain is rebuilt on the quotient ``c / gcd``.
    """
    deg = degree(c, TRIM_TOL)
    p = c[: max(deg, 0) + 1].copy()
    if deg < 0:
        return np.zeros((1, 1)), np.zeros(1, dtype=np.int64), 0, False
    chain, degs, length, vanished = _raw_chain(p, deg)
    restarted = False
    for _ in range(4):
        if not vanished:
            break
        g = chain[length - 1]
        dg = degs[length - 1]
        d0 = degs[0]
        q = _quotient(chain[0], d0, g, dg)
        dq = degree(q, TRIM_TOL)
        chain, degs, length, vanished = _raw_chain(q, dq)
        restarted = True
    return chain, degs, length, restarted


@njit(cache=True)
def variations_at(chain, degs, length, x):
    count = 0
    last = 0.0
    for k in range(length):
        v = horner(chain[k], degs[k], x)
        if abs(v) <= ZERO_TOL * magnitude(chain[k], degs[k], x):
            continue
        if last != 0.0 and (v > 0.0) != (last > 0.0):
            count += 1
        last = v
    return count


@njit(cache=True)
def endpoint_is_root(c, deg, x, tol):
    return abs(horner(c, deg, x)) <= tol * magnitude(c, deg, x)


@njit(cache=True)
def count_roots(c, a, b, endpoint_tol):
    """Distinct real roots of ``c`` in ``(a, b)``, or a negative status."""
    deg = degree(c, TRIM_TOL)
    if deg < 0:
        return STATUS_ZERO_POLY
    if endpoint_is_root(c, deg, a, endpoint_tol) or endpoint_is_root(c, deg, b, endpoint_tol):
        return STATUS_ENDPOINT_ROOT
    if deg == 0:
        return 0
    chain, degs, length, _ = sturm_chain(c)
    return variations_at(chain, degs, length, a) - variations_at(chain, degs, length, b)


# margin under which a Bernstein bound is trusted to be negative
BERNSTEIN_TOL = 1e-12


@njit(cache=True)
def _bernstein_max(c, deg):
    """Largest Bernstein coefficient of ``c`` on ``[0, 1]``."""
    best = -np.inf
    for j in range(deg + 1):
        # b_j = sum_k C(j, k) / C(deg, k) c_k
        b = 0.0
        ratio = 1.0
        for k in range(j):
            b += ratio * c[k]
            ratio *= (j - k) / (deg - k)
        b += ratio * c[j]
        best = max(best, b)
    return best


@njit(cache=True)
def violates_on_unit(g, shift, endpoint_tol):
    """True when ``g(s) + shift >= 0`` for some ``s`` in ``[0, 1]``.

    Endpoints are tested first; an endpoint within ``endpoint_tol`` of zero
    (relative) counts as a violation.  Otherwise a Sturm count decides whether
    the interior holds a root.
    """
    h = g.copy()
    h[0] += shift
    deg = degree(h, TRIM_TOL)
    if deg < 0:
        return True
    scale = 0.0
    for k in range(deg + 1):
        scale = max(scale, abs(h[k]))
    h0 = h[0]
    h1 = horner(h, deg, 1.0)
    if h0 >= -endpoint_tol * scale or h1 >= -endpoint_tol * scale:
        return True
    if deg == 0:
        return False
    # sound shortcuts: Bernstein coefficients bound h on [0, 1] from above,
    # and any interior sample with h >= 0 is a witness
    if _bernstein_max(h, deg) < -BERNSTEIN_TOL * scale:
        return False
    for j in range(1, 4):
        if horner(h, deg, 0.25 * j) >= 0.0:
            return True
    chain, degs, length, _ = sturm_chain(h)
    return variations_at(chain, degs, length, 0.0) - variations_at(chain, degs, length, 1.0) > 0


@njit(cache=True)
def batch_violates_on_unit(G, degs, shift, endpoint_tol, stop_early):
    """Row-wise ``violates_on_unit``; ``G`` is ``(M, D)``."""
    M = G.shape[0]
    out = np.zeros(M, dtype=np.bool_)
    for m in range(M):
        out[m] = violates_on_unit(G[m, : degs[m] + 1], shift, endpoint_tol)
        if stop_early and out[m]:
            break
    return out


# ---------------------------------------------------------------------------
# continued-fraction isolation of positive roots


@njit(cache=True)
def _descartes(c, deg):
    m = 0.0
    for k in range(deg + 1):
        m = max(m, abs(c[k]))
    count = 0
    last = 0.0
    for k in range(deg + 1):
        v = c[k]
        if abs(v) <= DESCARTES_TOL * m:
            continue
        if last != 0.0 and (v > 0.0) != (last > 0.0):
            count += 1
        last = v
    return count


@njit(cache=True)
def _taylor_shift(c, deg, s):
    """In-place ``c(x) <- c(x + s)``."""
    for i in range(deg):
        for k in range(deg - 1, i - 1, -1):
            c[k] += s * c[k + 1]


@njit(cache=True)
def positive_root_upper_bound(c, deg):
    """Local-max-quadratic bound on the positive roots; 0 when there are none."""
    sign = 1.0 if c[deg] > 0 else -1.0
    used = np.ones(deg + 1)
    best = -np.inf
    found = False
    for i in range(deg):
        ai = sign * c[i]
        if ai >= 0.0:
            continue
        la = np.log2(-ai)
        qmin = np.inf
        jmin = -1
        for j in range(i + 1, deg + 1):
            aj = sign * c[j]
            if aj <= 0.0:
                continue
            q = (used[j] + la - np.log2(aj)) / (j - i)
            if q < qmin:
                qmin = q
                jmin = j
        if jmin >= 0:
            used[jmin] += 1.0
            found = True
            if qmin > best:
                best = qmin
    if not found:
        return 0.0
    return 2.0 ** best


@njit(cache=True)
def cauchy_bound(c, deg):
    lead = abs(c[deg])
    m = 0.0
    for k in range(deg):
        m = max(m, abs(c[k]) / lead)
    return 1.0 + m


# hard cap on the continued-fraction work stack
MAX_STACK = 4096


@njit(cache=True)
def _grow(polys, pdeg, mob):
    cap = polys.shape[0]
    p2 = np.zeros((2 * cap, polys.shape[1]))
    d2 = np.zeros(2 * cap, dtype=np.int64)
    m2 = np.zeros((2 * cap, 4))
    p2[:cap] = polys
    d2[:cap] = pdeg
    m2[:cap] = mob
    return p2, d2, m2


@njit(cache=True)
def isolate_positive(c):
    """Continued-fraction (Vincent-Akritas-Strzebonski) isolation.

    Returns a ``(k, 2)`` array of intervals ``[lo, hi]`` inside
    ``(0, cauchy bound]``, each holding one distinct positive root
    (``lo == hi`` marks an exactly located root).
    """
    deg0 = degree(c, TRIM_TOL)
    out = np.zeros((max(deg0, 1) * 4 + 4, 2))
    nout = 0
    if deg0 <= 0:
        return out[:0]
    p0 = c[: deg0 + 1].copy()
    # strip roots at zero
    while deg0 > 0 and abs(p0[0]) <= TRIM_TOL * np.max(np.abs(p0[: deg0 + 1])):
        for k in range(deg0):
            p0[k] = p0[k + 1]
        p0[deg0] = 0.0
        deg0 -= 1
    if deg0 == 0:
        return out[:0]
    upper = cauchy_bound(p0, deg0)
    n = deg0 + 1
    cap = 32
    polys = np.zeros((cap, n))
    pdeg = np.zeros(cap, dtype=np.int64)
    mob = np.zeros((cap, 4))
    top = 0
    polys[0, :] = p0[:n]
    _normalize(polys[0], deg0)
    pdeg[0] = deg0
    mob[0, 0] = 1.0
    mob[0, 3] = 1.0
    top = 1
    work = np.zeros(n)
    rev = np.zeros(n)
    budget = 20000
    while top > 0 and budget > 0:
        budget -= 1
        top -= 1
        d = pdeg[top]
        for k in range(n):
            work[k] = polys[top, k]
        a, b, cc, dd = mob[top, 0], mob[top, 1], mob[top, 2], mob[top, 3]
        v = _descartes(work, d)
        if v == 0:
            continue
        lo = b / dd
        hi = a / cc if cc != 0.0 else upper
        if v == 1 or abs(hi - lo) <= 1e-15 * max(abs(lo), abs(hi), 1e-300):
            if nout < out.shape[0]:
                out[nout, 0] = min(lo, hi)
                out[nout, 1] = min(max(lo, hi), upper)
                nout += 1
            continue
        # move past roots below one by a lower bound
        for k in range(d + 1):
            rev[k] = work[d - k]
        ubr = positive_root_upper_bound(rev, d)
        if ubr > 0.0:
            lb = 1.0 / ubr
            if lb > 1.0:
                _taylor_shift(work, d, lb)
                b = a * lb + b
                dd = cc * lb + dd
                _normalize(work, d)
                scale = np.max(np.abs(work[: d + 1]))
                if abs(work[0]) <= TRIM_TOL * scale:
                    r = b / dd
                    if nout < out.shape[0]:
                        out[nout, 0] = r
                        out[nout, 1] = r
                        nout += 1
                    for k in range(d):
                        work[k] = work[k + 1]
                    work[d] = 0.0
                    d -= 1
                    if d == 0:
                        continue
        if top + 2 > cap:
            if cap >= MAX_STACK:
                break
            polys, pdeg, mob = _grow(polys, pdeg, mob)
            cap = polys.shape[0]
        # right half: x -> x + 1
        p1 = polys[top]
        for k in range(n):
            p1[k] = work[k]
        _taylor_shift(p1, d, 1.0)
        d1 = d
        scale = np.max(np.abs(p1[: d1 + 1]))
        if abs(p1[0]) <= TRIM_TOL * scale:
            r = (a + b) / (cc + dd)
            if nout < out.shape[0]:
                out[nout, 0] = r
                out[nout, 1] = r
                nout += 1
            for k in range(d1):
                p1[k] = p1[k + 1]
            p1[d1] = 0.0
            d1 -= 1
        _normalize(p1, d1)
        pdeg[top] = d1
        mob[top, 0] = a
        mob[top, 1] = a + b
        mob[top, 2] = cc
        mob[top, 3] = cc + dd
        keep_right = d1 > 0
        # left half: x -> 1 / (1 + x)
        p2 = polys[top + 1] if keep_right else polys[top]
        slot = top + 1 if keep_right else top
        for k in range(n):
            p2[k] = 0.0
        for k in range(d + 1):
            p2[k] = work[d - k]
        _taylor_shift(p2, d, 1.0)
        _normalize(p2, d)
        pdeg[slot] = d
        mob[slot, 0] = b
        mob[slot, 1] = a + b
        mob[slot, 2] = dd
        mob[slot, 3] = cc + dd
        top = slot + 1
    return out[:nout]


@njit(cache=True)
def _two_prod(a, b):
    p = a * b
    f = 134217729.0  # 2^27 + 1
    t = f * a
    ah = t - (t - a)
    al = a - ah
    t = f * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True)
def comp_horner(c, deg, x):
    """Compensated Horner evaluation (about twice the working precision)."""
    s = c[deg]
    err = 0.0
    for k in range(deg - 1, -1, -1):
        p, pe = _two_prod(s, x)
        s_new = p + c[k]
        bb = s_new - p
        se = (p - (s_new - bb)) + (c[k] - bb)
        s = s_new
        err = err * x + (pe + se)
    return s + err


@njit(cache=True)
def bisect_root(c, lo, hi, tol):
    """Root of ``c`` in ``[lo, hi]`` by Newton steps safeguarded with bisection.

    Returns ``nan`` when the interval carries no sign change.
    """
    deg = degree(c, TRIM_TOL)
    flo = comp_horner(c, deg, lo)
    fhi = comp_horner(c, deg, hi)
    # a root sitting on an endpoint belongs to a neighbouring interval; the
    # sign just inside is then opposite to the other end's
    if flo == 0.0 and fhi == 0.0:
        return np.nan
    if flo == 0.0:
        flo = -fhi
    elif fhi == 0.0:
        fhi = -flo
    if (flo > 0.0) == (fhi > 0.0):
        return np.nan
    # Newton steps while they stay inside the bracket and shrink it fast,
    # bisection otherwise
    x = 0.5 * (lo + hi)
    last = hi - lo
    for _ in range(200):
        if hi - lo <= tol:
            break
        fx = comp_horner(c, deg, x)
        if fx == 0.0:
            return x
        if (fx > 0.0) == (flo > 0.0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        df = 0.0
        for k in range(deg, 0, -1):
            df = df * x + k * c[k]
        xn = x - fx / df if df != 0.0 else lo - 1.0
        if lo < xn < hi and abs(xn - x) < 0.5 * last:
            last = abs(xn - x)
            if last <= 0.25 * tol:
                # converged; one more step lands on the double nearest the root
                return xn
            x = xn
        else:
            last = hi - lo
            x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi) if hi - lo <= tol else x


@njit(cache=True)
def batch_positive_roots(C, rel_tol):
    """Refined positive roots of every row of ``C``.

    Returns ``(roots, counts)``; row ``m`` of ``roots`` holds ``counts[m]``
    ascending roots, padded with ``nan``.  Intervals without a sign change
    (even-multiplicity clusters) are skipped.
    """
    M, L = C.shape
    roots = np.full((M, L), np.nan)
    counts = np.zeros(M, dtype=np.int64)
    for m in range(M):
        iv = isolate_positive(C[m])
        deg = degree(C[m], TRIM_TOL)
        n = 0
        for r in range(iv.shape[0]):
            lo = iv[r, 0]
            hi = iv[r, 1]
            if lo == hi:
                x = lo
            else:
                x = bisect_root(C[m, : deg + 1], lo, hi, rel_tol * hi)
            if np.isnan(x) or x <= 0.0:
                continue
            roots[m, n] = x
            n += 1
        counts[m] = n
        roots[m, :n] = np.sort(roots[m, :n])
    return roots, counts


# ---------------------------------------------------------------------------
# constraint composition G(p^(i)(s T)) and batched feasibility
#
# A list of constraints is packed into flat arrays: ``orders[j]`` is the
# derivative read by constraint j, its terms are ``coef[starts[j]:starts[j+1]]``
# with exponents ``expo[...]`` (rows e1, e2, e3), and ``shifts[j]`` is added
# to G before the sign test (``-epsilon`` for feasibility, ``+tol`` for
# tightness).


@njit(cache=True)
def _conv(a, na, b, nb, out):
    for k in range(na + nb - 1):
        out[k] = 0.0
    for i in range(na):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(nb):
            out[i + j] += ai * b[j]
    return na + nb - 1


@njit(cache=True)
def compose_piece(c, T, order, tcoef, texpo, out, pw, t1, t2):
    """Write ``G`` composed with derivative ``order`` of piece ``c`` (rows are
    ascending powers, columns axes) in the variable ``s = t / T`` into
    ``out``; returns the number of coefficients written.

    ``pw``, ``t1``, ``t2`` are workspaces at least as large as
    ``_workspace`` reports.
    """
    n = c.shape[0]
    base = max(n - order, 1)
    maxe = 1
    dg = 0
    for t in range(tcoef.size):
        dg = max(dg, texpo[t, 0] + texpo[t, 1] + texpo[t, 2])
        for a in range(3):
            maxe = max(maxe, texpo[t, a])
    width = dg * (base - 1) + 1
    for k in range(width):
        out[k] = 0.0
    for a in range(3):
        # derivative coefficients of axis a, scaled by T^k
        scale = 1.0
        for k in range(base):
            src = k + order
            if src < n:
                ff = 1.0
                for j in range(order):
                    ff *= src - j
                pw[a, 1, k] = c[src, a] * ff * scale
            else:
                pw[a, 1, k] = 0.0
            scale *= T
        pw[a, 0, 0] = 1.0
        for e in range(2, maxe + 1):
            _conv(pw[a, e - 1], (e - 1) * (base - 1) + 1, pw[a, 1], base, pw[a, e])
    for t in range(tcoef.size):
        e1, e2, e3 = texpo[t, 0], texpo[t, 1], texpo[t, 2]
        n1 = _conv(pw[0, e1], e1 * (base - 1) + 1, pw[1, e2], e2 * (base - 1) + 1, t1)
        n2 = _conv(t1, n1, pw[2, e3], e3 * (base - 1) + 1, t2)
        for k in range(n2):
            out[k] += tcoef[t] * t2[k]
    return width


@njit(cache=True)
def _workspace(n, orders, expo):
    """Workspaces large enough for every packed constraint."""
    maxe = 1
    width = 1
    for j in range(orders.size):
        base = max(n - orders[j], 1)
        width = max(width, base)
    for t in range(expo.shape[0]):
        s = expo[t, 0] + expo[t, 1] + expo[t, 2]
        width = max(width, s * (n - 1) + 1)
        for a in range(3):
            maxe = max(maxe, expo[t, a])
    pw = np.zeros((3, maxe + 1, width))
    return pw, np.zeros(width), np.zeros(width), np.zeros(width)


@njit(cache=True)
def batch_compose(C, T, order, tcoef, texpo):
    """``G`` rows for every piece of ``C`` (``(M, N+1, 3)``) for one constraint."""
    M = C.shape[0]
    orders = np.array([order])
    pw, g, t1, t2 = _workspace(C.shape[1], orders, texpo)
    width = 1
    base = max(C.shape[1] - order, 1)
    for t in range(texpo.shape[0]):
        width = max(width, (texpo[t, 0] + texpo[t, 1] + texpo[t, 2]) * (base - 1) + 1)
    out = np.zeros((M, width))
    for m in range(M):
        compose_piece(C[m], T[m], order, tcoef, texpo, out[m], pw, t1, t2)
    return out


@njit(cache=True)
def _piece_violates(c, T, orders, starts, coef, expo, shifts, endpoint_tol, pw, g, t1, t2):
    for j in range(orders.size):
        lo, hi = starts[j], starts[j + 1]
        w = compose_piece(c, T, orders[j], coef[lo:hi], expo[lo:hi], g, pw, t1, t2)
        if violates_on_unit(g[:w], shifts[j], endpoint_tol):
            return True
    return False


@njit(cache=True)
def multi_violations(C, T, orders, starts, coef, expo, shifts, endpoint_tol, stop_early):
    """Per piece of ``C``: does any packed constraint fail somewhere on it?"""
    M = C.shape[0]
    pw, g, t1, t2 = _workspace(C.shape[1], orders, expo)
    out = np.zeros(M, dtype=np.bool_)
    for m in range(M):
        out[m] = _piece_violates(C[m], T[m], orders, starts, coef, expo, shifts,
                                 endpoint_tol, pw, g, t1, t2)
        if stop_early and out[m]:
            break
    return out


@njit(cache=True)
def _piece_coeffs(stacked, T, ainv_coeff, ainv_expo, out):
    n = stacked.shape[0]
    for r in range(n):
        for a in range(3):
            out[r, a] = 0.0
        for k in range(n):
            w = ainv_coeff[r, k]
            if w != 0.0:
                w *= T ** ainv_expo[r, k]
                for a in range(3):
                    out[r, a] += w * stacked[k, a]


@njit(cache=True)
def bc_violations(B, T, ainv_coeff, ainv_expo, orders, starts, coef, expo, shifts,
                  endpoint_tol):
    """Like ``multi_violations`` but from boundary conditions ``B``
    (``(K, N+1, 3)``) and durations ``T``."""
    K = B.shape[0]
    n = B.shape[1]
    pw, g, t1, t2 = _workspace(n, orders, expo)
    c = np.zeros((n, 3))
    out = np.zeros(K, dtype=np.bool_)
    for k in range(K):
        _piece_coeffs(B[k], T[k], ainv_coeff, ainv_expo, c)
        out[k] = _piece_violates(c, T[k], orders, starts, coef, expo, shifts,
                                 endpoint_tol, pw, g, t1, t2)
    return out


# relative margin above which a sampled maximum counts as a violation witness
WITNESS_TOL = 1e-9


@njit(cache=True)
def max_on_unit(g, deg):
    """Maximum of ``g`` on ``[0, 1]``.

    Local maxima of a 32-cell sample are polished by Newton steps on
    ``g'``; two maxima inside one cell would be missed, so callers use this
    only to steer searches, never to decide feasibility.
    """
    best = max(g[0], horner(g, deg, 1.0))
    if deg < 2:
        return best
    n = 32
    prev = g[0]
    cur = horner(g, deg, 1.0 / n)
    for k in range(1, n):
        nxt = horner(g, deg, (k + 1.0) / n)
        if cur >= prev and cur >= nxt:
            best = max(best, cur)
            s = k / n
            for _ in range(8):
                d1 = 0.0
                d2 = 0.0
                for j in range(deg, 1, -1):
                    d2 = d2 * s + j * (j - 1) * g[j]
                for j in range(deg, 0, -1):
                    d1 = d1 * s + j * g[j]
                if d2 >= 0.0:
                    break
                step = d1 / d2
                s -= step
                if s < (k - 1.0) / n or s > (k + 1.0) / n:
                    break
                best = max(best, horner(g, deg, s))
                if abs(step) < 1e-14:
                    break
        prev = cur
        cur = nxt
    return best


@njit(cache=True)
def _margin(c, T, orders, starts, coef, expo, shifts, scales, pw, g, t1, t2):
    """``max_j (max G_j + shift_j) / scale_j`` over the piece."""
    h = -np.inf
    for j in range(orders.size):
        lo, hi = starts[j], starts[j + 1]
        w = compose_piece(c, T, orders[j], coef[lo:hi], expo[lo:hi], g, pw, t1, t2)
        h = max(h, (max_on_unit(g, w - 1) + shifts[j]) / scales[j])
    return h


@njit(cache=True)
def bisect_durations(B, feas, infeas, rel_tol, band, ainv_coeff, ainv_expo, orders, starts,
                     coef, expo, shifts, scales, endpoint_tol):
    """Per task ``k``: move from the feasible duration ``feas[k]`` toward the
    infeasible ``infeas[k]`` and return a feasible duration at which some
    constraint is within ``band`` (relative to its scale) of tight.

    The bracket is kept by the exact check; the next trial comes from an
    Illinois step on the margin aimed at the middle of the band, with a
    bisection step whenever the same side moved twice running.  Stops once
    the feasible end is within ``band`` of tight and the bracket is close to
    the boundary (infeasible margin below ``band`` or relative width 1e-3),
    or when the bracket is ``rel_tol`` wide.
    """
    K = B.shape[0]
    n = B.shape[1]
    pw, g, t1, t2 = _workspace(n, orders, expo)
    c = np.zeros((n, 3))
    out = feas.copy()
    target = 0.0
    for k in range(K):
        f = feas[k]
        e = infeas[k]
        _piece_coeffs(B[k], f, ainv_coeff, ainv_expo, c)
        hf = min(_margin(c, f, orders, starts, coef, expo, shifts, scales, pw, g, t1, t2), -1e-300)
        _piece_coeffs(B[k], e, ainv_coeff, ainv_expo, c)
        he = max(_margin(c, e, orders, starts, coef, expo, shifts, scales, pw, g, t1, t2), 0.0)
        # hf/he are the true margins, wf/we the Illinois-weighted ones
        wf = hf
        we = he
        side = 0
        repeat = 0
        for _ in range(200):
            # a tight feasible end alone is not enough: the margin can sit at
            # zero over a whole range (a bound met at a fixed endpoint), so the
            # bracket must also be near the boundary, by margin or by width
            w = abs(e - f)
            near = he < band or w <= 1e-3 * max(f, e)
            if (hf > -band and near) or w <= rel_tol * max(f, e):
                break
            if repeat >= 2 or we == wf:
                mid = 0.5 * (f + e)
            else:
                mid = f + (target - wf) * (e - f) / (we - wf)
                lo_ = min(f, e)
                w = abs(e - f)
                mid = min(max(mid, lo_ + 1e-3 * w), lo_ + w - 1e-3 * w)
            _piece_coeffs(B[k], mid, ainv_coeff, ainv_expo, c)
            hm = _margin(c, mid, orders, starts, coef, expo, shifts, scales, pw, g, t1, t2)
            # a clearly positive margin is attained at an actual sample, which
            # already proves infeasibility; otherwise the exact check decides
            bad = hm > WITNESS_TOL or _piece_violates(c, mid, orders, starts, coef, expo,
                                                      shifts, endpoint_tol, pw, g, t1, t2)
            if bad:
                e = mid
                he = max(hm, 0.0)
                we = he
                new_side = 1
            else:
                f = mid
                hf = min(hm, -1e-300)
                wf = hf
                new_side = -1
            if new_side == side:
                repeat += 1
                # Illinois: halve the weight of the end that did not move
                if new_side == 1:
                    wf *= 0.5
                else:
                    we *= 0.5
            else:
                repeat = 0
            side = new_side
        out[k] = f
    return out
