"""Compiled scalar kernels shared by the public modules.

Everything here works on plain floats/ints and numpy arrays so that numba can
compile it. Loss kinds and kernel kinds are passed as small integer codes; the
public wrappers in :mod:`mixsdca.losses` and :mod:`mixsdca.kernels` translate
their dataclasses into these codes.
"""
import math

import numpy as np
from numba import njit, vectorize

BCE = 0
SMOOTHED_HINGE = 1
QUADRATIC_HINGE = 2

RBF = 0
POLYNOMIAL = 1
LINEAR = 2

INF = np.inf

# conjugate arguments this close outside the domain are clamped back in
DOMAIN_SLACK = 1e-12

_INVPHI = 0.5 * (math.sqrt(5.0) - 1.0)
_MAX_GOLDEN_ITERS = 200
_MAX_BRACKET_ITERS = 200


# --------------------------------------------------------------------------
# base losses

@njit(cache=True)
def phi0(kind, gamma, s):
    if kind == BCE:
        if s > 0.0:
            return math.log1p(math.exp(-s))
        return -s + math.log1p(math.exp(s))
    if kind == SMOOTHED_HINGE:
        if s < 1.0 - gamma:
            return 1.0 - s - 0.5 * gamma
        if s < 1.0:
            return (s - 1.0) * (s - 1.0) / (2.0 * gamma)
        return 0.0
    t = 1.0 - s
    if t <= 0.0:
        return 0.0
    return t * t / (2.0 * gamma)


@njit(cache=True)
def dphi0(kind, gamma, s):
    if kind == BCE:
        if s >= 0.0:
            e = math.exp(-s)
            return -e / (1.0 + e)
        return -1.0 / (1.0 + math.exp(s))
    if kind == SMOOTHED_HINGE:
        if s < 1.0 - gamma:
            return -1.0
        if s < 1.0:
            return (s - 1.0) / gamma
        return 0.0
    if s < 1.0:
        return (s - 1.0) / gamma
    return 0.0


@njit(cache=True)
def conj_lower(kind):
    if kind == QUADRATIC_HINGE:
        return -INF
    return -1.0


@njit(cache=True)
def conj0(kind, gamma, a):
    lo = conj_lower(kind)
    if a > 0.0:
        if a > DOMAIN_SLACK:
            return INF
        a = 0.0
    if a < lo:
        if a < lo - DOMAIN_SLACK:
            return INF
        a = lo
    if kind == BCE:
        r = 0.0
        if a < 0.0:
            r -= a * math.log(-a)
        if a > -1.0:
            r += (1.0 + a) * math.log1p(a)
        return r
    return a + 0.5 * gamma * a * a


# --------------------------------------------------------------------------
# mixup loss and its conjugate

@njit(cache=True)
def phi_mup(kind, gamma, s, y):
    c1 = 0.5 * (1.0 + y)
    c2 = 0.5 * (1.0 - y)
    r = 0.0
    if c1 != 0.0:
        r += c1 * phi0(kind, gamma, s)
    if c2 != 0.0:
        r += c2 * phi0(kind, gamma, -s)
    return r


@njit(cache=True)
def dphi_mup(kind, gamma, s, y):
    c1 = 0.5 * (1.0 + y)
    c2 = 0.5 * (1.0 - y)
    r = 0.0
    if c1 != 0.0:
        r += c1 * dphi0(kind, gamma, s)
    if c2 != 0.0:
        r -= c2 * dphi0(kind, gamma, -s)
    return r


@njit(cache=True)
def infconv_bounds(kind, a, y):
    """Feasible u for the infimal convolution at conjugate argument ``a``.

    Returns ``(lo, hi)``; ``lo > hi`` signals an empty interval.
    """
    c1 = 0.5 * (1.0 + y)
    c2 = 0.5 * (1.0 - y)
    lo0 = conj_lower(kind)
    # u / c1 in dom and (u - a) / c2 in dom, dom = [lo0, 0]
    lo = max(c1 * lo0, a + c2 * lo0)
    hi = min(0.0, a)
    if lo > hi and lo - hi <= DOMAIN_SLACK:
        lo = hi
    return lo, hi


@njit(cache=True)
def _infconv_obj(kind, gamma, u, a, c1, c2):
    return (c1 * conj0(kind, gamma, u / c1)
            + c2 * conj0(kind, gamma, (u - a) / c2))


@njit(cache=True)
def mup_conj(kind, gamma, a, y, tol):
    """Conjugate of the mixup loss at ``a``; golden-section for |y| < 1."""
    if y >= 1.0:
        return conj0(kind, gamma, a)
    if y <= -1.0:
        return conj0(kind, gamma, -a)
    c1 = 0.5 * (1.0 + y)
    c2 = 0.5 * (1.0 - y)
    lo, hi = infconv_bounds(kind, a, y)
    if lo > hi:
        return INF
    f_hi = _infconv_obj(kind, gamma, hi, a, c1, c2)
    best = f_hi
    if lo == -INF:
        # convex in u: walk left from hi with doubling steps until it rises
        step = 1.0
        prev2 = hi
        prev = hi - step
        f_prev = _infconv_obj(kind, gamma, prev, a, c1, c2)
        if f_prev >= f_hi:
            lo = prev
        else:
            for _ in range(_MAX_BRACKET_ITERS):
                step *= 2.0
                cur = hi - step
                f_cur = _infconv_obj(kind, gamma, cur, a, c1, c2)
                if f_cur >= f_prev:
                    lo = cur
                    hi = prev2
                    break
                prev2 = prev
                prev = cur
                f_prev = f_cur
            best = min(best, f_prev)
    else:
        best = min(best, _infconv_obj(kind, gamma, lo, a, c1, c2))
    left = lo
    right = hi
    x1 = right - _INVPHI * (right - left)
    x2 = left + _INVPHI * (right - left)
    f1 = _infconv_obj(kind, gamma, x1, a, c1, c2)
    f2 = _infconv_obj(kind, gamma, x2, a, c1, c2)
    for _ in range(_MAX_GOLDEN_ITERS):
        if right - left < tol:
            break
        if f1 <= f2:
            right = x2
            x2 = x1
            f2 = f1
            x1 = right - _INVPHI * (right - left)
            f1 = _infconv_obj(kind, gamma, x1, a, c1, c2)
        else:
            left = x1
            x1 = x2
            f1 = f2
            x2 = left + _INVPHI * (right - left)
            f2 = _infconv_obj(kind, gamma, x2, a, c1, c2)
    return min(best, min(f1, f2))


@vectorize(["float64(int64, float64, float64)"], cache=True)
def phi0_u(kind, gamma, s):
    return phi0(kind, gamma, s)


@vectorize(["float64(int64, float64, float64)"], cache=True)
def dphi0_u(kind, gamma, s):
    return dphi0(kind, gamma, s)


@vectorize(["float64(int64, float64, float64)"], cache=True)
def conj0_u(kind, gamma, a):
    return conj0(kind, gamma, a)


@vectorize(["float64(int64, float64, float64, float64)"], cache=True)
def phi_mup_u(kind, gamma, s, y):
    return phi_mup(kind, gamma, s, y)


@vectorize(["float64(int64, float64, float64, float64)"], cache=True)
def dphi_mup_u(kind, gamma, s, y):
    return dphi_mup(kind, gamma, s, y)


@vectorize(["float64(int64, float64, float64, float64, float64)"], cache=True)
def mup_conj_u(kind, gamma, a, y, tol):
    return mup_conj(kind, gamma, a, y, tol)


# --------------------------------------------------------------------------
# level sets and the grid search for the approximate coefficient

@njit(cache=True)
def level_bounds(kind, gamma, y, level, xtol):
    """Endpoints of {z : phi_mup(z; y) <= level}; nan when unbounded."""
    lo = 0.0
    hi = 1.0
    ok = False
    for _ in range(_MAX_BRACKET_ITERS):
        if phi_mup(kind, gamma, hi, y) > level:
            ok = True
            break
        lo = hi
        hi *= 2.0
    if not ok:
        return np.nan, np.nan
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # float spacing exceeds xtol for large bounds
            break
        if phi_mup(kind, gamma, mid, y) <= level:
            lo = mid
        else:
            hi = mid
    upper = lo
    lo = -1.0
    hi = 0.0
    ok = False
    for _ in range(_MAX_BRACKET_ITERS):
        if phi_mup(kind, gamma, lo, y) > level:
            ok = True
            break
        hi = lo
        lo *= 2.0
    if not ok:
        return np.nan, np.nan
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi_mup(kind, gamma, mid, y) <= level:
            hi = mid
        else:
            lo = mid
    return hi, upper


@njit(cache=True)
def grid_point(k, m, bound, offset, sign):
    b = max(bound, 1e-300)
    return sign * math.exp((k / m) * (offset + math.log(b)) - offset)


@njit(cache=True)
def _grid_ok(kind, gamma, y, alpha_i, zeta, sign):
    g = -dphi_mup(kind, gamma, zeta, y)
    if sign < 0.0:
        return g <= alpha_i
    return g >= alpha_i


@njit(cache=True)
def select_zeta(kind, gamma, y, alpha_i, b_lo, b_up, a_dia, m, offset,
                tight, linear):
    """Pick the grid point used for the approximate coefficient.

    The admissible grid points always form an initial run k = 0..kc because
    -grad(phi_mup) is nonincreasing; the default takes k = 0, ``tight`` takes
    k = kc. Returns 0.0 when no grid point is admissible.
    """
    if a_dia < alpha_i:
        sign = -1.0
        bound = -b_lo
    else:
        sign = 1.0
        bound = b_up
    z0 = grid_point(0, m, bound, offset, sign)
    if not _grid_ok(kind, gamma, y, alpha_i, z0, sign):
        return 0.0
    if not tight:
        return z0
    kc = 0
    if linear:
        for k in range(1, m + 1):
            if _grid_ok(kind, gamma, y, alpha_i,
                        grid_point(k, m, bound, offset, sign), sign):
                kc = k
            else:
                break
    else:
        if _grid_ok(kind, gamma, y, alpha_i,
                    grid_point(m, m, bound, offset, sign), sign):
            kc = m
        else:
            lo = 0
            hi = m
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _grid_ok(kind, gamma, y, alpha_i,
                            grid_point(mid, m, bound, offset, sign), sign):
                    lo = mid
                else:
                    hi = mid
            kc = lo
    return grid_point(kc, m, bound, offset, sign)


@njit(cache=True)
def f_tilde(kind, gamma, z, y, alpha_i, b_lo, b_up, a_dia, m, offset,
            tight, linear):
    zeta = select_zeta(kind, gamma, y, alpha_i, b_lo, b_up, a_dia, m, offset,
                       tight, linear)
    at = -dphi_mup(kind, gamma, zeta, y)
    return (phi_mup(kind, gamma, z, y) - at * zeta + alpha_i * z
            - phi_mup(kind, gamma, zeta, y))


@njit(cache=True)
def aux_table(kind, gamma, ys, level, xtol):
    """Per-label level-set bounds and alpha-diamond (rows: b_lo, b_up, a_dia)."""
    k = ys.shape[0]
    out = np.empty((3, k))
    for i in range(k):
        y = ys[i]
        if abs(y) >= 1.0:
            out[0, i] = np.nan
            out[1, i] = np.nan
        else:
            b_lo, b_up = level_bounds(kind, gamma, y, level, xtol)
            out[0, i] = b_lo
            out[1, i] = b_up
        out[2, i] = -dphi_mup(kind, gamma, 0.0, y)
    return out


# --------------------------------------------------------------------------
# kernels

@njit(cache=True)
def kernel_value(kp, x, xp):
    kk = int(kp[0])
    if kk == RBF:
        d2 = 0.0
        for t in range(x.shape[0]):
            diff = x[t] - xp[t]
            d2 += diff * diff
        return math.exp(-d2 / (2.0 * kp[1] * kp[1]))
    dot = 0.0
    for t in range(x.shape[0]):
        dot += x[t] * xp[t]
    if kk == POLYNOMIAL:
        return (dot + kp[3]) ** kp[2]
    return dot


@njit(cache=True)
def kernel_row(i, X, K, kp, out):
    if K.shape[0] > 0:
        return K[i]
    for j in range(X.shape[0]):
        out[j] = kernel_value(kp, X[i], X[j])
    return out


@njit(cache=True)
def kernel_matvec(X, K, kp, coeffs, scale):
    """scale * K @ coeffs without forming K when no cache is given."""
    n = X.shape[0]
    out = np.zeros(n)
    if K.shape[0] > 0:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += K[i, j] * coeffs[j]
            out[i] = scale * acc
        return out
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if coeffs[j] != 0.0:
                acc += kernel_value(kp, X[i], X[j]) * coeffs[j]
        out[i] = scale * acc
    return out


# --------------------------------------------------------------------------
# coordinate steps

@njit(cache=True)
def _axpy_row(scores, c, row):
    for j in range(scores.shape[0]):
        scores[j] += c * row[j]


@njit(cache=True)
def d0_step(i, alpha, scores, y, X, K, diag, kp, kind, gamma, lam, mode, tol,
            b_lo, b_up, a_dia, m, offset, tight, linear, buf):
    """One coordinate step on the naive dual (mode 0 naive, 1 approx).

    Returns (z, u, q, K_ii, s_bar, F, eta).
    """
    n = alpha.shape[0]
    z = scores[i]
    yi = y[i]
    ai = alpha[i]
    u = -dphi_mup(kind, gamma, z, yi)
    q = u - ai
    kii = diag[i]
    lnr = lam * n * gamma
    sbar = lnr / (kii + lnr)
    if q == 0.0:
        return z, u, q, kii, sbar, 0.0, 0.0
    gq2 = gamma * q * q
    if mode == 0 or abs(yi) >= 1.0:
        F = phi_mup(kind, gamma, z, yi) + mup_conj(kind, gamma, -ai, yi, tol) + ai * z
        # F >= 0 exactly; rounding near the optimum can push it below
        F = max(F, 0.0)
    else:
        F = f_tilde(kind, gamma, z, yi, ai, b_lo[i], b_up[i], a_dia[i], m,
                    offset, tight, linear)
    ratio = (F + 0.5 * gq2) / gq2
    if mode == 0 or abs(yi) >= 1.0:
        eta = min(1.0, sbar * ratio)
    else:
        eta = min(1.0, sbar * max(1.0, ratio))
    d = eta * q
    alpha[i] = ai + d
    row = kernel_row(i, X, K, kp, buf)
    _axpy_row(scores, d / (lam * n), row)
    return z, u, q, kii, sbar, F, eta


@njit(cache=True)
def decomp_step(j, alpha, scores, anchor, sign, weight, X, K, diag, kp, kind,
                gamma, lam, norm, uniform, buf):
    """Vanilla SDCA step on the rearranged dual; scores are unsigned f(x_i)."""
    a = anchor[j]
    s = sign[j]
    w = weight[j]
    z = s * scores[a]
    aj = alpha[j]
    u = -w * dphi0(kind, gamma, z)
    q = u - aj
    if uniform:
        gj = 0.5 * gamma
    else:
        gj = gamma / w
    kii = diag[a]
    lnr = lam * norm * gj
    sbar = lnr / (kii + lnr)
    if q == 0.0:
        return z, u, q, kii, sbar, 0.0, 0.0
    F = max(w * phi0(kind, gamma, z) + w * conj0(kind, gamma, -aj / w)
            + aj * z, 0.0)
    gq2 = gj * q * q
    eta = min(1.0, sbar * (F + 0.5 * gq2) / gq2)
    d = eta * q
    alpha[j] = aj + d
    row = kernel_row(a, X, K, kp, buf)
    _axpy_row(scores, s * d / (lam * norm), row)
    return z, u, q, kii, sbar, F, eta


@njit(cache=True)
def sgd_step(i, coeffs, scores, y, X, K, kp, kind, gamma, lam, eta, buf):
    g = dphi_mup(kind, gamma, scores[i], y[i])
    shrink = 1.0 - eta * lam
    for j in range(coeffs.shape[0]):
        coeffs[j] *= shrink
        scores[j] *= shrink
    coeffs[i] -= eta * g
    row = kernel_row(i, X, K, kp, buf)
    _axpy_row(scores, -eta * g, row)
    return g


@njit(cache=True)
def d0_epoch(order, alpha, scores, y, X, K, diag, kp, kind, gamma, lam, mode,
             tol, b_lo, b_up, a_dia, m, offset, tight, linear):
    buf = np.empty(X.shape[0])
    for t in range(order.shape[0]):
        d0_step(order[t], alpha, scores, y, X, K, diag, kp, kind, gamma, lam,
                mode, tol, b_lo, b_up, a_dia, m, offset, tight, linear, buf)


@njit(cache=True)
def decomp_epoch(order, alpha, scores, anchor, sign, weight, X, K, diag, kp,
                 kind, gamma, lam, norm, uniform):
    buf = np.empty(X.shape[0])
    for t in range(order.shape[0]):
        decomp_step(order[t], alpha, scores, anchor, sign, weight, X, K, diag,
                    kp, kind, gamma, lam, norm, uniform, buf)


@njit(cache=True)
def sgd_epoch(order, coeffs, scores, y, X, K, kp, kind, gamma, lam, eta):
    buf = np.empty(X.shape[0])
    for t in range(order.shape[0]):
        sgd_step(order[t], coeffs, scores, y, X, K, kp, kind, gamma, lam, eta,
                 buf)


@njit(cache=True)
def resync(X, K, kp, coeffs, scale, scores):
    """Recompute scores from scratch in place; returns the largest drift."""
    fresh = kernel_matvec(X, K, kp, coeffs, scale)
    drift = 0.0
    for j in range(scores.shape[0]):
        d = abs(fresh[j] - scores[j])
        if d > drift:
            drift = d
        scores[j] = fresh[j]
    return drift


@njit(cache=True)
def d0_block(orders, alpha, scores, y, X, K, diag, kp, kind, gamma, lam, mode,
             tol, b_lo, b_up, a_dia, m, offset, tight, linear):
    """Several epochs (one row of ``orders`` each), resyncing after each."""
    scale = 1.0 / (lam * alpha.shape[0])
    drift = 0.0
    for e in range(orders.shape[0]):
        d0_epoch(orders[e], alpha, scores, y, X, K, diag, kp, kind, gamma, lam,
                 mode, tol, b_lo, b_up, a_dia, m, offset, tight, linear)
        drift = max(drift, resync(X, K, kp, alpha, scale, scores))
    return drift


@njit(cache=True)
def decomp_block(orders, alpha, scores, anchor, sign, weight, X, K, diag, kp,
                 kind, gamma, lam, norm, uniform):
    scale = 1.0 / (lam * norm)
    coeffs = np.empty(scores.shape[0])
    drift = 0.0
    for e in range(orders.shape[0]):
        decomp_epoch(orders[e], alpha, scores, anchor, sign, weight, X, K,
                     diag, kp, kind, gamma, lam, norm, uniform)
        coeffs[:] = 0.0
        for j in range(alpha.shape[0]):
            coeffs[anchor[j]] += sign[j] * alpha[j]
        drift = max(drift, resync(X, K, kp, coeffs, scale, scores))
    return drift


@njit(cache=True)
def sgd_block(orders, coeffs, scores, y, X, K, kp, kind, gamma, lam, eta):
    drift = 0.0
    for e in range(orders.shape[0]):
        sgd_epoch(orders[e], coeffs, scores, y, X, K, kp, kind, gamma, lam,
                  eta)
        drift = max(drift, resync(X, K, kp, coeffs, 1.0, scores))
    return drift


# --------------------------------------------------------------------------
# objective sums (sequential order, deterministic)

@njit(cache=True)
def sum_mup_loss(scores, y, kind, gamma):
    acc = 0.0
    for i in range(scores.shape[0]):
        acc += phi_mup(kind, gamma, scores[i], y[i])
    return acc


@njit(cache=True)
def sum_mup_conj(alpha, y, kind, gamma, tol):
    acc = 0.0
    for i in range(alpha.shape[0]):
        acc += mup_conj(kind, gamma, -alpha[i], y[i], tol)
    return acc


@njit(cache=True)
def sum_decomp_conj(alpha, weight, kind, gamma):
    acc = 0.0
    for j in range(alpha.shape[0]):
        w = weight[j]
        acc += w * conj0(kind, gamma, -alpha[j] / w)
    return acc


@njit(cache=True)
def sum_decomp_loss(scores, anchor, sign, weight, kind, gamma):
    acc = 0.0
    for j in range(anchor.shape[0]):
        acc += weight[j] * phi0(kind, gamma, sign[j] * scores[anchor[j]])
    return acc
