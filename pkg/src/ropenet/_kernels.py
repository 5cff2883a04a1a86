"""Compiled numerical kernels: lasso coordinate descent and the mixture objective.

Both kernels are pure functions of their arguments so they are safe to call
concurrently from threads (nogil).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def cd_path(G, gy, weights, lams, exclude, tol, max_sweeps):
    """Weighted-lasso coordinate descent along a penalty path.

    Solves min_beta (1/(2n))||y - X beta||^2 + lam * sum_k weights[k]*|beta_k|
    given the Gram matrix G = X^T X / n and gy = X^T y / n, for each lam in
    ``lams`` (visited in the given order, warm-starting from the previous
    solution). The coefficient at index ``exclude`` is pinned to zero.

    Returns (coefs, sweeps) where coefs has shape (d, len(lams)) and sweeps[k]
    is the number of full sweeps used at lams[k]; sweeps[k] == max_sweeps
    signals non-convergence at that penalty.
    """
    d = G.shape[0]
    n_lam = lams.shape[0]
    beta = np.zeros(d)
    q = np.zeros(d)  # q = G @ beta, maintained incrementally
    coefs = np.zeros((d, n_lam))
    sweeps = np.zeros(n_lam, dtype=np.int64)
    for k in range(n_lam):
        lam = lams[k]
        it = 0
        while it < max_sweeps:
            it += 1
            delta_max = 0.0
            for a in range(d):
                if a == exclude:
                    continue
                gaa = G[a, a]
                if gaa <= 0.0:
                    continue  # constant column in this resample: stays zero
                b_old = beta[a]
                rho = gy[a] - q[a] + gaa * b_old
                thr = lam * weights[a]
                if rho > thr:
                    b_new = (rho - thr) / gaa
                elif rho < -thr:
                    b_new = (rho + thr) / gaa
                else:
                    b_new = 0.0
                if b_new != b_old:
                    diff = b_new - b_old
                    beta[a] = b_new
                    for t in range(d):
                        q[t] += diff * G[t, a]
                    ad = abs(diff)
                    if ad > delta_max:
                        delta_max = ad
            if delta_max < tol:
                break
        sweeps[k] = it
        for a in range(d):
            coefs[a, k] = beta[a]
    return coefs, sweeps


@njit(cache=True, nogil=True)
def _log_beta(x, y):
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


@njit(cache=True, nogil=True)
def mixture_pmfs(mu1, sigma1, gamma, mu2, cutoff, n_bins):
    """Powered-null and truncated-alternative pmfs on {0..B}, B = n_bins - 1.

    Returns (f_null, f_alt, ok). ok == False flags a degenerate combination
    (zero alternative mass after truncation, or non-finite values).
    """
    B = n_bins - 1
    f_null = np.zeros(n_bins)
    f_alt = np.zeros(n_bins)

    a1 = mu1 / sigma1
    b1 = (1.0 - mu1) / sigma1
    lbeta1 = _log_beta(a1, b1)
    lgB = math.lgamma(B + 1.0)

    # powered null: f_BB(w)^gamma, renormalized; all in log space
    lmax = -1e308
    lraw = np.empty(n_bins)
    for w in range(n_bins):
        lchoose = lgB - math.lgamma(w + 1.0) - math.lgamma(B - w + 1.0)
        lbb = lchoose + _log_beta(w + a1, B - w + b1) - lbeta1
        lw = gamma * lbb
        lraw[w] = lw
        if lw > lmax:
            lmax = lw
    if not math.isfinite(lmax):
        return f_null, f_alt, False
    total = 0.0
    for w in range(n_bins):
        v = math.exp(lraw[w] - lmax)
        f_null[w] = v
        total += v
    for w in range(n_bins):
        f_null[w] /= total

    # truncated alternative: (f_BB - f_BB(c))_+ renormalized, sigma2 = mu2
    a2 = 1.0
    b2 = (1.0 - mu2) / mu2
    lbeta2 = _log_beta(a2, b2)
    fc = 0.0
    for w in range(n_bins):
        lchoose = lgB - math.lgamma(w + 1.0) - math.lgamma(B - w + 1.0)
        v = math.exp(lchoose + _log_beta(w + a2, B - w + b2) - lbeta2)
        f_alt[w] = v
        if w == cutoff:
            fc = v
    total = 0.0
    for w in range(n_bins):
        if w <= cutoff:
            f_alt[w] = 0.0
        else:
            v = f_alt[w] - fc
            if v < 0.0:
                v = 0.0
            f_alt[w] = v
            total += v
    if total <= 0.0 or not math.isfinite(total):
        return f_null, f_alt, False
    for w in range(n_bins):
        f_alt[w] /= total
    return f_null, f_alt, True


@njit(cache=True, nogil=True)
def window_nll_and_pi(pi_p, mu1, sigma1, gamma, mu2, bins, cutoff):
    """Negative log-likelihood on the interior window plus the recovered pi.

    The likelihood covers w in {cutoff+1..B-1}. Each component is
    conditionally renormalized over the window, so pi_p is the proportion of
    window edges belonging to the alternative (the "component sizes within
    the range"). The global alternative proportion pi is recovered by
    matching component masses against the censored regions {0..cutoff} and
    {B}; see the companion pure-python implementation in
    mixture.recover_inflation for the algebra.

    Returns (nll, pi, infeasibility). The infeasibility term is the summed
    squared violation of the recovered masses being a probability mixture
    (free-component weights above one, negative inflation masses). The window
    likelihood alone cannot identify the null's global allocation, so fits
    must keep the recovery feasible; callers add this term, scaled, to the
    objective. A huge nll (1e300) flags an invalid parameter point.
    """
    n_bins = bins.shape[0]
    B = n_bins - 1
    f_null, f_alt, ok = mixture_pmfs(mu1, sigma1, gamma, mu2, cutoff, n_bins)
    if not ok:
        return 1e300, 1.0, 1e300

    fnull_win = 0.0
    falt_win = 0.0
    fnull_low = 0.0
    for w in range(n_bins):
        if w <= cutoff:
            fnull_low += f_null[w]
        elif w < B:
            fnull_win += f_null[w]
            falt_win += f_alt[w]
    if fnull_win <= 0.0 or falt_win <= 0.0:
        return 1e300, 1.0, 1e300

    nll = 0.0
    for w in range(cutoff + 1, B):
        hw = bins[w]
        if hw > 0.0:
            m = (1.0 - pi_p) * f_null[w] / fnull_win + pi_p * f_alt[w] / falt_win
            if m <= 0.0 or not math.isfinite(m):
                return 1e300, 1.0, 1e300
            nll -= hw * math.log(m)

    total = 0.0
    n_low = 0.0
    n_win = 0.0
    for w in range(n_bins):
        total += bins[w]
        if w <= cutoff:
            n_low += bins[w]
        elif w < B:
            n_win += bins[w]
    n_top = bins[B]
    if total <= 0.0:
        return 1e300, 1.0, 1e300

    a_mass = (1.0 - pi_p) * (n_win / total) / fnull_win
    c_mass = pi_p * (n_win / total) / falt_win
    d_raw = n_low / total - a_mass * fnull_low
    e_raw = n_top / total - a_mass * f_null[B] - c_mass * f_alt[B]
    infeas = 0.0
    if a_mass > 1.0:
        infeas += (a_mass - 1.0) ** 2
    if c_mass > 1.0:
        infeas += (c_mass - 1.0) ** 2
    if d_raw < 0.0:
        infeas += d_raw ** 2
    if e_raw < 0.0:
        infeas += e_raw ** 2
    d_mass = max(0.0, d_raw)
    e_mass = max(0.0, e_raw)
    s = a_mass + c_mass + d_mass + e_mass
    if s <= 0.0:
        return 1e300, 1.0, 1e300
    pi = (c_mass + e_mass) / s
    return nll, pi, infeas


@njit(cache=True, nogil=True)
def _expit(x):
    # clamped away from {0, 1} so unpacked parameters stay strictly inside
    # their open domains even when the logistic saturates
    if x >= 0.0:
        v = 1.0 / (1.0 + math.exp(-x))
    else:
        z = math.exp(x)
        v = z / (1.0 + z)
    if v < 1e-12:
        return 1e-12
    if v > 1.0 - 1e-12:
        return 1.0 - 1e-12
    return v


@njit(cache=True, nogil=True)
def penalized_objective(u, bins, cutoff, p_total, pi_max, margin,
                        infeas_weight, penalty_weight):
    """Window objective (lower is better) in the unconstrained parameterization.

    u maps to (pi', mu1, sigma1, gamma, mu2) through sigmoid/exp transforms
    that encode pi' in (0,1), mu1 + sigma1 < 1 - margin, gamma > 0 and
    mu2 in (0.5 + margin, 1). The objective is the window negative
    log-likelihood plus the scaled recovery-infeasibility term, plus a
    quadratic pull toward pi <= pi_max when pi_max >= 0.
    """
    pi_p = _expit(u[0])
    mu1 = _expit(u[1])
    sigma1 = (1.0 - mu1 - margin) * _expit(u[2])
    x3 = u[3]
    if x3 > 20.0:
        x3 = 20.0
    elif x3 < -20.0:
        x3 = -20.0
    gamma = math.exp(x3)
    mu2 = 0.5 + margin + (0.5 - margin) * _expit(u[4])
    nll, pi, infeas = window_nll_and_pi(pi_p, mu1, sigma1, gamma, mu2, bins,
                                        cutoff)
    if nll >= 1e299:
        return nll
    obj = nll + infeas_weight * min(infeas, 1e290)
    if pi_max >= 0.0 and pi > pi_max:
        obj += penalty_weight * p_total * (pi - pi_max) ** 2
    return obj


@njit(cache=True, nogil=True)
def _eval_point(v, base, fix_first, bins, cutoff, p_total, pi_max, margin,
                infeas_weight, penalty_weight):
    if fix_first:
        full = np.empty(base.shape[0])
        full[0] = base[0]
        for i in range(v.shape[0]):
            full[i + 1] = v[i]
    else:
        full = v
    return penalized_objective(full, bins, cutoff, p_total, pi_max, margin,
                               infeas_weight, penalty_weight)


@njit(cache=True, nogil=True)
def nm_window(u0, bins, cutoff, p_total, pi_max, fix_first, maxiter, xatol,
              fatol, margin, infeas_weight, penalty_weight):
    """Nelder-Mead minimization of the window objective.

    Standard reflection/expansion/contraction/shrink schedule with the usual
    coefficients, terminating when both the simplex spread and the value
    spread fall under the tolerances. With fix_first, u0[0] is held constant
    and the simplex covers the remaining coordinates. Returns
    (best value, best full parameter vector, iterations used).
    """
    n_full = u0.shape[0]
    m = n_full - 1 if fix_first else n_full
    x0 = np.empty(m)
    for i in range(m):
        x0[i] = u0[i + 1] if fix_first else u0[i]

    rho, chi, psi, sigma = 1.0, 2.0, 0.5, 0.5
    nonzdelt, zdelt = 0.05, 0.00025

    sim = np.empty((m + 1, m))
    fsim = np.empty(m + 1)
    for i in range(m):
        sim[0, i] = x0[i]
    for k in range(m):
        for i in range(m):
            sim[k + 1, i] = x0[i]
        if sim[k + 1, k] != 0.0:
            sim[k + 1, k] *= 1.0 + nonzdelt
        else:
            sim[k + 1, k] = zdelt
    for k in range(m + 1):
        fsim[k] = _eval_point(sim[k], u0, fix_first, bins, cutoff, p_total,
                              pi_max, margin, infeas_weight, penalty_weight)
    order = np.argsort(fsim)
    sim = sim[order]
    fsim = fsim[order]

    iters = 1
    while iters < maxiter:
        max_x = 0.0
        max_f = 0.0
        for k in range(1, m + 1):
            df = abs(fsim[k] - fsim[0])
            if df > max_f:
                max_f = df
            for i in range(m):
                dx = abs(sim[k, i] - sim[0, i])
                if dx > max_x:
                    max_x = dx
        if max_x <= xatol and max_f <= fatol:
            break

        xbar = np.zeros(m)
        for k in range(m):
            for i in range(m):
                xbar[i] += sim[k, i]
        for i in range(m):
            xbar[i] /= m

        xr = np.empty(m)
        for i in range(m):
            xr[i] = (1.0 + rho) * xbar[i] - rho * sim[m, i]
        fr = _eval_point(xr, u0, fix_first, bins, cutoff, p_total, pi_max,
                         margin, infeas_weight, penalty_weight)
        doshrink = False
        if fr < fsim[0]:
            xe = np.empty(m)
            for i in range(m):
                xe[i] = (1.0 + rho * chi) * xbar[i] - rho * chi * sim[m, i]
            fe = _eval_point(xe, u0, fix_first, bins, cutoff, p_total, pi_max,
                             margin, infeas_weight, penalty_weight)
            if fe < fr:
                sim[m] = xe
                fsim[m] = fe
            else:
                sim[m] = xr
                fsim[m] = fr
        elif fr < fsim[m - 1]:
            sim[m] = xr
            fsim[m] = fr
        else:
            if fr < fsim[m]:
                xc = np.empty(m)
                for i in range(m):
                    xc[i] = (1.0 + psi * rho) * xbar[i] - psi * rho * sim[m, i]
                fc = _eval_point(xc, u0, fix_first, bins, cutoff, p_total,
                                 pi_max, margin, infeas_weight, penalty_weight)
                if fc <= fr:
                    sim[m] = xc
                    fsim[m] = fc
                else:
                    doshrink = True
            else:
                xcc = np.empty(m)
                for i in range(m):
                    xcc[i] = (1.0 - psi) * xbar[i] + psi * sim[m, i]
                fcc = _eval_point(xcc, u0, fix_first, bins, cutoff, p_total,
                                  pi_max, margin, infeas_weight, penalty_weight)
                if fcc < fsim[m]:
                    sim[m] = xcc
                    fsim[m] = fcc
                else:
                    doshrink = True
            if doshrink:
                for k in range(1, m + 1):
                    for i in range(m):
                        sim[k, i] = sim[0, i] + sigma * (sim[k, i] - sim[0, i])
                    fsim[k] = _eval_point(sim[k], u0, fix_first, bins, cutoff,
                                          p_total, pi_max, margin,
                                          infeas_weight, penalty_weight)
        order = np.argsort(fsim)
        sim = sim[order]
        fsim = fsim[order]
        iters += 1

    best = u0.copy()
    for i in range(m):
        if fix_first:
            best[i + 1] = sim[0, i]
        else:
            best[i] = sim[0, i]
    return fsim[0], best, iters
