"""Beta-binomial mixture model for per-penalty selection-count histograms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import betaln, expit, gammaln, logit, logsumexp

from ._kernels import nm_window, window_nll_and_pi

INFLATION_FRACTION = 0.75

# is_u_shaped: the top decile of the count range must rise clearly above the
# interior floor and carry a non-trivial number of edges.
_U_RATIO = 2.0
_U_MIN_TOP = 10
_U_MIN_SPIKE = 5
_U_SMOOTH = 5
_MU2_PROBES = (0.54, 0.9)

_MARGIN = 1e-6  # constraint margins: mu1 + sigma1 <= 1 - margin, mu2 >= 0.5 + margin
_PENALTY_WEIGHT = 1e6  # quadratic pull toward pi <= pi_max during optimization
_INFEAS_WEIGHT = 200.0  # cost of the recovery leaving the probability simplex


class NotFittableError(RuntimeError):
    """The count histogram does not support a mixture fit (e.g. not U-shaped)."""


@dataclass(frozen=True)
class CountHistogram:
    """Tally of selection counts: bins[w] edges with count w, w in {0..B}."""

    B: int
    bins: np.ndarray
    p: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.int64)
        if bins.shape != (self.B + 1,):
            raise ValueError("bins must have length B + 1")
        if (bins < 0).any():
            raise ValueError("bins must be non-negative")
        if bins.sum() != self.p:
            raise ValueError("histogram bins must sum to the number of potential edges")
        object.__setattr__(self, "bins", bins)

    @classmethod
    def from_counts(cls, counts, B: int, p: Optional[int] = None) -> "CountHistogram":
        counts = np.asarray(counts)
        bins = np.bincount(counts, minlength=B + 1)
        total = int(bins.sum())
        if p is None:
            p = total
        elif p > total:
            bins = bins.copy()
            bins[0] += p - total  # never-selected edges live at w = 0
        elif p < total:
            raise ValueError("p cannot be smaller than the number of counts")
        return cls(B=B, bins=bins, p=p)


@dataclass(frozen=True)
class MixtureParams:
    """Fitted mixture: null (mu1, sigma1, gamma), alternative (mu2, sigma2 = mu2),
    inflation masses tau1 (uniform on {0..c}) and tau2 (point mass at B), and the
    alternative proportion pi."""

    pi: float
    mu1: float
    sigma1: float
    gamma: float
    mu2: float
    tau1: float
    tau2: float
    c: int

    def __post_init__(self):
        if not 0 <= self.pi <= 1:
            raise ValueError("pi must be in [0, 1]")
        if not 0 < self.mu1 < 1 or self.sigma1 <= 0:
            raise ValueError("need 0 < mu1 < 1 and sigma1 > 0")
        if self.mu1 + self.sigma1 >= 1:
            raise ValueError("need mu1 + sigma1 < 1")
        if not self.mu2 > 0.5:
            raise ValueError("need mu2 > 0.5")
        if self.gamma <= 0:
            raise ValueError("need gamma > 0")
        if not (0 <= self.tau1 <= 1 and 0 <= self.tau2 <= 1):
            raise ValueError("tau1 and tau2 must be in [0, 1]")
        if self.c < 0:
            raise ValueError("c must be non-negative")


@dataclass
class LambdaFit:
    """Mixture fit at one penalty level."""

    lam: Optional[float]
    params: MixtureParams
    loglik: float
    separation: float
    u_shaped: bool = True
    B: Optional[int] = field(default=None, compare=False)
    u_opt: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def _check_component(B: int, mu: float, sigma: float):
    if B < 1:
        raise ValueError("B must be at least 1")
    if not 0 < mu < 1:
        raise ValueError("mu must be in (0, 1)")
    if sigma <= 0:
        raise ValueError("sigma must be positive")


def _log_beta_binomial(B: int, mu: float, sigma: float) -> np.ndarray:
    w = np.arange(B + 1)
    a = mu / sigma
    b = (1 - mu) / sigma
    lchoose = gammaln(B + 1) - gammaln(w + 1) - gammaln(B - w + 1)
    return lchoose + betaln(w + a, B - w + b) - betaln(a, b)


def beta_binomial_pmf(w, B: int, mu: float, sigma: float):
    """Beta-binomial pmf with mean parameter mu and dispersion sigma."""
    _check_component(B, mu, sigma)
    pmf = np.exp(_log_beta_binomial(B, mu, sigma))
    return pmf[w]


def null_pmf(w, B: int, mu1: float, sigma1: float, gamma: float):
    """Null component: beta-binomial raised to gamma and renormalized."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    _check_component(B, mu1, sigma1)
    logp = gamma * _log_beta_binomial(B, mu1, sigma1)
    pmf = np.exp(logp - logsumexp(logp))
    return pmf[w]


def alt_pmf(w, B: int, mu2: float, c: int):
    """Alternative component: beta-binomial (sigma2 = mu2) shifted to vanish on {0..c}."""
    if not 0.5 < mu2 < 1:
        raise ValueError("mu2 must be in (0.5, 1)")
    if not 0 <= c < B:
        raise ValueError("need 0 <= c < B")
    pmf = np.exp(_log_beta_binomial(B, mu2, mu2))
    pmf = np.clip(pmf - pmf[c], 0, None)
    pmf[: c + 1] = 0
    total = pmf.sum()
    if total <= 0:
        raise ValueError("alternative component has no mass after truncation")
    return (pmf / total)[w]


def component_pmfs(params: MixtureParams, B: int) -> tuple[np.ndarray, np.ndarray]:
    """Full mixture components f1 (null + low inflation) and f2 (alt + top inflation)."""
    w = np.arange(B + 1)
    f_null = null_pmf(w, B, params.mu1, params.sigma1, params.gamma)
    f_alt = alt_pmf(w, B, params.mu2, params.c)
    f1 = (1 - params.tau1) * f_null
    f1[: params.c + 1] += params.tau1 / (params.c + 1)
    f2 = (1 - params.tau2) * f_alt
    f2[B] += params.tau2
    return f1, f2


def mixture_pmf(w, params: MixtureParams, B: int):
    """Full mixture pmf (1 - pi) f1 + pi f2."""
    f1, f2 = component_pmfs(params, B)
    return ((1 - params.pi) * f1 + params.pi * f2)[w]


def choose_cutoff(h: CountHistogram, fraction: float = INFLATION_FRACTION) -> int:
    """Smallest c whose cumulative count fraction reaches ``fraction``."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    cum = np.cumsum(h.bins)
    return int(np.searchsorted(cum, fraction * h.p))


def is_u_shaped(h: CountHistogram, fraction: float = INFLATION_FRACTION) -> bool:
    """Whether the histogram rises again near B, beyond the cutoff region.

    Requires both a top decile well above the interior floor and a genuine
    spike at B itself: the alternative component is increasing with its mode
    at B, so a fittable histogram must peak at the last bin rather than carry
    a flat noise tail.
    """
    B = h.B
    c = choose_cutoff(h, fraction)
    if c >= B - 1:
        return False
    n_top = max(1, (B + 1) // 10)
    top = h.bins[B + 1 - n_top:]
    if top.sum() < _U_MIN_TOP:
        return False
    interior = h.bins[c + 1: B].astype(float)
    win = min(_U_SMOOTH, interior.size)
    smooth = np.convolve(interior, np.ones(win) / win, mode="valid")
    floor = max(smooth.min(), 1e-12)
    if top.mean() / floor <= _U_RATIO:
        return False
    return h.bins[B] >= max(_U_MIN_SPIKE, int(top[:-1].max()))


def recover_inflation(pi_p: float, mu1: float, sigma1: float, gamma: float,
                      mu2: float, h: CountHistogram, c: int) -> tuple[float, float, float, float]:
    """Recover (pi, tau1, tau2) from the window fit by matching region masses.

    The window likelihood determines the shape parameters and pi_p, the
    alternative's share of window edges. With V = {c+1..B-1}, scaling each
    free component so its share of the window matches pi_p and the combined
    window mass matches the observed fraction gives weights A (free null) and
    C (free alternative); the leftover masses in {0..c} and at B are the
    inflation weights D = (1-pi) tau1 and E = pi tau2. Without clamping,
    A + C + D + E = 1 exactly; the returned identity_gap reports the clamped
    deficit.
    """
    B = h.B
    w = np.arange(B + 1)
    f_null = null_pmf(w, B, mu1, sigma1, gamma)
    f_alt = alt_pmf(w, B, mu2, c)
    bins = h.bins
    total = h.p
    n_low = bins[: c + 1].sum() / total
    n_win = bins[c + 1: B].sum() / total
    n_top = bins[B] / total
    fnull_win = f_null[c + 1: B].sum()
    falt_win = f_alt[c + 1: B].sum()
    if fnull_win <= 0 or falt_win <= 0:
        raise NotFittableError("window carries no model mass")
    a_mass = (1 - pi_p) * n_win / fnull_win
    c_mass = pi_p * n_win / falt_win
    d_raw = n_low - a_mass * f_null[: c + 1].sum()
    e_raw = n_top - a_mass * f_null[B] - c_mass * f_alt[B]
    d_mass = max(0.0, d_raw)
    e_mass = max(0.0, e_raw)
    s = a_mass + c_mass + d_mass + e_mass
    identity_gap = abs(a_mass + c_mass + d_raw + e_raw - 1.0)
    pi = (c_mass + e_mass) / s
    tau1 = d_mass / (a_mass + d_mass) if a_mass + d_mass > 0 else 0.0
    tau2 = e_mass / (c_mass + e_mass) if c_mass + e_mass > 0 else 0.0
    return pi, tau1, tau2, identity_gap


def window_objective(pi_p: float, mu1: float, sigma1: float, gamma: float,
                     mu2: float, bins, c: int) -> tuple[float, float]:
    """Penalized window objective (lower is better) and the recovered pi.

    The objective is the window negative log-likelihood plus the feasibility
    penalty keeping the recovered component weights a probability mixture.
    """
    bins = np.asarray(bins, dtype=float)
    nll, pi, infeas = window_nll_and_pi(pi_p, mu1, sigma1, gamma, mu2, bins, int(c))
    if nll >= 1e299:
        return nll, pi
    return nll + _INFEAS_WEIGHT * min(infeas, 1e290), pi


def _sig(x) -> float:
    """Logistic clamped away from {0, 1}, matching the optimizer kernel's."""
    return float(np.clip(expit(x), 1e-12, 1 - 1e-12))


def _unpack(u: np.ndarray) -> tuple[float, float, float, float, float]:
    pi_p = _sig(u[0])
    mu1 = _sig(u[1])
    sigma1 = (1 - mu1 - _MARGIN) * _sig(u[2])
    gamma = float(np.exp(np.clip(u[3], -20, 20)))
    mu2 = 0.5 + _MARGIN + (0.5 - _MARGIN) * _sig(u[4])
    return pi_p, mu1, sigma1, gamma, mu2


def _pack(pi_p: float, mu1: float, sigma1: float, gamma: float, mu2: float) -> np.ndarray:
    return np.array([
        logit(pi_p),
        logit(mu1),
        logit(np.clip(sigma1 / (1 - mu1 - _MARGIN), 1e-12, 1 - 1e-12)),
        np.log(gamma),
        logit(np.clip((mu2 - 0.5 - _MARGIN) / (0.5 - _MARGIN), 1e-12, 1 - 1e-12)),
    ])


def _default_starts(h: CountHistogram, c: int) -> list[np.ndarray]:
    bins = h.bins.astype(float)
    B = h.B
    w = np.arange(B + 1)
    win = bins[c + 1: B]
    win_total = max(win.sum(), 1.0)
    # place the alternative at the observed high-count bump
    top = slice(int(0.8 * B), B + 1)
    top_mass = bins[top].sum()
    if top_mass > 0:
        mu2_data = float((bins[top] * w[top]).sum() / top_mass / B)
    else:
        mu2_data = 0.9
    mu2_data = min(0.97, max(0.75, mu2_data))
    # share of window edges in the upper half approximates the alternative's
    upper = bins[max(c + 1, int(0.6 * B)): B].sum()
    pi_p0 = min(0.5, max(1e-3, upper / win_total))
    mean_w = (bins * w).sum() / max(bins.sum(), 1.0)
    mu1_data = min(0.4, max(0.005, mean_w / B))
    starts = []
    for mu1 in (mu1_data, 0.1):
        for gamma in (0.8, 1.3):
            for mu2 in (mu2_data, min(0.97, mu2_data + 0.05)):
                starts.append(_pack(pi_p0, mu1, min(0.1, (1 - mu1) / 2), gamma, mu2))
    return starts


def fit_lambda(h: CountHistogram, pi_max: Optional[float] = None,
               lam: Optional[float] = None, n_restarts: int = 8,
               warm_start: Optional[np.ndarray] = None,
               require_u_shape: bool = True,
               fraction: float = INFLATION_FRACTION,
               polish: bool = True) -> LambdaFit:
    """Constrained maximum-likelihood fit of the five-parameter mixture.

    Maximizes the window log-likelihood over (pi', mu1, sigma1, gamma, mu2)
    subject to mu1 + sigma1 < 1 and mu2 = sigma2 > 0.5, then recovers
    (pi, tau1, tau2) from the censored regions. With pi_max set, the fit is
    steered by a quadratic penalty and finished by an exact projection so
    that the recovered pi never exceeds pi_max.
    """
    if h.B < 10:
        raise ValueError("B must be at least 10 for a mixture fit")
    if require_u_shape and not is_u_shaped(h, fraction):
        raise NotFittableError("selection count histogram is not U-shaped")
    c = choose_cutoff(h, fraction)
    bins = h.bins.astype(float)
    if bins[c + 1: h.B].sum() <= 0:
        raise NotFittableError("no counts between the cutoff and B")

    def objective(u: np.ndarray) -> float:
        obj, pi = window_objective(*_unpack(u), bins, c)
        if pi_max is not None and obj < 1e299:
            obj += _PENALTY_WEIGHT * h.p * max(0.0, pi - pi_max) ** 2
        return obj

    pm = -1.0 if pi_max is None else float(pi_max)

    def run(u0: np.ndarray, fix_first: bool = False,
            maxiter: int = 4000) -> tuple[float, np.ndarray]:
        val, u_hat, _ = nm_window(np.asarray(u0, dtype=float), bins, c,
                                  float(h.p), pm, fix_first, maxiter,
                                  1e-7, 1e-9, _MARGIN, _INFEAS_WEIGHT,
                                  _PENALTY_WEIGHT)
        return float(val), u_hat

    starts = [] if warm_start is None else [np.asarray(warm_start, dtype=float)]
    starts.extend(_default_starts(h, c))
    starts = starts[:max(n_restarts, 1)]

    best_u, best_val = None, np.inf
    for u0 in starts:
        if pi_max is not None:
            # Start on the feasible side of the cap: a start inside the
            # penalty wall makes the simplex collapse along pi' before the
            # shapes can adapt.
            u0 = _project_pi(u0, bins, c, pi_max)
        val, u_hat = run(u0)
        if val < best_val:
            best_val, best_u = val, u_hat
    if n_restarts > 1:
        # The all-null solution (pi' -> 0) is a local trap: once the
        # alternative's weight underflows, its shape can no longer adapt.
        # Profiling pi' at fixed values lets the shapes lock onto the
        # high-count bump before the weight is freed.
        for pi_fix in (0.03, 0.1, 0.3):
            u0 = starts[-1].copy() if warm_start is None else starts[0].copy()
            u0[0] = logit(pi_fix)
            if pi_max is not None:
                u0 = _project_pi(u0, bins, c, pi_max)
            _, u_prof = run(u0, fix_first=True, maxiter=3000)
            val, u_hat = run(u_prof)
            if val < best_val:
                best_val, best_u = val, u_hat
    if best_u is None or best_val >= 1e299:
        raise NotFittableError("mixture optimization failed from all restarts")
    if n_restarts > 1:
        # The alternative's shape coordinate has two attraction basins
        # (near-uniform vs sharply increasing); reseed the incumbent at each
        # end so the window fit cannot settle for the wrong one unchecked.
        for mu2_probe in _MU2_PROBES:
            u0 = best_u.copy()
            u0[4] = logit((mu2_probe - 0.5 - _MARGIN) / (0.5 - _MARGIN))
            if pi_max is not None:
                u0 = _project_pi(u0, bins, c, pi_max)
            val, u_hat = run(u0)
            if val < best_val:
                best_val, best_u = val, u_hat
    if polish:
        res = minimize(objective, best_u, method="L-BFGS-B")
        if np.isfinite(res.fun) and res.fun < best_val:
            best_val, best_u = float(res.fun), res.x

    u = best_u
    if pi_max is not None:
        u = _project_pi(u, bins, c, pi_max)
    pi_p, mu1, sigma1, gamma, mu2 = _unpack(u)
    nll, _, _ = window_nll_and_pi(pi_p, mu1, sigma1, gamma, mu2, bins, c)
    pi, tau1, tau2, _ = recover_inflation(pi_p, mu1, sigma1, gamma, mu2, h, c)
    if pi_max is not None and pi > pi_max:
        # Constraint still binding after projection: clamp the alternative
        # mass, keeping component shapes and inflation ratios.
        pi = pi_max
    params = MixtureParams(pi=pi, mu1=mu1, sigma1=sigma1, gamma=gamma, mu2=mu2,
                           tau1=tau1, tau2=tau2, c=c)
    sep = separation_value(params, h.B, h.p)
    return LambdaFit(lam=lam, params=params, loglik=-nll, separation=sep,
                     u_shaped=True, B=h.B, u_opt=u)


def _project_pi(u: np.ndarray, bins: np.ndarray, c: int, pi_max: float) -> np.ndarray:
    """Largest u[0] (hence pi') with recovered pi <= pi_max, holding shapes fixed."""

    def pi_at(u0: float) -> float:
        v = u.copy()
        v[0] = u0
        pi_p, mu1, sigma1, gamma, mu2 = _unpack(v)
        _, pi, _ = window_nll_and_pi(pi_p, mu1, sigma1, gamma, mu2, bins, c)
        return pi

    if pi_at(u[0]) <= pi_max:
        return u
    lo, hi = u[0] - 60.0, u[0]
    if pi_at(lo) > pi_max:
        return u  # infeasible along pi' alone; caller clamps
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if pi_at(mid) <= pi_max:
            lo = mid
        else:
            hi = mid
    out = u.copy()
    out[0] = lo
    return out


def separation_value(params: MixtureParams, B: int, p: int) -> float:
    """Model-based net count of separable edges: p * sum (pi f2 - (1-pi) f1)_+ ."""
    f1, f2 = component_pmfs(params, B)
    return float(p * np.clip(params.pi * f2 - (1 - params.pi) * f1, 0, None).sum())
