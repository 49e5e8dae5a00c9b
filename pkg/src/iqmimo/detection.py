"""Receive filters, decision variables and the exact per-realization SINR split.

Both receivers are reduced to the same proper form.  The decision for UT k
is written as

    d_check = sum_{l,q} (a_{l,q} d_{l,q} + b_{l,q} d*_{l,q}) + noise,

and the powers are S = rho |a_{i,k}|^2, I = rho (|b_{i,k}|^2 + sum over all
other (l, q) of |a|^2 + |b|^2) and Z = E|noise|^2.  For the IQA receiver the
real and imaginary symbol coefficients c1, c2 map to a = (c1 - j c2)/2 and
b = (c1 + j c2)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .estimation import (estimate_all, iqa_omega, iqu_omega, rx_training_augmented,
                         rx_training_complex)
from .model import augment, complex_normal, draw_channel, stack_re_im
from .scenario import substream


@dataclass(frozen=True)
class ReceiveFilters:
    u: np.ndarray | None = None      # K x N complex
    u_aug: np.ndarray | None = None  # 2K x 2N real


@dataclass(frozen=True)
class SinrBreakdown:
    s: np.ndarray
    i: np.ndarray
    z: np.ndarray

    @property
    def sinr(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.s / (self.i + self.z)
        return np.where(self.s > 0, out, 0.0)

    @property
    def sum_rate(self):
        return float(np.sum(np.log2(1.0 + self.sinr)))


def _mmse_rows(g, rho):
    # rows of g^H (g g^H + I/rho)^{-1}, via the K x K form g^H g
    k = g.shape[1]
    gram = g.conj().T @ g + np.eye(k) / rho
    # push-through: g^H (g g^H + I/rho)^{-1} = (g^H g + I/rho)^{-1} g^H
    return cho_solve(cho_factor(gram), g.conj().T)


def iqu_filter(g_hat, rho_ul):
    """Rows u_k = g_k^H (G G^H + I/rho)^{-1}."""
    if rho_ul <= 0:
        raise ValueError("rho_ul must be positive")
    return _mmse_rows(np.asarray(g_hat, dtype=complex), rho_ul)


def iqa_filter(g_aug_hat, rho_ul):
    """Rows of G^T (G G^T + I/rho)^{-1} for the real augmented estimate."""
    if rho_ul <= 0:
        raise ValueError("rho_ul must be positive")
    return _mmse_rows(np.asarray(g_aug_hat, dtype=float), rho_ul).real


def received_data(channels, bs_iqi, ut_iqis, rho_ul, d, noise, i=0):
    """Complex received vector(s); d is L x K (or L x K x S), noise N (or N x S)."""
    L = len(ut_iqis)
    acc = noise.astype(complex)
    for l in range(L):
        xa = np.array([u.xi_a for u in ut_iqis[l]])
        xb = np.array([u.xi_b for u in ut_iqis[l]])
        dl = d[l]
        tx = (xa * dl.T + xb * dl.conj().T).T if dl.ndim == 2 else xa * dl + xb * dl.conj()
        acc = acc + np.sqrt(rho_ul) * channels.h[(i, l)] @ tx
    return bs_iqi.apply(acc)


def detect(received, filters, receiver_kind):
    """Decision variables; ``received`` is the complex vector r (stacked for IQA)."""
    if receiver_kind == "iqu":
        return filters.u @ received
    if receiver_kind == "iqa":
        r_aug = stack_re_im(received) if np.iscomplexobj(received) else received
        K = filters.u_aug.shape[0] // 2
        return filters.u_aug[:K] @ r_aug + 1j * (filters.u_aug[K:] @ r_aug)
    raise ValueError(f"unknown receiver kind {receiver_kind!r}")


def effective_streams(channels, bs_iqi, ut_iqis, i=0):
    """Complex coefficient vectors of d_{l,q} and d*_{l,q} at BS i (N x LK each)."""
    L = len(ut_iqis)
    vd, vc = [], []
    pa, pb = np.diag(bs_iqi.psi_a)[:, None], np.diag(bs_iqi.psi_b)[:, None]
    for l in range(L):
        h = channels.h[(i, l)]
        xa = np.array([u.xi_a for u in ut_iqis[l]])
        xb = np.array([u.xi_b for u in ut_iqis[l]])
        vd.append(pa * h * xa + pb * h.conj() * xb.conj())
        vc.append(pa * h * xb + pb * h.conj() * xa.conj())
    return np.concatenate(vd, axis=1), np.concatenate(vc, axis=1)


def _breakdown(a, b, z, rho, i, K):
    own = i * K + np.arange(K)
    sig = np.abs(a[np.arange(K), own]) ** 2
    total = np.sum(np.abs(a) ** 2, axis=1) + np.sum(np.abs(b) ** 2, axis=1)
    return SinrBreakdown(rho * sig, np.maximum(rho * (total - sig), 0.0), z)


def sinr_components(channels, filters, bs_iqi, ut_iqis, rho_ul, receiver_kind, i=0):
    """Exact conditional S, I, Z for every UT of cell i."""
    vd, vc = effective_streams(channels, bs_iqi, ut_iqis, i)
    K = len(ut_iqis[0])
    if receiver_kind == "iqu":
        u = filters.u
        a, b = u @ vd, u @ vc
        z = (np.sum(np.abs(u * np.diag(bs_iqi.psi_a)[None, :]) ** 2, axis=1)
             + np.sum(np.abs(u * np.diag(bs_iqi.psi_b)[None, :]) ** 2, axis=1))
        return _breakdown(a, b, z, rho_ul, i, K)
    if receiver_kind == "iqa":
        ua = filters.u_aug
        # real streams: d = d_R + j d_I, so the d_R column is v_d + v_c and the
        # d_I column is j (v_d - v_c) in complex form
        v1 = stack_re_im(vd + vc)
        v2 = stack_re_im(1j * (vd - vc))
        c1 = ua[:K] @ v1 + 1j * (ua[K:] @ v1)
        c2 = ua[:K] @ v2 + 1j * (ua[K:] @ v2)
        a, b = (c1 - 1j * c2) / 2, (c1 + 1j * c2) / 2
        w = ua @ bs_iqi.psi_aug
        z = 0.5 * (np.sum(w[:K] ** 2, axis=1) + np.sum(w[K:] ** 2, axis=1))
        return _breakdown(a, b, z, rho_ul, i, K)
    raise ValueError(f"unknown receiver kind {receiver_kind!r}")


# Trial pipeline ---------------------------------------------------------------

def _omegas(scenario):
    cache = scenario.meta.setdefault("_omega", {})
    if "iqu" not in cache:
        sc = scenario
        bs = sc.bs_iqi[sc.i]
        cache["iqu"] = [iqu_omega(sc.profile, bs, sc.ut_iqi, sc.rho_tr, k, sc.contaminated, sc.i)
                        for k in range(sc.K)]
    return cache


def _omegas_aug(scenario):
    cache = scenario.meta.setdefault("_omega", {})
    if "iqa" not in cache:
        sc = scenario
        bs = sc.bs_iqi[sc.i]
        cache["iqa"] = [iqa_omega(sc.profile, bs, sc.ut_iqi, sc.rho_tr, k, sc.contaminated, sc.i)
                        for k in range(sc.K)]
    return cache


def warm_cache(scenario, receiver_kind):
    """Precompute the estimator weights a receiver needs (before threading)."""
    if scenario.csi == "perfect":
        return
    if receiver_kind == "iqu":
        _omegas(scenario)
    elif receiver_kind == "iqa":
        _omegas_aug(scenario)
    else:
        raise ValueError(f"unknown receiver kind {receiver_kind!r}")


def draw_trial(scenario, rng):
    """Channels and correlated training noise for one trial (shared by receivers)."""
    sc = scenario
    ch = draw_channel(sc.profile, rng, rx=(sc.i,))
    w = complex_normal(rng, (sc.n, sc.K))
    return ch, w


def trial_filters(scenario, receiver_kind, ch, w):
    sc = scenario
    i = sc.i
    bs = sc.bs_iqi[i]
    if sc.csi == "perfect":
        vd, _ = effective_streams(ch, bs, sc.ut_iqi, i)
        if receiver_kind == "iqu":
            xa = np.array([u.xi_a for u in sc.ut_iqi[i]])
            g = np.diag(bs.psi_a)[:, None] * ch.h[(i, i)] * xa[None, :]
            return ReceiveFilters(u=iqu_filter(g, sc.rho_ul))
        vv = vd[:, i * sc.K:(i + 1) * sc.K]
        vc = _conj_streams(ch, bs, sc.ut_iqi, i)
        g_aug = np.concatenate([stack_re_im(vv + vc), stack_re_im(1j * (vv - vc))], axis=1)
        return ReceiveFilters(u_aug=iqa_filter(g_aug, sc.rho_ul))
    if receiver_kind == "iqu":
        y = _training_from_noise(sc, ch, w)
        est = estimate_all(y, None, omegas=_omegas(sc)["iqu"], rho_tr=sc.rho_tr)
        return ReceiveFilters(u=iqu_filter(est.g_hat, sc.rho_ul))
    y_aug = rx_training_augmented(ch, bs, sc.ut_iqi, sc.rho_tr, noise=w, i=i, contaminated=sc.contaminated)
    est = estimate_all(None, y_aug, omegas_aug=_omegas_aug(sc)["iqa"], rho_tr=sc.rho_tr)
    return ReceiveFilters(u_aug=iqa_filter(est.g_aug_hat, sc.rho_ul))


def _conj_streams(ch, bs, ut_iqis, i):
    _, vc = effective_streams(ch, bs, ut_iqis, i)
    K = len(ut_iqis[0])
    return vc[:, i * K:(i + 1) * K]


def _training_from_noise(sc, ch, w):
    # same observation as rx_training_complex, with the already-correlated noise w
    i = sc.i
    acc = w.astype(complex)
    for l in (range(sc.L) if sc.contaminated else [i]):
        s = np.array([u.xi_a + u.xi_b for u in sc.ut_iqi[l]])
        acc = acc + np.sqrt(sc.rho_tr) * ch.h[(i, l)] * s[None, :]
    return sc.bs_iqi[i].apply(acc)


def trial_breakdown(scenario, receiver_kind, rng):
    ch, w = draw_trial(scenario, rng)
    f = trial_filters(scenario, receiver_kind, ch, w)
    sc = scenario
    return sinr_components(ch, f, sc.bs_iqi[sc.i], sc.ut_iqi, sc.rho_ul, receiver_kind, sc.i)


def summarize_rates(rates):
    """Mean and standard error with compensated sums (order independent)."""
    rates = np.asarray(rates, dtype=float)
    trials = rates.size
    mean = math.fsum(rates) / trials
    if trials > 1:
        var = math.fsum((rates - mean) ** 2) / (trials - 1)
        return mean, math.sqrt(var / trials)
    return mean, 0.0


def ergodic_sum_rate(scenario, receiver_kind, trials, rng=0, point=0, map_fn=map):
    """Mean centre-cell sum rate, its standard error and per-trial values.

    ``rng`` is an integer seed; trial t uses the substream (seed, point, t).
    ``map_fn`` may be an executor's ordered map for trial parallelism.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    warm_cache(scenario, receiver_kind)

    def one(t):
        return trial_breakdown(scenario, receiver_kind, substream(rng, point, t)).sum_rate

    rates = np.fromiter(map_fn(one, range(trials)), dtype=float, count=trials)
    mean, stderr = summarize_rates(rates)
    return mean, stderr, rates


__all__ = [
    "ReceiveFilters", "SinrBreakdown", "iqu_filter", "iqa_filter", "received_data", "detect",
    "effective_streams", "sinr_components", "draw_trial", "trial_filters", "trial_breakdown",
    "ergodic_sum_rate", "summarize_rates", "warm_cache", "augment",
]
