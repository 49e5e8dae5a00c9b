"""Training-phase simulation and the IQU-MMSE / IQA-WLMMSE channel estimators.

Estimates are normalised so that ``g_hat = Omega @ y / sqrt(rho_tr)``; with
this scaling ``Omega`` is the bracketed matrix expression (no sqrt(rho_tr)
factors inside) and ``g_hat`` is the exact linear MMSE estimate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct
from scipy.linalg import solve

from .model import augment, complex_normal, stack_re_im


@dataclass(frozen=True)
class TrainingSet:
    x: np.ndarray  # T x K real, orthonormal columns

    @property
    def x_aug(self):
        return [augment(self.x[:, k].astype(complex)[:, None]) for k in range(self.x.shape[1])]


def gen_training(K, T=None):
    """Orthonormal real pilots: the first K rows of the orthonormal DCT-II matrix."""
    T = K if T is None else T
    if T < K:
        raise ValueError("training length must be at least K")
    c = dct(np.eye(T), norm="ortho", axis=0)
    return TrainingSet(np.ascontiguousarray(c[:K].T))


@dataclass(frozen=True)
class EstimatedChannels:
    g_hat: np.ndarray | None = None      # N x K complex
    g_aug_hat: np.ndarray | None = None  # 2N x 2K real


def _pilot_gain(ut):
    # real pilot x through the UT mixer: xi_a x + xi_b x* = (xi_a + xi_b) x
    return ut.xi_a + ut.xi_b


def received_training(channels, bs_iqi, ut_iqis, rho_tr, training, rng=None,
                      i=0, noiseless=False, contaminated=True):
    """Full T-symbol training block Y_i (N x T) at BS ``i``, after the BS mixer.

    Returns the BS-impaired block and the raw noise block so callers can build
    paired augmented observations.
    """
    L = len(ut_iqis)
    x = training.x
    n, K = channels.h[(i, 0)].shape
    clean = np.zeros((n, x.shape[0]), dtype=complex)
    for l in (range(L) if contaminated else [i]):
        s = np.array([_pilot_gain(ut_iqis[l][k]) for k in range(K)])
        clean += np.sqrt(rho_tr) * (channels.h[(i, l)] * s[None, :]) @ x.T
    if noiseless:
        w = np.zeros_like(clean)
    else:
        w = complex_normal(rng, clean.shape)
    return bs_iqi.apply(clean + w), w


def rx_training_complex(channels, bs_iqi, ut_iqis, rho_tr, rng=None, training=None,
                        i=0, noiseless=False, return_noise=False, contaminated=True):
    """Per-UT observations y_{i,k} (columns of an N x K matrix).

    Without contamination the other cells' pilots are orthogonal to ours and
    drop out of the correlation.
    """
    K = channels.h[(i, 0)].shape[1]
    training = gen_training(K) if training is None else training
    y_block, w = received_training(channels, bs_iqi, ut_iqis, rho_tr, training, rng, i, noiseless,
                                   contaminated)
    # x is real, so correlating after the mixer equals mixing the correlated signal
    y = y_block @ training.x
    if return_noise:
        return y, w @ training.x
    return y


def rx_training_augmented(channels, bs_iqi, ut_iqis, rho_tr, rng=None, noise=None,
                          i=0, noiseless=False, contaminated=True):
    """Per-UT augmented observations, array of shape (K, 2N, 2).

    ``noise`` takes the correlated complex noise w (N x K) of a paired
    complex-path call; otherwise fresh noise is drawn.
    """
    L = len(ut_iqis)
    n, K = channels.h[(i, 0)].shape
    if noise is None:
        noise = np.zeros((n, K), dtype=complex) if noiseless else complex_normal(rng, (n, K))
    psi = bs_iqi.psi_aug
    out = np.empty((K, 2 * n, 2))
    for k in range(K):
        acc = augment(noise[:, k][:, None])
        for l in (range(L) if contaminated else [i]):
            h_aug = augment(channels.h[(i, l)][:, k][:, None])
            acc = acc + np.sqrt(rho_tr) * h_aug @ ut_iqis[l][k].Xi
        out[k] = psi @ acc
    return out


def _links(profile, contaminated, i, k):
    L = profile.shape[1]
    return range(L) if contaminated else [i]


def iqu_phi_yy(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated=True, i=0):
    """E{y y^H} of the training observation for UT k."""
    pa, pb = bs_iqi.psi_a, bs_iqi.psi_b
    acc = pa @ pa.conj().T + pb @ pb.conj().T
    for l in _links(profile, contaminated, i, k):
        r = profile.r(i, l, k)
        w = abs(_pilot_gain(ut_iqis[l][k])) ** 2
        acc = acc + rho_tr * w * (pa @ r @ pa.conj().T + pb @ r.conj() @ pb.conj().T)
    return acc


def iqu_phi_gy(profile, bs_iqi, ut_iqis, rho_tr, k, i=0):
    """E{g y^H} for the desired channel g = xi_A Psi_A h."""
    ut = ut_iqis[i][k]
    pa = bs_iqi.psi_a
    return np.sqrt(rho_tr) * ut.xi_a * np.conj(_pilot_gain(ut)) * (pa @ profile.r(i, i, k) @ pa.conj().T)


def iqu_omega(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated=True, i=0):
    """Deterministic IQU-MMSE weight; contamination off keeps only l = i."""
    if rho_tr <= 0:
        raise ValueError("rho_tr must be positive")
    yy = iqu_phi_yy(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated, i) / rho_tr
    gy = iqu_phi_gy(profile, bs_iqi, ut_iqis, rho_tr, k, i) / np.sqrt(rho_tr)
    # Omega = gy yy^{-1}; solve with the Hermitian system transposed
    return solve(yy, gy.conj().T, assume_a="her").conj().T


def iqu_estimate(y, omega, rho_tr):
    return omega @ y / np.sqrt(rho_tr)


def iqa_phi_yy(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated=True, i=0):
    """E{Y Y^T} of the augmented observation (summed over its two columns)."""
    psi = bs_iqi.psi_aug
    acc = psi @ psi.T
    for l in _links(profile, contaminated, i, k):
        w = 0.5 * np.sum(ut_iqis[l][k].Xi ** 2)
        acc = acc + rho_tr * w * (psi @ profile.r_aug(i, l, k) @ psi.T)
    return acc


def iqa_phi_gy(profile, bs_iqi, ut_iqis, rho_tr, k, i=0):
    psi = bs_iqi.psi_aug
    w = 0.5 * np.sum(ut_iqis[i][k].Xi ** 2)
    return np.sqrt(rho_tr) * w * (psi @ profile.r_aug(i, i, k) @ psi.T)


def iqa_omega(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated=True, i=0):
    """Deterministic IQA-WLMMSE weight (real 2N x 2N)."""
    if rho_tr <= 0:
        raise ValueError("rho_tr must be positive")
    yy = iqa_phi_yy(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated, i) / rho_tr
    gy = iqa_phi_gy(profile, bs_iqi, ut_iqis, rho_tr, k, i) / np.sqrt(rho_tr)
    return solve(yy, gy.T, assume_a="sym").T


def iqa_estimate(y_aug, omega_aug, rho_tr):
    """Both augmented columns [g_k, g_{k+K}] from one 2N x 2 observation."""
    return omega_aug @ y_aug / np.sqrt(rho_tr)


def estimate_all(y, y_aug, omegas=None, omegas_aug=None, rho_tr=1.0):
    """Assemble G_hat (N x K) and the augmented G_hat (2N x 2K)."""
    g_hat = g_aug = None
    if omegas is not None:
        g_hat = np.stack([iqu_estimate(y[:, k], omegas[k], rho_tr) for k in range(len(omegas))], axis=1)
    if omegas_aug is not None:
        K = len(omegas_aug)
        cols = [iqa_estimate(y_aug[k], omegas_aug[k], rho_tr) for k in range(K)]
        g_aug = np.concatenate([np.stack([c[:, 0] for c in cols], axis=1),
                                np.stack([c[:, 1] for c in cols], axis=1)], axis=1)
    return EstimatedChannels(g_hat, g_aug)


__all__ = [
    "TrainingSet", "EstimatedChannels", "gen_training", "rx_training_complex",
    "rx_training_augmented", "iqu_phi_yy", "iqu_phi_gy", "iqu_omega", "iqu_estimate",
    "iqa_phi_yy", "iqa_phi_gy", "iqa_omega", "iqa_estimate", "estimate_all", "stack_re_im",
]
