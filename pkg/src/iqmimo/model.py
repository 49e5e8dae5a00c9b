"""Core domain types: I/Q imbalance, cell topology, ULA covariances and channels.

Complex quantities follow the convention CN(0, 1): real and imaginary parts
each carry variance 1/2.  The augmented real view of a complex matrix ``M``
is ``[[Re M, -Im M], [Im M, Re M]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def augment(m):
    """Return the real 2p x 2q block form of a complex p x q matrix (or vector)."""
    m = np.asarray(m)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    re, im = m.real, m.imag
    if m.ndim == 1:
        return np.concatenate([re, im])
    return np.block([[re, -im], [im, re]])


def stack_re_im(z):
    """Stack real and imaginary parts of a complex vector (or matrix rows)."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=0)


def permutation_matrix(n):
    """2N x 2N 0/1 matrix mapping per-branch [Re, Im] pairs onto stacked order.

    Entry (2n-1, n) and (2n, n+N) are one (1-based), everything else zero.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    p[2 * idx, idx] = 1.0
    p[2 * idx + 1, idx + n] = 1.0
    return p


def _iqi_coefficients(eps, theta):
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    a = c + 1j * eps * s
    b = eps * c - 1j * s
    return a, b


def _iqi_block(a, b):
    # 2x2 real matrix acting on [Re x; Im x] equal to x -> a x + b x*
    return np.array([[(a + b).real, (b - a).imag], [(a + b).imag, (a - b).real]])


def _check_finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite I/Q imbalance parameter")


@dataclass(frozen=True)
class UtIqi:
    """Transmit-side imbalance of one user terminal."""

    eps: float
    theta: float
    xi_a: complex
    xi_b: complex
    Xi: np.ndarray


def build_ut_iqi(eps, theta):
    _check_finite(eps, theta)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if abs(theta) >= np.pi:
        raise ValueError("|theta| must be below pi")
    a, b = _iqi_coefficients(float(eps), float(theta))
    return UtIqi(float(eps), float(theta), complex(a), complex(b), _iqi_block(a, b))


@dataclass(frozen=True)
class BsIqi:
    """Receive-side imbalance of every antenna branch of one base station."""

    eps: np.ndarray
    theta: np.ndarray
    psi_a: np.ndarray
    psi_b: np.ndarray
    psi_aug: np.ndarray

    @property
    def n(self):
        return self.eps.size

    def apply(self, z):
        """Complex-domain action z -> Psi_A z + Psi_B z* (vector or column stack)."""
        a = np.diag(self.psi_a)
        b = np.diag(self.psi_b)
        if z.ndim == 1:
            return a * z + b * z.conj()
        return a[:, None] * z + b[:, None] * z.conj()


def build_bs_iqi(eps, theta):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if eps.shape != theta.shape or eps.ndim != 1:
        raise ValueError("eps and theta must be vectors of equal length")
    _check_finite(eps, theta)
    n = eps.size
    a, b = _iqi_coefficients(eps, theta)
    blocks = np.zeros((2 * n, 2 * n))
    for k in range(n):
        blocks[2 * k:2 * k + 2, 2 * k:2 * k + 2] = _iqi_block(a[k], b[k])
    p = permutation_matrix(n)
    psi_aug = p.T @ blocks @ p
    return BsIqi(eps, theta, np.diag(a), np.diag(b), psi_aug)


def no_bs_iqi(n):
    return build_bs_iqi(np.zeros(n), np.zeros(n))


def no_ut_iqi():
    return build_ut_iqi(0.0, 0.0)


# Geometry --------------------------------------------------------------------

_NEIGHBOUR_DIST = np.sqrt(3.0)


def _bs_positions(n_cells):
    pos = [np.zeros(2)]
    if n_cells == 7:
        for m in range(6):
            ang = np.pi / 6 + m * np.pi / 3
            pos.append(_NEIGHBOUR_DIST * np.array([np.cos(ang), np.sin(ang)]))
    return np.array(pos)


@dataclass(frozen=True)
class Topology:
    L: int
    K: int
    cell_radius: float
    ut_ring_radius: float
    bs_pos: np.ndarray
    ut_pos: np.ndarray
    distances: np.ndarray  # [i, l, k]: BS i to UT k of cell l


def hex_topology(L, K, seed=0, ut_ring_radius=2.0 / 3.0):
    """Centre cell plus (optionally) six hexagonal neighbours, UTs on a ring."""
    if L not in (1, 7):
        raise ValueError("only L=1 or L=7 cells are supported")
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    bs = _bs_positions(L)
    ang = rng.uniform(0.0, 2 * np.pi, size=(L, K))
    ut = bs[:, None, :] + ut_ring_radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    d = np.linalg.norm(bs[:, None, None, :] - ut[None, :, :, :], axis=-1)
    # the serving distance is the ring radius by construction; pin it exactly
    for i in range(L):
        d[i, i, :] = ut_ring_radius
    return Topology(L, K, 1.0, ut_ring_radius, bs, ut, d)


# Covariance ------------------------------------------------------------------

def steering_matrix(n, m, spacing_over_lambda=0.5):
    """N x M matrix of ULA steering vectors for uniformly spread AoAs."""
    phi = -np.pi / 2 + np.arange(m) * np.pi / m
    idx = np.arange(n)[:, None]
    return np.exp(-2j * np.pi * spacing_over_lambda * idx * np.sin(phi)[None, :]) / np.sqrt(m)


def ula_covariance(c, n, m=None, spacing_over_lambda=0.5):
    """Square root R_check = c^(-3/2) [B, 0] of the ULA covariance."""
    if m is None:
        m = max(1, n // 2)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= M <= N")
    if c <= 0:
        raise ValueError("distance must be positive")
    r_sqrt = np.zeros((n, n), dtype=complex)
    r_sqrt[:, :m] = c ** -1.5 * steering_matrix(n, m, spacing_over_lambda)
    return r_sqrt


@dataclass(frozen=True)
class CovarianceProfile:
    """Per-link covariance square roots, indexed [i, l, k] -> N x N.

    ``shared`` holds a common unit-distance square root when every link is a
    scaled copy of it (the ULA model), which keeps memory at O(N^2).
    """

    r_sqrt_unit: np.ndarray
    scale: np.ndarray  # [i, l, k] amplitude factor applied to r_sqrt_unit
    rx: tuple = (0,)

    @property
    def n(self):
        return self.r_sqrt_unit.shape[0]

    @property
    def shape(self):
        return self.scale.shape

    def r_sqrt(self, i, l, k):
        return self.scale[i, l, k] * self.r_sqrt_unit

    @cached_property
    def r_unit(self):
        return self.r_sqrt_unit @ self.r_sqrt_unit.conj().T

    def r(self, i, l, k):
        return self.scale[i, l, k] ** 2 * self.r_unit

    def r_aug(self, i, l, k):
        a = augment(self.r_sqrt(i, l, k))
        return a @ a.T


def covariance_profile(topology, n, m=None, spacing_over_lambda=0.5):
    unit = ula_covariance(1.0, n, m, spacing_over_lambda)
    scale = topology.distances ** -1.5
    return CovarianceProfile(unit, scale)


def iid_profile(L, K, n):
    """Identity covariances on every link; handy for checks."""
    return CovarianceProfile(np.eye(n, dtype=complex), np.ones((L, L, K)))


# Channels --------------------------------------------------------------------

@dataclass
class ChannelRealization:
    """Channel matrices H[i][l] (N x K) for the receiving BSs in ``rx``."""

    h: dict
    _aug: dict = field(default_factory=dict, repr=False)

    def h_aug(self, i, l):
        key = (i, l)
        if key not in self._aug:
            self._aug[key] = augment(self.h[key])
        return self._aug[key]


def complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channel(profile, rng, rx=(0,)):
    """Draw h_{i,l,k} = R_check nu with nu ~ CN(0, I) for BS indices in ``rx``."""
    L = profile.shape[1]
    K = profile.shape[2]
    n = profile.n
    h = {}
    for i in rx:
        nu = complex_normal(rng, (L, n, K))
        base = profile.r_sqrt_unit @ nu  # (L, n, K)
        for l in range(L):
            h[(i, l)] = base[l] * profile.scale[i, l][None, :]
    return ChannelRealization(h)
