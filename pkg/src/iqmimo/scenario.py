"""A fully drawn system: covariances, impairments and SNRs for one sweep point."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .model import build_bs_iqi, build_ut_iqi, no_bs_iqi, no_ut_iqi


def substream(seed, *key):
    """Counter-based generator keyed by (seed, *key); order independent."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Scenario:
    profile: object
    bs_iqi: tuple          # one BsIqi per cell
    ut_iqi: tuple          # L tuples of K UtIqi
    rho_ul: float
    rho_tr: float
    contaminated: bool = True
    csi: str = "estimated"
    i: int = 0             # index of the observed cell
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.profile.n

    @property
    def L(self):
        return self.profile.shape[1]

    @property
    def K(self):
        return self.profile.shape[2]

    @cached_property
    def has_iqi(self):
        bs = self.bs_iqi[self.i]
        if np.any(bs.eps) or np.any(bs.theta):
            return True
        return any(u.eps or u.theta for row in self.ut_iqi for u in row)

    def _public_meta(self):
        # drop caches derived from the old parameters
        return {k: v for k, v in self.meta.items() if not k.startswith("_")}

    def without_iqi(self):
        L, K = self.L, self.K
        return replace(self, bs_iqi=tuple(no_bs_iqi(self.n) for _ in range(L)),
                       ut_iqi=tuple(tuple(no_ut_iqi() for _ in range(K)) for _ in range(L)),
                       meta=self._public_meta())

    def with_csi(self, csi):
        return replace(self, csi=csi, meta=self._public_meta())


def _uniform_map(spec, u):
    if np.ndim(spec) == 0:
        return np.full(u.shape, float(spec))
    lo, hi = (float(v) for v in spec)
    if lo > hi:
        raise ValueError("uniform range must be ordered")
    return lo + (hi - lo) * u


def draw_iqi(L, K, n, mode, eps, theta, rng):
    """Draw BS/UT impairments.

    ``eps`` and ``theta`` are either a scalar (fixed value everywhere) or a
    (lo, hi) pair for independent uniform draws per UT and per antenna branch.
    ``mode`` is one of none, bs_only, ut_only, both.

    All values are drawn whatever the mode, so modes share the same
    impairments.  UTs come first and antennas last in (n, L) row-major
    order, so the draw for n antennas is a prefix of the draw for any
    larger n.
    """
    if mode not in ("none", "bs_only", "ut_only", "both"):
        raise ValueError(f"unknown iqi mode {mode!r}")
    u_ut = rng.uniform(size=(L, K, 2))
    u_bs = rng.uniform(size=(n, L, 2))
    ut_e, ut_t = _uniform_map(eps, u_ut[..., 0]), _uniform_map(theta, u_ut[..., 1])
    bs_e, bs_t = _uniform_map(eps, u_bs[..., 0]).T, _uniform_map(theta, u_bs[..., 1]).T
    if mode in ("none", "ut_only"):
        bs_e, bs_t = np.zeros_like(bs_e), np.zeros_like(bs_t)
    if mode in ("none", "bs_only"):
        ut_e, ut_t = np.zeros_like(ut_e), np.zeros_like(ut_t)
    bs = tuple(build_bs_iqi(bs_e[l], bs_t[l]) for l in range(L))
    ut = tuple(tuple(build_ut_iqi(ut_e[l, k], ut_t[l, k]) for k in range(K)) for l in range(L))
    return bs, ut
