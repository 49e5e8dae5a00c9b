"""Deterministic equivalents for the IQU-MMSE and IQA-WLMMSE receivers.

Solver conventions: the Gram matrix columns g_k have covariance Delta_k / n, so
that

    T = ((1/n) sum_k Delta_k / (1 + delta_k) + B + alpha I)^{-1},
    delta_k = (1/n) tr(Delta_k T).

The theorems use Delta_k = E{g_hat_k g_hat_k^H} with alpha = 1/(n rho_ul),
which describes (1/n)(G G^H + I/rho_ul).

The per-UT powers are built the same way for both receivers.  Every channel
estimate column and every symbol stream is a widely-linear map of the
Gaussian channel sources, so all the covariances the formulas need reduce to
a small set of products ``M_a C M_b^H`` that are computed once and cached.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve

from .estimation import iqa_omega, iqu_omega, iqu_phi_yy
from .model import augment

log = logging.getLogger(__name__)


# Lemma solvers ---------------------------------------------------------------

@dataclass
class FixedPointSolution:
    delta: np.ndarray
    t: np.ndarray
    iterations: int
    residual: float
    n: int = 0
    alpha: float = 0.0
    b: np.ndarray | None = None


@dataclass
class TPrimeSolution:
    t_prime: np.ndarray
    delta_prime: np.ndarray
    y: np.ndarray
    x: np.ndarray


def _as_stack(deltas, n=None):
    if deltas is None or len(deltas) == 0:
        return np.zeros((0, n, n)) if n is not None else None
    return np.asarray(deltas)


def _assemble_t(deltas, delta, b, alpha, n):
    dim = b.shape[0]
    acc = b + alpha * np.eye(dim)
    if len(deltas):
        acc = acc + np.tensordot(1.0 / (1.0 + delta), deltas, axes=1) / n
    return np.linalg.inv(acc)


def _traces(deltas, t):
    # tr(Delta_k T) for every k, without forming the products
    return np.einsum("kij,ji->k", deltas, t).real


def lemma3_solve(deltas, b=None, alpha=1.0, n=None, tol=1e-10, max_iter=10_000):
    """Fixed point of the resolvent deterministic equivalent."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if b is None and (deltas is None or len(deltas) == 0):
        raise ValueError("need deltas or b to fix the dimension")
    dim = b.shape[0] if b is not None else np.asarray(deltas).shape[1]
    n = dim if n is None else n
    deltas = _as_stack(deltas, dim)
    b = np.zeros((dim, dim)) if b is None else np.asarray(b)
    for d in list(deltas) + [b]:
        if not np.allclose(d, d.conj().T, atol=1e-9 * (1 + np.abs(d).max())):
            raise ValueError("inputs must be Hermitian")
    m = len(deltas)
    delta = np.ones(m)
    if m == 0:
        return FixedPointSolution(delta, _assemble_t(deltas, delta, b, alpha, n), 0, 0.0, n, alpha, b)
    damping = 1.0
    prev_res = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        t = _assemble_t(deltas, delta, b, alpha, n)
        new = _traces(deltas, t) / n
        res = float(np.max(np.abs(new - delta) / np.maximum(np.abs(new), 1e-300)))
        if res > prev_res and damping == 1.0:
            damping = 0.5
        delta = (1 - damping) * delta + damping * new
        prev_res = res
        if res < tol:
            break
    else:
        raise RuntimeError(f"fixed point did not converge, residual {res:.3e}")
    if np.any(delta < 0):
        raise RuntimeError("negative fixed-point solution")
    t = _assemble_t(deltas, delta, b, alpha, n)
    return FixedPointSolution(delta, t, it, res, n, alpha, b)


class _TPrime:
    """Builds T' for many matrices C against one fixed point (Y is shared)."""

    def __init__(self, fp, deltas):
        self.fp = fp
        self.deltas = _as_stack(deltas, fp.t.shape[0])
        n, t, d = fp.n, fp.t, fp.delta
        self.m = len(self.deltas)
        if self.m:
            self.dt = self.deltas @ t                                  # Delta_k T
            self.tdt = t @ self.dt                                     # T Delta_k T
            flat = self.dt.reshape(self.m, -1)
            tr = flat @ np.swapaxes(self.dt, 1, 2).reshape(self.m, -1).T  # tr(Delta_k T Delta_q T)
            self.y = (tr / n) / (n * (1 + d)[None, :] ** 2)
            self.y = self.y.real if np.isrealobj(t) else self.y
            rho = np.max(np.abs(np.linalg.eigvals(self.y))) if self.m else 0.0
            if rho >= 1:
                raise RuntimeError("spectral radius of Y is not below one")
        else:
            self.y = np.zeros((0, 0))

    def __call__(self, c):
        fp = self.fp
        t, n, d = fp.t, fp.n, fp.delta
        tct = t @ c @ t
        if self.m == 0:
            return TPrimeSolution(tct, np.zeros(0), self.y, np.zeros(0))
        # x_k = (1/n) tr(Delta_k T C T) = (1/n) tr(T Delta_k T C)
        x = np.einsum("kij,ji->k", self.tdt, c) / n
        if np.isrealobj(t):
            x = x.real
        dp = solve(np.eye(self.m) - self.y, x)
        corr = np.tensordot(dp / (1 + d) ** 2, self.tdt, axes=1) / n
        return TPrimeSolution(tct + corr, dp, self.y, x)


def lemma4_solve(fp, c, deltas, n=None):
    """T' = T C T + (1/n) T sum_k Delta_k delta'_k / (1 + delta_k)^2 T."""
    if n is not None and n != fp.n:
        fp = FixedPointSolution(fp.delta, fp.t, fp.iterations, fp.residual, n, fp.alpha, fp.b)
    return _TPrime(fp, deltas)(np.asarray(c))


# Widely-linear bookkeeping ---------------------------------------------------

class _Algebra:
    """Registry of matrices, source covariances and cached products.

    A vector is a dict ``source -> list of (coef, matrix_key, conj)`` meaning
    sum coef * M[matrix_key] @ (z or conj(z)).  Complex sources are circular,
    so z and conj(z) terms never correlate.
    """

    def __init__(self, real):
        self.real = real
        self.mats = {}
        self.units = {}
        self.sources = {}   # source -> (scale, unit_key)
        self._prod = {}
        self._tr = {}

    def add_matrix(self, key, m):
        self.mats[key] = m

    def add_unit(self, key, c):
        self.units[key] = c

    def add_source(self, src, scale, unit):
        self.sources[src] = (scale, unit)

    def product(self, a, b, conj, unit):
        key = (a, b, conj, unit)
        p = self._prod.get(key)
        if p is None:
            c = self.units[unit]
            if conj:
                c = c.conj()
            ma, mb = self.mats[a], self.mats[b]
            p = ma @ c @ mb.conj().T
            self._prod[key] = p
        return p

    def cov(self, x, y):
        """E{x y^H} as a sparse linear combination {product_key: coef}."""
        out = {}
        for src, xt in x.items():
            yt = y.get(src)
            if yt is None:
                continue
            scale, unit = self.sources[src]
            for ca, ma, cja in xt:
                for cb, mb, cjb in yt:
                    if cja != cjb:
                        continue
                    key = (ma, mb, cja, unit)
                    out[key] = out.get(key, 0) + ca * np.conj(cb) * scale
        return out

    def dense(self, lc):
        acc = None
        for key, coef in lc.items():
            p = coef * self.product(*key)
            acc = p if acc is None else acc + p
        return acc

    def trace(self, gkey, g, lc):
        """tr(G @ sum coef * P) using cached per-product traces."""
        total = 0
        for key, coef in lc.items():
            tk = (gkey, key)
            v = self._tr.get(tk)
            if v is None:
                v = np.sum(g * self.product(*key).T)
                self._tr[tk] = v
            total = total + coef * v
        return total


@dataclass
class AsymptoticSinr:
    s0: np.ndarray
    i0: np.ndarray
    z0: np.ndarray
    delta: np.ndarray = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def sinr0(self):
        return self.s0 / (self.i0 + self.z0)

    @property
    def sum_rate0(self):
        return asymptotic_sum_rate(self)


def asymptotic_sum_rate(asy):
    sinr = np.maximum(np.asarray(asy.sinr0, dtype=float), 0.0)
    return float(np.sum(np.log2(1.0 + sinr)))


@dataclass
class BlockFixedPoint:
    """Fixed point when estimate columns come in correlated blocks.

    ``d[k]`` is the block matrix D_k with entries (1/n) tr(Phi_ba T) and
    ``w[k] = (I + D_k)^{-1}``.  Singleton blocks reduce to lemma3_solve.
    """

    blocks: list
    d: list
    w: list
    t: np.ndarray
    iterations: int
    residual: float
    n: int
    alpha: float

    @property
    def delta(self):
        # diagonal entries in column order, for reporting
        out = np.zeros(sum(len(b) for b in self.blocks))
        for b, dk in zip(self.blocks, self.d):
            out[b] = np.real(np.diag(dk))
        return out


def _block_stack(blocks, phi):
    # flat stack of Phi_ab (columns a, b of one block) plus its swapped twin Phi_ba
    idx, fwd, rev = [], [], []
    for k, b in enumerate(blocks):
        for x, a1 in enumerate(b):
            for y, a2 in enumerate(b):
                idx.append((k, x, y))
                fwd.append(phi[(a1, a2)])
                rev.append(phi[(a2, a1)])
    return idx, np.asarray(fwd), np.asarray(rev)


def block_fixed_point(blocks, phi, alpha, n, tol=1e-10, max_iter=10_000):
    """T = ((1/n) sum_k sum_ab [W_k]_ab Phi_ab + alpha I)^{-1}, D_k[a,b] = (1/n) tr(Phi_ba T).

    ``phi[(a, b)]`` is E{g_a g_b^H} for columns a, b of the same block.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    idx, fwd, rev = _block_stack(blocks, phi)
    dim = fwd.shape[1]
    d = [np.eye(len(b), dtype=fwd.dtype) for b in blocks]
    damping, prev_res, res = 1.0, np.inf, np.inf
    for it in range(1, max_iter + 1):
        w = [np.linalg.inv(np.eye(len(dk)) + dk) for dk in d]
        coefs = np.array([w[k][x, y] for k, x, y in idx])
        t = np.linalg.inv(alpha * np.eye(dim) + np.tensordot(coefs, fwd, axes=1) / n)
        tr = np.einsum("pij,ji->p", rev, t) / n
        new = [np.zeros_like(dk) for dk in d]
        for (k, x, y), v in zip(idx, tr):
            new[k][x, y] = v
        scale = max(float(np.max(np.abs(np.diag(nk)))) for nk in new)
        res = max(float(np.max(np.abs(nk - dk))) for nk, dk in zip(new, d)) / max(scale, 1e-300)
        if res > prev_res and damping == 1.0:
            damping = 0.5
        d = [(1 - damping) * dk + damping * nk for dk, nk in zip(d, new)]
        prev_res = res
        if res < tol:
            break
    else:
        raise RuntimeError(f"fixed point did not converge, residual {res:.3e}")
    w = [np.linalg.inv(np.eye(len(dk)) + dk) for dk in d]
    coefs = np.array([w[k][x, y] for k, x, y in idx])
    t = np.linalg.inv(alpha * np.eye(dim) + np.tensordot(coefs, fwd, axes=1) / n)
    return BlockFixedPoint(list(blocks), d, w, t, it, res, n, alpha)


class _BlockTPrime:
    """Block analogue of _TPrime: T' = T C T + (1/n) sum_q E_q T Phi_q T."""

    def __init__(self, fp, phi):
        self.fp = fp
        n, t = fp.n, fp.t
        self.idx, fwd, rev = _block_stack(fp.blocks, phi)
        m = len(self.idx)
        self.tft = t @ fwd @ t
        self.trt = t @ rev @ t
        rt = (rev @ t).reshape(m, -1)
        ft = np.swapaxes(fwd @ t, 1, 2).reshape(m, -1)
        z = rt @ ft.T / n**2
        # E_m[c,d] = sum_ef W[c,e] D'[e,f] W[f,d]
        kmat = np.zeros((m, m), dtype=z.dtype)
        pos = {key: p for p, key in enumerate(self.idx)}
        for k, b in enumerate(fp.blocks):
            wk = fp.w[k]
            for c in range(len(b)):
                for dd in range(len(b)):
                    for e in range(len(b)):
                        for f in range(len(b)):
                            kmat[pos[(k, c, dd)], pos[(k, e, f)]] = wk[c, e] * wk[f, dd]
        self.kmat = kmat
        self.y = z @ kmat
        if np.isrealobj(t):
            self.y = self.y.real
        if m and np.max(np.abs(np.linalg.eigvals(self.y))) >= 1:
            raise RuntimeError("spectral radius of Y is not below one")

    def __call__(self, c):
        t, n = self.fp.t, self.fp.n
        tct = t @ c @ t
        x = np.einsum("pij,ji->p", self.trt, c) / n
        if np.isrealobj(t):
            x = x.real
        dp = solve(np.eye(len(x)) - self.y, x)
        e = self.kmat @ dp
        return tct + np.tensordot(e, self.tft, axes=1) / n


def _solve_powers(alg, n, rho, est, groups, streams, noise_cov, rows_of_ut):
    """Deterministic equivalents of filter-output coefficients and powers.

    est: list of estimate-column vectors; groups[a] is the pilot index of
    column a.  Columns sharing a pilot index are correlated and form one
    block of the fixed point.  streams: list of (vector, pilot index).
    Returns the fixed point, per (row, stream) values and noise powers:
      - ``coef[r][s]`` when stream s shares the pilot of row r (deterministic
        output coefficient);
      - ``power[r][s]`` otherwise (second moment of the output coefficient);
      - ``noise[r]``.
    """
    by_group = {}
    for a, g in enumerate(groups):
        by_group.setdefault(g, []).append(a)
    keys = sorted(by_group)
    blocks = [by_group[g] for g in keys]
    block_of = {g: k for k, g in enumerate(keys)}
    phi = {}
    for b in blocks:
        for a1 in b:
            for a2 in b:
                m = alg.dense(alg.cov(est[a1], est[a2]))
                phi[(a1, a2)] = m.real if alg.real else m
    fp = block_fixed_point(blocks, phi, alpha=1.0 / (n * rho), n=n)
    gam = fp.t
    tprime = _BlockTPrime(fp, phi)

    def pos(a):
        k = block_of[groups[a]]
        return k, blocks[k].index(a)

    # lambda_{a,s} = (1/n) tr(Gamma E{v_s g_a^H}) for a in the stream's pilot group,
    # then the block output coefficients c = W lambda
    cvec = []
    for v, q in streams:
        k = block_of[q]
        lam = np.array([alg.trace("gamma", gam, alg.cov(v, est[a])) / n for a in blocks[k]])
        cvec.append(fp.w[k] @ lam)

    rows = sorted({r for rs in rows_of_ut for r in rs})
    row_blocks = sorted({pos(r)[0] for r in rows})
    gz = tprime(noise_cov)
    coef = {r: {} for r in rows}
    power = {r: {} for r in rows}
    noise = {}
    for k in row_blocks:
        b = blocks[k]
        wk = fp.w[k]
        sz = len(b)
        gps = {}
        for x in range(sz):
            for y in range(sz):
                gps[(x, y)] = tprime(phi[(b[y], b[x])])
        nmat = np.array([[np.sum(gz * phi[(b[y], b[x])].T) for y in range(sz)] for x in range(sz)]) / n**2
        nr = np.real(np.diag(wk @ nmat @ wk.conj().T))
        for x, r in enumerate(b):
            noise[r] = float(nr[x])
        for s, (v, q) in enumerate(streams):
            if block_of[q] == k:
                for x, r in enumerate(b):
                    coef[r][s] = cvec[s][x]
                continue
            members = blocks[block_of[q]]
            c = cvec[s]
            pm = np.zeros((sz, sz), dtype=complex)
            for (x, y), gp in gps.items():
                gk = ("gp", k, x, y)
                acc = alg.trace(gk, gp, alg.cov(v, v))
                for ia, a in enumerate(members):
                    acc -= np.conj(c[ia]) * alg.trace(gk, gp, alg.cov(v, est[a]))
                    acc -= c[ia] * alg.trace(gk, gp, alg.cov(est[a], v))
                    for ib, bb in enumerate(members):
                        acc += c[ia] * np.conj(c[ib]) * alg.trace(gk, gp, alg.cov(est[a], est[bb]))
                pm[x, y] = acc / n**2
            pr = np.real(np.diag(wk @ pm @ wk.conj().T))
            for x, r in enumerate(b):
                power[r][s] = float(pr[x])
    phis = np.array([phi[(a, a)] for a in range(len(est))])
    return fp, coef, power, noise, phis


# Scenario builders -----------------------------------------------------------

def theta_iqu(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated=True, i=0, literal=False):
    """E{g_hat g_hat^H} of the IQU-MMSE estimate.

    ``literal`` reproduces the printed form that weights every cell's term
    with the serving UT's pilot gain instead of its own.
    """
    om = iqu_omega(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated, i)
    if not literal:
        yy = iqu_phi_yy(profile, bs_iqi, ut_iqis, rho_tr, k, contaminated, i) / rho_tr
        return om @ yy @ om.conj().T
    pa, pb = bs_iqi.psi_a, bs_iqi.psi_b
    w = abs(ut_iqis[i][k].xi_a + ut_iqis[i][k].xi_b) ** 2
    L = profile.shape[1]
    acc = (pa @ pa.conj().T + pb @ pb.conj().T) / rho_tr
    for l in (range(L) if contaminated else [i]):
        r = profile.r(i, l, k)
        acc = acc + w * (pa @ r @ pa.conj().T + pb @ r.conj() @ pb.conj().T)
    return om @ acc @ om.conj().T


def _links(sc):
    return range(sc.L) if sc.contaminated else [sc.i]


def _iqu_system(sc):
    i, K, L, n = sc.i, sc.K, sc.L, sc.n
    bs = sc.bs_iqi[i]
    alg = _Algebra(real=False)
    alg.add_unit("R", sc.profile.r_unit)
    alg.add_unit("I", np.eye(n, dtype=complex))
    alg.add_matrix("pa", bs.psi_a)
    alg.add_matrix("pb", bs.psi_b)
    for l in range(L):
        for q in range(K):
            alg.add_source(("h", l, q), sc.profile.scale[i, l, q] ** 2, "R")
    est = []
    if sc.csi == "perfect":
        for q in range(K):
            est.append({("h", i, q): [(sc.ut_iqi[i][q].xi_a, "pa", False)]})
    else:
        for q in range(K):
            om = iqu_omega(sc.profile, bs, sc.ut_iqi, sc.rho_tr, q, sc.contaminated, i)
            alg.add_matrix(("oa", q), om @ bs.psi_a)
            alg.add_matrix(("ob", q), om @ bs.psi_b)
            alg.add_source(("w", q), 1.0 / sc.rho_tr, "I")
            vec = {("w", q): [(1.0, ("oa", q), False), (1.0, ("ob", q), True)]}
            for l in _links(sc):
                s = sc.ut_iqi[l][q].xi_a + sc.ut_iqi[l][q].xi_b
                vec[("h", l, q)] = [(s, ("oa", q), False), (np.conj(s), ("ob", q), True)]
            est.append(vec)
    streams, labels = [], []
    for l in range(L):
        for q in range(K):
            u = sc.ut_iqi[l][q]
            src = ("h", l, q)
            streams.append(({src: [(u.xi_a, "pa", False), (np.conj(u.xi_b), "pb", True)]}, q))
            labels.append((l, q, "d"))
            streams.append(({src: [(u.xi_b, "pa", False), (np.conj(u.xi_a), "pb", True)]}, q))
            labels.append((l, q, "c"))
    noise_cov = bs.psi_a @ bs.psi_a.conj().T + bs.psi_b @ bs.psi_b.conj().T
    return alg, est, list(range(K)), streams, labels, noise_cov


def theorem1_sinr(scenario):
    """Asymptotic S, I, Z of the IQU-MMSE receiver for every UT of cell i."""
    sc = scenario
    alg, est, groups, streams, labels, noise_cov = _iqu_system(sc)
    K, i, rho = sc.K, sc.i, sc.rho_ul
    rows = [[k] for k in range(K)]
    fp, coef, power, noise, phis = _solve_powers(alg, sc.n, rho, est, groups, streams, noise_cov, rows)
    s0, i0, z0 = np.zeros(K), np.zeros(K), np.zeros(K)
    for k in range(K):
        for s, (l, q, kind) in enumerate(labels):
            if q == k:
                p = abs(coef[k][s]) ** 2
                if l == i and kind == "d":
                    s0[k] = rho * p
                    continue
            else:
                p = power[k][s]
            i0[k] += rho * p
        z0[k] = noise[k]
    return AsymptoticSinr(s0, i0, z0, fp.delta, {"iterations": fp.iterations, "residual": fp.residual})


def _iqa_system(sc):
    i, K, L, n = sc.i, sc.K, sc.L, sc.n
    bs = sc.bs_iqi[i]
    alg = _Algebra(real=True)
    alg.add_unit("R", 0.5 * augment(sc.profile.r_unit))
    alg.add_unit("I", 0.5 * np.eye(2 * n))
    psi = bs.psi_aug
    j = augment(1j * np.eye(n))
    alg.add_matrix("p", psi)
    alg.add_matrix("pj", psi @ j)
    for l in range(L):
        for q in range(K):
            alg.add_source(("h", l, q), sc.profile.scale[i, l, q] ** 2, "R")

    def col(xi, t, left, leftj):
        # H Xi e_t = Xi[0, t] a + Xi[1, t] J a for a = [Re h; Im h]
        return [(xi[0, t], left, False), (xi[1, t], leftj, False)]

    est_k, est_kk = [], []
    if sc.csi == "perfect":
        for q in range(K):
            xi = sc.ut_iqi[i][q].Xi
            est_k.append({("h", i, q): col(xi, 0, "p", "pj")})
            est_kk.append({("h", i, q): col(xi, 1, "p", "pj")})
    else:
        for q in range(K):
            om = iqa_omega(sc.profile, bs, sc.ut_iqi, sc.rho_tr, q, sc.contaminated, i)
            alg.add_matrix(("o", q), om @ psi)
            alg.add_matrix(("oj", q), om @ psi @ j)
            alg.add_source(("w", q), 1.0 / sc.rho_tr, "I")
            v0 = {("w", q): [(1.0, ("o", q), False)]}
            v1 = {("w", q): [(1.0, ("oj", q), False)]}
            for l in _links(sc):
                xi = sc.ut_iqi[l][q].Xi
                v0[("h", l, q)] = col(xi, 0, ("o", q), ("oj", q))
                v1[("h", l, q)] = col(xi, 1, ("o", q), ("oj", q))
            est_k.append(v0)
            est_kk.append(v1)
    est = est_k + est_kk
    groups = list(range(K)) + list(range(K))
    streams, labels = [], []
    for l in range(L):
        for q in range(K):
            xi = sc.ut_iqi[l][q].Xi
            for t in range(2):
                streams.append(({("h", l, q): col(xi, t, "p", "pj")}, q))
                labels.append((l, q, t))
    noise_cov = 0.5 * psi @ psi.T
    return alg, est, groups, streams, labels, noise_cov


def theorem2_sinr(scenario):
    """Asymptotic S, I, Z of the IQA-WLMMSE receiver for every UT of cell i."""
    sc = scenario
    alg, est, groups, streams, labels, noise_cov = _iqa_system(sc)
    K, i, rho = sc.K, sc.i, sc.rho_ul
    rows = [[k, k + K] for k in range(K)]
    fp, coef, power, noise, phis = _solve_powers(alg, 2 * sc.n, rho, est, groups, streams, noise_cov, rows)
    index = {lab: s for s, lab in enumerate(labels)}
    s0, i0, z0 = np.zeros(K), np.zeros(K), np.zeros(K)
    for k in range(K):
        for l in range(sc.L):
            for q in range(K):
                s_pair = (index[(l, q, 0)], index[(l, q, 1)])
                if q == k:
                    c = [coef[k][s] + 1j * coef[k + K][s] for s in s_pair]
                    a = (c[0] - 1j * c[1]) / 2
                    b = (c[0] + 1j * c[1]) / 2
                    if l == i:
                        s0[k] = rho * abs(a) ** 2
                        i0[k] += rho * abs(b) ** 2
                    else:
                        i0[k] += rho * (abs(a) ** 2 + abs(b) ** 2)
                else:
                    i0[k] += 0.5 * rho * sum(power[k][s] + power[k + K][s] for s in s_pair)
        z0[k] = noise[k] + noise[k + K]
    return AsymptoticSinr(s0, i0, z0, fp.delta, {"iterations": fp.iterations, "residual": fp.residual})


def phi_tilde(scenario, k):
    """Covariances of the two augmented estimate columns of UT k."""
    alg, est, *_ = _iqa_system(scenario)
    K = scenario.K
    return alg.dense(alg.cov(est[k], est[k])), alg.dense(alg.cov(est[k + K], est[k + K]))


# Closed forms ----------------------------------------------------------------

def _bracket(n, rho, eps):
    a = n * rho * (1 + 2 * eps)
    b = n * rho * (1 - 2 * eps)
    return (a / (1 + a)) ** 2 + (b / (1 + b)) ** 2


def closed_form_sinr(kind, **p):
    """Single-cell large-N formulas; ``p`` holds n, k, rho and eps/theta.

    The BS-side forms accept per-antenna vectors for eps and theta.
    """
    n, rho = p.get("n"), p.get("rho")
    if kind == "no_iqi":
        return n * rho
    if kind == "iqu_bs":
        e = np.asarray(p["eps"], dtype=float) * np.ones(n)
        t = np.asarray(p["theta"], dtype=float) * np.ones(n)
        beta = p["k"] / n
        g = 1 + (e**2 - 1) * np.sin(t / 2) ** 2
        mu = np.mean(g)
        den = n * rho * beta * np.sum(e**2 + 0.25 * np.sin(t) ** 2) + np.sum(g**2)
        return n**2 * rho * mu**2 / den
    if kind == "iqu_bs_identical":
        e, t = p["eps"], p["theta"]
        return n * rho / (p["k"] * rho * (e**2 + t**2 / 4) + 1)
    if kind == "iqu_loss":
        e, t = p["eps"], p["theta"]
        return p["k"] * rho * (e**2 + t**2 / 4) + 1
    if kind == "iqu_ut":
        e, t = p["eps"], p["theta"]
        return n * rho / (n * rho * (e**2 + t**2 / 4) + 1)
    if kind == "iqa_bs":
        e = np.asarray(p["eps"], dtype=float) * np.ones(n)
        t = np.asarray(p["theta"], dtype=float) * np.ones(n)
        num = n * rho * (1 + np.mean(e**2)) ** 2
        return num / (1 + np.mean((6 - 2 * np.sin(t) ** 2) * e**2 + np.sin(t) ** 2))
    if kind == "iqa_bs_identical":
        e, t = p["eps"], p["theta"]
        return n * rho * (1 + e**2) ** 2 / (1 + (6 - 2 * np.sin(t) ** 2) * e**2 + np.sin(t) ** 2)
    if kind == "iqa_loss_bs":
        e, t = p["eps"], p["theta"]
        return ((1 + e**2) ** 2 * (p["k"] * rho * (e**2 + t**2 / 4) + 1)
                / (1 + (6 - 2 * np.sin(t) ** 2) * e**2 + np.sin(t) ** 2))
    if kind == "iqa_ut":
        e, t = p["eps"], p["theta"]
        return n * rho * (1 + 2 * e**2 * (1 - 2 * np.cos(t) ** 2)) / (2 * (1 + e**2)) * _bracket(n, rho, e)
    if kind == "iqa_loss_ut":
        e, t = p["eps"], p["theta"]
        return n * rho * (e**2 + t**2 / 4) / (2 * (1 + e**2)) * _bracket(n, rho, e)
    raise ValueError(f"unknown closed form {kind!r}")


CLOSED_FORMS = ("no_iqi", "iqu_bs", "iqu_bs_identical", "iqu_loss", "iqu_ut", "iqa_bs",
                "iqa_bs_identical", "iqa_loss_bs", "iqa_ut", "iqa_loss_ut")
