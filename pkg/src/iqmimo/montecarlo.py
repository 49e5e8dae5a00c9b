"""Experiment orchestration: scenario construction, trial loops and sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .asymptotics import theorem1_sinr, theorem2_sinr
from .detection import ergodic_sum_rate
from .model import covariance_profile, hex_topology
from .scenario import Scenario, draw_iqi

RECEIVERS = ("iqa_wlmmse", "iqu_mmse", "mmse_no_iqi", "mmse_perfect_csi")
IQI_MODES = ("none", "bs_only", "ut_only", "both")
SWEEP_VARS = ("n", "eps", "theta")

# spawn-key namespaces kept clear of the (point, trial) keys used for trials
_TOPOLOGY_KEY = (2**31, 0)
_IQI_KEY = (2**31, 1)


@dataclass
class ScenarioConfig:
    """Everything needed to rebuild an experiment.  Angles are in degrees.

    ``eps`` and ``theta_deg`` are a scalar (same value everywhere) or a
    [lo, hi] pair for uniform draws.  ``iqi_mode`` may be a list, in which
    case every mode is run on the same draws.
    """

    name: str = "custom"
    n_antennas: int = 64
    n_uts: int = 10
    n_cells: int = 7
    rho_ul_db: float = 15.0
    rho_tr_db: float = 10.0
    iqi_mode: object = "both"
    eps: object = (0.15, 0.2)
    theta_deg: object = (1.0, 2.0)
    contamination: bool = True
    csi: str = "estimated"
    trials: int = 100
    seed: int = 0
    aoa_dims: int | None = None
    spacing: float = 0.5
    ut_ring_radius: float = 2.0 / 3.0
    receivers: tuple = RECEIVERS
    sweep_var: str = "n"
    sweep_values: tuple = (64,)
    redraw_iqi: bool = False

    def __post_init__(self):
        for name in ("eps", "theta_deg"):
            v = getattr(self, name)
            if np.ndim(v):
                setattr(self, name, tuple(float(x) for x in v))
        if isinstance(self.iqi_mode, (list, tuple)):
            self.iqi_mode = tuple(self.iqi_mode)
        self.receivers = tuple(self.receivers)
        self.sweep_values = tuple(self.sweep_values)
        self.validate()

    @property
    def modes(self):
        return self.iqi_mode if isinstance(self.iqi_mode, tuple) else (self.iqi_mode,)

    def validate(self):
        for name in ("n_antennas", "n_uts", "n_cells", "trials"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_cells not in (1, 7):
            raise ValueError("n_cells must be 1 or 7")
        for name in ("rho_ul_db", "rho_tr_db", "spacing"):
            if not math.isfinite(float(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        for name in ("eps", "theta_deg"):
            v = getattr(self, name)
            if np.ndim(v) and (len(v) != 2 or v[0] > v[1]):
                raise ValueError(f"{name} range must be an ordered [lo, hi] pair")
        for mode in self.modes:
            if mode not in IQI_MODES:
                raise ValueError(f"unknown iqi mode {mode!r}")
        if self.csi not in ("estimated", "perfect"):
            raise ValueError(f"unknown csi {self.csi!r}")
        for r in self.receivers:
            if r not in RECEIVERS:
                raise ValueError(f"unknown receiver {r!r}")
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep_var!r}")
        if not self.sweep_values:
            raise ValueError("sweep needs at least one value")

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def at(self, value):
        """Copy with the sweep variable set to ``value``."""
        if self.sweep_var == "n":
            return replace(self, n_antennas=int(value))
        if self.sweep_var == "eps":
            return replace(self, eps=float(value))
        return replace(self, theta_deg=float(value))


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    receiver: str
    sweep_var: str
    sweep_value: float
    n: int
    k: int
    l: int
    rho_ul_db: float
    rho_tr_db: float
    trials: int
    mc_sum_rate: float
    mc_stderr: float
    asy_sum_rate: float
    seed: int
    single_trial: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)


def _seed_seq(seed, *key):
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def build_scenario(config, mode=None, point=0):
    """Scenario for one sweep point; topology and IQI fixed by (seed, keys)."""
    c = config
    mode = c.modes[0] if mode is None else mode
    top = hex_topology(c.n_cells, c.n_uts, seed=_seed_seq(c.seed, *_TOPOLOGY_KEY), ut_ring_radius=c.ut_ring_radius)
    prof = covariance_profile(top, c.n_antennas, c.aoa_dims, c.spacing)
    iqi_rng = np.random.default_rng(_seed_seq(c.seed, *_IQI_KEY, point if c.redraw_iqi else 0))
    eps = c.eps
    theta = np.radians(c.theta_deg) if np.ndim(c.theta_deg) == 0 else tuple(np.radians(c.theta_deg))
    bs, ut = draw_iqi(c.n_cells, c.n_uts, c.n_antennas, mode, eps, theta, iqi_rng)
    return Scenario(prof, bs, ut, 10 ** (c.rho_ul_db / 10), 10 ** (c.rho_tr_db / 10),
                    contaminated=bool(c.contamination), csi=c.csi,
                    meta={"name": c.name, "mode": mode})


def receiver_setup(scenario, receiver):
    """(scenario, simulator kind, theorem) used for a named receiver."""
    if receiver == "iqa_wlmmse":
        return scenario, "iqa", theorem2_sinr
    if receiver == "iqu_mmse":
        return scenario, "iqu", theorem1_sinr
    if receiver == "mmse_no_iqi":
        return scenario.without_iqi(), "iqu", theorem1_sinr
    if receiver == "mmse_perfect_csi":
        return scenario.without_iqi().with_csi("perfect"), "iqu", theorem1_sinr
    raise ValueError(f"unknown receiver {receiver!r}")


def run_point(config, receiver, point=0, value=None, scenario=None, asymptotics=True,
              threads=1, mode=None, label=None):
    """Monte-Carlo and asymptotic sum rate of one receiver at one sweep point."""
    c = config
    sc = build_scenario(c, mode, point) if scenario is None else scenario
    sc_r, kind, theorem = receiver_setup(sc, receiver)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            mean, se, _ = ergodic_sum_rate(sc_r, kind, c.trials, rng=c.seed, point=point, map_fn=ex.map)
    else:
        mean, se, _ = ergodic_sum_rate(sc_r, kind, c.trials, rng=c.seed, point=point)
    asy, diag = float("nan"), {}
    if asymptotics:
        res = theorem(sc_r)
        asy, diag = res.sum_rate0, dict(res.diagnostics)
    if value is None:
        value = {"n": c.n_antennas, "eps": c.eps, "theta": c.theta_deg}[c.sweep_var]
        value = value if np.ndim(value) == 0 else float("nan")
    return ResultRow(label or c.name, receiver, c.sweep_var, float(value), c.n_antennas, c.n_uts,
                     c.n_cells, float(c.rho_ul_db), float(c.rho_tr_db), int(c.trials), float(mean),
                     float(se), float(asy), int(c.seed), c.trials == 1, diag)


def run_sweep(config, variable=None, values=None, asymptotics=True, threads=1):
    """One ResultRow per (value, mode, receiver) with common random numbers.

    Every receiver and IQI mode at a sweep point reuses the same trial
    substreams, so differences between them are paired.
    """
    c = config
    if variable is not None or values is not None:
        c = replace(c, sweep_var=variable or c.sweep_var,
                    sweep_values=tuple(values) if values is not None else c.sweep_values)
    if not c.sweep_values:
        raise ValueError("sweep needs at least one value")
    multi = len(c.modes) > 1
    rows = []
    for point, value in enumerate(c.sweep_values):
        cp = c.at(value)
        for mode in c.modes:
            sc = build_scenario(cp, mode, point)
            label = f"{c.name}/{mode}" if multi else c.name
            for receiver in c.receivers:
                if multi and receiver in ("mmse_no_iqi", "mmse_perfect_csi") and mode != c.modes[0]:
                    continue  # identical across modes
                rows.append(run_point(cp, receiver, point, value, sc, asymptotics, threads, mode,
                                      label if receiver not in ("mmse_no_iqi", "mmse_perfect_csi") else c.name))
    return rows


def loss_ratio(rows, value, receiver="iqu_mmse", baseline="mmse_no_iqi", column="mc_sum_rate"):
    """1 - rate(receiver)/rate(baseline) at one sweep value."""
    pick = {r.receiver: getattr(r, column) for r in rows if r.sweep_value == value}
    return 1.0 - pick[receiver] / pick[baseline]


__all__ = ["ScenarioConfig", "ResultRow", "RECEIVERS", "IQI_MODES", "SWEEP_VARS", "build_scenario",
           "receiver_setup", "run_point", "run_sweep", "loss_ratio"]
