# %% [markdown]
# # Sum rate against the number of BS antennas
#
# Seven hexagonal cells, ten UTs per cell, full pilot reuse, and I/Q
# imbalance at both ends of every link.  Each point averages the per-trial
# sum rate over channel draws and compares it with the large-system
# prediction.  Run with `python notebooks/01_sum_rate_vs_antennas.py`.

# %%
from dataclasses import replace

from iqmimo.cli import preset
from iqmimo.montecarlo import loss_ratio, run_sweep

TRIALS = 30

# %% [markdown]
# The `fig1` preset draws eps in [0.15, 0.2] and theta in [1, 2] degrees
# once per configuration.  All receivers see the same channels and noise.

# %%
cfg = replace(preset("fig1"), trials=TRIALS)
rows = run_sweep(cfg)

print(f"{'N':>5}" + "".join(f"{rx:>22}" for rx in cfg.receivers))
for n in cfg.sweep_values:
    cells = []
    for rx in cfg.receivers:
        r = next(r for r in rows if r.sweep_value == n and r.receiver == rx)
        cells.append(f"{r.mc_sum_rate:8.2f} ({r.asy_sum_rate:6.2f})")
    print(f"{n:>5}" + "".join(f"{c:>22}" for c in cells))

# %% [markdown]
# Relative loss of the conventional receiver against an impairment-free
# front end.  With pilot contamination the per-user SINR stays small, so
# the image interference costs only about a tenth of the rate.

# %%
for n in cfg.sweep_values:
    mc = loss_ratio(rows, n)
    asy = loss_ratio(rows, n, column="asy_sum_rate")
    print(f"N={n:>4}  loss {mc:6.1%}  (asymptotic {asy:6.1%})")

# %% [markdown]
# Same sweep with orthogonal pilots across cells and the three impairment
# placements.  The ordering between placements settles once N is large.

# %%
cfg2 = replace(preset("fig2"), trials=TRIALS, sweep_values=(32, 64, 128))
rows2 = run_sweep(cfg2, asymptotics=False)
for n in cfg2.sweep_values:
    pick = {r.scenario: r.mc_sum_rate for r in rows2 if r.sweep_value == n and r.receiver == "iqu_mmse"}
    print(f"N={n:>4}  " + "  ".join(f"{k.split('/')[-1]}={v:6.2f}" for k, v in sorted(pick.items())))
