"""Condensation of helium into the sample cell, regions I through IV.

Replays the shipped condensation scenario: the resonance is unaffected
while helium fills the sinter dead volume (I), spikes and recovers as warm
liquid enters and thermalizes (II), shifts progressively as capillary
action fills the microchannels (III), and lands at the bulk value once
liquid covers the chip (IV).

    python demos/02_condensation_trajectory.py
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import helisurf as hs
from helisurf.cli import resolve_config_path
from helisurf.io import load_config

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

scn = load_config(resolve_config_path("condensation.cfg")).condensation_scenario()
times = np.arange(0.0, 3601.0, 5.0)
rows = hs.condensation_trajectory(scn, times)

shift_mhz = np.array([(f_r - scn.base_frequency) / 1e6 for _, _, f_r in rows])
regions = [state.region for _, state, _ in rows]
channel_nm = np.array([state.channel_depth * 1e9 for _, state, _ in rows])

for region in hs.Region:
    sel = [i for i, r in enumerate(regions) if r is region]
    print(f"region {region}: t = {times[sel[0]]:6.0f}..{times[sel[-1]]:6.0f} s, "
          f"final shift {shift_mhz[sel[-1]]:+7.3f} MHz")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
ax1.plot(times / 60.0, shift_mhz, lw=1.2)
for region in hs.Region:
    sel = [i for i, r in enumerate(regions) if r is region]
    mid = times[sel[len(sel) // 2]] / 60.0
    ax1.annotate(str(region), (mid, shift_mhz.max() + 0.15), ha="center")
ax1.set_ylabel(r"$\Delta f_r$ (MHz)")
ax1.set_ylim(shift_mhz.min() - 0.3, shift_mhz.max() + 0.45)

ax2.plot(times / 60.0, channel_nm, lw=1.2, color="tab:green")
ax2.set_xlabel("time (min)")
ax2.set_ylabel("channel depth $h$ (nm)")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "condensation_trajectory.png"), dpi=150)
print(f"\nfigure written to {OUT}/condensation_trajectory.png")
