"""Geophone chain: calibration, then plate-vibration spectroscopy.

First calibrates the sensor model (sensitivity, natural frequency,
damping) from a known multitone shake, then inverts the reference
mixing-chamber-plate scenario to displacement spectra and total RMS with
the pulse tube on and off.

    python demos/04_geophone_vibrations.py
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

cfg = load_config(resolve_config_path("reference_run.cfg"))
gm_true = cfg.geophone_model()

# --- calibration against a known excitation ---------------------------------
fs = 2000.0
t = np.arange(int(fs * 30)) / fs
rng = np.random.default_rng(12)
drive_vals = sum(2e-5 * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
                 for f in np.arange(1.0, 50.5, 1.0))
drive = hs.TimeTrace(drive_vals, fs, "m/s")
response = hs.synth_geophone(drive, gm_true, voltage_noise_asd=1e-6)
initial = hs.GeophoneModel(natural_frequency=6.0, damping_ratio=0.4,
                           sensitivity=15.0, preamp_gain=gm_true.preamp_gain)
cal = hs.calibrate_geophone(drive, response, initial)
print("calibration (truth 28.8 V s/m, 4.5 Hz, 0.6):")
for name in cal.param_names:
    print(f"  {name:18s} = {cal.parameters[name]:.4f} "
          f"+- {cal.uncertainties[name]:.4f}")
gm = hs.GeophoneModel(natural_frequency=cal.parameters["natural_frequency"],
                      damping_ratio=cal.parameters["damping_ratio"],
                      sensitivity=cal.parameters["sensitivity"],
                      preamp_gain=gm_true.preamp_gain)

# --- invert the plate-vibration scenario ------------------------------------
spectra, rms = {}, {}
for pt_on in (True, False):
    scn = cfg.fluctuation("geophone_fluctuation", pt_on=pt_on)
    x = hs.synth_displacement(scn, fs, 40.0)
    volts = hs.synth_geophone(hs.trace_derivative(x, "m/s"), gm_true,
                              voltage_noise_asd=1e-6)
    spectra[pt_on], rms[pt_on] = hs.displacement_from_geophone(
        volts, gm, segment_length=8192, band=(1.2, 200.0))

print(f"\nplate displacement RMS, 1.2-200 Hz:")
print(f"  PT on  : {rms[True]*1e9:.1f} nm")
print(f"  PT off : {rms[False]*1e9:.1f} nm")
print(f"  reduction: {100*(1 - rms[False]/rms[True]):.1f} %")

fig, ax = plt.subplots(figsize=(8, 4.5))
for pt_on, color in ((True, "tab:blue"), (False, "tab:orange")):
    s = spectra[pt_on]
    sel = s.frequencies > 0
    ax.loglog(s.frequencies[sel], s.asd[sel] * 1e9, lw=0.7, color=color,
              label="PT on" if pt_on else "PT off")
ax.axvline(gm.natural_frequency, color="gray", ls=":", lw=0.8,
           label="geophone natural frequency")
ax.set_xlim(1.0, 400)
ax.set_xlabel("frequency (Hz)")
ax.set_ylabel(r"displacement (nm/$\sqrt{\mathrm{Hz}}$)")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "geophone_vibrations.png"), dpi=150)
print(f"\nfigure written to {OUT}/geophone_vibrations.png")
