"""Closed-form electrodynamics of a half-wave CPW resonator.

Quasi-static conformal-mapping permittivity, fundamental frequency from
geometry, kinetic-inductance temperature dependence, single-port reflection
lineshape, and selection of the steepest probe point on the magnitude curve.

All quantities are SI (meters, hertz, kelvin); angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError, OutOfDomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

_LOG10_FACTOR = 20.0 / math.log(10.0)


def ellipk_agm(k: float) -> float:
    """Complete elliptic integral of the first kind K(k), modulus convention.

    Evaluated by the arithmetic-geometric mean, iterated to 1e-12 relative
    accuracy (quadratic convergence, a handful of iterations).

    Parameters
    ----------
    k : float
        Modulus, 0 <= k < 1. Note the argument is k, not the parameter
        m = k**2 used by some libraries.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"elliptic modulus must lie in [0, 1), got {k!r}")
    a, b = 1.0, math.sqrt(1.0 - k * k)
    while abs(a - b) > 1e-12 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


@dataclass(frozen=True)
class ResonatorGeometry:
    """CPW resonator geometry and substrate.

    Attributes
    ----------
    length : float
        Physical length of the half-wave resonator [m].
    center_strip_width : float
        Width of the center conductor [m].
    gap_width : float
        Gap between center strip and ground plane [m]; this is also the
        width of the microchannel that fills with superfluid.
    film_thickness : float
        Metal film thickness [m], which sets the microchannel depth.
    substrate_eps_r : float
        Relative permittivity of the substrate (>= 1).
    substrate_thickness : float
        Substrate thickness [m]; ``math.inf`` for the effectively
        infinite-thickness limit.
    coupling_capacitance : float
        Input coupling capacitance [F]. Carried for reporting; the coupling
        quality factor is an independent parameter of ResonanceParams.
    """

    length: float
    center_strip_width: float
    gap_width: float
    film_thickness: float
    substrate_eps_r: float
    substrate_thickness: float = math.inf
    coupling_capacitance: float = 0.0

    def __post_init__(self):
        for name in ("length", "center_strip_width", "gap_width", "film_thickness"):
            if not getattr(self, name) > 0.0:
                raise InvalidGeometryError(f"{name} must be > 0")
        if not self.substrate_thickness > 0.0:
            raise InvalidGeometryError("substrate_thickness must be > 0")
        if self.substrate_eps_r < 1.0:
            raise InvalidGeometryError("substrate_eps_r must be >= 1")
        if self.coupling_capacitance < 0.0:
            raise InvalidGeometryError("coupling_capacitance must be >= 0")


@dataclass(frozen=True)
class KineticModel:
    """Kinetic-inductance parameters governing f_r(T).

    Attributes
    ----------
    tc : float
        Superconducting critical temperature [K].
    lk_over_lm : float
        Zero-temperature kinetic-to-magnetic inductance ratio (>= 0).
    f_r0 : float
        Zero-temperature resonance frequency [Hz].
    """

    tc: float
    lk_over_lm: float
    f_r0: float

    def __post_init__(self):
        if not self.tc > 0.0:
            raise OutOfDomainError("tc must be > 0")
        if self.lk_over_lm < 0.0:
            raise OutOfDomainError("lk_over_lm must be >= 0")
        if not self.f_r0 > 0.0:
            raise OutOfDomainError("f_r0 must be > 0")


@dataclass(frozen=True)
class ResonanceParams:
    """Single-port reflection lineshape parameters.

    The magnitude model is the notch-style reflection form

        S11(f) = 1 - (Ql/Qc) * exp(i*phi) / (1 + 2i*Ql*(f - f_r)/f_r)

    with the measured level 20*log10|S11| + baseline_db. For phi = 0 and
    Qc >= Ql the magnitude never exceeds 1; for phi != 0 the asymmetry
    convention allows excursions above 1 of order (Ql/Qc)*phi**2/2, the
    known property of this lineshape family (max over frequency equals
    |1 - d*exp(i*phi)| + d with d = Ql/2Qc).
    """

    f_r: float
    q_loaded: float
    q_coupling: float
    asymmetry_phi: float = 0.0
    baseline_db: float = 0.0

    def __post_init__(self):
        if not self.f_r > 0.0:
            raise OutOfDomainError("f_r must be > 0")
        if not self.q_loaded > 0.0:
            raise OutOfDomainError("q_loaded must be > 0")
        if self.q_coupling < self.q_loaded:
            raise OutOfDomainError("q_coupling must be >= q_loaded")

    @property
    def linewidth(self) -> float:
        """Full width at half maximum of the power dip, f_r / Ql [Hz]."""
        return self.f_r / self.q_loaded

    @property
    def half_linewidth(self) -> float:
        """Half width at half maximum, f_r / (2 Ql) [Hz]."""
        return self.f_r / (2.0 * self.q_loaded)


def effective_permittivity(geom: ResonatorGeometry) -> float:
    """Quasi-static effective permittivity of the CPW line.

    Standard conformal-mapping result: ratios of complete elliptic
    integrals over the strip/gap moduli, with the sinh correction for a
    finite substrate. In the infinite-thickness limit this reduces to
    (eps_r + 1)/2.
    """
    a = geom.center_strip_width
    b = a + 2.0 * geom.gap_width
    k0 = a / b
    k0p = math.sqrt(1.0 - k0 * k0)
    if math.isinf(geom.substrate_thickness):
        ratio = 1.0
    else:
        h = geom.substrate_thickness
        k1 = math.sinh(math.pi * a / (4.0 * h)) / math.sinh(math.pi * b / (4.0 * h))
        k1p = math.sqrt(1.0 - k1 * k1)
        ratio = (ellipk_agm(k1) / ellipk_agm(k1p)) * (ellipk_agm(k0p) / ellipk_agm(k0))
    return 1.0 + 0.5 * (geom.substrate_eps_r - 1.0) * ratio


def fundamental_frequency(geom: ResonatorGeometry, eps_eff: float) -> float:
    """Half-wave fundamental f_r = c / (2 l sqrt(eps_eff)) [Hz]."""
    if eps_eff < 1.0:
        raise OutOfDomainError(f"eps_eff must be >= 1, got {eps_eff}")
    return SPEED_OF_LIGHT / (2.0 * geom.length * math.sqrt(eps_eff))


def resonance_vs_temperature(km: KineticModel, temperature):
    """Resonance frequency at temperature T [Hz].

    f_r(T) = f_r0 * sqrt((1 + r) / (1 + r / (1 - (T/Tc)**4))) with
    r = Lk(0)/Lm, from omega_r ~ 1/sqrt(Lm + Lk(T)) and the two-fluid
    scaling Lk(T) = Lk(0) / (1 - (T/Tc)**4).

    Accepts a scalar or array temperature. Temperatures with
    (T/Tc)**4 > 1 - 1e-6 are rejected (the model diverges at Tc).
    """
    t = np.asarray(temperature, dtype=float)
    if np.any(t < 0.0):
        raise OutOfDomainError("temperature must be >= 0")
    u = (t / km.tc) ** 4
    if np.any(u > 1.0 - 1e-6):
        raise OutOfDomainError(f"temperature too close to or above Tc = {km.tc} K")
    r = km.lk_over_lm
    ratio = np.sqrt((1.0 + r) / (1.0 + r / (1.0 - u)))
    out = km.f_r0 * ratio
    return float(out) if np.isscalar(temperature) else out


def s11(params: ResonanceParams, f):
    """Complex reflection coefficient at frequency f (scalar or array)."""
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0.0):
        raise OutOfDomainError("probe frequency must be > 0")
    x = (f - params.f_r) / params.f_r
    amp = (params.q_loaded / params.q_coupling) * np.exp(1j * params.asymmetry_phi)
    return 1.0 - amp / (1.0 + 2j * params.q_loaded * x)


def s11_db(params: ResonanceParams, f):
    """Reflected magnitude in dB, 20*log10|S11| + baseline."""
    mag = np.abs(s11(params, f))
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag) + params.baseline_db
    return out


def s11_db_slope(params: ResonanceParams, f):
    """Analytic derivative of the dB magnitude, d(20 log10|S11|)/df [dB/Hz].

    Baseline is additive in dB and does not contribute.
    """
    f = np.asarray(f, dtype=float)
    x = (f - params.f_r) / params.f_r
    amp = (params.q_loaded / params.q_coupling) * np.exp(1j * params.asymmetry_phi)
    denom = 1.0 + 2j * params.q_loaded * x
    s = 1.0 - amp / denom
    ds = amp * (2j * params.q_loaded / params.f_r) / denom**2
    mag2 = np.abs(s) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _LOG10_FACTOR * np.real(np.conj(s) * ds) / mag2
    return out


def max_slope_probe(params: ResonanceParams, n_grid: int = 4001,
                    bracket_linewidths: float = 5.0) -> tuple[float, float]:
    """Frequency of the steepest point on the dB magnitude curve.

    Scans a symmetric grid of ``n_grid`` points spanning
    ``+- bracket_linewidths`` linewidths about f_r, then refines the best
    bracket by golden-section search to an absolute frequency tolerance of
    f_r * 1e-10.

    Returns
    -------
    (f0, slope) : tuple of float
        Probe frequency [Hz] and the signed slope there [dB/Hz]. For a
        symmetric lineshape (phi = 0) the two steepest points are mirror
        images; ties resolve to the lower frequency.
    """
    half_span = bracket_linewidths * params.linewidth
    grid = np.linspace(params.f_r - half_span, params.f_r + half_span, n_grid)
    mag = np.abs(s11_db_slope(params, grid))
    mag[~np.isfinite(mag)] = -np.inf

    best = np.max(mag)
    # lower-frequency tie-break: first index within a relative whisker of the max
    i = int(np.argmax(mag >= best * (1.0 - 1e-9)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]

    def objective(f):
        v = abs(float(s11_db_slope(params, f)))
        return v if math.isfinite(v) else -math.inf

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    tol = params.f_r * 1e-10
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = objective(c), objective(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = objective(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = objective(d)
    f0 = float(0.5 * (lo + hi))
    return f0, float(s11_db_slope(params, f0))
