"""Nonlinear least-squares estimation.

A compact Levenberg-Marquardt engine (gain-ratio damping update, analytic
Jacobians, box bounds by trial-step rejection) drives three model fits:
reflection lineshape extraction, the kinetic-inductance temperature fit,
and geophone calibration. A frequency-domain deconvolution recovers ground
displacement from calibrated geophone voltage traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (CalibrationError, InitializationError,
                     InsufficientDataError, InvalidScenarioError,
                     OutOfDomainError)
from .resonator import ResonanceParams
from .spectral import Spectrum, band_rms, welch_asd
from .synthesis import GeophoneModel, TimeTrace

_LOG10_FACTOR = 20.0 / math.log(10.0)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a nonlinear least-squares fit.

    ``parameters`` maps parameter names to fitted values; ``covariance``
    rows/columns follow ``param_names``. ``cost_history`` records the cost
    0.5*sum(r**2) after every accepted step (non-increasing by
    construction).
    """

    parameters: dict
    param_names: tuple
    covariance: np.ndarray
    uncertainties: dict
    residual_rms: float
    n_iterations: int
    converged: bool
    cost_history: tuple
    message: str = ""
    warnings: tuple = ()

    def __post_init__(self):
        if self.residual_rms < 0:
            raise OutOfDomainError("residual_rms must be >= 0")


def levenberg_marquardt(residual, jacobian, x0, lower=None, upper=None,
                        max_iter: int = 200, gtol: float = 1e-10,
                        xtol: float = 1e-12, tau: float = 1e-3):
    """Minimize 0.5*||r(x)||^2 by Levenberg-Marquardt with analytic Jacobian.

    Damping uses mu * diag(J^T J) (scale-free) with the standard gain-ratio
    update: accepted steps shrink mu by max(1/3, 1 - (2*rho - 1)**3),
    rejected steps grow it geometrically. Trial steps that leave the box
    [lower, upper] are rejected like failed steps. Convergence when the
    max-norm of the gradient falls below ``gtol`` relative to its initial
    value (or below gtol absolutely), or when the proposed step shrinks
    below ``xtol`` relative to the parameter vector.

    Returns
    -------
    dict with keys x, covariance, n_iterations, converged, cost_history,
    message, residual, jacobian.
    """
    x = np.array(x0, dtype=float)
    n = len(x)
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        raise OutOfDomainError("initial guess violates parameter bounds")

    r = np.atleast_1d(np.asarray(residual(x), dtype=float))
    jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
    cost = 0.5 * float(r @ r)
    g = jac.T @ r
    gnorm_ref = max(float(np.max(np.abs(g))), np.finfo(float).tiny)
    threshold = gtol * max(1.0, gnorm_ref)

    mu, nu = tau, 2.0
    cost_history = [cost]
    converged = float(np.max(np.abs(g))) <= threshold
    message = "gradient below tolerance at start" if converged else ""
    n_iter = 0

    while not converged and n_iter < max_iter:
        n_iter += 1
        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), np.finfo(float).tiny))
        try:
            step = np.linalg.solve(jtj + mu * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            step = None
        accepted = False
        if step is not None and np.all(np.isfinite(step)):
            if np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol):
                converged = True
                message = "step size below tolerance"
                break
            x_new = x + step
            if np.all(x_new >= lo) and np.all(x_new <= hi):
                r_new = np.atleast_1d(np.asarray(residual(x_new), dtype=float))
                cost_new = 0.5 * float(r_new @ r_new)
                predicted = 0.5 * float(step @ (mu * diag * step) - step @ g)
                if np.isfinite(cost_new) and predicted > 0:
                    rho = (cost - cost_new) / predicted
                    if rho > 0:
                        x, r, cost = x_new, r_new, cost_new
                        jac = np.atleast_2d(np.asarray(jacobian(x), dtype=float))
                        g = jac.T @ r
                        cost_history.append(cost)
                        mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                        nu = 2.0
                        accepted = True
                        if float(np.max(np.abs(g))) <= threshold:
                            converged = True
                            message = "gradient below tolerance"
        if not accepted:
            mu *= nu
            nu *= 2.0
            if mu > 1e100:
                message = "damping overflow (no acceptable step)"
                break
    if not converged and not message:
        message = f"not converged after {max_iter} iterations"

    m = len(r)
    dof = m - n
    sigma2 = (2.0 * cost / dof) if dof > 0 else float("nan")
    cov = sigma2 * np.linalg.pinv(jac.T @ jac)
    cov = 0.5 * (cov + cov.T)
    return {
        "x": x, "covariance": cov, "n_iterations": n_iter,
        "converged": converged, "cost_history": tuple(cost_history),
        "message": message, "residual": r, "jacobian": jac,
    }


def _make_result(raw, names, warnings=()) -> FitResult:
    values = raw["x"]
    cov = raw["covariance"]
    unc = {nm: float(np.sqrt(max(cov[i, i], 0.0))) for i, nm in enumerate(names)}
    r = raw["residual"]
    return FitResult(
        parameters={nm: float(v) for nm, v in zip(names, values)},
        param_names=tuple(names), covariance=cov, uncertainties=unc,
        residual_rms=float(np.sqrt(np.mean(r**2))),
        n_iterations=raw["n_iterations"], converged=raw["converged"],
        cost_history=raw["cost_history"], message=raw["message"],
        warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# reflection lineshape fit

def _s11_db_model(x, f):
    f_r, ql, qc, phi, base = x
    amp = (ql / qc) * np.exp(1j * phi)
    denom = 1.0 + 2j * ql * (f - f_r) / f_r
    s = 1.0 - amp / denom
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(s)) + base


def _s11_db_jacobian(x, f):
    f_r, ql, qc, phi, base = x
    amp = (ql / qc) * np.exp(1j * phi)
    xx = (f - f_r) / f_r
    denom = 1.0 + 2j * ql * xx
    s = 1.0 - amp / denom
    mag2 = np.abs(s) ** 2
    pref = _LOG10_FACTOR / mag2

    ds_dfr = (amp / denom**2) * (-2j * ql * f / f_r**2)
    ds_dql = amp * (-1.0 / (ql * denom) + 2j * xx / denom**2)
    ds_dqc = amp / (qc * denom)
    ds_dphi = -1j * amp / denom

    cols = [pref * np.real(np.conj(s) * d)
            for d in (ds_dfr, ds_dql, ds_dqc, ds_dphi)]
    cols.append(np.ones_like(f))
    return np.column_stack(cols)


def _auto_init_resonance(freqs, db):
    n_edge = max(len(db) // 10, 2)
    baseline = float(np.median(np.concatenate([db[:n_edge], db[-n_edge:]])))
    i_min = int(np.argmin(db))
    depth = baseline - db[i_min]
    noise = 1.4826 * float(np.median(np.abs(np.diff(db)))) / math.sqrt(2.0)
    if depth <= max(5.0 * noise, 1e-6):
        raise InitializationError("data shows no resonance dip above the noise")
    f_r = float(freqs[i_min])

    half = baseline - depth / 2.0
    left = i_min
    while left > 0 and db[left] < half:
        left -= 1
    right = i_min
    while right < len(db) - 1 and db[right] < half:
        right += 1
    width = float(freqs[right] - freqs[left])
    if width <= 0:
        raise InitializationError("cannot measure dip width")
    ql = f_r / width
    dip_mag = 10.0 ** ((db[i_min] - baseline) / 20.0)
    a = min(max(1.0 - dip_mag, 1e-3), 1.0)
    qc = ql / a
    return np.array([f_r, ql, qc, 0.0, baseline])


def fit_resonance(freqs, s11_db, initial="auto") -> FitResult:
    """Fit the notch reflection lineshape to (frequency, dB) data.

    Levenberg-Marquardt on dB residuals for (f_r, q_loaded, q_coupling,
    asymmetry_phi, baseline_db). ``initial`` may be "auto" (dip search) or
    a ResonanceParams. Requires at least 8 points spanning two linewidths.
    """
    f = np.asarray(freqs, dtype=float)
    db = np.asarray(s11_db, dtype=float)
    if f.shape != db.shape or f.ndim != 1:
        raise InvalidScenarioError("freqs and s11_db must be 1-d arrays of equal length")
    if len(f) < 8:
        raise InsufficientDataError(f"need at least 8 points, got {len(f)}")

    if isinstance(initial, ResonanceParams):
        x0 = np.array([initial.f_r, initial.q_loaded, initial.q_coupling,
                       initial.asymmetry_phi, initial.baseline_db])
    elif initial == "auto":
        x0 = _auto_init_resonance(f, db)
    else:
        raise InvalidScenarioError("initial must be a ResonanceParams or 'auto'")

    span = float(f.max() - f.min())
    linewidth = x0[0] / x0[1]
    if span < 2.0 * linewidth:
        raise InsufficientDataError(
            f"frequency span {span:.3g} Hz covers less than two linewidths "
            f"({linewidth:.3g} Hz)")

    lower = [f.min(), 1.0, 1.0, -math.pi, -np.inf]
    upper = [f.max(), np.inf, np.inf, math.pi, np.inf]
    raw = levenberg_marquardt(lambda x: _s11_db_model(x, f) - db,
                              lambda x: _s11_db_jacobian(x, f),
                              x0, lower, upper)
    names = ("f_r", "q_loaded", "q_coupling", "asymmetry_phi", "baseline_db")
    return _make_result(raw, names)


# ---------------------------------------------------------------------------
# kinetic-inductance temperature fit

def _kinetic_model(x, t, tc_fixed):
    if tc_fixed is None:
        f_r0, r, tc = x
    else:
        (f_r0, r), tc = x, tc_fixed
    u = (t / tc) ** 4
    q = 1.0 - u
    return f_r0 * np.sqrt((1.0 + r) / (1.0 + r / q))


def _kinetic_jacobian(x, t, tc_fixed):
    if tc_fixed is None:
        f_r0, r, tc = x
    else:
        (f_r0, r), tc = x, tc_fixed
    u = (t / tc) ** 4
    q = 1.0 - u
    model = f_r0 * np.sqrt((1.0 + r) / (1.0 + r / q))
    d_f0 = model / f_r0
    d_r = model * 0.5 * (1.0 / (1.0 + r) - 1.0 / (q + r))
    if tc_fixed is not None:
        return np.column_stack([d_f0, d_r])
    d_tc = model * 2.0 * r * u / (q * (q + r) * tc)
    return np.column_stack([d_f0, d_r, d_tc])


def fit_kinetic(temps, f_r_meas, initial=None, fix_tc: float | None = None,
                max_tc_fraction: float = 0.95) -> FitResult:
    """Fit f_r(T) = f_r0*sqrt((1+r)/(1 + r/(1-(T/Tc)^4))) for (f_r0, r[, Tc]).

    ``fix_tc`` freezes the critical temperature (the usual mode when Tc is
    a known material constant and only the inductance ratio is of
    interest); otherwise Tc is fitted with a lower bound just above the
    highest usable temperature. Points above ``max_tc_fraction`` of the
    (initial or fixed) Tc are dropped before fitting, since the model
    diverges at Tc. ``initial`` is an optional (f_r0, r, tc) tuple.
    """
    t = np.asarray(temps, dtype=float)
    fr = np.asarray(f_r_meas, dtype=float)
    if t.shape != fr.shape or t.ndim != 1:
        raise InvalidScenarioError("temps and f_r_meas must be 1-d arrays of equal length")
    if np.any(t < 0):
        raise OutOfDomainError("temperatures must be >= 0")

    if initial is not None:
        f0_init, r_init, tc_init = initial
    else:
        f0_init = float(fr[np.argmin(t)])
        tc_init = fix_tc if fix_tc is not None else 1.2 * float(t.max())
        r_init = 0.05
    tc_ref = fix_tc if fix_tc is not None else tc_init

    keep = t <= max_tc_fraction * tc_ref
    t, fr = t[keep], fr[keep]
    if len(t) < 4:
        raise InsufficientDataError(
            f"need at least 4 usable points below {max_tc_fraction}*Tc, got {len(t)}")

    if fix_tc is not None:
        x0 = np.array([f0_init, r_init])
        lower = [0.0, 0.0]
        upper = [np.inf, np.inf]
        names = ("f_r0", "lk_over_lm")
    else:
        x0 = np.array([f0_init, r_init, max(tc_init, 1.02 * float(t.max()))])
        lower = [0.0, 0.0, 1.01 * float(t.max())]
        upper = [np.inf, np.inf, np.inf]
        names = ("f_r0", "lk_over_lm", "tc")

    raw = levenberg_marquardt(
        lambda x: _kinetic_model(x, t, fix_tc) - fr,
        lambda x: _kinetic_jacobian(x, t, fix_tc),
        x0, lower, upper)
    result = _make_result(raw, names)
    if fix_tc is not None:
        result.parameters["tc"] = float(fix_tc)
    return result


# ---------------------------------------------------------------------------
# geophone calibration and inversion

def _geophone_response(x, w, gain):
    s0, f0, zeta = x
    w0 = 2.0 * np.pi * f0
    denom = w0 * w0 - w * w + 2j * zeta * w0 * w
    return gain * s0 * (-(w * w)) / denom


def _geophone_jacobian(x, w, gain):
    s0, f0, zeta = x
    w0 = 2.0 * np.pi * f0
    denom = w0 * w0 - w * w + 2j * zeta * w0 * w
    h = gain * s0 * (-(w * w)) / denom
    d_s0 = h / s0
    d_f0 = -h * (2.0 * w0 + 2j * zeta * w) / denom * (2.0 * np.pi)
    d_zeta = -h * (2j * w0 * w) / denom
    return d_s0, d_f0, d_zeta


def calibrate_geophone(drive: TimeTrace, response: TimeTrace,
                       initial: GeophoneModel,
                       excitation_threshold: float = 1e-3) -> FitResult:
    """Fit (sensitivity, natural_frequency, damping_ratio) from known drive.

    Least squares on the complex frequency-response ratio V(f)/v(f) at the
    excited bins (drive spectral amplitude above ``excitation_threshold``
    of its maximum). The preamp gain is taken from ``initial`` and held
    fixed. Warns (on the result) when the drive has no energy within a
    factor of two of the natural frequency.
    """
    if drive.unit != "m/s":
        raise InvalidScenarioError("drive must be a velocity trace (m/s)")
    if response.unit != "V":
        raise InvalidScenarioError("response must be a voltage trace (V)")
    if drive.n_samples != response.n_samples or drive.sample_rate != response.sample_rate:
        raise InvalidScenarioError("drive and response must share grid and rate")

    n = drive.n_samples
    freqs = np.fft.rfftfreq(n, 1.0 / drive.sample_rate)
    u = np.fft.rfft(drive.values)
    v = np.fft.rfft(response.values)
    mag = np.abs(u)
    excited = (mag > excitation_threshold * mag.max()) & (freqs > 0)
    if not np.any(excited):
        raise InsufficientDataError("drive trace contains no excited bins")
    w = 2.0 * np.pi * freqs[excited]
    ratio = v[excited] / u[excited]

    f0g = initial.natural_frequency
    warnings = ()
    near = excited & (freqs >= f0g / 2.0) & (freqs <= 2.0 * f0g)
    if not np.any(near):
        warnings = ("ill-conditioned: drive lacks energy near the natural frequency",)

    gain = initial.preamp_gain

    def resid(x):
        d = _geophone_response(x, w, gain) - ratio
        return np.concatenate([d.real, d.imag])

    def jac(x):
        cols = _geophone_jacobian(x, w, gain)
        return np.column_stack([np.concatenate([c.real, c.imag]) for c in cols])

    x0 = np.array([initial.sensitivity, initial.natural_frequency,
                   initial.damping_ratio])
    raw = levenberg_marquardt(resid, jac, x0,
                              lower=[1e-12, 1e-6, 1e-6],
                              upper=[np.inf, np.inf, 2.0])
    names = ("sensitivity", "natural_frequency", "damping_ratio")
    return _make_result(raw, names, warnings)


def displacement_from_geophone(voltage: TimeTrace, gm: GeophoneModel, *,
                               segment_length: int = 4096, overlap: float = 0.5,
                               window: str = "hann",
                               cutoff: float | None = None,
                               band: tuple | None = None) -> tuple[Spectrum, float]:
    """Ground-displacement spectrum and band RMS from a voltage trace.

    Divides the voltage ASD by |i*w * H(w)| on the Welch grid, where H is
    the calibrated velocity response (preamp included). Bins below
    ``cutoff`` (default natural_frequency / 4, where the sensor response
    vanishes and the deconvolution is singular) are zeroed and excluded
    from the RMS band.
    """
    if voltage.unit != "V":
        raise InvalidScenarioError("expected a voltage trace (V)")
    if cutoff is None:
        cutoff = gm.natural_frequency / 4.0
    s_v = welch_asd(voltage, segment_length, overlap, window)
    freqs = s_v.frequencies
    omega = 2.0 * np.pi * freqs
    mask = freqs >= cutoff
    denom = np.ones_like(freqs)
    denom[mask] = omega[mask] * np.abs(gm.velocity_response(freqs[mask]))
    if np.any(denom[mask] <= 0):
        raise CalibrationError("geophone response vanishes inside the analysis band")
    asd_x = np.where(mask, s_v.asd / denom, 0.0)
    s_x = Spectrum(freqs, asd_x, "m", s_v.window, s_v.segment_length,
                   s_v.overlap_fraction, s_v.n_segments_averaged)
    if band is None:
        band = (cutoff, float(freqs[-1]))
    rms = band_rms(s_x, band[0], band[1])
    return s_x, rms
