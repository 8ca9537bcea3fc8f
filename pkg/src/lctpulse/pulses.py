"""Waveforms, spectra, and pulse shaping.

A Waveform is the coupler-shift control delta_omega_tc sampled on a uniform
grid with sample-and-hold semantics: samples[k] is held constant over
[k*dt, (k+1)*dt).  Samples are angular (rad/ns); spectra are reported in
ordinary frequency (GHz) because dt is in ns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Feedback clamp floor, as a fraction of omega_tc_max.  Keeps the coupler
# frequency strictly positive so the flux map stays invertible.
CLAMP_FLOOR_FRACTION = 1e-3

# Gaussian tails are cut where they drop below this fraction of their peak.
TAIL_CUTOFF = 1e-6


@dataclass
class Waveform:
    """Uniformly sampled control pulse (rad/ns, sample-and-hold)."""

    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("waveform needs at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n * self.dt

    def times(self) -> np.ndarray:
        """Left edge of each hold interval."""
        return np.arange(self.n) * self.dt

    def validate_range(self, omega_tc_max: float):
        """Check the physical window: samples in (-omega_tc_max, 0]."""
        if self.samples.max() > 0.0:
            raise ValueError("waveform exceeds 0 (coupler above its maximum)")
        if self.samples.min() <= -omega_tc_max:
            raise ValueError("waveform at or below -omega_tc_max")


def clamp_samples(samples: np.ndarray, omega_tc_max: float) -> np.ndarray:
    """Clamp to (-omega_tc_max + floor, 0]; floor keeps omega_tc > 0."""
    lo = -omega_tc_max * (1.0 - CLAMP_FLOOR_FRACTION)
    return np.clip(samples, lo, 0.0)


def time_reverse(wf: Waveform) -> Waveform:
    """Reverse the sample order; an involution, dt unchanged."""
    return Waveform(dt=wf.dt, samples=wf.samples[::-1].copy())


# ----------------------------------------------------------------
# spectra
# ----------------------------------------------------------------

@dataclass
class PulseSpectrum:
    """One-sided spectrum of a waveform.

    amplitudes are the raw forward FFT coefficients (unnormalized) for the
    non-negative frequency bins; power folds the conjugate-symmetric half
    in, so sum(power) == n * sum(samples**2) (Parseval, this normalization).
    """

    freqs_ghz: np.ndarray
    amplitudes: np.ndarray
    power: np.ndarray
    n_samples: int
    dt: float

    def to_waveform(self) -> Waveform:
        """Inverse transform (1/N normalization), exact round trip."""
        return Waveform(
            dt=self.dt, samples=np.fft.irfft(self.amplitudes, n=self.n_samples)
        )


def fourier_spectrum(wf: Waveform) -> PulseSpectrum:
    """One-sided FFT spectrum; frequencies in GHz since dt is in ns."""
    amps = np.fft.rfft(wf.samples)
    freqs = np.fft.rfftfreq(wf.n, d=wf.dt)
    fold = np.full(freqs.size, 2.0)
    fold[0] = 1.0
    if wf.n % 2 == 0:
        fold[-1] = 1.0  # Nyquist bin has no mirror
    return PulseSpectrum(
        freqs_ghz=freqs,
        amplitudes=amps,
        power=fold * np.abs(amps) ** 2,
        n_samples=wf.n,
        dt=wf.dt,
    )


def dominant_frequency(spectrum: PulseSpectrum, min_freq_ghz: float = 0.0) -> float:
    """Frequency of the strongest bin at or above min_freq_ghz.

    The floor lets callers skip the DC / slow-envelope band, which for long
    pulses with a large mean otherwise dominates every line.
    """
    mask = spectrum.freqs_ghz >= min_freq_ghz
    if not mask.any():
        raise ValueError("min_freq_ghz above the Nyquist frequency")
    idx = np.flatnonzero(mask)
    return float(spectrum.freqs_ghz[idx[np.argmax(spectrum.power[idx])]])


def lowpass_filter(
    wf: Waveform,
    cutoff_ghz: float,
    omega_tc_max: float | None = None,
    clamp: bool = True,
) -> Waveform:
    """Brick-wall low pass: zero every bin above cutoff, inverse transform.

    With clamp=True (the physical variant) the result is clipped to
    (-omega_tc_max + floor, 0]; the upper clip applies even when
    omega_tc_max is not given.  clamp=False returns the raw filter output
    for diagnostics and may contain positive samples.
    """
    if cutoff_ghz <= 0:
        raise ValueError("cutoff must be positive")
    spec = np.fft.rfft(wf.samples)
    freqs = np.fft.rfftfreq(wf.n, d=wf.dt)
    spec[freqs > cutoff_ghz] = 0.0
    out = np.fft.irfft(spec, n=wf.n)
    if clamp:
        if omega_tc_max is not None:
            out = clamp_samples(out, omega_tc_max)
        else:
            out = np.minimum(out, 0.0)
    return Waveform(dt=wf.dt, samples=out)


# ----------------------------------------------------------------
# truncation
# ----------------------------------------------------------------

def truncate_with_gaussian_tail(wf: Waveform, tau: float, sigma: float) -> Waveform:
    """Replace the pulse beyond tau with a half-Gaussian decay.

    Samples before tau are untouched; from tau on the pulse becomes
    wf(tau) * exp(-(t - tau)^2 / (2 sigma^2)), cut where the tail drops
    below TAIL_CUTOFF of its starting value.  tau at (or beyond) the final
    sample returns the pulse unchanged.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < tau <= wf.duration:
        raise ValueError(f"tau={tau:.6g} outside the pulse (0, {wf.duration:.6g}]")
    k_tau = int(round(tau / wf.dt))
    if k_tau >= wf.n - 1:
        return Waveform(dt=wf.dt, samples=wf.samples.copy())
    alpha = wf.samples[k_tau]
    # Tail length where exp(-x^2/2) crosses the cutoff.
    n_tail = int(np.ceil(sigma * np.sqrt(2.0 * np.log(1.0 / TAIL_CUTOFF)) / wf.dt))
    t_rel = np.arange(n_tail + 1) * wf.dt
    tail = alpha * np.exp(-(t_rel ** 2) / (2.0 * sigma ** 2))
    out = np.concatenate([wf.samples[:k_tau], tail])
    if out.size < 2:
        out = np.pad(out, (0, 2 - out.size))
    return Waveform(dt=wf.dt, samples=out)


# ----------------------------------------------------------------
# analytic pulse
# ----------------------------------------------------------------

@dataclass
class AnalyticPulseParams:
    """Half-Gaussian rise, tanh bridge, half-Gaussian fall.

    Amplitudes alpha1, alpha3 are coupler shifts (rad/ns, negative);
    tau1 <= tau2 <= tau3 are the branch switch times (ns); sigma1..3 the
    widths (ns).
    """

    alpha1: float
    alpha3: float
    tau1: float
    tau2: float
    tau3: float
    sigma1: float
    sigma2: float
    sigma3: float

    def validate(self, omega_tc_max: float | None = None):
        if not self.tau1 <= self.tau2 <= self.tau3:
            raise ValueError("branch times must satisfy tau1 <= tau2 <= tau3")
        if min(self.sigma1, self.sigma2, self.sigma3) <= 0:
            raise ValueError("widths must be positive")
        if self.alpha1 >= 0 or self.alpha3 >= 0:
            raise ValueError("amplitudes must be negative (coupler tunes down)")
        if omega_tc_max is not None:
            if min(self.alpha1, self.alpha3) <= -omega_tc_max:
                raise ValueError("amplitude at or below -omega_tc_max")

    def as_tuple(self) -> tuple:
        return (
            self.alpha1, self.alpha3, self.tau1, self.tau2, self.tau3,
            self.sigma1, self.sigma2, self.sigma3,
        )


def analytic_samples(p: AnalyticPulseParams, t: np.ndarray) -> np.ndarray:
    """Evaluate the three-branch shape; no validation (optimizer-safe)."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    rise = t < p.tau1
    fall = t > p.tau3
    mid = ~(rise | fall)
    out[rise] = p.alpha1 * np.exp(-0.5 * ((t[rise] - p.tau1) / p.sigma1) ** 2)
    out[mid] = 0.5 * (p.alpha3 + p.alpha1) + 0.5 * (p.alpha3 - p.alpha1) * np.tanh(
        (t[mid] - p.tau2) / p.sigma2
    )
    out[fall] = p.alpha3 * np.exp(-0.5 * ((t[fall] - p.tau3) / p.sigma3) ** 2)
    return out


def natural_duration(p: AnalyticPulseParams, rel_floor: float = TAIL_CUTOFF) -> float:
    """Time at which the trailing half-Gaussian falls below rel_floor."""
    return p.tau3 + p.sigma3 * np.sqrt(2.0 * np.log(1.0 / rel_floor))


def analytic_pulse(
    p: AnalyticPulseParams,
    dt: float,
    duration: float | None = None,
    omega_tc_max: float | None = None,
) -> Waveform:
    """Sample the analytic shape on a uniform grid.

    duration defaults to natural_duration(p).  Validates the parameter
    invariants before sampling.
    """
    p.validate(omega_tc_max)
    if duration is None:
        duration = natural_duration(p)
    n = max(2, int(round(duration / dt)))
    return Waveform(dt=dt, samples=analytic_samples(p, np.arange(n) * dt))
