"""Room impulse response estimation in frequency and time domain.

The impulse response between two positions is exp(-gamma*d) per frequency
bin; applying it to a signal is circular convolution, i.e. spectral
multiplication under the package DFT convention. Circularity is a
deliberate choice: the convolution/multiplication equivalence used here
only holds circularly (no zero padding is performed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, OverflowRangeError
from .spectral import Signal, Spectrum, write_wav
from .wavemodel import PropagationCoefficient, _MAX_EXP_ARG

__all__ = ["RirEstimate", "rir_from_gamma", "rir_from_measurements", "apply_rir"]

MAG_EPS = 1e-12


@dataclass(frozen=True)
class RirEstimate:
    """Impulse response as both frequency response and time-domain kernel."""

    frequency_response: np.ndarray
    time_response: np.ndarray
    delta_x: float
    masked: np.ndarray | None = None

    def __post_init__(self):
        freq = np.asarray(self.frequency_response, dtype=complex)
        time = np.asarray(self.time_response, dtype=float)
        if freq.size == 0 or freq.shape != time.shape:
            raise InvalidInputError("frequency and time responses must be equal-length")
        check = np.fft.ifft(freq).real
        if not np.allclose(check, time, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(check).max())):
            raise InvalidInputError("time response must be the inverse DFT of the frequency response")
        masked = self.masked
        if masked is None:
            masked = np.zeros(freq.size, dtype=bool)
        masked = np.asarray(masked, dtype=bool)
        for arr in (freq, time, masked):
            arr.setflags(write=False)
        object.__setattr__(self, "frequency_response", freq)
        object.__setattr__(self, "time_response", time)
        object.__setattr__(self, "masked", masked)

    def __len__(self) -> int:
        return self.frequency_response.size


def rir_from_gamma(gamma: PropagationCoefficient, delta_x: float) -> RirEstimate:
    """Impulse response implied by a coefficient over distance delta_x.

    delta_x = 0 (or gamma = 0) gives an all-ones frequency response, i.e.
    a unit impulse in time.
    """
    if delta_x < 0:
        raise InvalidInputError("delta_x must be >= 0")
    growth = -gamma.alpha * delta_x
    if (growth > _MAX_EXP_ARG).any():
        j = int(np.argmin(gamma.alpha))
        raise OverflowRangeError(
            f"exp(-alpha*d) overflows at bin {j} (alpha={gamma.alpha[j]:.6g} < 0?)"
        )
    freq = np.exp(-(gamma.alpha + 1j * gamma.kappa) * delta_x)
    time = np.fft.ifft(freq).real
    return RirEstimate(freq, time, float(delta_x))


def rir_from_measurements(
    pair: tuple[Spectrum, Spectrum], mag_eps: float = MAG_EPS
) -> RirEstimate:
    """Impulse response from a measured speaker/receiver pair.

    Per-bin Hadamard division receiver/speaker; speaker bins below
    ``mag_eps`` are masked (response set to 0) and reported via the
    estimate's mask. Raises DegenerateInputError if every bin masks.
    """
    speaker, receiver = pair
    if not np.array_equal(speaker.angular_frequencies, receiver.angular_frequencies):
        raise InvalidInputError("pair spectra must share one frequency grid")
    usable = np.abs(speaker.coefficients) >= mag_eps
    if not usable.any():
        raise DegenerateInputError("all speaker bins below magnitude threshold")
    freq = np.zeros(len(speaker), dtype=complex)
    freq[usable] = receiver.coefficients[usable] / speaker.coefficients[usable]
    time = np.fft.ifft(freq).real
    delta_x = float(np.linalg.norm(receiver.position - speaker.position))
    return RirEstimate(freq, time, delta_x, masked=~usable)


def apply_rir(input: Signal, rir: RirEstimate) -> Signal:
    """Circularly convolve a signal with an impulse response.

    Realized as spectral multiplication followed by the inverse DFT; the
    signal and response must have equal length.
    """
    if len(input) != len(rir):
        raise InvalidInputError(
            f"length mismatch: signal {len(input)}, response {len(rir)}"
        )
    out = np.fft.ifft(np.fft.fft(input.samples) * rir.frequency_response).real
    return Signal(out, input.sample_rate, input.position)


def export_csv(rir: RirEstimate, path, angular_frequencies) -> None:
    """Write the frequency response as CSV columns (omega, re, im)."""
    omega = np.asarray(angular_frequencies, dtype=float)
    if omega.size != len(rir):
        raise InvalidInputError("grid length does not match response length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "re", "im"])
        for w, c in zip(omega, rir.frequency_response):
            writer.writerow([f"{w:.17g}", f"{c.real:.17g}", f"{c.imag:.17g}"])


def export_wav(rir: RirEstimate, path, sample_rate: int, peak: float = 0.9) -> None:
    """Write the time response as WAV, normalized to the given peak.

    The normalization factor is recorded in a sidecar JSON next to the
    WAV file so the original scale can be restored.
    """
    scale = np.abs(rir.time_response).max()
    factor = peak / scale if scale > 0 else 1.0
    write_wav(path, Signal(rir.time_response * factor, sample_rate))
    sidecar = {"normalization_factor": factor, "peak": peak, "delta_x": rir.delta_x}
    with open(f"{path}.json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")
