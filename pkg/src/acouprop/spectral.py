"""Signal containers, discrete Fourier analysis/synthesis and signal file I/O.

Conventions fixed here and inherited by every other module:

* forward transform is the plain (unnormalized) sum, the inverse carries
  the 1/n factor;
* the frequency grid is the full symmetric DFT grid in standard order
  (DC, positive bins, then negative bins), kept at full length even for
  real inputs.
"""

from __future__ import annotations

import csv
import warnings
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Signal",
    "Spectrum",
    "ConjugateSymmetryWarning",
    "dft",
    "idft",
    "rmse",
    "read_signal",
    "write_signal",
    "read_wav",
    "write_wav",
    "read_csv_signal",
    "write_csv_signal",
]

_ORIGIN = (0.0, 0.0, 0.0)


class ConjugateSymmetryWarning(UserWarning):
    """Inverse transform input was not conjugate-symmetric; the imaginary
    residue exceeded the tolerated rounding level and was discarded."""


def _as_position(position) -> np.ndarray:
    pos = np.asarray(position, dtype=float)
    if pos.shape != (3,):
        raise InvalidInputError(f"position must be a 3-vector, got shape {pos.shape}")
    if not np.isfinite(pos).all():
        raise InvalidInputError("position must be finite")
    pos.setflags(write=False)
    return pos


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled time-domain waveform tagged with a spatial position.

    samples are pressure values in arbitrary units; sample_rate is in
    samples/second; position is (x, y, z) in meters.
    """

    samples: np.ndarray
    sample_rate: int
    position: np.ndarray = field(default_factory=lambda: np.array(_ORIGIN))

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("samples must be a non-empty 1-D sequence")
        if not np.isfinite(samples).all():
            raise InvalidInputError("samples must all be finite")
        if not (isinstance(self.sample_rate, (int, np.integer)) and self.sample_rate > 0):
            raise InvalidInputError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "position", _as_position(self.position))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Signal length in seconds."""
        return self.samples.size / self.sample_rate


def dft_grid(n: int, sample_rate: float) -> np.ndarray:
    """Angular-frequency grid (rad/s) of an n-point DFT, standard bin order."""
    if n <= 0:
        raise InvalidInputError("grid length must be positive")
    grid = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / sample_rate)
    grid.setflags(write=False)
    return grid


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT coefficients with their angular-frequency grid (rad/s).

    The grid must be a symmetric DFT grid in standard order, i.e. exactly
    what ``dft_grid(n, sample_rate)`` yields for some sample rate.
    """

    coefficients: np.ndarray
    angular_frequencies: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.array(_ORIGIN))

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=complex)
        grid = np.asarray(self.angular_frequencies, dtype=float)
        if coeff.ndim != 1 or coeff.size == 0:
            raise InvalidInputError("coefficients must be a non-empty 1-D sequence")
        if grid.shape != coeff.shape:
            raise InvalidInputError(
                f"grid length {grid.shape} does not match coefficients {coeff.shape}"
            )
        if not np.isfinite(coeff.view(float)).all() or not np.isfinite(grid).all():
            raise InvalidInputError("coefficients and grid must be finite")
        n = coeff.size
        if n > 1:
            fs = grid[1] * n / (2.0 * np.pi)
            if not (np.isfinite(fs) and fs > 0):
                raise InvalidInputError("grid is not a standard-order DFT grid")
            expected = 2.0 * np.pi * fs * np.fft.fftfreq(n)
            if not np.allclose(grid, expected, rtol=1e-9, atol=1e-9 * abs(fs)):
                raise InvalidInputError("grid is not a standard-order DFT grid")
        elif grid[0] != 0.0:
            raise InvalidInputError("a length-1 grid must be [0]")
        coeff.setflags(write=False)
        grid.setflags(write=False)
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "angular_frequencies", grid)
        object.__setattr__(self, "position", _as_position(self.position))

    def __len__(self) -> int:
        return self.coefficients.size

    @property
    def sample_rate(self) -> float:
        """Sample rate implied by the grid (1 for a degenerate length-1 grid)."""
        n = len(self)
        if n == 1:
            return 1.0
        return self.angular_frequencies[1] * n / (2.0 * np.pi)


def dft(signal: Signal) -> Spectrum:
    """Forward DFT of a signal (unnormalized sum convention).

    Returns the full n-bin complex spectrum on the symmetric DFT grid;
    bin j holds sum_t samples[t]·exp(-2πi·j·t/n).
    """
    if not isinstance(signal, Signal):
        signal = Signal(np.asarray(signal, dtype=float), 1)
    coeff = np.fft.fft(signal.samples)
    grid = dft_grid(len(signal), signal.sample_rate)
    return Spectrum(coeff, grid, signal.position)


def idft(spectrum: Spectrum, imag_tol: float = 1e-6) -> Signal:
    """Inverse DFT (carries the 1/n factor) returning a real signal.

    The imaginary residue of the inversion is discarded; if its largest
    magnitude exceeds ``imag_tol`` times the largest real magnitude, a
    ConjugateSymmetryWarning is emitted (the input was not the spectrum
    of a real signal).
    """
    samples = np.fft.ifft(spectrum.coefficients)
    real = samples.real
    scale = np.abs(real).max()
    residue = np.abs(samples.imag).max()
    if residue > imag_tol * max(scale, np.finfo(float).tiny):
        warnings.warn(
            f"imaginary residue {residue:.3g} exceeds {imag_tol:g} of the real "
            f"peak {scale:.3g}; input spectrum is not conjugate-symmetric",
            ConjugateSymmetryWarning,
            stacklevel=2,
        )
    n = len(spectrum)
    rate = max(1, round(spectrum.sample_rate)) if n > 1 else 1
    return Signal(real, rate, spectrum.position)


def rmse(a, b) -> float:
    """Root mean squared elementwise difference of two equal-length sequences."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidInputError("sequences must be non-empty")
    return float(np.sqrt(np.mean((a - b) ** 2)))


# ---------------------------------------------------------------------------
# Signal file formats.
#
# WAV: 16-bit PCM mono, any sample rate (quantized — lossy for float data).
# CSV: one sample per line after a `sample_rate,<value>` header (exact).
# Positions travel in the dataset manifest, not in the signal files.
# ---------------------------------------------------------------------------

_PCM_SCALE = 32767.0


def write_wav(path, signal: Signal) -> None:
    """Write a signal as 16-bit PCM mono WAV; samples are clipped to [-1, 1]."""
    clipped = np.clip(signal.samples, -1.0, 1.0)
    pcm = np.round(clipped * _PCM_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(signal.sample_rate)
        fh.writeframes(pcm.tobytes())


def read_wav(path, position=_ORIGIN) -> Signal:
    """Read a 16-bit PCM mono WAV file."""
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1:
            raise InvalidInputError(f"{path}: only mono WAV is supported")
        if fh.getsampwidth() != 2:
            raise InvalidInputError(f"{path}: only 16-bit PCM WAV is supported")
        rate = fh.getframerate()
        frames = fh.readframes(fh.getnframes())
    pcm = np.frombuffer(frames, dtype="<i2")
    if pcm.size == 0:
        raise InvalidInputError(f"{path}: empty WAV file")
    return Signal(pcm.astype(float) / _PCM_SCALE, rate, position)


def write_csv_signal(path, signal: Signal) -> None:
    """Write a signal as CSV: header `sample_rate,<value>` then one sample per line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_rate", signal.sample_rate])
        for value in signal.samples:
            writer.writerow([f"{value:.17g}"])


def read_csv_signal(path, position=_ORIGIN) -> Signal:
    """Read a signal written by :func:`write_csv_signal`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != 2 or rows[0][0] != "sample_rate":
        raise InvalidInputError(f"{path}: missing `sample_rate,<value>` header row")
    try:
        rate = int(rows[0][1])
        samples = [float(row[0]) for row in rows[1:] if row]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: malformed CSV signal: {exc}") from exc
    return Signal(np.asarray(samples), rate, position)


def write_signal(path, signal: Signal) -> None:
    """Write WAV or CSV depending on the file suffix."""
    if Path(path).suffix.lower() == ".wav":
        write_wav(path, signal)
    else:
        write_csv_signal(path, signal)


def read_signal(path, position=_ORIGIN) -> Signal:
    """Read WAV or CSV depending on the file suffix."""
    if Path(path).suffix.lower() == ".wav":
        return read_wav(path, position)
    return read_csv_signal(path, position)
