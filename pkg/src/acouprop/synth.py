"""Synthetic ground-truth dataset generation and recorded-dataset ingestion.

All randomness flows through numpy's PCG64 generator seeded explicitly
(``np.random.default_rng(seed)``), so any dataset is reproducible from its
seed alone and the generator is documented for reimplementations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    GridMismatchError,
    InvalidInputError,
    ManifestError,
    MissingFileError,
)
from .spectral import Signal, Spectrum, dft, read_signal
from .wavemodel import PropagationCoefficient, propagate

__all__ = [
    "PairDataset",
    "GroundTruth",
    "make_gamma",
    "simulate_pair",
    "load_dataset",
    "write_manifest",
    "SOUND_SPEED_AIR",
]

SOUND_SPEED_AIR = 343.0  # m/s, dry air at ~20 C
AIR_ALPHA_SCALE = 0.001  # nepers/m per sqrt(rad/s), toy air-like attenuation
ALPHA_BAND = (0.0, 5.0)  # plausible attenuation range, nepers/m
KAPPA_BAND = 100.0  # plausible |kappa| bound, rad/m


@dataclass(frozen=True)
class PairDataset:
    """N speaker/receiver spectrum pairs with their travel distances.

    All spectra share one frequency grid; delta_x[i] equals the Euclidean
    distance between the paired positions.
    """

    speaker_spectra: tuple[Spectrum, ...]
    receiver_spectra: tuple[Spectrum, ...]
    delta_x: np.ndarray

    def __post_init__(self):
        speakers = tuple(self.speaker_spectra)
        receivers = tuple(self.receiver_spectra)
        dx = np.asarray(self.delta_x, dtype=float)
        if len(speakers) == 0 or len(speakers) != len(receivers) or dx.shape != (len(speakers),):
            raise InvalidInputError(
                f"need N >= 1 aligned pairs, got {len(speakers)} speakers, "
                f"{len(receivers)} receivers, {dx.size} distances"
            )
        grid = speakers[0].angular_frequencies
        for spec in (*speakers, *receivers):
            if not np.array_equal(spec.angular_frequencies, grid):
                raise GridMismatchError("all spectra in a dataset must share one grid")
        for i, (spk, rcv, d) in enumerate(zip(speakers, receivers, dx)):
            geo = float(np.linalg.norm(rcv.position - spk.position))
            if abs(geo - d) > 1e-9 * max(1.0, abs(d)):
                raise InvalidInputError(
                    f"pair {i}: delta_x={d:.12g} does not match the position "
                    f"distance {geo:.12g}"
                )
        dx.setflags(write=False)
        object.__setattr__(self, "speaker_spectra", speakers)
        object.__setattr__(self, "receiver_spectra", receivers)
        object.__setattr__(self, "delta_x", dx)

    def __len__(self) -> int:
        return len(self.speaker_spectra)

    @property
    def angular_frequencies(self) -> np.ndarray:
        return self.speaker_spectra[0].angular_frequencies

    @property
    def n_bins(self) -> int:
        return len(self.speaker_spectra[0])

    def subset(self, indices) -> "PairDataset":
        """Dataset restricted to the given pair indices (order preserved)."""
        indices = list(indices)
        if not indices:
            raise InvalidInputError("subset needs at least one pair index")
        return PairDataset(
            tuple(self.speaker_spectra[i] for i in indices),
            tuple(self.receiver_spectra[i] for i in indices),
            self.delta_x[indices],
        )


@dataclass(frozen=True)
class GroundTruth:
    """True coefficient and noise level behind a synthetic dataset."""

    gamma_true: PropagationCoefficient
    noise_std: float

    def __post_init__(self):
        if (self.gamma_true.alpha < 0).any():
            raise InvalidInputError("ground-truth alpha must be non-negative")
        if self.noise_std < 0:
            raise InvalidInputError("noise_std must be >= 0")


def make_gamma(
    profile: str,
    grid: np.ndarray,
    alpha_value: float = 1.5,
    sound_speed: float = SOUND_SPEED_AIR,
    alpha_table=None,
    kappa_table=None,
) -> PropagationCoefficient:
    """Build a symmetric coefficient on a DFT grid.

    profile:
      * ``constant``: alpha = alpha_value everywhere, kappa = w/sound_speed;
      * ``air_like``: kappa = w/343, alpha = 0.001*sqrt(|w|) clipped to [0, 5);
      * ``custom``: alpha_table/kappa_table taken as given, validated for
        alpha-evenness and kappa-oddness within 1e-9.
    """
    grid = np.asarray(grid, dtype=float)
    if profile == "constant":
        if alpha_value < 0:
            raise InvalidInputError("constant profile needs alpha_value >= 0")
        alpha = np.full(grid.size, float(alpha_value))
        kappa = grid / sound_speed
    elif profile == "air_like":
        alpha = np.clip(AIR_ALPHA_SCALE * np.sqrt(np.abs(grid)), *ALPHA_BAND)
        alpha = np.minimum(alpha, np.nextafter(ALPHA_BAND[1], 0.0))
        kappa = grid / SOUND_SPEED_AIR
    elif profile == "custom":
        if alpha_table is None or kappa_table is None:
            raise InvalidInputError("custom profile needs alpha_table and kappa_table")
        alpha = np.asarray(alpha_table, dtype=float)
        kappa = np.asarray(kappa_table, dtype=float)
    else:
        raise InvalidInputError(f"unknown profile {profile!r}")

    gamma = PropagationCoefficient(alpha, kappa, grid, require_nonnegative_alpha=True)
    if profile == "custom":
        from .wavemodel import symmetry_report

        report = symmetry_report(gamma)
        if report.alpha_evenness_error > 1e-9 or report.kappa_oddness_error > 1e-9:
            raise InvalidInputError(
                "custom table violates symmetry: evenness error "
                f"{report.alpha_evenness_error:.3g}, oddness error "
                f"{report.kappa_oddness_error:.3g}"
            )
    return gamma


def simulate_pair(
    speaker: Signal,
    gamma: PropagationCoefficient,
    delta_x: float,
    noise_std: float,
    seed: int,
    noise_domain: str = "frequency",
) -> tuple[Spectrum, Spectrum]:
    """Propagate a speaker signal over delta_x and add measurement noise.

    Frequency-domain noise (the default) adds an independent complex
    Gaussian with per-component std ``noise_std`` to every receiver bin.
    ``noise_domain="time"`` instead perturbs the receiver waveform with
    real Gaussian samples of std ``noise_std``, which keeps the receiver
    signal real (the choice for file-backed datasets).
    """
    if noise_std < 0:
        raise InvalidInputError("noise_std must be >= 0")
    if delta_x < 0:
        raise InvalidInputError("delta_x must be >= 0")
    if noise_domain not in ("frequency", "time"):
        raise InvalidInputError(f"unknown noise_domain {noise_domain!r}")
    speaker_spectrum = dft(speaker)
    clean = propagate(speaker_spectrum, gamma, delta_x)
    if noise_std == 0:
        return speaker_spectrum, clean
    rng = np.random.default_rng(seed)
    if noise_domain == "frequency":
        noise = rng.normal(0.0, noise_std, size=(2, len(clean)))
        noisy = clean.coefficients + noise[0] + 1j * noise[1]
        receiver = Spectrum(noisy, clean.angular_frequencies, clean.position)
    else:
        waveform = np.fft.ifft(clean.coefficients).real
        waveform = waveform + rng.normal(0.0, noise_std, size=waveform.size)
        receiver = Spectrum(np.fft.fft(waveform), clean.angular_frequencies, clean.position)
    return speaker_spectrum, receiver


# ---------------------------------------------------------------------------
# Manifest-backed datasets.
#
# Schema: {"pairs": [{"speaker": path, "receiver": path,
#                     "speaker_pos": [x,y,z], "receiver_pos": [x,y,z]}],
#          "sample_rate": int}
# Paths are taken relative to the manifest file.
# ---------------------------------------------------------------------------


def write_manifest(path, pairs: list[dict], sample_rate: int) -> None:
    """Write a dataset manifest; `pairs` entries follow the manifest schema."""
    doc = {"pairs": pairs, "sample_rate": int(sample_rate)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_dataset(manifest_path) -> PairDataset:
    """Load the dataset described by a manifest JSON file.

    All signals are transformed to spectra on one common grid; mismatched
    sample rates or lengths are rejected.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFileError(f"manifest not found: {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "pairs" not in doc or "sample_rate" not in doc:
        raise ManifestError(f"{manifest_path}: manifest needs `pairs` and `sample_rate`")
    pairs = doc["pairs"]
    if not isinstance(pairs, list) or not pairs:
        raise ManifestError(f"{manifest_path}: `pairs` must be a non-empty list")
    sample_rate = doc["sample_rate"]

    speakers, receivers, distances = [], [], []
    base = manifest_path.parent
    for i, entry in enumerate(pairs):
        try:
            speaker_path = base / entry["speaker"]
            receiver_path = base / entry["receiver"]
            speaker_pos = entry["speaker_pos"]
            receiver_pos = entry["receiver_pos"]
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{manifest_path}: pair {i} is malformed: {exc}") from exc
        for p in (speaker_path, receiver_path):
            if not Path(p).exists():
                raise MissingFileError(f"pair {i}: file not found: {p}")
        speaker = read_signal(speaker_path, speaker_pos)
        receiver = read_signal(receiver_path, receiver_pos)
        if speaker.sample_rate != sample_rate or receiver.sample_rate != sample_rate:
            raise GridMismatchError(
                f"pair {i}: sample rate {speaker.sample_rate}/{receiver.sample_rate} "
                f"differs from manifest rate {sample_rate}"
            )
        if len(speaker) != len(receiver):
            raise GridMismatchError(
                f"pair {i}: signal lengths differ ({len(speaker)} vs {len(receiver)})"
            )
        speakers.append(dft(speaker))
        receivers.append(dft(receiver))
        distances.append(float(np.linalg.norm(np.asarray(receiver_pos, dtype=float)
                                              - np.asarray(speaker_pos, dtype=float))))
    grid = speakers[0].angular_frequencies
    for i, spec in enumerate(speakers[1:], start=1):
        if not np.array_equal(spec.angular_frequencies, grid):
            raise GridMismatchError(f"pair {i}: frequency grid differs from pair 0")
    return PairDataset(tuple(speakers), tuple(receivers), np.asarray(distances))
