"""Closed-form log-domain least squares estimation of the propagation coefficient.

Dividing receiver by speaker spectrum and taking the principal-branch
complex log turns per-bin exponential decay into a linear relation in the
travel distance, so each pair yields one exact coefficient row and the
rows aggregate into a mean +/- std interval estimate. No phase
unwrapping is performed: kappa estimates are valid modulo 2*pi/delta_x.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .spectral import Spectrum
from .synth import PairDataset
from .wavemodel import PropagationCoefficient

__all__ = ["LsqEstimate", "log_ratio", "fit", "residual", "MAG_EPS"]

MAG_EPS = 1e-12


@dataclass(frozen=True)
class LsqEstimate:
    """Per-pair coefficient rows plus their per-bin mean and spread.

    masked[i, j] is True where pair i gave no usable estimate at bin j
    (near-zero magnitude, or a rejected zero-distance pair).
    """

    gamma_rows: tuple[PropagationCoefficient, ...]
    gamma_mean: PropagationCoefficient
    gamma_std: np.ndarray
    masked: np.ndarray

    def __post_init__(self):
        if len(self.gamma_rows) == 0:
            raise InvalidInputError("estimate needs at least one row")
        std = np.asarray(self.gamma_std, dtype=float)
        std.setflags(write=False)
        masked = np.asarray(self.masked, dtype=bool)
        masked.setflags(write=False)
        object.__setattr__(self, "gamma_rows", tuple(self.gamma_rows))
        object.__setattr__(self, "gamma_std", std)
        object.__setattr__(self, "masked", masked)

    @property
    def n_masked_bins(self) -> int:
        return int(self.masked.sum())


def log_ratio(pair: tuple[Spectrum, Spectrum], mag_eps: float = MAG_EPS) -> np.ndarray:
    """Principal-branch complex log of receiver/speaker, per bin.

    Bins where either spectrum magnitude falls below ``mag_eps`` are
    masked and returned as NaN. Raises DegenerateInputError if every bin
    is masked.
    """
    speaker, receiver = pair
    if not np.array_equal(speaker.angular_frequencies, receiver.angular_frequencies):
        raise InvalidInputError("pair spectra must share one frequency grid")
    usable = (np.abs(speaker.coefficients) >= mag_eps) & (
        np.abs(receiver.coefficients) >= mag_eps
    )
    if not usable.any():
        raise DegenerateInputError("all bins below magnitude threshold")
    out = np.full(len(speaker), np.nan + 1j * np.nan, dtype=complex)
    out[usable] = np.log(receiver.coefficients[usable] / speaker.coefficients[usable])
    return out


def fit(dataset: PairDataset, mag_eps: float = MAG_EPS) -> LsqEstimate:
    """Closed-form fit: row i of the estimate is -log_ratio_i / delta_x_i.

    alpha is the real part, kappa the imaginary part. Zero-distance pairs
    are rejected with a warning (their rows are fully masked); the
    per-bin mean and sample std aggregate the surviving rows.
    """
    n = dataset.n_bins
    grid = dataset.angular_frequencies
    rows = np.full((len(dataset), n), np.nan + 1j * np.nan, dtype=complex)
    usable_rows = 0
    for i in range(len(dataset)):
        dx = dataset.delta_x[i]
        if dx == 0:
            warnings.warn(f"pair {i} has zero travel distance; row skipped", stacklevel=2)
            continue
        try:
            ratios = log_ratio(
                (dataset.speaker_spectra[i], dataset.receiver_spectra[i]), mag_eps
            )
        except DegenerateInputError:
            warnings.warn(f"pair {i} has no usable bins; row skipped", stacklevel=2)
            continue
        rows[i] = -ratios / dx
        usable_rows += 1
    if usable_rows == 0:
        raise DegenerateInputError("no usable pairs (all rejected or masked)")

    masked = ~np.isfinite(rows.real) | ~np.isfinite(rows.imag)
    gamma_rows = tuple(
        PropagationCoefficient(
            np.where(masked[i], 0.0, rows[i].real),
            np.where(masked[i], 0.0, rows[i].imag),
            grid,
        )
        for i in range(len(dataset))
    )

    counts = (~masked).sum(axis=0)
    if (counts == 0).all():
        raise DegenerateInputError("every bin masked in every pair")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN bins stay NaN
        mean = np.nanmean(np.where(masked, np.nan, rows.real), axis=0)
        mean_k = np.nanmean(np.where(masked, np.nan, rows.imag), axis=0)
        std_a = np.nanstd(np.where(masked, np.nan, rows.real), axis=0, ddof=0)
        std_k = np.nanstd(np.where(masked, np.nan, rows.imag), axis=0, ddof=0)
    gamma_mean = PropagationCoefficient(
        np.where(counts == 0, 0.0, mean), np.where(counts == 0, 0.0, mean_k), grid
    )
    gamma_std = np.where(counts == 0, np.nan, np.hypot(std_a, std_k))
    return LsqEstimate(gamma_rows, gamma_mean, gamma_std, masked)


def residual(dataset: PairDataset, estimate: LsqEstimate) -> float:
    """Squared Frobenius norm of the log-domain residual matrix.

    Uses the estimate's per-bin mean coefficient for every row; masked
    bins are excluded from the sum.
    """
    if not np.array_equal(
        estimate.gamma_mean.angular_frequencies, dataset.angular_frequencies
    ):
        raise InvalidInputError("estimate grid does not match dataset grid")
    total = 0.0
    gamma = estimate.gamma_mean.gamma
    for i in range(len(dataset)):
        dx = dataset.delta_x[i]
        if dx == 0:
            continue
        ratios = log_ratio((dataset.speaker_spectra[i], dataset.receiver_spectra[i]))
        diff = ratios - (-dx * gamma)
        ok = np.isfinite(diff.real)
        total += float(np.sum(diff.real[ok] ** 2 + diff.imag[ok] ** 2))
    return total


def export_rows_csv(estimate: LsqEstimate, alpha_path, kappa_path) -> None:
    """Write the N x n alpha and kappa row matrices as two CSV files."""
    for path, attr in ((alpha_path, "alpha"), (kappa_path, "kappa")):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in estimate.gamma_rows:
                writer.writerow([f"{v:.17g}" for v in getattr(row, attr)])
