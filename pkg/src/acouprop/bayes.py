"""Metropolis-Hastings inference of (alpha, kappa, sigma) with chain diagnostics.

The likelihood places independent Gaussians on the forward residual
P2 - P1*exp(-gamma*d) and the backward residual P1 - P2*exp(+gamma*d) of
every pair, each complex residual contributing its real and imaginary
parts as two N(0, sigma^2) terms.

Because that likelihood factorizes over frequency bins given sigma, the
default sampler sweeps one symmetric-Gaussian proposal per (alpha_j,
kappa_j) block plus one for sigma each iteration; all per-bin accepts are
independent, so one sweep costs the same as a single joint proposal but
mixes dramatically better in high bin counts. A literal single-block
update over the full parameter vector is available as ``update="joint"``.

Constraints: alpha proposals must stay elementwise positive, sigma
proposals positive; the spectral wave-equation left-hand side can be
ignored ("off"), enforced below a tolerance ("hard") or folded into the
likelihood as an extra Gaussian with scale sigma_prime ("soft").
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .synth import PairDataset
from .wavemodel import PropagationCoefficient

__all__ = [
    "PriorSpec",
    "MHConfig",
    "PosteriorTrace",
    "PosteriorSummary",
    "log_likelihood",
    "mh_sample",
    "gelman_rubin",
    "ess_tail",
    "summarize",
    "histogram_mode",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian priors for alpha and kappa, half-normal scale for sigma.

    Means/stds broadcast over frequency bins (scalars or per-bin arrays).
    """

    alpha_mean: float = 1.0
    alpha_std: float = 1.0
    kappa_mean: float = 0.0
    kappa_std: float = 10.0
    sigma_scale: float = 1.0

    def __post_init__(self):
        if np.any(np.asarray(self.alpha_std) <= 0) or np.any(np.asarray(self.kappa_std) <= 0):
            raise InvalidInputError("prior stds must be > 0")
        if self.sigma_scale <= 0:
            raise InvalidInputError("sigma_scale must be > 0")


@dataclass(frozen=True)
class MHConfig:
    """Sampler run configuration.

    lhs_mode: "off", "hard" (lhs_param = absolute tolerance on the
    wave-equation LHS) or "soft" (lhs_param = Gaussian scale sigma_prime).
    sigma_fixed pins the noise scale instead of sampling it, which is the
    well-posed choice on noise-free data where a sampled sigma has no
    stationary level to find. use_likelihood=False drops the likelihood
    entirely (prior-recovery checks). update selects per-bin sweeps
    (default) or the literal joint single-accept step.
    """

    n_iterations: int = 1000
    n_chains: int = 2
    warmup: int = 600
    proposal_std_alpha: float = 0.1
    proposal_std_kappa: float = 1.0
    proposal_std_sigma: float = 0.1
    lhs_mode: str = "off"
    lhs_param: float | None = None
    seed: int = 0
    sigma_fixed: float | None = None
    use_likelihood: bool = True
    update: str = "per-bin"
    init_alpha: np.ndarray | float | None = None
    init_kappa: np.ndarray | float | None = None
    init_sigma: float | None = None

    def __post_init__(self):
        if self.warmup >= self.n_iterations or self.warmup < 0:
            raise InvalidInputError("need 0 <= warmup < n_iterations")
        if min(self.proposal_std_alpha, self.proposal_std_kappa, self.proposal_std_sigma) <= 0:
            raise InvalidInputError("proposal stds must be > 0")
        if self.n_chains < 1:
            raise InvalidInputError("need at least one chain")
        if self.lhs_mode not in ("off", "hard", "soft"):
            raise InvalidInputError(f"unknown lhs_mode {self.lhs_mode!r}")
        if self.lhs_mode != "off" and (self.lhs_param is None or self.lhs_param <= 0):
            raise InvalidInputError(f"lhs_mode {self.lhs_mode!r} needs lhs_param > 0")
        if self.sigma_fixed is not None and self.sigma_fixed <= 0:
            raise InvalidInputError("sigma_fixed must be > 0")
        if self.update not in ("per-bin", "joint"):
            raise InvalidInputError(f"unknown update scheme {self.update!r}")


@dataclass(frozen=True)
class PosteriorTrace:
    """Post-warmup chains: alpha/kappa [n_chains, n_kept, n], sigma
    [n_chains, n_kept], plus per-chain acceptance rates."""

    alpha_chains: np.ndarray
    kappa_chains: np.ndarray
    sigma_chain: np.ndarray
    accept_rate: np.ndarray
    angular_frequencies: np.ndarray

    def __post_init__(self):
        for name in ("alpha_chains", "kappa_chains", "sigma_chain", "accept_rate",
                     "angular_frequencies"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.alpha_chains.shape != self.kappa_chains.shape or self.alpha_chains.ndim != 3:
            raise InvalidInputError("alpha and kappa chains must share shape [chains, kept, bins]")
        if self.sigma_chain.shape != self.alpha_chains.shape[:2]:
            raise InvalidInputError("sigma chain shape must be [chains, kept]")
        if (self.sigma_chain <= 0).any():
            raise InvalidInputError("all sigma samples must be positive")
        if ((self.accept_rate < 0) | (self.accept_rate > 1)).any():
            raise InvalidInputError("accept rates must lie in [0, 1]")

    @property
    def n_chains(self) -> int:
        return self.alpha_chains.shape[0]

    @property
    def n_kept(self) -> int:
        return self.alpha_chains.shape[1]

    @property
    def n_bins(self) -> int:
        return self.alpha_chains.shape[2]

    @property
    def n_parameters(self) -> int:
        return 2 * self.n_bins + 1

    def parameter_names(self) -> list[str]:
        n = self.n_bins
        return (
            [f"alpha[{j}]" for j in range(n)]
            + [f"kappa[{j}]" for j in range(n)]
            + ["sigma"]
        )

    def parameter_series(self, index: int) -> np.ndarray:
        """Per-chain series [n_chains, n_kept] for one flat parameter index
        (alphas first, then kappas, then sigma)."""
        n = self.n_bins
        if not 0 <= index < self.n_parameters:
            raise InvalidInputError(f"parameter index {index} out of range")
        if index < n:
            return self.alpha_chains[:, :, index]
        if index < 2 * n:
            return self.kappa_chains[:, :, index - n]
        return self.sigma_chain

    def gamma_draw(self, chain: int, iteration: int) -> PropagationCoefficient:
        """One posterior coefficient sample."""
        return PropagationCoefficient(
            self.alpha_chains[chain, iteration],
            self.kappa_chains[chain, iteration],
            self.angular_frequencies,
        )


@dataclass(frozen=True)
class PosteriorSummary:
    """Per-parameter posterior summary table (parallel arrays)."""

    names: tuple[str, ...]
    mean: np.ndarray
    mode: np.ndarray
    std: np.ndarray
    r_hat: np.ndarray
    ess_tail: np.ndarray


# ---------------------------------------------------------------------------
# Likelihood.
# ---------------------------------------------------------------------------


class _Residuals:
    """Cached pair matrices and per-bin residual sums for a dataset."""

    def __init__(self, dataset: PairDataset):
        self.p1 = np.stack([s.coefficients for s in dataset.speaker_spectra])
        self.p2 = np.stack([s.coefficients for s in dataset.receiver_spectra])
        self.dx = dataset.delta_x[:, None]
        self.n_pairs = len(dataset)
        self.n_bins = dataset.n_bins

    def squared_sums(self, alpha: np.ndarray, kappa: np.ndarray) -> np.ndarray:
        """Per-bin sum over pairs of |forward|^2 + |backward|^2 residuals."""
        with np.errstate(over="ignore", invalid="ignore"):
            decay = np.exp(-(alpha + 1j * kappa)[None, :] * self.dx)
            r_fwd = self.p2 - self.p1 * decay
            r_bwd = self.p1 - self.p2 / decay
            ss = np.sum(r_fwd.real**2 + r_fwd.imag**2 + r_bwd.real**2 + r_bwd.imag**2, axis=0)
        return np.where(np.isfinite(ss), ss, np.inf)

    def lhs_squared_sums(self, alpha: np.ndarray, kappa: np.ndarray) -> np.ndarray:
        """Per-bin sum over pairs of |wave-equation LHS|^2."""
        with np.errstate(over="ignore", invalid="ignore"):
            front = (alpha**2 + 2j * alpha * kappa)[None, :]
            lhs = front * self.p1 * np.exp(-(alpha + 1j * kappa)[None, :] * self.dx)
            ss = np.sum(lhs.real**2 + lhs.imag**2, axis=0)
        return np.where(np.isfinite(ss), ss, np.inf)

    def lhs_max_abs(self, alpha: np.ndarray, kappa: np.ndarray) -> np.ndarray:
        """Per-bin max over pairs of |wave-equation LHS|."""
        with np.errstate(over="ignore", invalid="ignore"):
            front = (alpha**2 + 2j * alpha * kappa)[None, :]
            lhs = front * self.p1 * np.exp(-(alpha + 1j * kappa)[None, :] * self.dx)
            out = np.abs(lhs).max(axis=0)
        return np.where(np.isfinite(out), out, np.inf)


def log_likelihood(dataset: PairDataset, gamma: PropagationCoefficient, sigma: float) -> float:
    """Total forward+backward Gaussian log-likelihood of a dataset.

    Each of the N*n complex forward and backward residuals contributes
    two independent N(0, sigma^2) log-densities (real and imaginary part).
    """
    if sigma <= 0:
        raise InvalidInputError("sigma must be > 0")
    if not np.array_equal(gamma.angular_frequencies, dataset.angular_frequencies):
        raise InvalidInputError("gamma grid does not match dataset grid")
    res = _Residuals(dataset)
    ss = res.squared_sums(gamma.alpha, gamma.kappa)
    n_terms = 4 * res.n_pairs * res.n_bins
    return float(-0.5 * n_terms * _LOG_2PI - n_terms * math.log(sigma) - ss.sum() / (2 * sigma**2))


# ---------------------------------------------------------------------------
# Sampler.
# ---------------------------------------------------------------------------


def _broadcast(value, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()


def _init_state(prior: PriorSpec, config: MHConfig, n: int, rng) -> tuple[np.ndarray, np.ndarray, float]:
    if config.init_alpha is not None:
        alpha = _broadcast(config.init_alpha, n)
        if (alpha <= 0).any():
            raise InvalidInputError("init_alpha must be elementwise positive")
    else:
        mean, std = _broadcast(prior.alpha_mean, n), _broadcast(prior.alpha_std, n)
        alpha = mean + std * rng.standard_normal(n)
        for _ in range(1000):
            bad = alpha <= 0
            if not bad.any():
                break
            alpha[bad] = mean[bad] + std[bad] * rng.standard_normal(int(bad.sum()))
        else:
            raise InvalidInputError("could not draw a positive initial alpha from the prior")
    if config.init_kappa is not None:
        kappa = _broadcast(config.init_kappa, n)
    else:
        kappa = _broadcast(prior.kappa_mean, n) + _broadcast(prior.kappa_std, n) * rng.standard_normal(n)
    if config.sigma_fixed is not None:
        sigma = float(config.sigma_fixed)
    elif config.init_sigma is not None:
        if config.init_sigma <= 0:
            raise InvalidInputError("init_sigma must be > 0")
        sigma = float(config.init_sigma)
    else:
        sigma = abs(float(rng.normal(0.0, prior.sigma_scale)))
        sigma = max(sigma, 1e-12 * prior.sigma_scale)
    return alpha, kappa, sigma


def _run_chain(res: _Residuals, prior: PriorSpec, config: MHConfig,
               n: int, n_pairs: int, seed_seq) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    rng = np.random.default_rng(seed_seq)
    alpha, kappa, sigma = _init_state(prior, config, n, rng)

    a_mean, a_std = _broadcast(prior.alpha_mean, n), _broadcast(prior.alpha_std, n)
    k_mean, k_std = _broadcast(prior.kappa_mean, n), _broadcast(prior.kappa_std, n)
    lik_on = config.use_likelihood
    soft = config.lhs_mode == "soft"
    hard = config.lhs_mode == "hard"

    ss = res.squared_sums(alpha, kappa) if lik_on else np.zeros(n)
    ssl = res.lhs_squared_sums(alpha, kappa) if soft else np.zeros(n)
    n_terms_per_bin = 4 * n_pairs

    n_kept = config.n_iterations - config.warmup
    alpha_out = np.empty((n_kept, n))
    kappa_out = np.empty((n_kept, n))
    sigma_out = np.empty(n_kept)
    accepted = 0
    attempted = 0
    sample_sigma = config.sigma_fixed is None

    def bin_log_post(a, k, ss_vec, ssl_vec, sig):
        out = -((a - a_mean) ** 2) / (2 * a_std**2) - ((k - k_mean) ** 2) / (2 * k_std**2)
        if lik_on:
            out = out - ss_vec / (2 * sig**2) - n_terms_per_bin * math.log(sig)
        if soft:
            out = out - ssl_vec / (2 * config.lhs_param**2)
        return out

    for it in range(config.n_iterations):
        post_warmup = it >= config.warmup

        # (alpha_j, kappa_j) blocks: independent given sigma, so propose and
        # accept every bin in parallel (or all bins as one block in joint mode).
        a_prop = alpha + config.proposal_std_alpha * rng.standard_normal(n)
        k_prop = kappa + config.proposal_std_kappa * rng.standard_normal(n)
        ss_prop = res.squared_sums(a_prop, k_prop) if lik_on else ss
        ssl_prop = res.lhs_squared_sums(a_prop, k_prop) if soft else ssl
        delta = bin_log_post(a_prop, k_prop, ss_prop, ssl_prop, sigma) - bin_log_post(
            alpha, kappa, ss, ssl, sigma
        )
        ok = a_prop > 0
        if hard:
            ok &= res.lhs_max_abs(a_prop, k_prop) <= config.lhs_param
        if config.update == "joint":
            u = rng.uniform()
            accept_all = bool(ok.all()) and math.log(u) <= float(delta.sum())
            accept = np.full(n, accept_all)
            if post_warmup:
                attempted += 1
                accepted += int(accept_all)
        else:
            u = rng.uniform(size=n)
            accept = ok & (np.log(u) <= delta)
            if post_warmup:
                attempted += n
                accepted += int(accept.sum())
        alpha = np.where(accept, a_prop, alpha)
        kappa = np.where(accept, k_prop, kappa)
        ss = np.where(accept, ss_prop, ss)
        if soft:
            ssl = np.where(accept, ssl_prop, ssl)

        if sample_sigma:
            s_prop = sigma + config.proposal_std_sigma * rng.standard_normal()
            if post_warmup:
                attempted += 1
            if s_prop > 0:
                d = -(s_prop**2 - sigma**2) / (2 * prior.sigma_scale**2)
                if lik_on:
                    d += ss.sum() / 2 * (1 / sigma**2 - 1 / s_prop**2)
                    d += n_terms_per_bin * n * (math.log(sigma) - math.log(s_prop))
                if math.log(rng.uniform()) <= d:
                    sigma = s_prop
                    if post_warmup:
                        accepted += 1

        if post_warmup:
            kept = it - config.warmup
            alpha_out[kept] = alpha
            kappa_out[kept] = kappa
            sigma_out[kept] = sigma

    rate = accepted / attempted if attempted else 0.0
    return alpha_out, kappa_out, sigma_out, rate


def mh_sample(dataset: PairDataset, prior: PriorSpec, config: MHConfig) -> PosteriorTrace:
    """Run Metropolis-Hastings chains over (alpha, kappa, sigma).

    Chains are mutually independent (seeded from spawn of config.seed) and
    merged in chain order, so parallel execution cannot change results.
    Prior-recovery runs pass use_likelihood=False and still supply a
    dataset for its frequency grid.
    """
    if len(dataset) == 0:
        raise InvalidInputError("dataset must be non-empty")
    res = _Residuals(dataset)
    n = dataset.n_bins

    seeds = np.random.SeedSequence(config.seed).spawn(config.n_chains)
    alphas, kappas, sigmas, rates = [], [], [], []
    for chain_seed in seeds:
        a, k, s, rate = _run_chain(res, prior, config, n, len(dataset), chain_seed)
        alphas.append(a)
        kappas.append(k)
        sigmas.append(s)
        rates.append(rate)
    rates = np.asarray(rates)
    if (rates == 0).any():
        warnings.warn(
            "at least one chain accepted nothing after warmup; check proposal "
            "scales and constraints", stacklevel=2,
        )
    return PosteriorTrace(
        np.stack(alphas), np.stack(kappas), np.stack(sigmas), rates,
        dataset.angular_frequencies,
    )


# ---------------------------------------------------------------------------
# Diagnostics.
# ---------------------------------------------------------------------------


def gelman_rubin(trace: PosteriorTrace | np.ndarray, parameter_index: int | None = None) -> float:
    """Split-Rhat convergence statistic for one parameter.

    Each chain is split in half; Rhat compares between- and within-half
    variances and approaches 1 for well-mixed chains. Zero within-chain
    variance is 1.0 by convention when the halves agree, infinity when
    they do not. Requires at least two chains.
    """
    series = _series(trace, parameter_index)
    m_chains, n_draw = series.shape
    if m_chains < 2:
        raise InvalidInputError("split-Rhat needs at least two chains")
    half = n_draw // 2
    if half < 2:
        raise InvalidInputError("chains too short to split")
    halves = np.vstack((series[:, :half], series[:, n_draw - half:]))
    within = halves.var(axis=1, ddof=1).mean()
    between = half * halves.mean(axis=1).var(ddof=1)
    if within == 0:
        return 1.0 if between == 0 else float("inf")
    return float(np.sqrt((within * (half - 1) / half + between / half) / within))


def _series(trace, parameter_index) -> np.ndarray:
    if isinstance(trace, PosteriorTrace):
        if parameter_index is None:
            raise InvalidInputError("parameter index required for a trace")
        return trace.parameter_series(parameter_index)
    arr = np.asarray(trace, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError("expected a [chains, draws] array")
    return arr


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of one chain at all lags (FFT-based)."""
    n = x.size
    centered = x - x.mean()
    padded = np.zeros(2 * n)
    padded[:n] = centered
    spectrum = np.abs(np.fft.rfft(padded)) ** 2
    acov = np.fft.irfft(spectrum)[:n] / n
    return acov


def effective_sample_size(series: np.ndarray) -> float:
    """Multi-chain ESS with Geyer initial-positive-sequence truncation.

    Sums paired autocorrelations rho_{2k} + rho_{2k+1} while the pair sum
    stays positive; ESS = (chains * draws) / (1 + 2 sum rho). Returns 0.0
    for degenerate (zero-variance) input.
    """
    series = np.atleast_2d(np.asarray(series, dtype=float))
    m, n_draw = series.shape
    if n_draw < 8:
        raise InvalidInputError("chains must have at least 8 draws")
    acov = np.vstack([_autocovariance(series[c]) for c in range(m)])
    mean_var = acov[:, 0].mean() * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if m > 1:
        var_plus += series.mean(axis=1).var(ddof=1)
    if var_plus == 0:
        return 0.0

    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau = 0.0
    t = 0
    while t + 1 < n_draw:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        tau += pair
        t += 2
    # tau >= 0.1 guards pathological antithetic sequences (caps ESS at 10x draws)
    tau = max(2.0 * tau - 1.0, 0.1)
    return float(m * n_draw / tau)


def ess_tail(trace: PosteriorTrace | np.ndarray, parameter_index: int | None = None) -> float:
    """Tail effective sample size for one parameter.

    ESS of the 5% and 95% quantile indicator sequences, taking the
    smaller of the two. Degenerate (constant) chains give 0.0.
    """
    series = _series(trace, parameter_index)
    if series.shape[1] < 8:
        raise InvalidInputError("chains must have at least 8 draws")
    q05, q95 = np.quantile(series, [0.05, 0.95])
    ess05 = effective_sample_size((series <= q05).astype(float))
    ess95 = effective_sample_size((series <= q95).astype(float))
    return min(ess05, ess95)


def histogram_mode(samples) -> float:
    """Histogram mode: midpoint of the tallest Freedman-Diaconis bin."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInputError("cannot take the mode of an empty sample")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return lo
    q25, q75 = np.percentile(x, [25.0, 75.0])
    width = 2.0 * (q75 - q25) * x.size ** (-1.0 / 3.0)
    if width <= 0:
        n_bins = max(1, int(math.ceil(math.sqrt(x.size))))
    else:
        n_bins = max(1, int(math.ceil((hi - lo) / width)))
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    tallest = int(np.argmax(counts))
    return float(0.5 * (edges[tallest] + edges[tallest + 1]))


def summarize(trace: PosteriorTrace) -> PosteriorSummary:
    """Mean, histogram mode, std, split-Rhat and tail-ESS per parameter."""
    if trace.n_kept == 0:
        raise InvalidInputError("trace is empty")
    names = trace.parameter_names()
    mean = np.empty(len(names))
    mode = np.empty(len(names))
    std = np.empty(len(names))
    r_hat = np.empty(len(names))
    tail = np.empty(len(names))
    multi = trace.n_chains >= 2
    for idx in range(len(names)):
        series = trace.parameter_series(idx)
        pooled = series.ravel()
        mean[idx] = pooled.mean()
        std[idx] = pooled.std(ddof=0)
        mode[idx] = histogram_mode(pooled)
        r_hat[idx] = gelman_rubin(trace, idx) if multi else np.nan
        tail[idx] = ess_tail(trace, idx) if trace.n_kept >= 8 else np.nan
    return PosteriorSummary(tuple(names), mean, mode, std, r_hat, tail)


# ---------------------------------------------------------------------------
# Persistence.
# ---------------------------------------------------------------------------


def export_trace_csv(trace: PosteriorTrace, path) -> None:
    """Long-format trace CSV: chain, iteration, parameter, value."""
    names = trace.parameter_names()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "iteration", "parameter", "value"])
        for chain in range(trace.n_chains):
            for it in range(trace.n_kept):
                row_alpha = trace.alpha_chains[chain, it]
                row_kappa = trace.kappa_chains[chain, it]
                values = np.concatenate((row_alpha, row_kappa, [trace.sigma_chain[chain, it]]))
                for name, value in zip(names, values):
                    writer.writerow([chain, it, name, f"{value:.17g}"])


def summary_to_dict(summary: PosteriorSummary) -> dict:
    return {
        "parameters": list(summary.names),
        "mean": [float(v) for v in summary.mean],
        "mode": [float(v) for v in summary.mode],
        "std": [float(v) for v in summary.std],
        "r_hat": [float(v) for v in summary.r_hat],
        "ess_tail": [float(v) for v in summary.ess_tail],
    }


def export_summary_json(summary: PosteriorSummary, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary_to_dict(summary), fh, indent=1)
        fh.write("\n")


def export_summary_csv(summary: PosteriorSummary, path) -> None:
    """Summary table CSV with one row per parameter."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "mean", "mode", "std", "r_hat", "ess_tail"])
        for i, name in enumerate(summary.names):
            writer.writerow([
                name,
                f"{summary.mean[i]:.17g}",
                f"{summary.mode[i]:.17g}",
                f"{summary.std[i]:.17g}",
                f"{summary.r_hat[i]:.17g}",
                f"{summary.ess_tail[i]:.17g}",
            ])
