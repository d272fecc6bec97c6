"""Adaptive random-walk Metropolis sampler with split-chain diagnostics.

The proposal is a full-vector Gaussian whose covariance is adapted only
during warmup: a Robbins-Monro update steers the global step size toward a
0.234 acceptance rate while the empirical covariance of the warmup states
(regularized by ``1e-6 * I``) shapes the proposal.  Adaptation freezes at
the end of warmup so the retained draws come from a fixed kernel.

Chains own isolated random streams derived from ``(seed, chain_index)`` and
run sequentially; results are merged by chain index, so a given
(target, config, seed) triple always produces bitwise-identical draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, InitializationError

__all__ = [
    "SamplerConfig",
    "PosteriorDraws",
    "initialize_chains",
    "sample",
    "fit",
    "rhat",
    "ess",
]

_NEG_INF = float("-inf")
_TARGET_ACCEPT = 0.234
_COV_JITTER = 1e-6


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 2500
    keep: int = 2500
    seed: int = 0
    algorithm: str = "adaptive_rwm"
    thin: int = 1

    def __post_init__(self):
        if self.chains < 1:
            raise ConfigError("chains must be >= 1 (>= 2 for diagnostics)")
        if self.warmup < 1 or self.keep < 1:
            raise ConfigError("warmup and keep must be >= 1")
        if self.thin < 1 or self.keep % self.thin != 0:
            raise ConfigError("thin must be >= 1 and divide keep")
        if self.algorithm != "adaptive_rwm":
            raise ConfigError(f"unknown algorithm: {self.algorithm!r}")


@dataclass
class PosteriorDraws:
    """Retained MCMC draws in the constrained parameter space."""

    draws: np.ndarray              # (B, P)
    names: list
    chain: np.ndarray              # (B,) chain index of each draw
    iteration: np.ndarray          # (B,) post-warmup iteration (after thinning)
    accept_rate: np.ndarray        # (chains,) post-warmup acceptance rates

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        if self.draws.ndim != 2 or self.draws.shape[1] != len(self.names):
            raise ConfigError("draws must be (B, P) with one name per column")
        if len(set(self.names)) != len(self.names):
            raise ConfigError("parameter names must be unique")
        self.chain = np.asarray(self.chain, dtype=int)
        self.iteration = np.asarray(self.iteration, dtype=int)

    def __len__(self) -> int:
        return self.draws.shape[0]

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1 if len(self) else 0

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise KeyError(f"no parameter named {name!r}") from None
        return self.draws[:, j]

    def to_csv(self, path) -> None:
        """Columnar CSV: chain, iteration, then one column per parameter."""
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "iteration", *self.names])
            for i in range(len(self)):
                writer.writerow([int(self.chain[i]), int(self.iteration[i]),
                                 *[repr(float(v)) for v in self.draws[i]]])

    @classmethod
    def from_csv(cls, path) -> "PosteriorDraws":
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["chain", "iteration"]:
                raise ConfigError("draws file must start with chain, iteration columns")
            names = header[2:]
            chain, iteration, rows = [], [], []
            for row in reader:
                chain.append(int(row[0]))
                iteration.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
        n_chains = (max(chain) + 1) if chain else 0
        return cls(np.asarray(rows, dtype=float), names,
                   np.asarray(chain), np.asarray(iteration),
                   np.full(n_chains, np.nan))


def _chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chain_index,))
    return np.random.Generator(np.random.PCG64(ss))


def _finite_target(target: Callable, x: np.ndarray) -> float:
    v = float(target(x))
    return v if not math.isnan(v) else _NEG_INF


def initialize_chains(target: Callable, dim: int, cfg: SamplerConfig,
                      center=None, spread: float = 1.0,
                      rngs: Optional[Sequence[np.random.Generator]] = None):
    """Draw one finite-density start point per chain (up to 100 tries each)."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    if rngs is None:
        rngs = [_chain_rng(cfg.seed, c) for c in range(cfg.chains)]
    points = []
    for c, rng in enumerate(rngs):
        for attempt in range(100):
            x = center + spread * rng.standard_normal(dim)
            if _finite_target(target, x) > _NEG_INF:
                points.append(x)
                break
        else:
            raise InitializationError(
                f"chain {c}: no finite log-density found in 100 draws around "
                f"{np.array2string(center, precision=3)} (spread={spread}); "
                "check the data/prior combination"
            )
    return points


@dataclass(frozen=True)
class LinkedBlock:
    """A location/log-scale hyper pair with children on its fiber.

    Proposing ``(loc', log_scale')`` moves every child ``u_g`` to ``loc' +
    exp(log_scale' - log_scale) * (u_g - loc)``, holding the standardized
    deviations fixed; the acceptance ratio gains the map's Jacobian
    ``n_children * (log_scale' - log_scale)``.  This interweaves a
    non-centered move into the otherwise centered kernel, which is what
    keeps hierarchies with small group counts mixing.
    """

    loc: int
    log_scale: int
    children: tuple


class _BlockState:
    """Adaptive proposal for one parameter block."""

    def __init__(self, block):
        if isinstance(block, LinkedBlock):
            self.linked = block
            idx = [block.loc, block.log_scale]
        else:
            self.linked = None
            idx = block
        self.idx = np.asarray(idx, dtype=np.intp)
        d = self.idx.size
        self.log_step = math.log(2.38 / math.sqrt(d))
        self.chol = np.eye(d)
        self.mean = np.zeros(d)
        self.m2 = np.zeros((d, d))
        self.n_seen = 0
        self.clock = 0
        self.min_samples = max(2 * d, 20)

    def observe(self, xb):
        self.n_seen += 1
        delta = xb - self.mean
        self.mean += delta / self.n_seen
        self.m2 += np.outer(delta, xb - self.mean)

    def refresh(self):
        if self.n_seen >= self.min_samples:
            cov = self.m2 / (self.n_seen - 1) + _COV_JITTER * np.eye(self.idx.size)
            try:
                self.chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                pass  # keep previous factor; jitter makes this rare

    def restart(self):
        d = self.idx.size
        self.mean = np.zeros(d)
        self.m2 = np.zeros((d, d))
        self.n_seen = 0

    def tune(self, alpha):
        self.clock += 1
        self.log_step += self.clock ** (-0.7) * (alpha - _TARGET_ACCEPT)
        self.log_step = min(max(self.log_step, -15.0), 15.0)


def _run_chain(target, dim, cfg, rng, x0, blocks=None, local_factory=None):
    """One chain of component-blocked adaptive random-walk Metropolis.

    Each sweep updates every block once with a Gaussian proposal whose
    covariance is the block's empirical warmup covariance (jittered) and
    whose scale follows a Robbins-Monro drive toward 0.234 acceptance.
    Adaptation stops at the end of warmup.  A stateful ``local_factory``
    evaluator (see model ``local_posterior`` methods) may replace the plain
    target to recompute only the terms a block touches.
    """
    if blocks is None:
        blocks = [np.arange(dim)]
    states = [_BlockState(b) for b in blocks]
    x = np.array(x0, dtype=float)
    lp = local_factory() if local_factory is not None else None
    lx = lp.reset(x) if lp is not None else _finite_target(target, x)
    restart_at = cfg.warmup // 4  # drop the initialization transient once

    def sweep(adapting):
        nonlocal x, lx
        accepted = 0
        for bi, st in enumerate(states):
            z = rng.standard_normal(st.idx.size)
            y = np.array(x)
            y[st.idx] += math.exp(st.log_step) * (st.chol @ z)
            log_jac = 0.0
            if st.linked is not None:
                ch = list(st.linked.children)
                d_scale = y[st.linked.log_scale] - x[st.linked.log_scale]
                y[ch] = y[st.linked.loc] + math.exp(d_scale) * (x[ch] - x[st.linked.loc])
                log_jac = len(ch) * d_scale
            if lp is not None:
                ly = lp.propose(bi, y)
            else:
                ly = _finite_target(target, y)
            if ly == _NEG_INF:
                alpha = 0.0
            else:
                d = ly - lx + log_jac
                alpha = 1.0 if d >= 0.0 else math.exp(d)
            if rng.random() < alpha:
                x, lx = y, ly
                accepted += 1
                if lp is not None:
                    lp.accept()
            if adapting:
                st.tune(alpha)
        return accepted

    for t in range(cfg.warmup):
        sweep(True)
        for st in states:
            st.observe(x[st.idx])
            if t % 25 == 24:
                st.refresh()
        if t + 1 == restart_at:
            for st in states:
                st.refresh()
                st.restart()
    for st in states:
        st.refresh()

    n_ret = cfg.keep // cfg.thin
    out = np.empty((n_ret, dim))
    accepted_keep = 0
    j = 0
    for t in range(cfg.keep):
        accepted_keep += sweep(False)
        if t % cfg.thin == 0:
            out[j] = x
            j += 1
    return out, accepted_keep / (cfg.keep * len(states))


def sample(target: Callable, dim: int, cfg: SamplerConfig, *,
           init_center=None, init_spread: float = 1.0,
           constrain: Optional[Callable] = None,
           names: Optional[Sequence[str]] = None,
           blocks: Optional[Sequence] = None,
           local_factory: Optional[Callable] = None) -> PosteriorDraws:
    """Run the adaptive random-walk sampler and return constrained draws.

    ``target`` is an unconstrained log-density; ``constrain`` maps retained
    unconstrained draws back to the parameter space (identity if omitted).
    ``blocks`` partitions the coordinates into update blocks (a single
    full-vector block if omitted).
    """
    rngs = [_chain_rng(cfg.seed, c) for c in range(cfg.chains)]
    starts = initialize_chains(target, dim, cfg, center=init_center,
                               spread=init_spread, rngs=rngs)
    per_chain = cfg.keep // cfg.thin
    all_draws = np.empty((cfg.chains * per_chain, dim))
    accept = np.empty(cfg.chains)
    for c in range(cfg.chains):
        chain_draws, accept[c] = _run_chain(target, dim, cfg, rngs[c], starts[c],
                                            blocks=blocks, local_factory=local_factory)
        all_draws[c * per_chain:(c + 1) * per_chain] = chain_draws
    if constrain is not None:
        all_draws = np.asarray(constrain(all_draws), dtype=float)
    if names is None:
        names = [f"u{j}" for j in range(dim)]
    chain_idx = np.repeat(np.arange(cfg.chains), per_chain)
    iteration = np.tile(np.arange(per_chain), cfg.chains)
    return PosteriorDraws(all_draws, list(names), chain_idx, iteration, accept)


def fit(model, cfg: SamplerConfig, init_spread: float = 1.0) -> PosteriorDraws:
    """Sample a model object exposing the standard protocol."""
    local = getattr(model, "local_posterior", None)
    return sample(model.log_posterior, model.dim, cfg,
                  init_center=model.init_center(), init_spread=init_spread,
                  constrain=model.constrain, names=model.param_names,
                  blocks=getattr(model, "blocks", None),
                  local_factory=local)


def _split_chain_matrix(draws: PosteriorDraws, name: str) -> np.ndarray:
    """Rows are half-chains, in chain order."""
    col = draws.column(name)
    halves = []
    for c in range(draws.n_chains):
        seq = col[draws.chain == c]
        n = seq.size
        if n < 10:
            raise ConvergenceError("need at least 10 retained draws per chain")
        half = n // 2
        halves.append(seq[:half])
        halves.append(seq[half:2 * half])
    return np.asarray(halves)


def rhat(draws: PosteriorDraws) -> dict:
    """Split-chain potential scale reduction factor, per parameter.

    Exactly 1.0 when a parameter is numerically constant everywhere; +inf
    when chains are individually constant but disagree.
    """
    if draws.n_chains < 2:
        raise ConvergenceError("rhat needs at least 2 chains")
    out = {}
    for name in draws.names:
        seqs = _split_chain_matrix(draws, name)
        n = seqs.shape[1]
        within = seqs.var(axis=1, ddof=1)
        means = seqs.mean(axis=1)
        w = float(within.mean())
        b_over_n = float(means.var(ddof=1))
        if w < 1e-12:
            out[name] = 1.0 if b_over_n < 1e-12 else float("inf")
            continue
        var_plus = (n - 1) / n * w + b_over_n
        out[name] = math.sqrt(var_plus / w)
    return out


def ess(draws: PosteriorDraws) -> dict:
    """Effective sample size (split chains, Geyer initial monotone sequence).

    Informational only; no pass/fail threshold is attached.
    """
    if draws.n_chains < 1:
        raise ConvergenceError("ess needs at least one chain")
    out = {}
    for name in draws.names:
        seqs = _split_chain_matrix(draws, name)
        m, n = seqs.shape
        within = seqs.var(axis=1, ddof=1)
        w = float(within.mean())
        var_plus = (n - 1) / n * w + float(seqs.mean(axis=1).var(ddof=1))
        if var_plus < 1e-300 or w < 1e-12:
            out[name] = float(m * n)
            continue
        centered = seqs - seqs.mean(axis=1, keepdims=True)
        # FFT autocovariance per half-chain, averaged
        size = 2 * n
        fft = np.fft.rfft(centered, n=size, axis=1)
        acov = np.fft.irfft(fft * np.conj(fft), n=size, axis=1)[:, :n].real
        acov /= n
        rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
        # Geyer: sum pairs while positive, enforce monotone decrease
        tau = 1.0
        prev = float("inf")
        for k in range(1, n - 2, 2):
            pair = rho[k] + rho[k + 1]
            if pair < 0.0:
                break
            pair = min(pair, prev)
            tau += 2.0 * pair
            prev = pair
        out[name] = float(m * n / tau)
    return out
