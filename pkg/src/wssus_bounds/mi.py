"""Monte Carlo coherent mutual information for constant-modulus inputs.

The channel per slot is ``y = S^{1/2} H L^{1/2} x + w`` with ``H`` and ``w``
i.i.d. CN(0, 1) and the first ``q`` entries of ``x`` of constant modulus and
independent phases.  The estimator averages, over outer draws of
``(H, x, w)``, the log-likelihood ratio ``log p(y | x, H) - log p(y | H)``.

* ``p(y | H)`` is a nested average over inner phase draws.  The phase of the
  first active entry is integrated in closed form (a Bessel ``I0`` factor for
  continuous phase, a finite sum for PSK), so ``q = 1`` needs no inner draws.
* Noise draws come in antithetic pairs ``(w, -w)``, and the received signal
  energy, its noise projections and the first-order part of the inner
  average serve as control variates (their means are known exactly).
* Two inner averages are formed from the same draws: one that includes the
  transmitted phases (a lower bound on the MI in expectation) and one that
  excludes them (an upper bound).  The lower one is the reported value.

Randomness comes from Philox streams keyed by ``seed`` with the block index
in the counter, so every block is reproducible on its own and the result does
not depend on how blocks are spread across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, logsumexp

from .spatial import SpatialSpectrum

CONTINUOUS = "continuous"
PSK = "psk"
Z95 = 1.959963984540054


@dataclass(frozen=True)
class McSpec:
    outer: int = 10_000
    inner: int = 512
    seed: int = 0
    confidence: float | None = None
    block_size: int = 250
    workers: int = 1

    def __post_init__(self):
        if self.outer < 2 or self.inner < 1:
            raise ValueError("outer must be >= 2 and inner >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.block_size < 2 or self.workers < 1:
            raise ValueError("block_size must be >= 2 and workers >= 1")


@dataclass(frozen=True)
class CmInputSpec:
    """Constant-modulus input: ``q_active`` entries with ``|x_t|^2 = modulus_sq``."""

    q_active: int
    modulus_sq: float
    phase_model: str = CONTINUOUS
    psk_order: int = 8

    def __post_init__(self):
        if self.q_active < 1:
            raise ValueError("q_active must be >= 1")
        if self.modulus_sq < 0:
            raise ValueError("modulus_sq must be nonnegative")
        if self.phase_model not in (CONTINUOUS, PSK):
            raise ValueError(f"unknown phase model {self.phase_model!r}")
        if self.phase_model == PSK and self.psk_order < 2:
            raise ValueError("psk_order must be >= 2")


@dataclass(frozen=True)
class MiEstimate:
    value: float
    halfwidth: float
    upper: float
    samples: int
    target_met: bool = True


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _sqnorm(z):
    return np.sum(z.real**2 + z.imag**2, axis=-1)


def _log_i0(z):
    return np.log(i0e(z)) + z


class MiSampler:
    """Frozen random draws for one (spectrum, q, phase model, MC spec) combination.

    :meth:`estimate` can be called for any per-entry SNR; all calls reuse the
    same draws (common random numbers).
    """

    def __init__(self, spec: SpatialSpectrum, q_active: int, mc: McSpec,
                 phase_model: str = CONTINUOUS, psk_order: int = 8):
        if not 1 <= q_active <= spec.m_t:
            raise ValueError(f"q_active={q_active} outside [1, {spec.m_t}]")
        self.spec = spec
        self.q = q_active
        self.mc = mc
        self.phase_model = phase_model
        self.psk_order = psk_order
        pairs = math.ceil(mc.outer / 2)
        self.n_blocks = math.ceil(pairs / mc.block_size)
        self.pairs = pairs
        self._blocks = [self._draw(b) for b in range(self.n_blocks)]

    def _phases(self, rng, shape):
        if self.phase_model == PSK:
            return 2 * np.pi * rng.integers(0, self.psk_order, size=shape) / self.psk_order
        return rng.uniform(0, 2 * np.pi, size=shape)

    def _draw(self, block: int):
        rng = np.random.Generator(np.random.Philox(key=self.mc.seed, counter=[0, 0, block, 0]))
        n = min(self.mc.block_size, self.pairs - block * self.mc.block_size)
        m_r, q = self.spec.m_r, self.q
        h = _cn(rng, (n, m_r, q))
        gains = np.sqrt(self.spec.rx_eigs)[:, None] * np.sqrt(self.spec.tx_eigs[:q])[None, :]
        g = h * gains[None]
        x0 = np.exp(1j * self._phases(rng, (n, q)))
        w = _cn(rng, (n, m_r))
        inner = np.exp(1j * self._phases(rng, (self.mc.inner, q - 1))) if q > 1 else None
        return g, x0, w, inner

    def _marginal_loglik(self, z, g1, amp):
        # log of E_{phi_1} exp(-|z - amp g1 e^{j phi_1}|^2), up to the pi^{-M} factor
        # z is (n, m) or (n, k, m) for k inner draws; g1 is (n, m)
        if z.ndim == 3:
            base = -_sqnorm(z) - amp**2 * _sqnorm(g1)[:, None]
            corr = np.matmul(z, g1.conj()[:, :, None])[..., 0]
        else:
            base = -_sqnorm(z) - amp**2 * _sqnorm(g1)
            corr = np.sum(z * g1.conj(), axis=-1)
        if self.phase_model == PSK:
            k = np.arange(self.psk_order)
            rot = np.exp(-2j * np.pi * k / self.psk_order)
            terms = 2 * amp * np.real(corr[..., None] * rot)
            return base + logsumexp(terms, axis=-1) - math.log(self.psk_order)
        return base + _log_i0(2 * amp * np.abs(corr))

    def _block_stats(self, block: int, amp: float):
        g, x0, w, inner = self._blocks[block]
        out = []
        for sign in (1.0, -1.0):
            y = amp * np.einsum("nmq,nq->nm", g, x0) + sign * w
            log_cond = -np.sum(np.abs(w) ** 2, axis=-1)
            g1 = g[:, :, 0]
            if self.q == 1:
                log_marg = self._marginal_loglik(y, g1, amp)
                lower = upper = log_cond - log_marg
            else:
                rest = g[:, :, 1:]
                z_in = y[:, None, :] - amp * np.matmul(inner, rest.transpose(0, 2, 1))
                terms_in = self._marginal_loglik(z_in, g1, amp)
                z0 = y - amp * np.einsum("nmq,nq->nm", rest, x0[:, 1:])
                term0 = self._marginal_loglik(z0, g1, amp)
                n_in = terms_in.shape[1]
                lse_in = logsumexp(terms_in, axis=1)
                log_excl = lse_in - math.log(n_in)
                log_incl = np.logaddexp(lse_in, term0) - math.log(n_in + 1)
                lower = log_cond - log_incl
                upper = log_cond - log_excl
            out.append((lower, upper))
        lower = 0.5 * (out[0][0] + out[1][0])
        upper = 0.5 * (out[0][1] + out[1][1])
        signal = amp * np.einsum("nmq,nq->nm", g, x0)
        v1 = np.sum(np.abs(signal) ** 2, axis=-1)
        v2 = amp**2 * np.sum(np.abs(np.einsum("nmq,nm->nq", g.conj(), w)) ** 2, axis=-1)
        controls = [v1 - self._control_mean(amp**2), v2 - self._control_mean(amp**2)]
        if self.q > 1:
            # first-order term of the inner average; zero mean because the inner phases are uniform
            shift_mean = amp * np.einsum("nmq,q->nm", g[:, :, 1:], inner.mean(axis=0))
            controls.append(2 * np.real(np.einsum("nm,nm->n", signal.conj(), shift_mean)))
        return lower, upper, np.stack(controls, axis=1)

    def _control_mean(self, snr):
        # E|G x|^2 = E sum_t |g_t^H w|^2 = snr * M_R * (sum of active transmit eigenvalues)
        return snr * self.spec.m_r * float(np.sum(self.spec.tx_eigs[: self.q]))

    def estimate(self, snr: float) -> MiEstimate:
        """MI in nats per slot when every active entry has ``|x_t|^2 = snr``."""
        if snr < 0:
            raise ValueError("snr must be nonnegative")
        if snr == 0:
            return MiEstimate(0.0, 0.0, 0.0, self.pairs)
        amp = math.sqrt(snr)
        if self.mc.workers > 1:
            with ThreadPoolExecutor(self.mc.workers) as pool:
                stats = list(pool.map(lambda b: self._block_stats(b, amp), range(self.n_blocks)))
        else:
            stats = [self._block_stats(b, amp) for b in range(self.n_blocks)]
        # blocks are concatenated in index order, independent of the worker count
        lower = np.concatenate([s[0] for s in stats])
        upper = np.concatenate([s[1] for s in stats])
        controls = np.concatenate([s[2] for s in stats])
        value, resid_var = _control_variate_mean(lower, controls)
        upper_value, _ = _control_variate_mean(upper, controls)
        n = len(lower)
        hw = Z95 * math.sqrt(resid_var / n)
        met = self.mc.confidence is None or hw <= self.mc.confidence
        return MiEstimate(value, hw, upper_value, n, met)


def _control_variate_mean(samples, controls):
    """Regression control-variate estimate of the mean; ``controls`` have zero mean."""
    n = len(samples)
    centered = controls - controls.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    cross = centered.T @ (samples - samples.mean()) / (n - 1)
    try:
        coef = np.linalg.solve(cov, cross)
    except np.linalg.LinAlgError:
        coef = np.zeros(controls.shape[1])
    adjusted = samples - controls @ coef
    return float(adjusted.mean()), float(adjusted.var(ddof=1 + controls.shape[1]))


def coherent_mi_cm(spec: SpatialSpectrum, cm: CmInputSpec, gamma: float, mc: McSpec) -> MiEstimate:
    """Coherent MI of the boosted input ``sqrt(gamma) x`` (nats per slot)."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    sampler = MiSampler(spec, cm.q_active, mc, cm.phase_model, cm.psk_order)
    return sampler.estimate(gamma * cm.modulus_sq)
