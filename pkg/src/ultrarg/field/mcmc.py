"""Metropolis sampling of the interacting measure in multiscale coordinates.

Target on the coordinates ``zeta``::

    pi(zeta) ~ exp(-V(synthesize(zeta))) * prod_k N(zeta_k; 0, 1)

Each coordinate receives a Crank-Nicolson proposal
``zeta' = sqrt(1 - beta**2) * zeta + beta * xi`` which is reversible with
respect to the standard normal prior, so it is accepted with probability
``min(1, exp(-dV))``.  At ``g = mu = 0`` every proposal is accepted.

Given all other levels, the ball variables of one level act on disjoint site
sets and are conditionally independent, so a level is updated by independent
accept/reject decisions in one vectorized pass.  A sweep visits levels
``0..depth-1`` and then the zero mode, one proposal per coordinate.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..lattice import LatticeSpec
from .covariance import CovarianceModel, wick_constants
from .sampling import FieldConfig, MultiscaleCoords, level_sizes, synthesize

__all__ = ["MAX_MCMC_SITES", "MCMCError", "MultiscaleMetropolis", "mcmc_sample"]

MAX_MCMC_SITES = 2**15


class MCMCError(RuntimeError):
    pass


class MultiscaleMetropolis:
    """Single Metropolis chain over the multiscale Gaussian coordinates.

    Per-level step sizes start at ``step`` and are tuned during burn-in
    towards ``target_acceptance``; they are frozen afterwards.
    """

    def __init__(
        self,
        model: CovarianceModel,
        g: float,
        mu: float,
        seed: int,
        step: float = 0.5,
        include_zero_mode: bool = True,
        target_acceptance: tuple[float, float] = (0.4, 0.6),
        adapt_every: int = 50,
    ):
        if g < 0:
            raise MCMCError("quartic coupling must be >= 0")
        sp = model.spec
        if sp.n_sites > MAX_MCMC_SITES:
            raise MCMCError(f"{sp.n_sites} sites exceed the MCMC guard {MAX_MCMC_SITES}")
        self.model, self.g, self.mu = model, float(g), float(mu)
        self.include_zero_mode = include_zero_mode
        self.rng = np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64))
        self.seed = seed
        self.c = wick_constants(model)
        n_levels = sp.depth + (1 if include_zero_mode else 0)
        self.beta = np.full(n_levels, float(step))
        self.target = target_acceptance
        self.adapt_every = adapt_every
        self.sizes = level_sizes(sp)
        self.amp = [model.scale_amplitude(m) for m in range(sp.depth)]
        self.tau = np.sqrt(model.zero_mode_variance) if include_zero_mode else 0.0
        self.zeta = [self.rng.standard_normal(n) for n in self.sizes]
        self.zeta_glob = float(self.rng.standard_normal()) if include_zero_mode else 0.0
        self.phi = self._synth()
        self.accepted = np.zeros(n_levels)
        self.proposed = np.zeros(n_levels)

    def _synth(self) -> np.ndarray:
        coords = MultiscaleCoords(self.model.spec, tuple(self.zeta), self.zeta_glob)
        return synthesize(self.model, coords, self.include_zero_mode).values

    def _density(self, phi: np.ndarray) -> np.ndarray:
        p2 = phi * phi
        c = self.c
        return self.g * (p2 * p2 - 6.0 * c * p2 + 3.0 * c * c) + self.mu * (p2 - c)

    def coords(self) -> MultiscaleCoords:
        return MultiscaleCoords(self.model.spec, tuple(z.copy() for z in self.zeta), self.zeta_glob, seed=self.seed)

    def sweep(self) -> None:
        sp = self.model.spec
        vol = sp.cell_volume
        P = sp.branching
        for m, n in enumerate(self.sizes):
            b = self.beta[m]
            z = self.zeta[m]
            z_new = np.sqrt(1.0 - b * b) * z + b * self.rng.standard_normal(n)
            u = self.rng.random(n)
            dphi = self.amp[m] * (z_new - z)
            block = P**m
            phi_new = self.phi + np.repeat(dphi, block)
            dv = vol * (self._density(phi_new) - self._density(self.phi)).reshape(n, block).sum(axis=1)
            if not np.all(np.isfinite(dv)):
                raise MCMCError("non-finite action difference")
            acc = u < np.exp(-np.maximum(dv, -700.0))
            self.zeta[m] = np.where(acc, z_new, z)
            self.phi += np.repeat(np.where(acc, dphi, 0.0), P**m)
            self.accepted[m] += acc.sum()
            self.proposed[m] += n
        if self.include_zero_mode:
            k = len(self.sizes)
            b = self.beta[k]
            z_new = np.sqrt(1.0 - b * b) * self.zeta_glob + b * self.rng.standard_normal()
            u = self.rng.random()
            dphi = self.tau * (z_new - self.zeta_glob)
            dv = vol * float((self._density(self.phi + dphi) - self._density(self.phi)).sum())
            if not np.isfinite(dv):
                raise MCMCError("non-finite action difference")
            ok = u < np.exp(-max(dv, -700.0))
            if ok:
                self.zeta_glob = float(z_new)
                self.phi += dphi
                self.accepted[k] += 1
            self.proposed[k] += 1

    def _adapt(self) -> None:
        rate = self.accepted / np.maximum(self.proposed, 1)
        lo, hi = self.target
        self.beta = np.where(rate > hi, np.minimum(self.beta * 1.25, 1.0), self.beta)
        self.beta = np.where(rate < lo, self.beta / 1.25, self.beta)
        self.accepted[:] = 0
        self.proposed[:] = 0

    @property
    def acceptance(self) -> np.ndarray:
        """Per-level acceptance rates since the last reset (post burn-in after :meth:`run`)."""
        return self.accepted / np.maximum(self.proposed, 1)

    def run(self, n_sweeps: int, burn_in: int = 0, thinning: int = 1) -> Iterator[FieldConfig]:
        """Burn in (adapting), then yield every ``thinning``-th of ``n_sweeps`` sweeps."""
        for i in range(burn_in):
            self.sweep()
            if (i + 1) % self.adapt_every == 0:
                self._adapt()
        self.accepted[:] = 0
        self.proposed[:] = 0
        for i in range(n_sweeps):
            self.sweep()
            if (i + 1) % thinning == 0:
                # resynthesize to shed accumulated rounding in the running field
                self.phi = self._synth()
                yield FieldConfig(self.model.spec, self.phi.copy())


def mcmc_sample(
    spec: LatticeSpec,
    model: CovarianceModel,
    g: float,
    mu: float,
    seed: int,
    n_sweeps: int,
    burn_in: int = 0,
    thinning: int = 1,
    **kwargs,
) -> Iterator[FieldConfig]:
    """Stream of thinned post-burn-in configurations."""
    if model.spec != spec:
        raise MCMCError("model and lattice spec disagree")
    chain = MultiscaleMetropolis(model, g, mu, seed, **kwargs)
    yield from chain.run(n_sweeps, burn_in, thinning)
