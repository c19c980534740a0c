"""Generators for moving averages, CTRWs, renewal counters, subordinators,
their inverses, and time-changed stable paths.

Pre-limit processes are exact step paths (no discretisation error); limit
processes live on uniform grids. Every generator is a pure function of
(config, seed), with waiting times drawn from substream lane 0 and
innovations from lane 1, so paired processes share streams reproducibly.

The iter_*_chunks generators are the vectorised Monte Carlo backbone: they
yield replication blocks as matrices and are reused by the diagnostic and
acceptance layers, where per-path objects would be too slow.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError
from .paths import GridPath, StepPath
from .rng import (
    InnovationLaw,
    SeedSpec,
    StableParams,
    WaitingLaw,
    attractor_params,
    draw_innovation,
    draw_stable,
    draw_waiting,
    wait_attractor_scale,
)

COUPLINGS = ("uncoupled", "magnitude-coupled")

WAIT_LANE = 0
INNOVATION_LANE = 1


def _draw_innovations(law, gen, size):
    fn = getattr(law, "draw", None)
    if fn is not None:
        return np.asarray(fn(gen, size), dtype=float)
    return draw_innovation(law, gen, size)


def _draw_waits(law, gen, size):
    fn = getattr(law, "draw", None)
    if fn is not None:
        return np.asarray(fn(gen, size), dtype=float)
    return draw_waiting(law, gen, size)


@dataclass(frozen=True)
class ProcessConfig:
    """Full specification of a moving-average or CTRW generator.

    waiting=None means deterministic unit waits, i.e. a moving average with
    jumps at k/n and scaling n^(-1/alpha); a waiting law switches to CTRW
    jumps at L_k/n with scaling n^(-beta/alpha).
    """

    innovation: InnovationLaw
    waiting: object = None
    coefficients: tuple = (1.0,)
    past_horizon: int = None
    n: int = 1
    coupling: str = "uncoupled"

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coefficients))
        if len(c) == 0 or c[0] <= 0.0:
            raise ParameterError("need coefficients with c_0 > 0", tag="PARAM_COEFFS")
        if any(v < 0.0 for v in c):
            raise ParameterError("coefficients must be >= 0", tag="PARAM_COEFFS")
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)
        if self.past_horizon is None:
            object.__setattr__(self, "past_horizon", len(c) - 1)
        if self.past_horizon < 0:
            raise ParameterError("past horizon must be >= 0", tag="PARAM_PAST")
        if int(self.n) < 1:
            raise ParameterError("n must be >= 1", tag="PARAM_N")
        object.__setattr__(self, "n", int(self.n))
        if self.coupling not in COUPLINGS:
            raise ParameterError(f"unknown coupling {self.coupling!r}", tag="PARAM_COUPLING")
        if self.coupling != "uncoupled":
            if len(c) != 1:
                raise ParameterError(
                    "coupled CTRWs are zero order: coefficients must reduce to (c_0,)",
                    tag="PARAM_COUPLING",
                )
            if self.waiting is None:
                raise ParameterError("coupling needs a waiting law", tag="PARAM_COUPLING")
            if self.innovation.mode == "gaussian":
                # |theta|^(alpha/beta) has no heavy tail for gaussian theta,
                # so the coupled waiting law would leave the beta-stable domain
                raise ParameterError(
                    "magnitude coupling needs Pareto-tailed innovations",
                    tag="PARAM_COUPLING",
                )
            if getattr(self.waiting, "scale", 1.0) != 1.0:
                raise ParameterError(
                    "coupled waits are derived from innovations; waiting scale must be 1",
                    tag="PARAM_COUPLING",
                )

    @property
    def order(self):
        return len(self.coefficients) - 1

    @property
    def psi(self):
        return float(sum(self.coefficients))

    @property
    def correlated(self):
        return len(self.coefficients) > 1

    @property
    def beta_eff(self):
        """Time-scaling exponent: waiting beta, or 1 for deterministic waits."""
        return 1.0 if self.waiting is None else float(self.waiting.beta)

    @property
    def prefactor(self):
        """Jump-size normalisation n^(-beta/alpha)."""
        return float(self.n) ** (-self.beta_eff / self.innovation.alpha)

    def to_dict(self):
        d = {
            "innovation": {
                "alpha": self.innovation.alpha,
                "mode": self.innovation.mode,
                "scale": self.innovation.scale,
            },
            "coefficients": list(self.coefficients),
            "past_horizon": self.past_horizon,
            "n": self.n,
            "coupling": self.coupling,
        }
        if self.waiting is not None:
            d["waiting"] = {
                "beta": self.waiting.beta,
                "scale": getattr(self.waiting, "scale", 1.0),
            }
        return d


@dataclass(frozen=True)
class SimulationBundle:
    """One realisation plus the information that generated it.

    innovations holds theta_{-past}, ..., theta_0, theta_1, ..., theta_K in
    order, so adapted integrands and the decompositions can replay exactly
    what the filtration knew at each jump.
    """

    x: StepPath
    counting: StepPath
    innovations: np.ndarray
    past: int
    waits: np.ndarray
    config: ProcessConfig
    seed: SeedSpec
    horizon: float

    def theta(self, k):
        """theta_k for k in [-past, jump_count]."""
        idx = int(k) + self.past
        if idx < 0 or idx >= self.innovations.size:
            raise DataError(f"theta_{k} is not in the record")
        return float(self.innovations[idx])

    @property
    def jump_count(self):
        return self.innovations.size - self.past - 1

    def scaled_jumps(self):
        """zeta^n_k = prefactor * zeta_k for k = 1..jump_count."""
        return self.x.jump_sizes()

    def rebuild_x(self):
        """Recompute the X path from records and config (reconstruction check)."""
        cfg = self.config
        zeta = _filter_innovations(self.innovations, cfg.coefficients, self.past)
        if cfg.waiting is None:
            times = np.arange(1, zeta.size + 1) / cfg.n
        else:
            times = np.cumsum(self.waits) / cfg.n
        return StepPath.from_jumps(times, cfg.prefactor * zeta, self.horizon)

    def sidecar_dict(self):
        return {
            "config": self.config.to_dict(),
            "seed": {"seed": self.seed.seed, "stream": self.seed.stream},
            "horizon": self.horizon,
            "past": self.past,
            "innovations": [float(v) for v in self.innovations],
            "waits": [float(v) for v in self.waits] if self.waits is not None else None,
        }


def _filter_innovations(thetas, coeffs, past):
    """zeta_i = sum_j c_j theta_{i-j} for i = 1..K, with the finite-past cut
    (theta indices below -past simply do not exist)."""
    K = thetas.size - past - 1
    if K <= 0:
        return np.empty(0)
    conv = np.convolve(thetas, np.asarray(coeffs, dtype=float))
    return conv[past + 1 : past + 1 + K]


def _staircase(times_over_n, K, horizon):
    """Counting path N_{nt}: 0 before the first jump, +1 at each jump time."""
    t = np.concatenate([[0.0], times_over_n[:K]])
    return StepPath(t, np.arange(K + 1, dtype=float), horizon)


def gen_moving_average(config, T, seed):
    """Moving average X^n_t = n^(-1/alpha) sum_{k <= floor(nt)} zeta_k."""
    if config.waiting is not None:
        raise ParameterError("moving average takes waiting=None", tag="PARAM_WAITING")
    if T <= 0:
        raise ParameterError("horizon must be > 0")
    n = config.n
    K = int(math.floor(n * T + 1e-9))
    gen = seed.generator(INNOVATION_LANE)
    thetas = _draw_innovations(config.innovation, gen, config.past_horizon + 1 + K)
    zeta = _filter_innovations(thetas, config.coefficients, config.past_horizon)
    times = np.arange(1, K + 1) / n
    x = StepPath.from_jumps(times, config.prefactor * zeta, T)
    counting = _staircase(times, K, T)
    return SimulationBundle(
        x, counting, thetas, config.past_horizon, np.ones(K), config, seed, float(T)
    )


def _waits_until(law, gen, target, block):
    """Draw waits until their running sum exceeds target; returns the array."""
    chunks = []
    total = 0.0
    while total <= target:
        j = _draw_waits(law, gen, block)
        if np.any(j <= 0.0):
            raise DataError("waiting times must be > 0")
        chunks.append(j)
        total += float(j.sum())
    return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]


def _coupled_waits(thetas_pos, alpha, beta):
    return np.maximum(1.0, np.abs(thetas_pos) ** (alpha / beta))


def gen_ctrw(config, T, seed):
    """CTRW X^n_t = n^(-beta/alpha) sum_{k <= N_nt} zeta_k, N_nt = max{m: L_m <= nt}."""
    if config.waiting is None:
        raise ParameterError("CTRW needs a waiting law", tag="PARAM_WAITING")
    if T <= 0:
        raise ParameterError("horizon must be > 0")
    n = config.n
    target = n * T
    beta = config.waiting.beta
    block = max(64, int(2.0 * target ** min(beta, 1.0)) + 32)
    alpha = config.innovation.alpha
    past = config.past_horizon

    if config.coupling == "magnitude-coupled":
        gen = seed.generator(INNOVATION_LANE)
        buf = [_draw_innovations(config.innovation, gen, past + 1 + block)]
        waits = _coupled_waits(buf[0][past + 1 :], alpha, beta)
        total = float(waits.sum())
        parts = [waits]
        while total <= target:
            more = _draw_innovations(config.innovation, gen, block)
            buf.append(more)
            w = _coupled_waits(more, alpha, beta)
            parts.append(w)
            total += float(w.sum())
        thetas_all = np.concatenate(buf) if len(buf) > 1 else buf[0]
        waits_all = np.concatenate(parts) if len(parts) > 1 else parts[0]
    else:
        waits_all = _waits_until(config.waiting, seed.generator(WAIT_LANE), target, block)
        K_hint = int(np.searchsorted(np.cumsum(waits_all), target, side="right"))
        thetas_all = _draw_innovations(
            config.innovation, seed.generator(INNOVATION_LANE), past + 1 + K_hint
        )

    L = np.cumsum(waits_all)
    K = int(np.searchsorted(L, target, side="right"))
    thetas = thetas_all[: past + 1 + K]
    waits = waits_all[:K]
    zeta = _filter_innovations(thetas, config.coefficients, past)
    jump_times = L[:K] / n
    x = StepPath.from_jumps(jump_times, config.prefactor * zeta, T)
    counting = _staircase(jump_times, K, T)
    return SimulationBundle(x, counting, thetas, past, waits, config, seed, float(T))


def gen_counting(waiting, n, T, seed):
    """(N_{nt} path, D^n = n^(-beta) N_{nt} path) for one realisation."""
    if T <= 0:
        raise ParameterError("horizon must be > 0")
    n = int(n)
    target = n * T
    beta = waiting.beta
    block = max(64, int(2.0 * target ** min(beta, 1.0)) + 32)
    waits = _waits_until(waiting, seed.generator(WAIT_LANE), target, block)
    L = np.cumsum(waits)
    K = int(np.searchsorted(L, target, side="right"))
    counting = _staircase(L[:K] / n, K, T)
    dn = StepPath(counting.times, counting.values * float(n) ** (-beta), T)
    return counting, dn


def driver_paths(bundle):
    """(D^n, Z^n) driver pair for the SDE scheme: D^n = n^(-beta) N, Z^n = X."""
    cfg = bundle.config
    nb = float(cfg.n) ** (-cfg.beta_eff)
    dn = StepPath(bundle.counting.times, bundle.counting.values * nb, bundle.horizon)
    return dn, bundle.x


def _subordinator_nodes(beta, T, h, gen, increment_scale, block=None):
    """Cumulative subordinator values on the h-grid, cut just past level T."""
    params = StableParams(beta, 1.0, increment_scale * h ** (1.0 / beta))
    block = block or max(64, int(1.5 * T / h) + 64)
    vals = []
    total = 0.0
    while total <= T:
        inc = draw_stable(params, gen, block)
        vals.append(inc)
        total += float(inc.sum())
    cum = np.cumsum(np.concatenate(vals) if len(vals) > 1 else vals[0])
    stop = int(np.searchsorted(cum, T, side="right")) + 1
    return cum[:stop]


def gen_subordinator_inverse(beta, T, grid_step, seed, increment_scale=1.0):
    """(D, D_inv): a beta-stable subordinator on an s-grid and its exact
    generalised inverse D_inv_t = inf{s: D_s > t} on the t-grid.

    increment_scale=1 gives the standard subordinator (Laplace transform
    exp(-t * lambda^beta)); pass wait_attractor_scale(beta) to get the limit
    of the package's Pareto renewal counter.
    """
    if not (0.0 < beta < 1.0):
        raise ParameterError("beta must lie in (0, 1)", tag="PARAM_BETA_RANGE")
    if grid_step <= 0 or T <= 0:
        raise ParameterError("grid step and horizon must be > 0")
    h = float(grid_step)
    cum = _subordinator_nodes(beta, T, h, seed.generator(WAIT_LANE), increment_scale)
    d_vals = np.concatenate([[0.0], cum])
    d = GridPath(d_vals, h, interp="const")
    t_nodes = np.arange(int(math.floor(T / h + 1e-9)) + 1) * h
    idx = np.searchsorted(d_vals, t_nodes, side="right")
    d_inv = GridPath(idx * h, h, horizon=T, interp="linear")
    return d, d_inv


def invert_monotone_grid(d):
    """Exact generalised inverse of a nondecreasing const-interp GridPath,
    evaluated on its own grid: inf{s: D_s > t}."""
    idx = np.searchsorted(d.values, d.times, side="right")
    return GridPath(
        np.minimum(idx, d.values.size - 1) * d.step, d.step, interp="linear"
    )


def compose_time_change(z, d_inv):
    """Z evaluated along the time change: t -> Z(d_inv(t)), on d_inv's grid.

    d_inv values must land on z's grid (true for gen_subordinator_inverse
    output whose step matches z's).
    """
    idx = np.floor(np.asarray(d_inv.values) / z.step + 0.5).astype(int)
    if np.any(idx < 0) or np.any(idx >= z.values.size):
        raise DataError("time change leaves the simulated span of Z")
    return GridPath(z.values[idx], d_inv.step, horizon=d_inv.horizon, interp="const")


def gen_time_changed_levy(
    alpha, beta, T, grid_step, seed, z_params=None, increment_scale=None, mode="symmetric"
):
    """Z_{D^(-1)_t} on the t-grid, Z and D independent.

    Defaults are matched to this package's Pareto laws: Z defaults to the
    stable attractor of the symmetric Pareto(alpha) innovations (gaussian at
    alpha = 2) and D to the attractor of Pareto(beta) waits, so the output is
    the weak limit of gen_ctrw with c=(1,) up to the factor sum(c_j).
    """
    if grid_step <= 0 or T <= 0:
        raise ParameterError("grid step and horizon must be > 0")
    if z_params is None:
        z_params = attractor_params(
            InnovationLaw(alpha, "gaussian" if alpha == 2.0 else mode)
        )
    if increment_scale is None:
        increment_scale = wait_attractor_scale(beta)
    h = float(grid_step)
    cum = _subordinator_nodes(beta, T, h, seed.generator(WAIT_LANE), increment_scale)
    d_vals = np.concatenate([[0.0], cum])
    z_inc_params = StableParams(
        z_params.alpha, z_params.skew, z_params.scale * h ** (1.0 / z_params.alpha)
    )
    z_inc = draw_stable(z_inc_params, seed.generator(INNOVATION_LANE), d_vals.size - 1)
    z = GridPath(np.concatenate([[0.0], np.cumsum(z_inc)]), h, interp="const")
    t_nodes = np.arange(int(math.floor(T / h + 1e-9)) + 1) * h
    idx = np.searchsorted(d_vals, t_nodes, side="right")
    # the grid inverse rounds D^{-1}_0 up to h, but the composed path starts
    # at Z_{0+} = 0 in the continuum; pin the origin exactly
    idx[0] = 0
    d_inv = GridPath(idx * h, h, horizon=T, interp="linear")
    return compose_time_change(z, d_inv)


# ---------------------------------------------------------------------------
# vectorised replication blocks


def _grow_wait_matrix(draw, m, target, block):
    """Wait matrix with every row's cumulative sum exceeding target."""
    J = draw((m, block))
    while True:
        deficit = target - J.sum(axis=1)
        if np.all(deficit < 0):
            return J
        extra = draw((m, max(64, block // 2)))
        J = np.concatenate([J, extra], axis=1)


def _theta_block(law, gen, m, past, order, K):
    """Innovation matrix left-padded with zeros so the filter sees a uniform
    past of length max(past, order); returns (matrix, effective past)."""
    th = _draw_innovations(law, gen, (m, past + 1 + K))
    if order > past:
        th = np.concatenate([np.zeros((m, order - past)), th], axis=1)
        return th, order
    return th, past


def _zeta_matrix(th, coeffs, peff, K):
    z = np.zeros((th.shape[0], K))
    for j, cj in enumerate(coeffs):
        if cj != 0.0:
            z += cj * th[:, peff + 1 - j : peff + 1 - j + K]
    return z


def iter_ctrw_chunks(config, T, reps, seed, chunk=500):
    """Yield vectorised replication blocks of the CTRW (or moving average).

    Each block is a dict with:
      theta: innovations incl. uniform past (peff columns before theta_0)
      peff:  number of columns before the theta_0 column
      zeta:  scaled jump sizes zeta^n_k (k = 1..K columns)
      times: jump times L_k/n (same shape as zeta)
      counts: per-row number of jumps with L_k <= nT
      mask:  boolean validity mask for the k columns
    Moving averages (waiting=None) have deterministic times k/n and full mask.
    """
    if T <= 0:
        raise ParameterError("horizon must be > 0")
    n = config.n
    law = config.innovation
    alpha = law.alpha
    target = n * T
    pref = config.prefactor
    for lo in range(0, reps, chunk):
        m = min(chunk, reps - lo)
        wgen = seed.generator((WAIT_LANE, lo))
        igen = seed.generator((INNOVATION_LANE, lo))
        if config.waiting is None:
            K = int(math.floor(n * T + 1e-9))
            th, peff = _theta_block(law, igen, m, config.past_horizon, config.order, K)
            zeta = pref * _zeta_matrix(th, config.coefficients, peff, K)
            times = np.broadcast_to(np.arange(1, K + 1) / n, (m, K))
            counts = np.full(m, K)
            mask = np.ones((m, K), dtype=bool)
        elif config.coupling == "magnitude-coupled":
            beta = config.waiting.beta
            block = max(64, int(2.0 * target ** beta) + 32)
            th = _draw_innovations(law, igen, (m, config.past_horizon + 1 + block))
            peff = config.past_horizon
            while True:
                J = _coupled_waits(th[:, peff + 1 :], alpha, beta)
                if np.all(J.sum(axis=1) > target):
                    break
                more = _draw_innovations(law, igen, (m, max(64, block // 2)))
                th = np.concatenate([th, more], axis=1)
            L = np.cumsum(J, axis=1)
            counts = (L <= target).sum(axis=1)
            K = int(counts.max())
            zeta = pref * _zeta_matrix(th, config.coefficients, peff, K)
            times = L[:, :K] / n
            mask = np.arange(K)[None, :] < counts[:, None]
        else:
            beta = config.waiting.beta
            block = max(64, int(2.0 * target ** beta) + 32)
            J = _grow_wait_matrix(
                lambda s: _draw_waits(config.waiting, wgen, s), m, target, block
            )
            L = np.cumsum(J, axis=1)
            counts = (L <= target).sum(axis=1)
            K = int(counts.max())
            th, peff = _theta_block(law, igen, m, config.past_horizon, config.order, K)
            zeta = pref * _zeta_matrix(th, config.coefficients, peff, K)
            times = L[:, :K] / n
            mask = np.arange(K)[None, :] < counts[:, None]
        yield {
            "theta": th,
            "peff": peff,
            "zeta": zeta,
            "times": times,
            "counts": counts,
            "mask": mask,
        }


def terminal_samples(config, T, reps, seed, chunk=500):
    """X^n_T over `reps` replications (vectorised)."""
    out = np.empty(reps)
    lo = 0
    for blk in iter_ctrw_chunks(config, T, reps, seed, chunk):
        zeta = np.where(blk["mask"], blk["zeta"], 0.0)
        m = zeta.shape[0]
        out[lo : lo + m] = zeta.sum(axis=1)
        lo += m
    return out


def terminal_counting_samples(waiting, n, T, reps, seed, chunk=1000):
    """n^(-beta) N_{nT} over `reps` replications (vectorised)."""
    n = int(n)
    target = n * T
    beta = waiting.beta
    block = max(64, int(2.0 * target ** beta) + 32)
    out = np.empty(reps)
    lo = 0
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        gen = seed.generator((WAIT_LANE, start))
        J = _grow_wait_matrix(lambda s: _draw_waits(waiting, gen, s), m, target, block)
        counts = (np.cumsum(J, axis=1) <= target).sum(axis=1)
        out[lo : lo + m] = counts * float(n) ** (-beta)
        lo += m
    return out


def terminal_time_changed_samples(
    alpha,
    beta,
    T,
    reps,
    seed,
    grid_step=2.0**-12,
    z_params=None,
    increment_scale=None,
    mode="symmetric",
    chunk=500,
):
    """Z_{D^(-1)_T} samples (vectorised); defaults as in gen_time_changed_levy."""
    if z_params is None:
        z_params = attractor_params(
            InnovationLaw(alpha, "gaussian" if alpha == 2.0 else mode)
        )
    if increment_scale is None:
        increment_scale = wait_attractor_scale(beta)
    h = float(grid_step)
    d_params = StableParams(beta, 1.0, increment_scale * h ** (1.0 / beta))
    z_inc_params = StableParams(
        z_params.alpha, z_params.skew, z_params.scale * h ** (1.0 / z_params.alpha)
    )
    block = max(64, int(1.3 * T / h) + 64)
    out = np.empty(reps)
    lo = 0
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        dgen = seed.generator((WAIT_LANE, start))
        zgen = seed.generator((INNOVATION_LANE, start))
        D = np.cumsum(draw_stable(d_params, dgen, (m, block)), axis=1)
        while not np.all(D[:, -1] > T):
            more = draw_stable(d_params, dgen, (m, max(64, block // 4)))
            D = np.concatenate([D, np.cumsum(more, axis=1) + D[:, -1:]], axis=1)
        # D value at s-node i (i >= 1) is D[:, i-1]; first passage over T
        ncross = (D <= T).sum(axis=1) + 1
        zinc = draw_stable(z_inc_params, zgen, (m, int(ncross.max())))
        zcum = np.cumsum(zinc, axis=1)
        out[lo : lo + m] = zcum[np.arange(m), ncross - 1]
        lo += m
    return out


def terminal_inverse_subordinator_samples(
    beta, T, reps, seed, grid_step=2.0**-12, increment_scale=None, chunk=500
):
    """D^(-1)_T samples on the grid (vectorised), defaults as above."""
    if increment_scale is None:
        increment_scale = wait_attractor_scale(beta)
    h = float(grid_step)
    d_params = StableParams(beta, 1.0, increment_scale * h ** (1.0 / beta))
    block = max(64, int(1.3 * T / h) + 64)
    out = np.empty(reps)
    lo = 0
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        dgen = seed.generator((WAIT_LANE, start))
        D = np.cumsum(draw_stable(d_params, dgen, (m, block)), axis=1)
        while not np.all(D[:, -1] > T):
            more = draw_stable(d_params, dgen, (m, max(64, block // 4)))
            D = np.concatenate([D, np.cumsum(more, axis=1) + D[:, -1:]], axis=1)
        ncross = (D <= T).sum(axis=1) + 1
        out[lo : lo + m] = ncross * h
        lo += m
    return out
