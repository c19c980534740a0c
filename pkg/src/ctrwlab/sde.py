"""Event-driven solvers for walk-driven SDEs and delay SDEs, grid Euler
schemes for their scaling limits, and vectorised terminal-law samplers.

Prelimit equations are driven by the exact step drivers (D^n, Z^n) of a
SimulationBundle, so every pure-jump reduction is solved without any
discretisation error; only the dt term needs a quadrature mesh. Limit
equations are left-point Euler schemes on uniform grids.
"""

import bisect
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .paths import GridPath, StepPath
from .processes import (
    INNOVATION_LANE,
    WAIT_LANE,
    driver_paths,
    iter_ctrw_chunks,
)
from .rng import InnovationLaw, StableParams, attractor_params, draw_stable, wait_attractor_scale

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _as_vec_fn(fn):
    return fn if callable(fn) else (lambda *args, _v=float(fn): np.broadcast_to(_v, np.shape(args[-1])) if np.ndim(args[-1]) else _v)


@dataclass(frozen=True)
class SdeSpec:
    """Coefficients of dX = b(t, D, X) dt + mu(t, D, X) dD + sigma(t, D, X) dZ.

    growth = (K, C, p) declares |coef(t, ytilde, y)| <= K |y|^p + C with
    p in (0, 1); it is spot-checked on a sample grid, and violations warn
    rather than fail, because the convergence theory needs the bound but the
    solver itself does not.
    """

    b: object
    mu: object
    sigma: object
    x0: float = 0.0
    growth: tuple = (1.0, 10.0, 0.5)

    def __post_init__(self):
        K, C, p = self.growth
        if not (0.0 < p < 1.0):
            raise ParameterError("growth exponent p must lie in (0, 1)", tag="PARAM_GROWTH")
        if K < 0 or C < 0:
            raise ParameterError("growth constants must be >= 0", tag="PARAM_GROWTH")
        self.check_growth()

    def coef(self, name):
        return _as_vec_fn(getattr(self, name))

    def check_growth(self, t_max=2.0, r=50.0, points=9):
        """Spot-check the declared sublinear bound; returns the worst excess
        and warns when it is positive."""
        K, C, p = self.growth
        t = np.linspace(0.0, t_max, points)
        yt = np.linspace(0.0, r, points)
        y = np.linspace(-r, r, points)
        tt, ytt, yy = np.meshgrid(t, yt, y, indexing="ij")
        worst = 0.0
        for name in ("b", "mu", "sigma"):
            vals = np.abs(np.broadcast_to(self.coef(name)(tt, ytt, yy), tt.shape))
            excess = float(np.max(vals - (K * np.abs(yy) ** p + C)))
            worst = max(worst, excess)
        if worst > 0.0:
            warnings.warn(
                f"coefficient exceeds declared growth bound by {worst:.3g} on the sample grid",
                RuntimeWarning,
                stacklevel=2,
            )
        return worst


@dataclass(frozen=True)
class SddeSpec:
    """Coefficients of dX = b(t, X_{t-r}) dt + c^{-1} sigma(t, X_{t-r}) dZ^n,
    with initial segment eta on [-r, 0] and an optional window kernel phi
    adding sigma_tilde(t) = integral of phi(t, s, X_s) over [t-r, t]."""

    b: object
    sigma: object
    r: float
    eta: StepPath
    phi: object = None
    bound: float = 1e6

    def __post_init__(self):
        if self.r <= 0:
            raise ParameterError("delay r must be > 0", tag="PARAM_DELAY")
        if abs(self.eta.origin + self.r) > 1e-9 * max(1.0, self.r):
            raise ParameterError("initial segment must start at -r", tag="PARAM_DELAY")
        if self.eta.horizon < 0.0:
            raise ParameterError("initial segment must reach 0", tag="PARAM_DELAY")
        t = np.linspace(0.0, 2.0, 7)
        x = np.linspace(-20.0, 20.0, 7)
        tt, xx = np.meshgrid(t, x, indexing="ij")
        worst = max(
            float(np.max(np.abs(np.broadcast_to(self.coef("b")(tt, xx), tt.shape)))),
            float(np.max(np.abs(np.broadcast_to(self.coef("sigma")(tt, xx), tt.shape)))),
        )
        if worst > self.bound:
            warnings.warn(
                f"coefficient magnitude {worst:.3g} exceeds the declared bound on the sample grid",
                RuntimeWarning,
                stacklevel=2,
            )

    def coef(self, name):
        return _as_vec_fn(getattr(self, name))


def _union_times(events, mesh, T, max_gap=None, extra=None):
    """0, T, all events, uniform mesh points, with gaps capped at max_gap."""
    pts = [np.array([0.0, T]), np.asarray(events, dtype=float)]
    if extra is not None:
        pts.append(np.asarray(extra, dtype=float))
    if mesh is not None and mesh > 0:
        pts.append(np.arange(1, int(math.floor(T / mesh + 1e-9)) + 1) * mesh)
    u = np.unique(np.concatenate(pts))
    u = u[(u >= 0.0) & (u <= T)]
    if max_gap is not None:
        gaps = np.diff(u)
        wide = np.flatnonzero(gaps > max_gap)
        extra = []
        for i in wide:
            k = int(math.ceil(gaps[i] / max_gap))
            extra.append(u[i] + gaps[i] * np.arange(1, k) / k)
        if extra:
            u = np.unique(np.concatenate([u] + extra))
    return u


def solve_sn(spec, drivers, drift_mesh=2.0**-12, T=None):
    """Event-driven Euler solution of the walk-driven scheme.

    drivers is the (D^n, Z^n) pair of step paths (see driver_paths). Between
    events the dt term advances on the drift mesh; at each event X jumps by
    mu_- dD + sigma_- dZ with all coefficients read at left limits. With
    b identically 0 the output is exact.
    """
    dn, zn = drivers
    if drift_mesh is not None and drift_mesh <= 0:
        raise ParameterError("drift mesh must be > 0", tag="PARAM_MESH")
    T = zn.horizon if T is None else float(T)
    events = np.union1d(dn.jump_times(), zn.jump_times())
    events = events[events <= T]
    times = _union_times(events, drift_mesh, T)
    bfn, mfn, sfn = spec.coef("b"), spec.coef("mu"), spec.coef("sigma")
    ev = set(events.tolist())
    x = float(spec.x0)
    vals = np.empty(times.size)
    vals[0] = x
    dprev = float(dn.value(0.0))
    K, C, p = spec.growth
    grew = False
    for i in range(1, times.size):
        u, v = times[i - 1], times[i]
        x += float(bfn(u, dprev, x)) * (v - u)
        if v in ev:
            dv = float(dn.value(v))
            zjump = float(zn.value(v) - zn.value_before(v))
            djump = dv - dprev
            mu_l = float(mfn(v, dprev, x))
            si_l = float(sfn(v, dprev, x))
            if not grew and max(abs(mu_l), abs(si_l)) > K * abs(x) ** p + C:
                warnings.warn(
                    "coefficient exceeded the declared growth bound during integration",
                    RuntimeWarning,
                    stacklevel=2,
                )
                grew = True
            x += mu_l * djump + si_l * zjump
            dprev = dv
        vals[i] = x
    return StepPath(times, vals, T)


def solve_s_limit(spec, drivers, T=None):
    """Left-point Euler for the limit equation on the drivers' shared grid.

    drivers = (D_inv, W) grid paths with W the time-changed driving path.
    """
    d_inv, w = drivers
    if abs(d_inv.step - w.step) > 1e-12 * w.step:
        raise ShapeError("limit drivers must share the grid step")
    n_nodes = min(d_inv.values.size, w.values.size)
    if T is not None:
        n_nodes = min(n_nodes, int(math.floor(T / w.step + 1e-9)) + 1)
    h = w.step
    bfn, mfn, sfn = spec.coef("b"), spec.coef("mu"), spec.coef("sigma")
    x = np.empty(n_nodes)
    x[0] = spec.x0
    dv = d_inv.values
    wv = w.values
    for k in range(n_nodes - 1):
        t = k * h
        x[k + 1] = (
            x[k]
            + float(bfn(t, dv[k], x[k])) * h
            + float(mfn(t, dv[k], x[k])) * (dv[k + 1] - dv[k])
            + float(sfn(t, dv[k], x[k])) * (wv[k + 1] - wv[k])
        )
    return GridPath(x, h)


# ---------------------------------------------------------------------------
# delay equations


class _History:
    """Computed trajectory plus the initial segment, with cadlag and
    left-limit reads across the [-r, 0] boundary."""

    def __init__(self, eta):
        self.eta = eta
        self.ts = [0.0]
        self.xs = [float(eta.value(0.0))]

    def read(self, tau, left=False):
        if tau < 0.0:
            lo = self.eta.origin
            return float(self.eta.value(max(tau, lo)))
        if tau == 0.0 and left:
            return float(self.eta.value_before(0.0)) if self.eta.times.size > 1 else float(self.eta.value(0.0))
        ts = self.ts
        i = (bisect.bisect_left(ts, tau) if left else bisect.bisect_right(ts, tau)) - 1
        if i < 0:
            return float(self.eta.value(0.0))
        return self.xs[i]

    def push(self, t, x):
        self.ts.append(float(t))
        self.xs.append(float(x))


def _window_quadrature(phi, t, r, hist, mesh):
    """Trapezoid of phi(t, s, X_s) over s in [t-r, t] on the union of the
    stored breakpoints, the segment breakpoints, and a uniform refinement."""
    lo, hi = t - r, t
    pts = [lo, hi]
    pts.extend(s for s in hist.eta.times if lo <= s <= hi)
    pts.extend(s for s in hist.ts if lo <= s <= hi)
    k = max(8, int(math.ceil(r / mesh)) if mesh else 8)
    pts.extend(lo + (hi - lo) * np.arange(1, k) / k)
    s = np.unique(np.asarray(pts))
    g = np.array([phi(t, si, hist.read(si)) for si in s], dtype=float)
    return float(_trapezoid(g, s))


def solve_sddn(spec, bundle, drift_mesh=2.0**-12, T=None, _phi=False):
    """Exact event-driven solution of the delay scheme driven by bundle.x.

    The delayed argument lags by r, so it is always known before it is
    needed; the drift is integrated by midpoint quadrature on cells no wider
    than the drift mesh (and never wider than r/2, keeping the delayed read
    behind the solution frontier). With b identically 0 the jump part is
    exact.
    """
    zn = bundle.x
    c = bundle.config.psi
    T = bundle.horizon if T is None else float(T)
    events = zn.jump_times()
    events = events[events <= T]
    mesh = drift_mesh if drift_mesh and drift_mesh > 0 else spec.r / 2.0
    # cells never straddle a jump of the shifted initial segment, so the
    # drift quadrature sees a constant delayed argument inside each cell
    shifted = spec.eta.times + spec.r
    times = _union_times(events, mesh, T, max_gap=spec.r / 2.0, extra=shifted[shifted <= T])
    bfn, sfn = spec.coef("b"), spec.coef("sigma")
    hist = _History(spec.eta)
    ev = set(events.tolist())
    x = hist.xs[0]
    vals = np.empty(times.size)
    vals[0] = x
    for i in range(1, times.size):
        u, v = times[i - 1], times[i]
        mid = 0.5 * (u + v)
        x += float(bfn(mid, hist.read(mid - spec.r))) * (v - u)
        if v in ev:
            sig = float(sfn(v, hist.read(v - spec.r, left=True)))
            if _phi and spec.phi is not None:
                sig += _window_quadrature(spec.phi, v, spec.r, hist, mesh)
            x += sig / c * float(zn.value(v) - zn.value_before(v))
        hist.push(v, x)
        vals[i] = x
    return StepPath(times, vals, T)


def solve_ext_sddn(spec, bundle, drift_mesh=2.0**-12, T=None):
    """Delay scheme with the window-kernel diffusion: sigma is augmented by
    the trapezoid quadrature of phi over the trailing r-window."""
    if spec.phi is None:
        return solve_sddn(spec, bundle, drift_mesh, T)
    return solve_sddn(spec, bundle, drift_mesh, T, _phi=True)


def solve_sdd_limit(spec, z, T=None):
    """Left-point Euler for the limit delay equation driven by the grid path
    z; the grid step must divide the delay so lookups land on nodes."""
    h = z.step
    m = spec.r / h
    if abs(m - round(m)) > 1e-9:
        raise ParameterError("grid step must divide the delay", tag="PARAM_MESH")
    m = int(round(m))
    n_nodes = z.values.size
    if T is not None:
        n_nodes = min(n_nodes, int(math.floor(T / h + 1e-9)) + 1)
    bfn, sfn = spec.coef("b"), spec.coef("sigma")
    x = np.empty(n_nodes)
    x[0] = float(spec.eta.value(0.0))
    zv = z.values
    for k in range(n_nodes - 1):
        t = k * h
        xd = x[k - m] if k >= m else float(spec.eta.value(t - spec.r))
        x[k + 1] = x[k] + float(bfn(t, xd)) * h + float(sfn(t, xd)) * (zv[k + 1] - zv[k])
    return GridPath(x, h)


# ---------------------------------------------------------------------------
# vectorised terminal samplers


def sn_terminal_samples(spec, config, T, reps, seed, substep=2.0**-10, chunk=500):
    """Terminal values of the walk-driven scheme across replications.

    Walks event columns of the replication block: per-event left-limit
    coefficient reads exactly as in solve_sn, with the inter-event drift
    advanced in uniform substeps no wider than `substep`.
    """
    nb = float(config.n) ** (-config.beta_eff)
    bfn, mfn, sfn = spec.coef("b"), spec.coef("mu"), spec.coef("sigma")
    out = np.empty(reps)
    lo = 0
    for blk in iter_ctrw_chunks(config, T, reps, seed, chunk):
        zeta, times, mask = blk["zeta"], blk["times"], blk["mask"]
        m, K = zeta.shape
        x = np.full(m, float(spec.x0))
        d = np.zeros(m)
        tprev = np.zeros(m)
        for k in range(K):
            live = mask[:, k]
            if not live.any():
                break
            gap = np.where(live, times[:, k] - tprev, 0.0)
            nsub = max(1, int(math.ceil(float(gap.max()) / substep)))
            dt = gap / nsub
            t = tprev.copy()
            for _ in range(nsub):
                x = x + np.where(live, bfn(t, d, x) * dt, 0.0)
                t = t + dt
            ev_t = times[:, k]
            x = x + np.where(
                live,
                mfn(ev_t, d, x) * nb + sfn(ev_t, d, x) * zeta[:, k],
                0.0,
            )
            d = d + np.where(live, nb, 0.0)
            tprev = np.where(live, ev_t, tprev)
        gap = T - tprev
        nsub = max(1, int(math.ceil(float(gap.max()) / substep)))
        dt = gap / nsub
        t = tprev.copy()
        for _ in range(nsub):
            x = x + bfn(t, d, x) * dt
            t = t + dt
        out[lo : lo + m] = x
        lo += m
    return out


def _limit_driver_block(alpha, beta, T, m, h, dgen, zgen, z_params, increment_scale):
    """(D_inv, W) node-value matrices for a block of replications."""
    d_params = StableParams(beta, 1.0, increment_scale * h ** (1.0 / beta))
    z_inc_params = StableParams(
        z_params.alpha, z_params.skew, z_params.scale * h ** (1.0 / z_params.alpha)
    )
    block = max(64, int(1.3 * T / h) + 64)
    D = np.cumsum(draw_stable(d_params, dgen, (m, block)), axis=1)
    while not np.all(D[:, -1] > T):
        more = draw_stable(d_params, dgen, (m, max(64, block // 4)))
        D = np.concatenate([D, np.cumsum(more, axis=1) + D[:, -1:]], axis=1)
    nodes = np.arange(int(math.floor(T / h + 1e-9)) + 1) * h
    width = int((D <= T).sum(axis=1).max()) + 1
    zinc = draw_stable(z_inc_params, zgen, (m, width))
    zcum = np.concatenate([np.zeros((m, 1)), np.cumsum(zinc, axis=1)], axis=1)
    dinv = np.empty((m, nodes.size))
    w = np.empty((m, nodes.size))
    for r in range(m):
        # D[r, j] is the level at grid index j + 1, so the inverse adds one
        idx = np.searchsorted(D[r], nodes, side="right") + 1
        dinv[r] = idx * h
        w[r] = zcum[r, idx]
    return dinv, w


def s_limit_terminal_samples(
    spec,
    alpha,
    beta,
    T,
    reps,
    seed,
    grid_step=2.0**-10,
    z_params=None,
    increment_scale=None,
    mode="symmetric",
    chunk=250,
):
    """Terminal values of the limit scheme, driving laws defaulted to the
    attractors matching the package walks."""
    if z_params is None:
        z_params = attractor_params(
            InnovationLaw(alpha, "gaussian" if alpha == 2.0 else mode)
        )
    if increment_scale is None:
        increment_scale = wait_attractor_scale(beta)
    h = float(grid_step)
    bfn, mfn, sfn = spec.coef("b"), spec.coef("mu"), spec.coef("sigma")
    out = np.empty(reps)
    lo = 0
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        dinv, w = _limit_driver_block(
            alpha,
            beta,
            T,
            m,
            h,
            seed.generator((WAIT_LANE, start)),
            seed.generator((INNOVATION_LANE, start)),
            z_params,
            increment_scale,
        )
        x = np.full(m, float(spec.x0))
        for k in range(dinv.shape[1] - 1):
            t = k * h
            x = (
                x
                + bfn(t, dinv[:, k], x) * h
                + mfn(t, dinv[:, k], x) * (dinv[:, k + 1] - dinv[:, k])
                + sfn(t, dinv[:, k], x) * (w[:, k + 1] - w[:, k])
            )
        out[lo : lo + m] = x
        lo += m
    return out


def sddn_terminal_samples(spec, config, T, reps, seed, chunk=500):
    """Terminal values of the delay scheme driven by moving averages.

    Requires deterministic unit waits (jumps at k/n) and an integer n*r so
    the delayed argument is exactly the state nr events back; the initial
    segment is read exactly for the first nr events.
    """
    if config.waiting is not None:
        raise ParameterError("delay scheme ensembles need a moving-average driver", tag="PARAM_WAITING")
    n = config.n
    nr = spec.r * n
    if abs(nr - round(nr)) > 1e-9:
        raise ParameterError("n * r must be an integer for the vectorised solver", tag="PARAM_DELAY")
    nr = int(round(nr))
    c = config.psi
    bfn, sfn = spec.coef("b"), spec.coef("sigma")
    eta = spec.eta
    out = np.empty(reps)
    lo = 0
    for blk in iter_ctrw_chunks(config, T, reps, seed, chunk):
        zeta = blk["zeta"]
        m, K = zeta.shape
        X = np.empty((m, K + 1))
        X[:, 0] = float(eta.value(0.0))
        for k in range(K):
            t_k = k / n
            t_next = (k + 1) / n
            if k >= nr:
                xd_drift = X[:, k - nr]
                xd_jump = X[:, k - nr]
            else:
                # delayed window still inside the initial segment
                tau_mid = t_k + 0.5 / n - spec.r
                xd_drift = float(eta.value(max(tau_mid, eta.origin)))
                tau_j = t_next - spec.r
                if tau_j < 0.0:
                    xd_jump = float(eta.value(max(tau_j, eta.origin)))
                else:
                    xd_jump = float(eta.value_before(0.0)) if eta.times.size > 1 else float(eta.value(0.0))
            X[:, k + 1] = (
                X[:, k]
                + bfn(t_k + 0.5 / n, xd_drift) / n
                + sfn(t_next, xd_jump) / c * zeta[:, k]
            )
        out[lo : lo + m] = X[:, K]
        lo += m
    return out


def sdd_limit_terminal_samples(
    spec, alpha, T, reps, seed, grid_step=2.0**-10, z_params=None, mode="centered", chunk=500
):
    """Terminal values of the limit delay scheme, driver defaulted to the
    attractor of a single innovation."""
    if z_params is None:
        z_params = attractor_params(InnovationLaw(alpha, "gaussian" if alpha == 2.0 else mode))
    h = float(grid_step)
    m_delay = spec.r / h
    if abs(m_delay - round(m_delay)) > 1e-9:
        raise ParameterError("grid step must divide the delay", tag="PARAM_MESH")
    m_delay = int(round(m_delay))
    inc_params = StableParams(
        z_params.alpha, z_params.skew, z_params.scale * h ** (1.0 / z_params.alpha)
    )
    nodes = int(math.floor(T / h + 1e-9)) + 1
    bfn, sfn = spec.coef("b"), spec.coef("sigma")
    eta = spec.eta
    out = np.empty(reps)
    lo = 0
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        zinc = draw_stable(inc_params, seed.generator((INNOVATION_LANE, start)), (m, nodes - 1))
        X = np.empty((m, nodes))
        X[:, 0] = float(eta.value(0.0))
        for k in range(nodes - 1):
            t = k * h
            if k >= m_delay:
                xd = X[:, k - m_delay]
            else:
                xd = float(eta.value(t - spec.r))
            X[:, k + 1] = X[:, k] + bfn(t, xd) * h + sfn(t, xd) * zinc[:, k]
        out[lo : lo + m] = X[:, -1]
        lo += m
    return out
