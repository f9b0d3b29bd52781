"""Scaling fits: finite-size collapse, lifetime power laws and exponentials, frequency flatness."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

SEED_BOX = {"epsilon_c": (0.0, 0.1), "gamma": (0.5, 2.5), "mu": (0.1, 0.5)}
SEED_POINTS = 5
NO_OVERLAP_COST = 1e6


class FitError(ValueError):
    pass


@dataclass
class ScalingFit:
    kind: str  # "power_law" or "exponential"
    slope: float  # exponent (power law) or rate (exponential)
    stderr: float
    intercept: float
    r2: float
    n_points: int
    excluded: list = field(default_factory=list)

    def predict(self, x):
        x = np.asarray(x, float)
        u = np.log(x) if self.kind == "power_law" else x
        return np.exp(self.intercept + self.slope * u)


def _clean(pairs, min_points: int):
    arr = np.array([(float(x), float(y)) for x, y in pairs]).reshape(-1, 2)
    ok = np.isfinite(arr).all(axis=1) & (arr[:, 1] > 0)
    bad = [tuple(r) for r in arr[~ok].tolist()]
    if bad:
        warnings.warn(f"excluding {len(bad)} non-finite or non-positive point(s): {bad}", stacklevel=3)
    if ok.sum() < min_points:
        raise FitError(f"need at least {min_points} usable points, got {int(ok.sum())}")
    x, y = arr[ok].T
    return x, y, bad


def _linfit(kind, u, y, bad) -> ScalingFit:
    res = stats.linregress(u, np.log(y))
    return ScalingFit(kind, float(res.slope), float(res.stderr), float(res.intercept),
                      float(res.rvalue ** 2), u.size, bad)


def power_law_fit(pairs, min_points: int = 4) -> ScalingFit:
    """tau ~ x^a by least squares on log-log. Sentinels (inf, <= 0) are dropped with a warning."""
    x, y, bad = _clean(pairs, min_points)
    if np.any(x <= 0):
        raise FitError("power-law abscissae must be positive")
    return _linfit("power_law", np.log(x), y, bad)


def exponential_fit(pairs, min_points: int = 4) -> ScalingFit:
    """tau ~ exp(r x) by least squares on log-linear axes."""
    x, y, bad = _clean(pairs, min_points)
    return _linfit("exponential", x, y, bad)


def frequency_flatness(pairs, min_points: int = 3) -> float:
    """Relative spread (max - min)/mean of the lifetime across drive frequencies.

    ``pairs`` are ``(omega, tau/T)``; lifetimes are compared in absolute time,
    tau = (tau/T) * 2 pi / omega, so a frequency-independent decay time gives 0.
    """
    w, n, _ = _clean(pairs, min_points)
    if np.any(w <= 0):
        raise FitError("frequencies must be positive")
    tau = n * 2 * math.pi / w
    return float((tau.max() - tau.min()) / tau.mean())


@dataclass
class CollapseFit:
    epsilon_c: float
    gamma: float
    mu: float
    residual: float
    converged: bool
    degenerate: bool
    sizes: np.ndarray
    epsilon: np.ndarray
    M: np.ndarray

    @property
    def params(self) -> tuple[float, float, float]:
        return self.epsilon_c, self.gamma, self.mu


def _as_table(data):
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise FitError("collapse data must be rows (L, epsilon, M)")
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


def collapse_cost(params, data) -> float:
    """Dispersion of rescaled points around leave-one-size-out master curves.

    Points map to x = (eps - eps_c) L^(1/mu), y = M L^gamma. For each size the
    other sizes' points form a piecewise-linear master curve; the cost is the
    sum over sizes of the mean squared deviation on the overlapping x range,
    normalized by the variance of all y.
    """
    eps_c, gamma, mu = params
    if mu <= 0:
        return NO_OVERLAP_COST
    tab = _as_table(data)
    L, eps, M = tab.T
    x = (eps - eps_c) * L ** (1.0 / mu)
    y = M * L ** gamma
    scale = y.var()
    if not np.isfinite(scale) or scale <= 0:
        return NO_OVERLAP_COST
    total, used = 0.0, 0
    for size in np.unique(L):
        mine, other = L == size, L != size
        xo, yo = x[other], y[other]
        order = np.lexsort((yo, xo))
        xo, yo = xo[order], yo[order]
        inside = (x[mine] >= xo[0]) & (x[mine] <= xo[-1])
        if not inside.any():
            continue
        ref = np.interp(x[mine][inside], xo, yo)
        total += np.mean((y[mine][inside] - ref) ** 2)
        used += 1
    if used == 0:
        return NO_OVERLAP_COST
    return float(total / scale * np.unique(L).size / used)


def collapse_fit(data, min_sizes: int = 3, min_points: int = 8, seed_box: dict | None = None,
                 xatol: float = 1e-7, fatol: float = 1e-14) -> CollapseFit:
    """Fit (eps_c, gamma, mu) of M ~ L^-gamma f((eps - eps_c) L^(1/mu)).

    Nelder-Mead from the best point of a coarse grid over ``seed_box``. Data
    with no dependence on L or eps is reported as degenerate.
    """
    tab = _as_table(data)
    L, eps, M = tab.T
    sizes = np.unique(L)
    if sizes.size < min_sizes:
        raise FitError(f"need at least {min_sizes} system sizes, got {sizes.size}")
    for s in sizes:
        if np.unique(eps[L == s]).size < min_points:
            raise FitError(f"size L={s:g} has fewer than {min_points} epsilon points")
    box = seed_box or SEED_BOX
    if np.ptp(M) <= 1e-12 * max(1.0, np.abs(M).max()):
        return CollapseFit(math.nan, 0.0, math.nan, 0.0, False, True, sizes, eps, M)
    grids = [np.linspace(*box[k], SEED_POINTS) for k in ("epsilon_c", "gamma", "mu")]
    seeds = sorted(((collapse_cost(p, tab), p) for p in itertools.product(*grids)), key=lambda c: c[0])
    best = None
    for _, p0 in seeds[:3]:
        res = optimize.minimize(collapse_cost, np.array(p0), args=(tab,), method="Nelder-Mead",
                                options={"xatol": xatol, "fatol": fatol, "maxiter": 20000,
                                         "maxfev": 40000})
        if best is None or res.fun < best.fun:
            best = res
    e_c, g, mu = (float(v) for v in best.x)
    degenerate = best.fun >= NO_OVERLAP_COST or not _is_constrained(best.x, tab, best.fun)
    return CollapseFit(e_c, g, mu, float(best.fun), bool(best.success), degenerate, sizes, eps, M)


def _is_constrained(p, tab, f0, step: float = 0.05) -> bool:
    # a well-posed optimum must rise in every parameter direction
    for k in range(3):
        for sgn in (1, -1):
            q = np.array(p, float)
            q[k] += sgn * step * max(abs(q[k]), 1e-3)
            if collapse_cost(q, tab) <= f0 * (1 + 1e-9) + 1e-15:
                return False
    return True


def write_fit_report(path, fit, header: str = "") -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        if isinstance(fit, CollapseFit):
            fh.write("kind collapse\n")
            fh.write(f"epsilon_c {fit.epsilon_c!r}\ngamma {fit.gamma!r}\nmu {fit.mu!r}\n")
            fh.write(f"residual {fit.residual!r}\nconverged {int(fit.converged)}\n")
            fh.write(f"degenerate {int(fit.degenerate)}\nrows {fit.M.size}\nexcluded none\n")
        else:
            name = "exponent" if fit.kind == "power_law" else "rate"
            fh.write(f"kind {fit.kind}\n{name} {fit.slope!r}\nstderr {fit.stderr!r}\n")
            fh.write(f"intercept {fit.intercept!r}\nr2 {fit.r2!r}\nrows {fit.n_points}\n")
            ex = ";".join(f"{x!r},{y!r}" for x, y in fit.excluded) or "none"
            fh.write(f"excluded {ex}\n")
