"""Command-line reproduction harness.

Every run resolves a flat configuration (defaults, then a ``key = value``
config file, then command-line flags) and writes it verbatim as ``#`` header
lines into each output file, so outputs can be traced back to their inputs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from . import entanglement as ent
from . import fits
from . import floquet as fq
from . import hsf
from .evolve import KrylovConvergenceError, Propagator
from .hamiltonian import ModelParams
from .spin_core import named_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SCENARIOS = ("evolve", "spectrum", "lifetime", "hsf", "mutualinfo", "phase-diagram")


class ConfigError(ValueError):
    pass


def _opt_float(s):
    return None if str(s).strip().lower() == "none" else float(s)


def _opt_str(s):
    s = str(s).strip()
    return None if s.lower() == "none" else s


def _float_list(s):
    s = str(s).strip()
    return [] if s in ("", "none") else [float(x) for x in s.split(",")]


def _int_list(s):
    s = str(s).strip()
    return [] if s in ("", "none") else [int(x) for x in s.split(",")]


# key -> (parser, default, help)
KEYS: dict[str, tuple] = {
    "L": (int, 12, "chain length"),
    "J": (float, 1.0, "exchange coupling"),
    "V": (float, 1000.0, "Ising coupling"),
    "T": (float, 1.0, "drive period"),
    "epsilon": (float, 0.0, "kick imperfection"),
    "initial": (str, "neel", "initial state: neel, domain_wall, all_up or a u/d string"),
    "steps": (int, 500, "number of drive periods"),
    "out": (str, ".", "output directory"),
    "workers": (int, 1, "worker processes"),
    "mode": (_opt_str, None, "propagator: dense, krylov or none (automatic)"),
    "threshold": (_opt_float, None, "overlap threshold (default J^2/V)"),
    "weight_cut": (_opt_float, None, "pi-pair overlap cut (default fraction of max overlap)"),
    "pair_tol": (float, fq.DEFAULT_PAIR_TOL, "pi-pair phase tolerance"),
    "touch_tol": (float, dg.DEFAULT_TOUCH_TOL, "envelope touching tolerance"),
    "max_steps": (int, dg.LIFETIME_MAX_STEPS, "lifetime search horizon in periods"),
    "V_list": (_float_list, [], "comma-separated V values"),
    "L_list": (_int_list, [], "comma-separated chain lengths"),
    "epsilon_list": (_float_list, [], "comma-separated epsilon values"),
    "omega_list": (_float_list, [], "comma-separated drive frequencies"),
    "subsample": (float, 1.0, "fraction of sector states in the h-bar average"),
}


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, list):
        return ",".join(_render(v) for v in value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


@dataclass
class RunConfig:
    scenario: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def params(self) -> ModelParams:
        return ModelParams(L=self.L, J=self.J, V=self.V, T=self.T, epsilon=self.epsilon)

    def header_lines(self) -> list[str]:
        out = [f"scenario = {self.scenario}"]
        out += [f"{k} = {_render(self.values[k])}" for k in sorted(self.values)]
        return out

    def header(self, extra: str = "") -> str:
        return "\n".join(self.header_lines() + ([extra] if extra else []))

    @classmethod
    def from_lines(cls, lines) -> "RunConfig":
        raw = parse_flat(lines)
        scenario = raw.pop("scenario", None)
        if scenario not in SCENARIOS:
            raise ConfigError(f"missing or unknown scenario {scenario!r}")
        return cls(scenario, _coerce(raw, strict=False))


def parse_flat(lines) -> dict:
    """Flat ``key = value`` text; blank lines and ``#`` comments are skipped."""
    out = {}
    for ln in lines:
        ln = ln.strip().lstrip("#").strip()
        if not ln or "=" not in ln:
            continue
        k, v = (s.strip() for s in ln.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _coerce(raw: dict, strict: bool = True) -> dict:
    out = {}
    for k, v in raw.items():
        if k not in KEYS:
            if strict:
                raise ConfigError(f"unknown config key {k!r}")
            continue
        try:
            out[k] = KEYS[k][0](v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
    return out


def read_header_config(path) -> RunConfig:
    """Recover the resolved configuration from an output file's header."""
    with open(path) as fh:
        lines = []
        for ln in fh:
            if not ln.startswith("#"):
                break
            lines.append(ln)
    return RunConfig.from_lines(lines)


def resolve_config(scenario: str, cli: dict, config_path: str | None = None) -> RunConfig:
    values = {k: spec[1] for k, spec in KEYS.items()}
    if config_path:
        try:
            with open(config_path) as fh:
                values.update(_coerce(parse_flat(fh)))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    values.update({k: v for k, v in cli.items() if v is not None})
    cfg = RunConfig(scenario, {k: (list(v) if isinstance(v, list) else v) for k, v in values.items()})
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.L < 2 or cfg.steps < 1 or cfg.workers < 1:
        raise ConfigError("need L >= 2, steps >= 1, workers >= 1")
    if cfg.T <= 0:
        raise ConfigError("drive period must be positive")
    if cfg.mode not in (None, "dense", "krylov"):
        raise ConfigError(f"unknown propagator mode {cfg.mode!r}")
    if not 0 < cfg.subsample <= 1:
        raise ConfigError("subsample must lie in (0, 1]")


# ---------------------------------------------------------------- scenarios


def _path(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _write_table(path, header: str, columns: str, rows):
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write(f"# {columns}\n")
        for r in rows:
            fh.write(" ".join(_render(v) for v in r) + "\n")


def cmd_evolve(cfg: RunConfig) -> dict:
    p = cfg.params
    if cfg.steps % 2:
        raise ConfigError("steps must be even so that 1/2T lies on the Fourier grid")
    state = named_state(p.basis, cfg.initial)
    traj = dg.run_trajectory(p, state, cfg.steps, Propagator(p, mode=cfg.mode))
    fs = dg.fourier(traj)
    dg.write_trajectory(_path(cfg, "trajectory.dat"), traj, cfg.header())
    dg.write_fourier(_path(cfg, "fourier.dat"), fs, cfg.header())
    return {"h": fs.h, "peaks": fs.frequencies[fs.peaks()]}


def cmd_spectrum(cfg: RunConfig) -> dict:
    p = cfg.params
    if p.L > fq.FLOQUET_MAX_L:
        raise ConfigError(f"spectrum needs L <= {fq.FLOQUET_MAX_L}")
    spec = fq.floquet_spectrum(p)
    state = named_state(p.basis, cfg.initial)
    P = fq.overlaps(spec, state.amplitudes())
    pairs = fq.detect_pi_pairs(spec, P, cfg.weight_cut, cfg.pair_tol)
    beats = fq.beat_frequencies(pairs, spec)
    fq.write_spectrum(_path(cfg, "spectrum.dat"), spec, P, cfg.header())
    _write_table(_path(cfg, "pi_pairs.dat"), cfg.header(), "alpha beta splitting weight",
                 [(a.alpha, a.beta, a.splitting, a.weight) for a in pairs])
    _write_table(_path(cfg, "beats.dat"), cfg.header(), "nu", [(float(b),) for b in beats])
    return {"pairs": pairs, "beats": beats}


def _lifetime_job(args):
    L, J, V, T, eps, initial, max_steps, touch_tol = args
    p = ModelParams(L=L, J=J, V=V, T=T, epsilon=eps)
    spec = fq.floquet_spectrum(p)
    tau = dg.dtc_lifetime(spec, named_state(p.basis, initial), max_steps, touch_tol)
    return tau / T


def _pmap(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def cmd_lifetime(cfg: RunConfig) -> dict:
    """Lifetime sweep over exactly one of V_list, omega_list or L_list."""
    given = [k for k in ("V_list", "omega_list", "L_list") if getattr(cfg, k)]
    if len(given) != 1:
        raise ConfigError("lifetime needs exactly one of --V-list, --omega-list, --L-list")
    var = given[0]
    base = (cfg.L, cfg.J, cfg.V, cfg.T, cfg.epsilon, cfg.initial, cfg.max_steps, cfg.touch_tol)
    eps_list = cfg.epsilon_list or [cfg.epsilon]
    jobs, keys = [], []
    for eps in eps_list:
        for x in getattr(cfg, var):
            L, J, V, T = cfg.L, cfg.J, cfg.V, cfg.T
            if var == "V_list":
                V = x
            elif var == "omega_list":
                T = 2 * math.pi / x
            else:
                L = int(x)
            if L % 2:
                raise ConfigError(f"lifetime needs even L, got {L}")
            jobs.append((L, J, V, T, eps) + base[5:])
            keys.append((x, eps))
    taus = _pmap(_lifetime_job, jobs, cfg.workers)
    name = var[:-5]
    _write_table(_path(cfg, "lifetime.dat"), cfg.header(), f"{name} epsilon tau_over_T",
                 [(x, e, t) for (x, e), t in zip(keys, taus)])
    results = {}
    for eps in eps_list:
        pts = [(x, t) for (x, e), t in zip(keys, taus) if e == eps]
        try:
            if var == "V_list":
                fit = fits.power_law_fit([(x / cfg.J, t) for x, t in pts])
            elif var == "L_list":
                fit = fits.exponential_fit(pts, min_points=3)
            else:
                fit = fits.frequency_flatness(pts)
        except fits.FitError as exc:
            print(f"fit skipped for epsilon={eps!r}: {exc}", file=sys.stderr)
            continue
        results[eps] = fit
        tag = f"{name}_eps{eps!r}"
        if isinstance(fit, float):
            _write_table(_path(cfg, f"fit_{tag}.dat"), cfg.header(), "kind spread",
                         [("frequency_flatness", fit)])
        else:
            fits.write_fit_report(_path(cfg, f"fit_{tag}.dat"), fit, cfg.header())
    return {"taus": dict(zip(keys, taus)), "fits": results}


def cmd_hsf(cfg: RunConfig) -> dict:
    if cfg.epsilon != 0:
        raise ConfigError("fragment analysis needs epsilon = 0 (exact |S^z| sectors)")
    L_list = cfg.L_list or [cfg.L]
    V_list = cfg.V_list or [cfg.V]
    for L in L_list:
        hsf.write_sector_table(_path(cfg, f"sectors_L{L}.dat"), hsf.sector_table(L))
    rows = []
    out = {}
    for L in L_list:
        for V in V_list:
            p = ModelParams(L=L, J=cfg.J, V=V, T=cfg.T, epsilon=0.0)
            spec = fq.floquet_spectrum(p)
            frs = {q: hsf.fragments(spec, q, cfg.threshold) for q in hsf.q_values(L)}
            for q in (0, 2):
                if q in frs:
                    R = frs[q][0].size / sum(f.size for f in frs[q])
                    rows.append((L, V, q, R, hsf.ratio_q_combinatorial(L, q)))
            tag = f"L{L}_V{V!r}"
            hsf.write_fragments(_path(cfg, f"fragments_{tag}.dat"), frs, cfg.header())
            if L == cfg.L and V == cfg.V:
                om = hsf.overlap_matrix(spec, cfg.threshold)
                hsf.write_overlap(_path(cfg, f"overlap_{tag}.dat"), om, cfg.header())
            out[(L, V)] = frs
    _write_table(_path(cfg, "ratio.dat"), cfg.header(), "L V q R_numerical R_combinatorial", rows)
    return {"ratios": rows, "fragments": out}


def _mbar_job(args):
    L, J, V, T, eps = args
    spec = fq.floquet_spectrum(ModelParams(L=L, J=J, V=V, T=T, epsilon=eps))
    return ent.floquet_avg_mutual_info(spec).M_bar


def _mbar_table(cfg, V):
    L_list = cfg.L_list or [cfg.L]
    eps_list = cfg.epsilon_list or [cfg.epsilon]
    jobs = [(L, cfg.J, V, cfg.T, e) for L in L_list for e in eps_list]
    vals = _pmap(_mbar_job, jobs, cfg.workers)
    return [(e, L, V, m) for (L, _, _, _, e), m in zip(jobs, vals)]


def cmd_mutualinfo(cfg: RunConfig) -> dict:
    rows = []
    for V in cfg.V_list or [cfg.V]:
        rows += _mbar_table(cfg, V)
    ent.write_mutual_info(_path(cfg, "mutual_info.dat"), rows, cfg.header())
    return {"rows": rows}


def _hbar_job(args):
    L, J, V, T, eps, steps, subsample = args
    p = ModelParams(L=L, J=J, V=V, T=T, epsilon=eps)
    spec = fq.floquet_spectrum(p)
    return dg.mean_subharmonic(spec, dg.sector_states(p.basis, 0, subsample), steps)


def cmd_phase_diagram(cfg: RunConfig) -> dict:
    L_list = cfg.L_list or [cfg.L]
    if max(L_list) > fq.FLOQUET_MAX_L:
        raise ConfigError(f"phase diagram needs L <= {fq.FLOQUET_MAX_L}")
    if cfg.L % 2:
        raise ConfigError("h-bar map needs even L")
    V_list = cfg.V_list or [cfg.V]
    eps_list = cfg.epsilon_list or [cfg.epsilon]
    mrows, boundary = [], []
    for V in V_list:
        rows = _mbar_table(cfg, V)
        mrows += rows
        if len(set(L_list)) >= 2 and len(eps_list) >= 8:
            fit = fits.collapse_fit([(L, e, m) for e, L, _, m in rows], min_sizes=2)
            boundary.append((V, fit.epsilon_c, fit.gamma, fit.mu, fit.residual, int(fit.degenerate)))
    ent.write_mutual_info(_path(cfg, "mutual_info.dat"), mrows, cfg.header())
    _write_table(_path(cfg, "boundary.dat"), cfg.header(),
                 "V epsilon_c gamma mu residual degenerate", boundary)
    jobs = [(cfg.L, cfg.J, V, cfg.T, e, cfg.steps, cfg.subsample) for V in V_list for e in eps_list]
    hbar = _pmap(_hbar_job, jobs, cfg.workers)
    _write_table(_path(cfg, "hbar.dat"), cfg.header(), "V epsilon hbar",
                 [(j[2], j[4], h) for j, h in zip(jobs, hbar)])
    return {"M": mrows, "boundary": boundary, "hbar": hbar}


COMMANDS = {
    "evolve": cmd_evolve,
    "spectrum": cmd_spectrum,
    "lifetime": cmd_lifetime,
    "hsf": cmd_hsf,
    "mutualinfo": cmd_mutualinfo,
    "phase-diagram": cmd_phase_diagram,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kickedxxz", description="Kicked XXZ chain: time-crystal and fragmentation studies.")
    sub = parser.add_subparsers(dest="scenario", required=True, parser_class=_Parser)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=(COMMANDS[name].__doc__ or name).strip().splitlines()[0])
        sp.add_argument("--config", help="flat key = value config file")
        for key, (_, default, helptext) in KEYS.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, help=f"{helptext} (default {_render(default)})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    raw = {k: v for k, v in vars(args).items() if k in KEYS and v is not None}
    try:
        cfg = resolve_config(args.scenario, _coerce(raw), args.config)
        result = COMMANDS[args.scenario](cfg)
    except (ConfigError, fits.FitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KrylovConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _summarize(args.scenario, result)
    return EXIT_OK


def _summarize(scenario, result):
    if scenario == "evolve":
        print(f"h = {result['h']:.6f}; peaks at {np.round(result['peaks'], 6).tolist()}")
    elif scenario == "spectrum":
        print(f"{len(result['pairs'])} pi-pair(s)")
    elif scenario == "lifetime":
        for eps, fit in result["fits"].items():
            print(f"epsilon={eps!r}: {fit}")
    elif scenario == "hsf":
        for L, V, q, R, Rc in result["ratios"]:
            print(f"L={L} V={V!r} q={q} R={R:.4f} R_comb={Rc:.4f}")
    elif scenario == "mutualinfo":
        for e, L, V, m in result["rows"]:
            print(f"epsilon={e!r} L={L} V={V!r} M_bar={m:.6f}")
    elif scenario == "phase-diagram":
        for row in result["boundary"]:
            print("boundary", *row)


if __name__ == "__main__":
    sys.exit(main())
