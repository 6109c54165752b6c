"""Command-line orchestration: simulate, verify, flat-demo, kernel-eval.

Configuration is a JSON document with explicit defaults and strict key
checking; simulation output is a deterministic set of plain-text files
(`trace.csv`, per-time snapshots, `meta.json`).  Exit codes: 0 success,
1 a scientific condition failed during the run, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, evolution, flatlab, kernel, spectral, subsolution, verify
from .grid import GridFunction1D

__all__ = ["RunConfig", "ConfigError", "parse_config", "run_simulate", "run_verify", "main"]


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key path."""


_DEFAULTS = {
    "grid": {"n": 256, "length": 40.0},
    "time": {"dt": 0.0125, "t_end": 0.1, "t_start": 0.0, "output_every": 2},
    "physics": {"c": 1.0, "delta": None, "kappa": 1e-3},
    "quadrature": {"trunc_radius": 10.0},
    "initial": {
        "family": "gaussian_bump",
        "amplitude": 0.1,
        "width": 1.0,
        "center": 0.0,
        "modes": 3,
        "path": None,
    },
    "seed": 0,
}

_FAMILIES = ("zero", "gaussian_bump", "cosine_packet", "file")


@dataclass(frozen=True)
class RunConfig:
    n: int
    length: float
    dt: float
    t_end: float
    t_start: float
    output_every: int
    c: float
    delta: float
    kappa: float
    trunc_radius: float
    family: str
    amplitude: float
    width: float
    center: float
    modes: int
    path: str | None
    seed: int

    def as_dict(self) -> dict:
        return asdict(self)


def _merge(defaults: dict, user: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in user.items():
        path = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown configuration key: {path}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"expected an object at {path}")
            out[key] = _merge(defaults[key], val, prefix=f"{path}.")
        else:
            out[key] = val
    for key, val in defaults.items():
        if key not in out:
            out[key] = dict(val) if isinstance(val, dict) else val
        elif isinstance(val, dict):
            for k2, v2 in val.items():
                out[key].setdefault(k2, v2)
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Unknown keys are rejected with their full path; defaults fill every
    omitted field.  Raises :class:`ConfigError` with a message naming the
    offending key.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    merged = _merge(_DEFAULTS, doc)

    n = merged["grid"]["n"]
    if not isinstance(n, int) or n < 64 or (n & (n - 1)) != 0:
        raise ConfigError("grid.n must be a power of two >= 64")
    length = float(merged["grid"]["length"])
    if length <= 0:
        raise ConfigError("grid.length must be positive")
    c = float(merged["physics"]["c"])
    if not 0.0 < c < 2.0:
        raise ConfigError(f"physics.c = {c} violates the open bound (0, 2)")
    kappa = float(merged["physics"]["kappa"])
    if kappa < 0:
        raise ConfigError("physics.kappa must be nonnegative")
    h = length / n
    delta = merged["physics"]["delta"]
    delta = 4.0 * h if delta is None else float(delta)
    if delta < 2.0 * h:
        raise ConfigError("physics.delta must be at least 2 grid spacings")
    tcfg = merged["time"]
    dt, t_end, t_start = float(tcfg["dt"]), float(tcfg["t_end"]), float(tcfg["t_start"])
    if dt <= 0 or t_end <= t_start or t_start < 0:
        raise ConfigError("time must satisfy dt > 0 and t_end > t_start >= 0")
    if kappa == 0.0 and t_start == 0.0:
        raise ConfigError("time.t_start must be positive when physics.kappa = 0")
    output_every = tcfg["output_every"]
    if not isinstance(output_every, int) or output_every < 1:
        raise ConfigError("time.output_every must be a positive integer")
    trunc = float(merged["quadrature"]["trunc_radius"])
    eps_max = c * t_end + kappa
    if trunc < 10.0 * eps_max:
        raise ConfigError("quadrature.trunc_radius must be at least 10*(c*t_end + kappa)")
    if trunc > length / 2:
        raise ConfigError("quadrature.trunc_radius must not exceed half the period")
    icfg = merged["initial"]
    family = icfg["family"]
    if family not in _FAMILIES:
        raise ConfigError(f"initial.family must be one of {_FAMILIES}")
    if family == "file" and not icfg["path"]:
        raise ConfigError("initial.path is required for the file family")
    return RunConfig(
        n=n, length=length, dt=dt, t_end=t_end, t_start=t_start,
        output_every=output_every, c=c, delta=delta, kappa=kappa,
        trunc_radius=trunc, family=family, amplitude=float(icfg["amplitude"]),
        width=float(icfg["width"]), center=float(icfg["center"]),
        modes=int(icfg["modes"]), path=icfg["path"], seed=int(merged["seed"]),
    )


def initial_data(cfg: RunConfig) -> GridFunction1D:
    """Construct the initial interface height for a parsed configuration."""
    if cfg.family == "zero":
        return GridFunction1D.zeros(cfg.n, cfg.length)
    if cfg.family == "gaussian_bump":
        return GridFunction1D.from_callable(
            lambda x: cfg.amplitude * np.exp(-(((x - cfg.center) / cfg.width) ** 2)),
            cfg.n,
            cfg.length,
        )
    if cfg.family == "cosine_packet":
        rng = np.random.default_rng(cfg.seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, cfg.modes)

        def packet(x):
            envelope = np.exp(-(((x - cfg.center) / cfg.width) ** 2))
            waves = sum(
                np.cos(2.0 * np.pi * (k + 1) * x / cfg.length + phases[k])
                for k in range(cfg.modes)
            )
            return cfg.amplitude * envelope * waves / max(cfg.modes, 1)

        return GridFunction1D.from_callable(packet, cfg.n, cfg.length)
    if cfg.family == "file":
        data = np.loadtxt(cfg.path, delimiter=",", skiprows=1)
        values = data[:, 1]
        if values.size != cfg.n:
            raise ConfigError(
                f"initial.path holds {values.size} samples, grid.n is {cfg.n}"
            )
        return GridFunction1D(values, cfg.length)
    raise ConfigError(f"unhandled family {cfg.family}")


def _format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def run_simulate(cfg: RunConfig, outdir: Path) -> int:
    """Run the configured evolution and write trace, snapshots and metadata.

    Returns the process exit code: 0, or 1 when a subsolution condition
    (|gamma| >= 1/2 or a hull slack below the violation band) fails before
    t_end; the trajectory is written either way.
    """
    outdir.mkdir(parents=True, exist_ok=True)
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    f0 = initial_data(cfg)
    traj = evolution.integrate(
        f0,
        c=cfg.c,
        delta=cfg.delta,
        kappa=cfg.kappa,
        dt=cfg.dt,
        t_end=cfg.t_end,
        output_every=cfg.output_every,
        t_start=cfg.t_start,
        trunc_radius=cfg.trunc_radius,
    )
    report = subsolution.subsolution_report(traj, trunc_radius=cfg.trunc_radius)
    by_time = {row["t"]: row for row in report}

    failure_time = None
    lines = ["t,l2_norm,h4_norm,energy,max_gamma,min_slack,m_bound"]
    for state, diag in zip(traj.snapshots, traj.diagnostics):
        slope = state.f.derivative()
        en = spectral.energy(state.f, slope, state.t)
        row = by_time.get(state.t)
        if row is None:
            max_gamma, min_slack, m_bound, ok = np.nan, np.nan, np.nan, True
        else:
            max_gamma = row["max_gamma"]
            min_slack = row["min_slack"]
            m_bound = row["m_bound"]
            ok = row["ok"]
        if not ok and failure_time is None:
            failure_time = state.t
        lines.append(
            _format_row(
                [state.t, diag["l2"], diag["h4"], en, max_gamma, min_slack, m_bound]
            )
        )
        xs = state.f.x
        snap = ["x,f"] + [
            f"{x:.17g},{v:.17g}" for x, v in zip(xs, state.f.values)
        ]
        (snapdir / f"f_{state.t:.6f}.csv").write_text("\n".join(snap) + "\n")
    (outdir / "trace.csv").write_text("\n".join(lines) + "\n")

    meta = {
        "version": __version__,
        "config": cfg.as_dict(),
        "numpy": np.__version__,
        "snapshots": len(traj.snapshots),
        "integration_failed": traj.failed,
        "integration_failure": traj.failure_reason,
        "subsolution_failure_time": failure_time,
        "measured": {
            "final_h4": traj.diagnostics[-1]["h4"],
            "final_dinv_d5": traj.diagnostics[-1]["dinv_d5"],
            "m_bound": None if not report else report[-1]["m_bound"],
            "max_zero_mean_residual": (
                None if not report else max(r["zero_mean_residual"] for r in report)
            ),
        },
    }
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return 1 if (failure_time is not None or traj.failed) else 0


def run_verify(suite: str, stream=None) -> int:
    """Execute one verification suite; prints a JSON report."""
    stream = stream or sys.stdout
    try:
        checks = verify.run_suite(suite)
    except KeyError:
        print(f"unknown suite: {suite}; available: {verify.available_suites()}", file=sys.stderr)
        return 2
    report = {"suite": suite, "checks": checks, "passed": all(c["passed"] for c in checks)}
    json.dump(report, stream, indent=2, default=float)
    stream.write("\n")
    return 0 if report["passed"] else 1


def _cmd_flat_demo(args) -> int:
    cfg = flatlab.FlatConfig(mu1=args.mu1, mu2=args.mu2, sigma_sign=args.sigma, c=args.c)
    interval = flatlab.flat_admissible_c(args.mu1, args.mu2, args.sigma)
    print(f"gamma = {flatlab.flat_gamma(cfg):.17g}")
    print(f"admissible c interval: {interval}")
    cs = np.linspace(0.1, 2.5, 13)
    for row in flatlab.flat_hull_sweep(args.mu1, args.mu2, args.sigma, cs):
        print(f"c = {row['c']:.4f}  min_slack = {row['min_slack']:+.6e}  {row['status']}")
    return 0


def _cmd_kernel_eval(args) -> int:
    p = kernel.KernelPoint(dx=args.dx, delta_f=args.df)
    closed = kernel.kernel_closed_form(p, args.eps)
    oracle = kernel.kernel_quadrature_oracle(p, args.eps, nodes=128)
    print(f"closed_form      = {closed:.17g}")
    print(f"quadrature       = {oracle:.17g}")
    print(f"muskat_limit     = {float(kernel.muskat_limit(args.dx, args.df)):.17g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mixzone",
        description="Mixing-zone interface evolution and subsolution verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configured evolution")
    p_sim.add_argument("config", type=Path, help="JSON configuration file")
    p_sim.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", help="|".join(verify.available_suites()))

    p_flat = sub.add_parser("flat-demo", help="straight-interface closed forms")
    p_flat.add_argument("--mu1", type=float, default=1.0)
    p_flat.add_argument("--mu2", type=float, default=0.0)
    p_flat.add_argument("--sigma", type=int, default=-1, choices=(-1, 1))
    p_flat.add_argument("--c", type=float, default=1.0)

    p_ker = sub.add_parser("kernel-eval", help="evaluate the kernel at a point")
    p_ker.add_argument("--dx", type=float, required=True)
    p_ker.add_argument("--df", type=float, required=True)
    p_ker.add_argument("--eps", type=float, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            try:
                text = args.config.read_text()
            except OSError as exc:
                print(f"cannot read config: {exc}", file=sys.stderr)
                return 2
            cfg = parse_config(text)
            return run_simulate(cfg, args.out)
        if args.command == "verify":
            return run_verify(args.suite)
        if args.command == "flat-demo":
            return _cmd_flat_demo(args)
        if args.command == "kernel-eval":
            return _cmd_kernel_eval(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
