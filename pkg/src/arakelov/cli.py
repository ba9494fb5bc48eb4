"""Command-line interface.

Every command writes UTF-8 CSV (``,``-separated, ``.`` decimal point)
preceded by one ``#`` comment line that records the command and its
resolved parameters. Complex inputs are ``a+bi`` literals; complex outputs
are ``*_re, *_im`` column pairs. Floats are written with ``repr`` so
reruns are byte-identical.

Exit status: 0 on success, 1 when a proven inequality fails numerically,
2 on malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import elkies, fay, green, integrals, surface, theta
from .errors import ArakelovError, InputError, ViolationDetected

DEFAULT_STREAMS = 16

# fixed CSV schemas, one per command
COLUMNS = {
    "theta": ["index", "genus", "value_re", "value_im", "norm", "tail_bound"],
    "hx": ["estimate", "stderr", "samples", "dropped"],
    "an": ["x_re", "x_im", "n", "estimate", "stderr", "samples", "dropped"],
    "green": ["x_re", "x_im", "y_re", "y_im", "green"],
    "fay": ["trial", "n", "log_lhs", "log_rhs", "residual", "separability", "slack", "condition_number"],
    "bound": ["n", "total", "total_h_low", "total_h_high", "sharp_total", "log_total", "H", "H_stderr"],
    "verify": ["kind", "n", "trials", "violations", "min_slack", "median_slack", "max_energy", "bound"],
    "merkl-c0": ["m", "r1", "M", "C1", "C0"],
    "suite": ["criterion", "passed", "detail"],
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    output: str | None = None


# -- parsing -------------------------------------------------------------------


def _complex(text: str) -> complex:
    try:
        return surface.parse_complex(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _complex_list(text: str) -> np.ndarray:
    return np.array([_complex(p) for p in text.split(",") if p.strip()], dtype=complex)


def _add_surface(p, omega: bool = False) -> None:
    p.add_argument("--tau", type=_complex, help="genus-one period, e.g. 0.5+1.5i")
    if omega:
        p.add_argument("--omega", help="period matrix file (genus line, then rows)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; explicit flags take precedence")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on this)")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="arakelov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theta", parents=[common], help="theta value, norm and tail bound")
    _add_surface(p, omega=True)
    p.add_argument("--z", type=_complex_list, action="append", required=True, help="comma-separated coordinates")
    p.add_argument("--tol", type=float, default=theta.CLI_TOL)

    p = sub.add_parser("hx", parents=[common], help="Monte Carlo estimate of H(X)")
    _add_surface(p, omega=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--streams", type=int, default=DEFAULT_STREAMS)

    p = sub.add_parser("an", parents=[common], help="Monte Carlo estimate of A_n(x)")
    _add_surface(p)
    p.add_argument("--x", type=_complex, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--streams", type=int, default=DEFAULT_STREAMS)

    p = sub.add_parser("green", parents=[common], help="Arakelov-Green function g(x, y)")
    _add_surface(p)
    p.add_argument("--x", type=_complex, required=True)
    p.add_argument("--y", type=_complex, required=True)

    p = sub.add_parser("atlas", parents=[common], help="flat chart atlas as a key-value file")
    _add_surface(p)
    p.add_argument("--r1", type=float, default=0.3)
    p.add_argument("--r2", type=float, default=0.45)
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("fay", parents=[common], help="norm identity and determinant inequality per trial")
    _add_surface(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tol", type=float, default=fay.FAY_TOL)

    p = sub.add_parser("bound", parents=[common], help="energy bound with per-term breakdown")
    _add_surface(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--atlas", help="atlas file; default builds one with r1 = 0.3, r2 = 0.45")
    p.add_argument("--hx-samples", type=int, default=100_000)

    p = sub.add_parser("verify", parents=[common], help="check the energy bound on random configurations")
    _add_surface(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--atlas")
    p.add_argument("--hx-samples", type=int, default=100_000)
    p.add_argument("--cluster-radius", type=float, default=1e-3)

    p = sub.add_parser("merkl-c0", parents=[common], help="Merkl atlas constant C0")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--C1", type=float, required=True)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance suite")
    _add_surface(p)
    p.add_argument("--quick", action="store_true", help="reduced sample sizes")
    return parser


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = (value, lineno)
    return out


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _prescan(argv) -> tuple[str | None, str | None]:
    """Find the subcommand and ``--config`` path before full parsing."""
    command = next((a for a in argv if a in COMMANDS), None)
    config = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif a.startswith("--config="):
            config = a.split("=", 1)[1]
    return command, config


def _apply_config(parser, command: str, path: str) -> None:
    """Install config-file values as subcommand defaults (flags still win)."""
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, (value, lineno) in read_config(path).items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise InputError(f"{path}:{lineno}: unknown key {key!r} for command {command}")
        conv = action.type or str
        try:
            v = conv(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
        if isinstance(action, argparse._AppendAction):
            v = [v]
        elif isinstance(action, argparse._StoreTrueAction):
            v = value.lower() in ("1", "true", "yes", "on")
        defaults[key] = v
        action.required = False
    sp.set_defaults(**defaults)


def parse_run_config(argv=None) -> RunConfig:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    command, config = _prescan(argv)
    if command and config:
        _apply_config(parser, command, config)
    args = parser.parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "seed", "threads", "output")}
    if args.seed < 0:
        raise InputError("--seed must be non-negative")
    if args.threads < 1:
        raise InputError("--threads must be >= 1")
    return RunConfig(args.command, params, args.seed, args.threads, args.output)


# -- output --------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _param_text(v) -> str:
    if isinstance(v, complex):
        return surface.format_complex(v)
    if isinstance(v, list):
        return ";".join(_param_text(x) for x in v)
    if isinstance(v, np.ndarray):
        return ",".join(surface.format_complex(x) for x in v)
    return _fmt(v)


def header(cfg: RunConfig) -> str:
    parts = [f"{k}={_param_text(v)}" for k, v in sorted(cfg.params.items()) if v is not None]
    return f"# arakelov {cfg.command} seed={cfg.seed} " + " ".join(parts)


def write_csv(out, command: str, rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS[command])
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def write_kv(out, title: str, items) -> None:
    out.write(f"[{title}]\n")
    for k, v in items:
        out.write(f"{k} = {_fmt(v)}\n")


# -- commands ------------------------------------------------------------------


def _surface(cfg: RunConfig) -> surface.EllipticSurface:
    tau = cfg.params.get("tau")
    if tau is None:
        raise InputError(f"{cfg.command} needs --tau")
    return surface.EllipticSurface(tau)


def _omega(cfg: RunConfig):
    if cfg.params.get("omega"):
        if cfg.params.get("tau") is not None:
            raise InputError("give either --tau or --omega, not both")
        return surface.read_period_matrix(cfg.params["omega"])
    return surface.PeriodMatrix.from_tau(_surface(cfg).tau)


def _atlas(cfg: RunConfig, s: surface.EllipticSurface):
    if cfg.params.get("atlas"):
        atlas = green.TorusChartAtlas.load(cfg.params["atlas"])
        if atlas.tau != s.tau:
            raise InputError(f"atlas is for tau = {surface.format_complex(atlas.tau)}")
        return atlas
    return green.build_torus_atlas(s, 0.3, 0.45)


def _hx(cfg: RunConfig, s: surface.EllipticSurface):
    return integrals.estimate_hx(
        s, cfg.params["hx_samples"], surface.SeededSampler(cfg.seed), streams=DEFAULT_STREAMS, threads=cfg.threads
    )


def cmd_theta(cfg: RunConfig, out) -> int:
    pm = _omega(cfg)
    rows = []
    for i, z in enumerate(cfg.params["z"]):
        if z.shape[0] != pm.genus:
            raise InputError(f"--z #{i + 1} has {z.shape[0]} coordinates, genus is {pm.genus}")
        v = theta.theta_series(z, pm, cfg.params["tol"])
        rows.append([i, pm.genus, v.value.real, v.value.imag, v.norm, v.tail_bound])
    write_csv(out, "theta", rows)
    return 0


def cmd_hx(cfg: RunConfig, out) -> int:
    est = integrals.estimate_hx(
        _omega(cfg), cfg.params["samples"], surface.SeededSampler(cfg.seed),
        streams=cfg.params["streams"], threads=cfg.threads,
    )
    write_csv(out, "hx", [[est.mean, est.stderr, est.samples, est.dropped]])
    return 0


def cmd_an(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    x = cfg.params["x"]
    est = integrals.estimate_an(
        x, cfg.params["n"], s, cfg.params["samples"], surface.SeededSampler(cfg.seed),
        streams=cfg.params["streams"], threads=cfg.threads,
    )
    write_csv(out, "an", [[x.real, x.imag, cfg.params["n"], est.mean, est.stderr, est.samples, est.dropped]])
    return 0


def cmd_green(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    x, y = cfg.params["x"], cfg.params["y"]
    write_csv(out, "green", [[x.real, x.imag, y.real, y.imag, green.green(x, y, s)]])
    return 0


def cmd_atlas(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    atlas = green.build_torus_atlas(s, cfg.params["r1"], cfg.params["r2"], grid=cfg.params["grid"])
    out.write(atlas.to_text())
    return 0


def cmd_fay(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    n, trials = cfg.params["n"], cfg.params["trials"]
    if n < 1 or trials < 1:
        raise InputError("need --n >= 1 and --trials >= 1")
    rng = surface.SeededSampler(cfg.seed).generator
    rows, bad = [], 0
    for t in range(trials):
        sys_, xs = fay.random_instance(s, n, rng)
        r = fay.verify_fay_identity(sys_, xs, cfg.params["tol"])
        slack = fay.lemma41_inequality(sys_, xs)
        bad += (not r.passed) + (slack < -LEMMA_SLACK_TOL)
        rows.append([t, n, r.log_lhs, r.log_rhs, r.residual, r.separability_residual, slack, r.condition_number])
    write_csv(out, "fay", rows)
    return 1 if bad else 0


LEMMA_SLACK_TOL = 1e-9


def cmd_bound(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    atlas = _atlas(cfg, s)
    hx = _hx(cfg, s)
    n = cfg.params["n"]
    rep = elkies.theorem1_bound(elkies.BoundInputs.from_atlas(atlas, hx, n))
    write_csv(
        out, "bound",
        [[n, rep.total, rep.total_h_low, rep.total_h_high, rep.sharp_total, rep.log_total, hx.mean, hx.stderr]],
    )
    out.write("\n")
    write_kv(out, "breakdown", list(rep.terms.items()) + [("per_point", rep.per_point)])
    out.write("\n")
    out.write("[atlas]\n")
    out.write(atlas.to_text())
    return 0


def cmd_verify(cfg: RunConfig, out) -> int:
    s = _surface(cfg)
    atlas = _atlas(cfg, s)
    hx = _hx(cfg, s)
    n = cfg.params["n"]
    res = elkies.verify_theorem1(
        s, atlas, n, cfg.params["trials"], surface.SeededSampler(cfg.seed, 1), hx,
        cluster_radius=cfg.params["cluster_radius"], threads=cfg.threads,
    )
    rows = [
        [m.kind, n, m.trials, m.violations, m.min_slack, m.median_slack, m.max_energy, res.bound.total]
        for m in res.summaries
    ]
    write_csv(out, "verify", rows)
    return 1 if res.violations else 0


def cmd_merkl(cfg: RunConfig, out) -> int:
    p = cfg.params
    c0 = elkies.merkl_c0(p["m"], p["r1"], p["M"], p["C1"])
    write_csv(out, "merkl-c0", [[p["m"], p["r1"], p["M"], p["C1"], c0]])
    return 0


def cmd_suite(cfg: RunConfig, out) -> int:
    from .suite import run_suite

    tau = cfg.params.get("tau") or 1j
    results = run_suite(tau=tau, seed=cfg.seed, quick=cfg.params["quick"], threads=cfg.threads)
    write_csv(out, "suite", [[r.name, r.passed, r.detail] for r in results])
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "theta": cmd_theta,
    "hx": cmd_hx,
    "an": cmd_an,
    "green": cmd_green,
    "atlas": cmd_atlas,
    "fay": cmd_fay,
    "bound": cmd_bound,
    "verify": cmd_verify,
    "merkl-c0": cmd_merkl,
    "suite": cmd_suite,
}


def run(cfg: RunConfig, stream=None) -> int:
    """Execute one command; returns the exit status."""
    buf = io.StringIO()
    buf.write(header(cfg) + "\n")
    status = COMMANDS[cfg.command](cfg, buf)
    text = buf.getvalue()
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        (stream or sys.stdout).write(text)
    return status


def main(argv=None) -> int:
    try:
        cfg = parse_run_config(argv)
        return run(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ViolationDetected as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return 1
    except ArakelovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
