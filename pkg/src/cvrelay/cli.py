"""Command-line front end: ``cvrelay <subcommand> [flags]``.

Exit codes: 0 success, 1 I/O failure, 2 invalid parameters or usage,
3 root-finding or numerical failure.
"""

import argparse
import sys

import numpy as np

from . import output
from .attacks import ATTACK_KINDS, AttackParams, classify_plane, named_attack
from .errors import InvalidParameterError, NumericFailureError, SolverError
from .rates import RateConfig, classical_mutual_information, key_rate, post_relay_cm, rate_surface
from .simulation import (
    SimConfig,
    analytic_alpha_gamma_mi,
    empirical_conditional_cm,
    empirical_mutual_information,
    simulate,
)
from .thresholds import optimal_modulation, tau_from_distance, threshold_curve

RATE_COLUMNS = ["tau", "omega", "g", "gp", "eta", "etap", "beta", "mu",
                "lambda", "lambda_p", "i_ab", "i_e", "rate"]
THRESHOLD_COLUMNS = ["tau", "d_km", "omega_root", "sign_below", "sign_above"]
PLANE_COLUMNS = ["g", "gp", "class", "rate"]
SIM_COLUMNS = ["quantity", "empirical", "stderr", "analytic", "z"]
MU_COLUMNS = ["mu", "rate", "optimal"]
CM_LABELS = ("aq", "ap", "bq", "bp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _kebab(kind):
    return kind.replace("_", "-")


def _attack_list(text):
    if text == "all":
        return list(ATTACK_KINDS)
    kinds = [k.strip().replace("-", "_") for k in text.split(",") if k.strip()]
    for k in kinds:
        named_attack(k, 1.0)
    return kinds


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value defaults file")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="write to FILE instead of stdout")
    common.add_argument("--beta", type=float, help="reconciliation efficiency (default 1)")
    common.add_argument("--eta", type=float, help="detector efficiency, both detectors (default 1)")
    common.add_argument("--etap", type=float, help="p-detector efficiency (default: --eta)")
    common.add_argument("--mu", help="finite modulation, or 'asymptotic' (default)")
    common.add_argument("--reference-mu", dest="reference_mu", type=float)
    common.add_argument("--threads", type=int)

    where = argparse.ArgumentParser(add_help=False)
    g = where.add_mutually_exclusive_group()
    g.add_argument("--tau", help="transmissivity value or grid start:stop:step")
    g.add_argument("--distance", help="distance (km) value or grid, 0.2 dB/km")

    p = _Parser(prog="cvrelay", description="Key rates and thresholds for the symmetric CV relay protocol.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("rate", parents=[common, where], help="one rate breakdown")
    r.add_argument("--omega", type=float, required=True)
    r.add_argument("--attack", default="collective")
    r.add_argument("--g", type=float)
    r.add_argument("--gp", type=float)

    s = sub.add_parser("sweep", parents=[common, where], help="rates over tau x omega grids")
    s.add_argument("--omega", required=True)
    s.add_argument("--attack", default="collective", help="comma list or 'all'")

    t = sub.add_parser("threshold", parents=[common, where], help="security threshold curve")
    t.add_argument("--attack", default="collective")
    t.add_argument("--omega-max", dest="omega_max", type=float)
    t.add_argument("--scan-points", dest="scan_points", type=int)

    pl = sub.add_parser("plane", parents=[common], help="classified correlation plane")
    pl.add_argument("--omega", type=float, required=True)
    pl.add_argument("--grid", type=int, default=201)
    pl.add_argument("--tau", type=float, default=0.9)

    m = sub.add_parser("simulate", parents=[common, where], help="Monte Carlo check")
    m.add_argument("--omega", type=float, required=True)
    m.add_argument("--attack", default="collective")
    m.add_argument("--rounds", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--dump", help="write raw samples as CSV")

    o = sub.add_parser("optimal-mu", parents=[common, where], help="best finite modulation")
    o.add_argument("--omega", type=float, required=True)
    o.add_argument("--attack", default="epr-negative")
    o.add_argument("--mu-grid", dest="mu_grid", default="10:1000:10")
    return p


def _settings(args):
    config = output.load_config(args.config) if args.config else {}
    flags = {k: getattr(args, k, None) for k in output.DEFAULTS}
    s = output.merge_settings(flags, config)
    if s["etap"] is None:
        s["etap"] = s["eta"]
    return s


def _rate_config(s, need_finite=False):
    mu = str(s["mu"]).strip().lower()
    if mu in ("asymptotic", "inf", "infinite"):
        if need_finite:
            raise InvalidParameterError("this command needs a finite --mu")
        return RateConfig(None, s["beta"], s["reference_mu"])
    try:
        value = float(mu)
    except ValueError:
        raise InvalidParameterError(f"bad --mu {s['mu']!r}") from None
    return RateConfig(value, s["beta"], s["reference_mu"])


def _taus(args, default=None):
    if args.tau is not None:
        return output.parse_grid(args.tau)
    if args.distance is not None:
        return [tau_from_distance(d) for d in output.parse_grid(args.distance)]
    if default is not None:
        return [default]
    raise InvalidParameterError("give --tau or --distance")


def _rate_record(p, cfg, b):
    return {
        "tau": p.tau, "omega": p.omega, "g": p.g, "gp": p.gp, "eta": p.eta, "etap": p.etap,
        "beta": cfg.beta, "mu": b.mu, "lambda": b.noise.lam, "lambda_p": b.noise.lamp,
        "i_ab": b.i_ab, "i_e": b.i_e, "rate": b.rate,
    }


def cmd_rate(args, s):
    cfg = _rate_config(s)
    taus = _taus(args)
    if len(taus) != 1:
        raise InvalidParameterError("rate takes a single --tau/--distance; use sweep for grids")
    g, gp = named_attack(args.attack, args.omega)
    if args.g is not None:
        g = args.g
    if args.gp is not None:
        gp = args.gp
    p = AttackParams(taus[0], args.omega, g, gp, s["eta"], s["etap"])
    return [_rate_record(p, cfg, key_rate(p, cfg))], RATE_COLUMNS


def cmd_sweep(args, s):
    cfg = _rate_config(s)
    rows = []
    for kind in _attack_list(args.attack):
        for tau in _taus(args):
            for omega in output.parse_grid(args.omega):
                p = AttackParams.named(kind, tau, omega, s["eta"], s["etap"])
                rows.append({"attack": _kebab(kind), **_rate_record(p, cfg, key_rate(p, cfg))})
    return rows, ["attack"] + RATE_COLUMNS


def cmd_threshold(args, s):
    cfg = _rate_config(s)
    kinds = _attack_list(args.attack)
    if len(kinds) != 1:
        raise InvalidParameterError("threshold takes one attack")
    curve = threshold_curve(kinds[0], cfg, taus=_taus(args), omega_max=s["omega_max"],
                            eta=s["eta"], etap=s["etap"], scan_points=s["scan_points"],
                            workers=s["threads"])
    rows = []
    for pt in curve.points:
        base = {"tau": pt.tau, "d_km": pt.distance_km}
        if not pt.roots:
            sign = 1 if pt.diagnostic == "positive" else -1
            rows.append({**base, "omega_root": None, "sign_below": sign, "sign_above": sign})
        for r in pt.roots:
            rows.append({**base, "omega_root": r.omega, "sign_below": r.sign_below,
                         "sign_above": r.sign_above})
    return rows, THRESHOLD_COLUMNS


def cmd_plane(args, s):
    cfg = _rate_config(s)
    grid = classify_plane(args.omega, args.grid)
    G, GP = np.meshgrid(grid.g, grid.gp, indexing="ij")
    if cfg.asymptotic:
        R = rate_surface(args.tau, args.omega, G, GP, s["eta"], s["etap"], cfg.beta, cfg.reference_mu)
    else:
        R = np.full(G.shape, np.nan)
        for i, j in zip(*np.nonzero(grid.classes)):
            p = AttackParams(args.tau, args.omega, G[i, j], GP[i, j], s["eta"], s["etap"])
            R[i, j] = key_rate(p, cfg).rate
    rows = []
    for i in range(G.shape[0]):
        for j in range(G.shape[1]):
            cls = int(grid.classes[i, j])
            rows.append({"g": G[i, j], "gp": GP[i, j],
                         "class": ("nonphysical", "separable", "entangled")[cls],
                         "rate": None if cls == 0 else float(R[i, j])})
    return rows, PLANE_COLUMNS


def cmd_simulate(args, s):
    cfg = _rate_config(s, need_finite=True)
    taus = _taus(args)
    if len(taus) != 1:
        raise InvalidParameterError("simulate takes a single --tau/--distance")
    p = AttackParams.named(args.attack, taus[0], args.omega, s["eta"], s["etap"])
    sim = SimConfig(p, cfg.mu, s["rounds"], s["seed"], keep_samples=args.dump is not None)
    batch = simulate(sim, workers=s["threads"])
    if args.dump:
        batch.write_csv(args.dump)
    est = empirical_conditional_cm(batch)
    V = post_relay_cm(cfg.mu, p)
    analytic = 0.5 * (V + np.eye(4))
    rows = []
    for i in range(4):
        for j in range(i, 4):
            e, se, a = est.cm[i, j], est.stderr[i, j], analytic[i, j]
            rows.append({"quantity": f"cm_{CM_LABELS[i]}_{CM_LABELS[j]}", "empirical": e,
                         "stderr": se, "analytic": a, "z": (e - a) / se})
    cond, ag = empirical_mutual_information(batch)
    for name, est_mi, a in (("mi_ab_given_gamma", cond, classical_mutual_information(V)),
                            ("mi_a_gamma", ag, analytic_alpha_gamma_mi(cfg.mu, p))):
        rows.append({"quantity": name, "empirical": est_mi.bits, "stderr": est_mi.stderr,
                     "analytic": a, "z": (est_mi.bits - a) / est_mi.stderr})
    return rows, SIM_COLUMNS


def cmd_optimal_mu(args, s):
    taus = _taus(args)
    if len(taus) != 1:
        raise InvalidParameterError("optimal-mu takes a single --tau/--distance")
    opt = optimal_modulation(taus[0], args.omega, args.attack, s["beta"], s["eta"], s["etap"],
                             output.parse_grid(args.mu_grid))
    rows = [{"mu": m, "rate": r, "optimal": bool(m == opt.mu_star)}
            for m, r in zip(opt.mu_grid, opt.rates)]
    return rows, MU_COLUMNS


COMMANDS = {
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "plane": cmd_plane,
    "simulate": cmd_simulate,
    "optimal-mu": cmd_optimal_mu,
}


def run(argv=None, stdout=None, stderr=None):
    """Execute one subcommand and return its exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _settings(args)
        rows, columns = COMMANDS[args.command](args, settings)
    except _UsageError as exc:
        print(exc, file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except InvalidParameterError as exc:
        print(f"cvrelay: error: {exc}", file=stderr)
        return 2
    except (SolverError, NumericFailureError) as exc:
        print(f"cvrelay: solver failed: {exc}", file=stderr)
        return 3
    except OSError as exc:
        print(f"cvrelay: I/O error: {exc}", file=stderr)
        return 1
    try:
        output.emit(rows, settings["format"], args.out, columns, stream=stdout)
    except OSError as exc:
        print(f"cvrelay: cannot write output: {exc}", file=stderr)
        return 1
    return 0


def main():
    sys.exit(run())

