"""Command-line interface: ``pnr-receiver <command> [options]``.

Settings are resolved in three layers: built-in defaults, then an optional
JSON ``--config`` document, then explicit flags. The resolved document is
embedded in every output file and can be printed with ``--dump-config``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .baselines import helstrom_bound, homodyne_limit
from .decision import error_probability
from .model import (
    AfterpulseMode,
    Alphabet,
    AlphabetKind,
    NoiseModel,
    ParameterError,
    PnrResolution,
    Priors,
    ReceiverConfig,
)
from .optimize import default_bracket, landscape, optimize_displacement
from .simulate import RunPlan, run_experiment
from .sweep import comparison_study, dark_floor_study, error_curves, improvement_curve, ratio_map

THREADS_ENV = "PNR_RECEIVER_THREADS"
COMMANDS = ("error-curve", "optimize", "landscape", "simulate", "ratio-map", "improvement",
            "dark-floor", "compare", "baselines")


class CliError(Exception):
    pass


@dataclass(frozen=True)
class Settings:
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    alpha_sq_grid: tuple = (1.0,)
    m_list: tuple = (1,)
    xi_grid: tuple = tuple(np.round(np.linspace(0.99, 1.0, 60), 8).tolist())
    eta_list: tuple = (1.0,)
    alphabets: tuple = ("BPSK", "OOK_PEAK", "OOK_AVG")
    presets: tuple = ()
    beta_mode: str = "opt"
    trials: int = 100_000
    runs: int = 1
    seed: int = 0
    grid_points: int = 400
    threads: int = 1

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["receiver"] = self.receiver.to_dict()
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Settings":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(sorted(unknown)[0], "unknown config field")
        kw = {}
        for k, v in data.items():
            if k == "receiver":
                kw[k] = ReceiverConfig.from_dict(v)
            elif isinstance(v, list):
                kw[k] = tuple(v)
            else:
                kw[k] = v
        s = cls(**kw)
        _validate(s)
        return s


def _validate(s: Settings):
    for a2 in s.alpha_sq_grid:
        if not isinstance(a2, (int, float)) or a2 < 0:
            raise ParameterError("alpha_sq", f"must be >= 0, got {a2!r}")
    for m in s.m_list:
        PnrResolution(m)
    for xi in s.xi_grid:
        NoiseModel(xi=xi)
    for eta in s.eta_list:
        NoiseModel(eta=eta)
    for k in s.alphabets:
        if k not in AlphabetKind.__members__:
            raise ParameterError("alphabets", f"unknown alphabet {k!r}")
    _parse_beta_mode(s.beta_mode)
    if int(s.trials) != s.trials or s.trials < 1:
        raise ParameterError("trials", f"must be a positive integer, got {s.trials!r}")
    if int(s.runs) != s.runs or s.runs < 1:
        raise ParameterError("runs", f"must be a positive integer, got {s.runs!r}")
    if int(s.seed) != s.seed or s.seed < 0:
        raise ParameterError("seed", f"must be a nonnegative integer, got {s.seed!r}")
    if int(s.threads) != s.threads or s.threads < 1:
        raise ParameterError("threads", f"must be a positive integer, got {s.threads!r}")
    if int(s.grid_points) != s.grid_points or s.grid_points < 2:
        raise ParameterError("grid_points", f"must be an integer >= 2, got {s.grid_points!r}")


def _parse_beta_mode(mode: str) -> str:
    if mode in ("opt", "null"):
        return mode
    if isinstance(mode, str) and mode.startswith("fixed:"):
        try:
            value = float(mode.split(":", 1)[1])
        except ValueError:
            raise ParameterError("beta_mode", f"bad fixed displacement in {mode!r}") from None
        if not value >= 0:
            raise ParameterError("beta_mode", f"displacement must be >= 0 in {mode!r}")
        return mode
    raise ParameterError("beta_mode", f"expected opt, null or fixed:<value>, got {mode!r}")


def parse_list(text: str, cast=float, name: str = "value") -> tuple:
    """``"1,2,3"`` or ``"start:stop:step"`` (stop inclusive) into a tuple."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(cast(round(start + i * step, 12)) for i in range(n))
        return tuple(cast(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ParameterError(name, f"cannot parse {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pnr-receiver", description="Displaced PNR receiver for binary coherent states.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON settings document")
        s.add_argument("--alpha-sq", help="mean photon number(s): a,b,c or start:stop:step")
        s.add_argument("--m", help="PNR resolution(s)")
        s.add_argument("--xi", type=float, help="visibility")
        s.add_argument("--xi-grid", help="visibility grid for ratio-map")
        s.add_argument("--eta", help="detection efficiency (list for improvement)")
        s.add_argument("--nu", type=float, help="dark counts per pulse")
        s.add_argument("--pap", type=float, help="afterpulse probability")
        s.add_argument("--beta", type=float, help="fixed displacement (same as --beta-mode fixed:<v>)")
        s.add_argument("--beta-mode", help="opt, null or fixed:<value>")
        s.add_argument("--alphabet", choices=[k.value for k in AlphabetKind])
        s.add_argument("--alphabets", help="comma-separated alphabets for dark-floor")
        s.add_argument("--presets", help="comma-separated presets for compare")
        s.add_argument("--afterpulse-mode", choices=[k.value for k in AfterpulseMode])
        s.add_argument("--prior-h1", type=float)
        s.add_argument("--trials", type=int)
        s.add_argument("--runs", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--grid-points", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--out", help="output path (default stdout)")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--dump-config", action="store_true", help="print the resolved settings and exit")
    return p


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParameterError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError("config", f"invalid JSON in {path}: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ParameterError("config", "top level must be a JSON object")
    return data


def resolve_settings(args: argparse.Namespace) -> Settings:
    base = Settings()
    env_threads = os.environ.get(THREADS_ENV)
    if env_threads:
        try:
            base = dataclasses.replace(base, threads=int(env_threads))
        except ValueError:
            raise ParameterError(THREADS_ENV, f"not an integer: {env_threads!r}") from None
    doc = base.to_dict()
    if args.config:
        cfg = _load_config(args.config)
        rec = dict(doc["receiver"])
        for key, value in cfg.pop("receiver", {}).items():
            if isinstance(value, dict) and isinstance(rec.get(key), dict):
                rec[key] = {**rec[key], **value}
            else:
                rec[key] = value
        doc.update(cfg)
        doc["receiver"] = rec
    rec = doc["receiver"]
    if args.alpha_sq is not None:
        doc["alpha_sq_grid"] = list(parse_list(args.alpha_sq, name="alpha_sq"))
    if args.m is not None:
        doc["m_list"] = list(parse_list(args.m, int, "m"))
    if args.xi_grid is not None:
        doc["xi_grid"] = list(parse_list(args.xi_grid, name="xi_grid"))
    if args.eta is not None:
        doc["eta_list"] = list(parse_list(args.eta, name="eta"))
    noise = dict(rec["noise"])
    for flag, key in (("xi", "xi"), ("nu", "nu"), ("pap", "p_ap")):
        if getattr(args, flag) is not None:
            noise[key] = getattr(args, flag)
    if args.eta is not None:
        noise["eta"] = doc["eta_list"][0]
    rec["noise"] = noise
    if args.alphabet:
        rec["alphabet"] = {**rec["alphabet"], "kind": args.alphabet}
    if args.afterpulse_mode:
        rec["afterpulse_mode"] = args.afterpulse_mode
    if args.prior_h1 is not None:
        rec["priors"] = {"p_h1": args.prior_h1}
    if args.alphabets:
        doc["alphabets"] = args.alphabets.split(",")
    if args.presets:
        doc["presets"] = args.presets.split(",")
    if args.beta is not None:
        doc["beta_mode"] = f"fixed:{args.beta}"
    if args.beta_mode is not None:
        doc["beta_mode"] = args.beta_mode
    for key in ("trials", "runs", "seed", "grid_points", "threads"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    # receiver alpha and m follow the first grid entries
    if doc["alpha_sq_grid"]:
        a2 = doc["alpha_sq_grid"][0]
        if not isinstance(a2, (int, float)) or a2 < 0:
            raise ParameterError("alpha_sq", f"must be >= 0, got {a2!r}")
        rec["alphabet"] = {**rec["alphabet"], "alpha": math.sqrt(a2)}
    if doc["m_list"]:
        rec["m"] = doc["m_list"][0]
    beta_mode = _parse_beta_mode(doc["beta_mode"])
    if beta_mode.startswith("fixed:"):
        rec["beta"] = float(beta_mode.split(":", 1)[1])
    elif beta_mode == "null":
        rec["beta"] = rec["alphabet"]["alpha"]
    return Settings.from_dict(doc)


def _receiver_at(s: Settings, alpha_sq: float, m: int) -> ReceiverConfig:
    r = s.receiver
    alpha = math.sqrt(alpha_sq)
    if s.beta_mode == "null":
        beta = alpha
    elif s.beta_mode.startswith("fixed:"):
        beta = float(s.beta_mode.split(":", 1)[1])
    else:
        beta = optimize_displacement(alpha, m, r.noise, alphabet_kind=r.alphabet.kind, priors=r.priors,
                                     afterpulse_mode=r.afterpulse_mode).beta_opt
    return dataclasses.replace(r, alphabet=Alphabet(r.alphabet.kind, alpha), beta=beta, resolution=PnrResolution(m))


def _noise_cols(noise: NoiseModel) -> dict:
    return {"xi": noise.xi, "eta": noise.eta, "nu": noise.nu, "p_ap": noise.p_ap}


def cmd_baselines(s: Settings):
    eta = s.receiver.noise.eta
    rows = [{"alpha_sq": a2, "eta": eta, "p_hom": homodyne_limit(math.sqrt(a2)),
             "p_hom_adj": homodyne_limit(math.sqrt(a2), eta), "p_hels": helstrom_bound(math.sqrt(a2))}
            for a2 in s.alpha_sq_grid]
    return rows, {}


def cmd_optimize(s: Settings):
    r = s.receiver
    rows, extra = [], {"candidates": []}
    for m in s.m_list:
        for a2 in s.alpha_sq_grid:
            res = optimize_displacement(math.sqrt(a2), m, r.noise, alphabet_kind=r.alphabet.kind, priors=r.priors,
                                        afterpulse_mode=r.afterpulse_mode, grid_points=s.grid_points)
            rows.append({"alpha_sq": a2, "m": m, **_noise_cols(r.noise), "beta_opt": res.beta_opt,
                         "beta_sq_opt": res.beta_sq_opt, "p_error": res.p_error_min,
                         "n_candidates": len(res.candidates), "degenerate": res.degenerate})
            extra["candidates"].append({"alpha_sq": a2, "m": m, "minima": [list(c) for c in res.candidates]})
    return rows, extra


def cmd_landscape(s: Settings):
    r = s.receiver
    rows = []
    for m in s.m_list:
        for a2 in s.alpha_sq_grid:
            alpha = math.sqrt(a2)
            lo, hi = default_bracket(alpha, m)
            grid = np.sqrt(np.linspace(lo * lo, hi * hi, s.grid_points))
            for beta, p in landscape(alpha, m, r.noise, grid, alphabet_kind=r.alphabet.kind, priors=r.priors,
                                     afterpulse_mode=r.afterpulse_mode):
                rows.append({"alpha_sq": a2, "m": m, **_noise_cols(r.noise), "beta": beta,
                             "beta_sq": beta * beta, "p_error": p})
    return rows, {}


def cmd_error_curve(s: Settings):
    r = s.receiver
    rows = error_curves(s.alpha_sq_grid, s.m_list, r.noise, beta_mode=s.beta_mode, threads=s.threads,
                        alphabet_kind=r.alphabet.kind, priors=r.priors, afterpulse_mode=r.afterpulse_mode)
    return rows, {}


def cmd_simulate(s: Settings):
    plan = RunPlan.uniform(s.trials, s.runs)
    rows, pooled = [], []
    for m in s.m_list:
        for a2 in s.alpha_sq_grid:
            cfg = _receiver_at(s, a2, m)
            analytic = error_probability(cfg)
            point = run_experiment(plan, [cfg], s.seed, threads=s.threads)[0]
            for i, est in enumerate(point.estimates):
                rows.append({"alpha_sq": a2, "m": m, **_noise_cols(cfg.noise), "beta": cfg.beta, "run": i,
                             "seed": est.seed, "trials": est.trials, "p_hat": est.p_hat, "sigma": est.sigma,
                             "p_analytic": analytic})
            pooled.append({"alpha_sq": a2, "m": m, "mean": point.mean, "std": point.std,
                           "pooled_sigma": point.pooled_sigma})
    return rows, {"pooled": pooled}


def cmd_ratio_map(s: Settings):
    r = s.receiver
    rows, extra = [], {"boundary": []}
    for m in s.m_list:
        rm = ratio_map(s.xi_grid, s.alpha_sq_grid, m, r.noise.eta, nu=r.noise.nu, p_ap=r.noise.p_ap,
                       threads=s.threads)
        rows.extend(rm.rows())
        extra["boundary"].append({"m": m, "points": [list(p) for p in rm.boundary]})
    return rows, extra


def cmd_improvement(s: Settings):
    r = s.receiver
    rows = improvement_curve(s.alpha_sq_grid, s.m_list, r.noise.xi, s.eta_list, nu=r.noise.nu,
                             p_ap=r.noise.p_ap, threads=s.threads)
    return rows, {}


def cmd_dark_floor(s: Settings):
    nu = s.receiver.noise.nu
    if nu <= 0:
        raise ParameterError("nu", "dark-floor needs a positive dark-count mean")
    study = dark_floor_study(s.alphabets, s.m_list, nu, s.alpha_sq_grid, threads=s.threads)
    floors = [{"alphabet": k.value, "m": m, "floor": v} for (k, m), v in sorted(study.floors.items())]
    return study.rows, {"floors": floors}


def cmd_compare(s: Settings):
    return comparison_study(s.alpha_sq_grid, s.presets or None, threads=s.threads), {}


HANDLERS = {
    "baselines": cmd_baselines, "optimize": cmd_optimize, "landscape": cmd_landscape,
    "error-curve": cmd_error_curve, "simulate": cmd_simulate, "ratio-map": cmd_ratio_map,
    "improvement": cmd_improvement, "dark-floor": cmd_dark_floor, "compare": cmd_compare,
}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def render(command: str, s: Settings, rows: list, extra: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {"command": command, "version": __version__, "config": s.to_dict(), "rows": rows, **extra}
        return json.dumps(doc, indent=2, default=_jsonable) + "\n"
    buf = io.StringIO()
    buf.write(f"# pnr-receiver {__version__} {command}\n")
    buf.write(f"# config: {json.dumps(s.to_dict(), sort_keys=True)}\n")
    for key, value in extra.items():
        buf.write(f"# {key}: {json.dumps(value, default=_jsonable)}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def read_csv_config(text: str) -> Settings:
    """Recover the settings embedded in a CSV written by this tool."""
    for line in text.splitlines():
        if line.startswith("# config: "):
            return Settings.from_dict(json.loads(line[len("# config: "):]))
    raise ValueError("no embedded config found")


def run_command(argv) -> int:
    """Run one CLI invocation; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
        settings = resolve_settings(args)
        if args.dump_config:
            text = json.dumps(settings.to_dict(), indent=2) + "\n"
        else:
            rows, extra = HANDLERS[args.command](settings)
            text = render(args.command, settings, rows, extra, args.format)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except CliError as exc:
        print(f"pnr-receiver: error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"pnr-receiver: error: invalid {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"pnr-receiver: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
