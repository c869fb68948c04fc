"""Command-line surface: risk queries, selection on files, MC runs, sweeps.

Every command is a thin wrapper over the library; outputs are JSON for
single results and long-format CSV for tables, with floats printed at 17
significant digits so replayed runs are byte-identical.  Exit codes:
0 success, 2 usage or validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import traceback

import numpy as np

from . import risk, simulate
from .model import (
    CrowdInstance,
    Family,
    Interval,
    LossKind,
    LowerBound,
    ProblemInstance,
    TwoSided,
    fresh_seed,
    read_observations_csv,
    read_rates_csv,
    read_votes_csv,
    support_summary,
)
from .selectors import (
    SELECTOR_KINDS,
    adaptive_selector,
    cosh_selector,
    cosh_threshold,
    crowd_selector,
    crowd_weights,
    llr_selector,
    llr_threshold,
    spec_for_kind,
    threshold_one_sided,
    threshold_two_sided,
    top_s_selector,
    universal_selector,
    universal_threshold,
)

_LOSS_FLAGS = {
    "hamming": LossKind.HAMMING,
    "normalized": LossKind.NORMALIZED_HAMMING,
    "wrong-recovery": LossKind.WRONG_RECOVERY,
}

_FAMILY_FOR_CLASS = {
    "interval": Family.GAUSSIAN,
    "bernoulli": Family.BERNOULLI,
    "poisson": Family.POISSON,
}

_DEFAULT_WHICH = {
    "plus": "psi-plus",
    "two-sided": "psi-bar",
    "interval": "general",
    "bernoulli": "general",
    "poisson": "general",
}

_TABLE_COLUMNS = [
    "d",
    "s",
    "a",
    "sigma",
    "rho",
    "family",
    "selector",
    "loss_kind",
    "estimate",
    "stderr",
    "replications",
    "seed",
    "a_multiplier",
    "a_almost_full",
    "a_exact",
    "t_star",
]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt_float(v: float) -> str:
    out = format(v, ".17g")
    if "." not in out and "e" not in out and "E" not in out:
        if "inf" not in out and "nan" not in out:
            out += ".0"
    return out


def _json_text(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ", ".join(
            f"{json.dumps(str(k))}: {_json_text(v)}" for k, v in obj.items()
        )
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_text(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    return str(v)


def _write_table(rows: list[dict], stream) -> None:
    stream.write(",".join(_TABLE_COLUMNS) + "\n")
    for row in rows:
        stream.write(",".join(_csv_cell(row[c]) for c in _TABLE_COLUMNS) + "\n")


# ---------------------------------------------------------------------------
# Shared flag handling
# ---------------------------------------------------------------------------


def _require(value, flag: str, context: str):
    if value is None:
        raise ValueError(f"{flag} is required for {context}")
    return value


def _build_instance(args) -> ProblemInstance:
    klass = args.klass
    if klass == "plus":
        signal = LowerBound(_require(args.a, "--a", "--class plus"))
        family = Family.GAUSSIAN
    elif klass == "two-sided":
        signal = TwoSided(_require(args.a, "--a", "--class two-sided"))
        family = Family.GAUSSIAN
    else:
        a0 = _require(args.a0, "--a0", f"--class {klass}")
        a1 = _require(args.a1, "--a1", f"--class {klass}")
        signal = Interval(a0, a1)
        family = _FAMILY_FOR_CLASS[klass]
    return ProblemInstance(args.d, args.s, signal, family, args.sigma)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError(f"{flag}: empty list")
    return values


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise ValueError(f"{flag}: empty list")
    return values


def _parse_s_rule(text: str):
    """'fixed:k' -> k, 'power:beta' -> d |-> ceil(d^(1-beta))."""
    kind, _, value = text.partition(":")
    if kind == "fixed":
        try:
            return int(value)
        except ValueError:
            raise ValueError(f"s-rule 'fixed:' needs an integer, got {value!r}") from None
    if kind == "power":
        try:
            beta = float(value)
        except ValueError:
            raise ValueError(f"s-rule 'power:' needs a number, got {value!r}") from None
        if not 0.0 <= beta < 1.0:
            raise ValueError(f"s-rule power exponent must lie in [0,1), got {beta}")
        return lambda d: math.ceil(d ** (1.0 - beta))
    raise ValueError(f"s-rule must be 'fixed:k' or 'power:beta', got {text!r}")


def _parse_selectors(text: str) -> list[str]:
    kinds = [part.strip() for part in text.split(",") if part.strip()]
    if not kinds:
        raise ValueError("--selectors: empty list")
    for kind in kinds:
        if kind not in SELECTOR_KINDS:
            raise ValueError(
                f"unknown selector {kind!r}; choose from {', '.join(SELECTOR_KINDS)}"
            )
    return kinds


# ---------------------------------------------------------------------------
# risk
# ---------------------------------------------------------------------------


def cmd_risk(args) -> int:
    which = args.which or _DEFAULT_WHICH[args.klass]
    d, s, sigma = args.d, args.s, args.sigma
    if which == "general":
        if args.klass not in _FAMILY_FOR_CLASS:
            raise ValueError(
                "--which general needs --class interval, bernoulli, or poisson"
            )
        family = _FAMILY_FOR_CLASS[args.klass]
        a0 = _require(args.a0, "--a0", "--which general")
        a1 = _require(args.a1, "--a1", "--which general")
        out = {
            "psi": risk.psi_general(family, d, s, a0, a1, sigma),
            "t": llr_threshold(family, d, s, a0, a1, sigma),
        }
    else:
        if args.klass not in ("plus", "two-sided"):
            raise ValueError(f"--which {which} needs --class plus or two-sided")
        a = _require(args.a, "--a", f"--which {which}")
        if which == "psi-plus":
            out = {"psi_plus": risk.psi_plus(d, s, a, sigma)}
        elif which == "psi":
            out = {"psi": risk.psi_two_sided(d, s, a, sigma)}
        elif which == "psi-bar":
            out = {"psi_bar": risk.psi_bar(d, s, a, sigma)}
        elif which == "bounds":
            b = risk.delta_bounds(d, s, a, sigma)
            out = {"w": b.w, "delta": b.delta, "lower": b.lower, "upper": b.upper}
        else:
            wr = risk.wrong_recovery_bounds(d, s, a, sigma)
            out = {
                "upper_plus": wr.upper_plus,
                "upper_bar": wr.upper_bar,
                "upper_two_sided": wr.upper_two_sided,
                "lower_plus": wr.lower_plus,
                "lower_bar": wr.lower_bar,
            }
    print(_json_text(out))
    return 0


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def _select_crowd(args) -> dict:
    if not (args.votes and args.rates):
        raise ValueError("crowd selection needs both --votes and --rates")
    s = _require(args.s, "--s", "crowd selection")
    crowd = CrowdInstance(read_votes_csv(args.votes), tuple(read_rates_csv(args.rates)))
    sv = crowd_selector(crowd, s)
    weights, intercept = crowd_weights(crowd.rates)
    out = support_summary(sv)
    out["threshold_used"] = math.log((crowd.d - s) / s)
    out["diagnostics"] = {"weights": list(weights), "intercept": intercept}
    return out


def _select_file(args) -> dict:
    x = read_observations_csv(_require(args.input, "--input", "selection"))
    d = int(x.size)
    method = args.method
    diagnostics: dict = {}
    if method == "threshold":
        used = _require(args.t, "--t", "--method threshold")
        sv = threshold_one_sided(x, used)
    elif method == "threshold-abs":
        used = _require(args.t, "--t", "--method threshold-abs")
        sv = threshold_two_sided(x, used)
    elif method == "cosh":
        s = _require(args.s, "--s", "--method cosh")
        a = _require(args.a, "--a", "--method cosh")
        sv = cosh_selector(x, d, s, a, args.sigma)
        used = cosh_threshold(d, s, a, args.sigma)
    elif method == "llr":
        s = _require(args.s, "--s", "--method llr")
        a0 = _require(args.a0, "--a0", "--method llr")
        a1 = _require(args.a1, "--a1", "--method llr")
        family = Family(args.family)
        sv = llr_selector(x, family, d, s, a0, a1, args.sigma)
        used = llr_threshold(family, d, s, a0, a1, args.sigma)
    elif method == "tops":
        s = _require(args.s, "--s", "--method tops")
        sv = top_s_selector(x, s, one_sided=not args.by_abs)
        used = None
    elif method == "universal":
        sv = universal_selector(x, d, args.sigma)
        used = universal_threshold(d, args.sigma)
    else:
        s_star = _require(args.s_star, "--s-star", "--method adaptive")
        result = adaptive_selector(x, s_star, args.sigma)
        sv = result.support
        used = result.diagnostics["threshold_used"]
        diagnostics = {
            "chosen_m": result.chosen_m,
            "grid": result.diagnostics["grid"],
            "thresholds": result.diagnostics["thresholds"],
            "tau": result.diagnostics["tau"],
            "block_counts": {
                str(k): v for k, v in result.diagnostics["block_counts"].items()
            },
        }
    out = support_summary(sv)
    out["threshold_used"] = used
    out["diagnostics"] = diagnostics
    return out


def cmd_select(args) -> int:
    if args.votes or args.rates:
        out = _select_crowd(args)
    else:
        if args.method is None:
            raise ValueError("--method is required (or --votes/--rates for crowd data)")
        out = _select_file(args)
    print(_json_text(out))
    return 0


# ---------------------------------------------------------------------------
# mc
# ---------------------------------------------------------------------------


def _mc_closed_form(p: ProblemInstance, kind: str, loss: LossKind) -> float | None:
    """Exact reference risk when the selector is minimax for p's class."""
    if loss is LossKind.WRONG_RECOVERY:
        return None
    sig = p.signal
    if kind == "plus" and isinstance(sig, LowerBound):
        base = p.s * risk.psi_plus(p.d, p.s, sig.a, p.sigma)
    elif kind == "cosh" and isinstance(sig, TwoSided):
        base = p.s * risk.psi_bar(p.d, p.s, sig.a, p.sigma)
    elif kind == "llr" and isinstance(sig, (LowerBound, Interval)):
        a0, a1 = (sig.a0, sig.a1) if isinstance(sig, Interval) else (0.0, sig.a)
        base = p.s * risk.psi_general(p.family, p.d, p.s, a0, a1, p.sigma)
    else:
        return None
    return base if loss is LossKind.HAMMING else base / p.s


def cmd_mc(args) -> int:
    p = _build_instance(args)
    spec = spec_for_kind(args.selector, p, s_star=args.s_star)
    seed = args.seed if args.seed is not None else fresh_seed()
    cfg = simulate.MCConfig(
        replications=args.reps,
        seed=seed,
        rho=args.rho,
        loss_kind=_LOSS_FLAGS[args.loss],
    )
    report = simulate.estimate_risk(p, spec, cfg, threads=args.threads)
    sig = p.signal
    out = {
        "d": p.d,
        "s": p.s,
        "a": getattr(sig, "a", None),
        "a0": getattr(sig, "a0", None),
        "a1": getattr(sig, "a1", None),
        "sigma": p.sigma,
        "rho": cfg.rho,
        "family": p.family.value,
        "selector": args.selector,
        "loss": cfg.loss_kind.value,
        "estimate": report.mc_estimate,
        "stderr": report.mc_stderr,
        "replications": report.replications,
        "seed": report.seed,
        "closed_form": _mc_closed_form(p, args.selector, cfg.loss_kind),
    }
    print(_json_text(out))
    return 0


# ---------------------------------------------------------------------------
# phase / sweep
# ---------------------------------------------------------------------------


def _run_sweep(
    d_list,
    s_rule,
    a_multipliers,
    kinds,
    reps,
    seed,
    rho,
    sigma,
    loss,
    a_ref,
    s_star,
    out_path,
    threads,
) -> int:
    cfg = simulate.MCConfig(
        replications=reps,
        seed=seed if seed is not None else fresh_seed(),
        rho=rho,
        loss_kind=loss,
    )
    rows = simulate.phase_sweep(
        d_list,
        s_rule,
        a_multipliers,
        kinds,
        cfg,
        sigma=sigma,
        a_ref=a_ref,
        s_star=s_star,
        threads=threads,
    )
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            _write_table(rows, fh)
    else:
        _write_table(rows, sys.stdout)
    return 0


def cmd_phase(args) -> int:
    return _run_sweep(
        _parse_int_list(args.d_list, "--d-list"),
        _parse_s_rule(args.s_rule),
        _parse_float_list(args.a_mult, "--a-mult"),
        _parse_selectors(args.selectors),
        args.reps,
        args.seed,
        args.rho,
        args.sigma,
        _LOSS_FLAGS[args.loss],
        args.a_ref,
        args.s_star,
        args.out,
        args.threads,
    )


_SWEEP_DEFAULTS = {
    "rho": 0.0,
    "sigma": 1.0,
    "loss": "hamming",
    "a_ref": "almost-full",
    "s_star": None,
    "out": None,
}
_SWEEP_REQUIRED = ("d_list", "s_rule", "a_multipliers", "selectors", "replications", "seed")


def _config_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"config key {key!r}: expected an integer, got {value!r}")
    return value


def _config_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"config key {key!r}: expected a number, got {value!r}")
    return float(value)


def cmd_sweep(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{args.config}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"{args.config}: config must be a JSON object")
    known = set(_SWEEP_REQUIRED) | set(_SWEEP_DEFAULTS)
    for key in data:
        if key not in known:
            raise ValueError(f"config key {key!r}: unknown")
    for key in _SWEEP_REQUIRED:
        if key not in data:
            raise ValueError(f"config key {key!r}: missing")
    merged = {**_SWEEP_DEFAULTS, **data}

    if not isinstance(merged["d_list"], list) or not merged["d_list"]:
        raise ValueError("config key 'd_list': expected a nonempty list of integers")
    d_list = [_config_int(v, "d_list") for v in merged["d_list"]]
    if not isinstance(merged["s_rule"], str):
        raise ValueError("config key 's_rule': expected a string like 'power:0.5'")
    s_rule = _parse_s_rule(merged["s_rule"])
    if not isinstance(merged["a_multipliers"], list) or not merged["a_multipliers"]:
        raise ValueError("config key 'a_multipliers': expected a nonempty list of numbers")
    a_multipliers = [_config_number(v, "a_multipliers") for v in merged["a_multipliers"]]
    if not isinstance(merged["selectors"], list) or not all(
        isinstance(v, str) for v in merged["selectors"]
    ):
        raise ValueError("config key 'selectors': expected a list of selector names")
    kinds = _parse_selectors(",".join(merged["selectors"]))
    if merged["loss"] not in _LOSS_FLAGS:
        raise ValueError(
            f"config key 'loss': expected one of {sorted(_LOSS_FLAGS)}, got {merged['loss']!r}"
        )
    if merged["a_ref"] not in ("almost-full", "exact"):
        raise ValueError(
            f"config key 'a_ref': expected 'almost-full' or 'exact', got {merged['a_ref']!r}"
        )
    s_star = merged["s_star"]
    if s_star is not None:
        s_star = _config_int(s_star, "s_star")
    out_path = merged["out"]
    if out_path is not None and not isinstance(out_path, str):
        raise ValueError(f"config key 'out': expected a path string, got {out_path!r}")

    return _run_sweep(
        d_list,
        s_rule,
        a_multipliers,
        kinds,
        _config_int(merged["replications"], "replications"),
        _config_int(merged["seed"], "seed"),
        _config_number(merged["rho"], "rho"),
        _config_number(merged["sigma"], "sigma"),
        _LOSS_FLAGS[merged["loss"]],
        merged["a_ref"],
        s_star,
        out_path,
        args.threads,
    )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--class",
        dest="klass",
        required=True,
        choices=["plus", "two-sided", "interval", "bernoulli", "poisson"],
        help="signal class / noise family",
    )
    p.add_argument("--d", type=int, required=True, help="dimension")
    p.add_argument("--s", type=int, required=True, help="sparsity")
    p.add_argument("--a", type=float, help="signal level (plus/two-sided)")
    p.add_argument("--a0", type=float, help="null level or rate")
    p.add_argument("--a1", type=float, help="signal level or rate")
    p.add_argument("--sigma", type=float, default=1.0, help="noise level (default 1)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamsel",
        description="Support selection under Hamming loss: closed-form risks, "
        "selectors, and seeded Monte Carlo experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("risk", help="closed-form risk values and bounds")
    _add_instance_flags(p)
    p.add_argument(
        "--which",
        choices=["psi-plus", "psi", "psi-bar", "general", "bounds", "wrong-recovery"],
        help="quantity to print (default depends on --class)",
    )
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("select", help="run a selector on a data file")
    p.add_argument("--input", help="observations file, one value per line")
    p.add_argument(
        "--method",
        choices=["threshold", "threshold-abs", "cosh", "llr", "tops", "universal", "adaptive"],
    )
    p.add_argument("--t", type=float, help="threshold value")
    p.add_argument("--s", type=int, help="sparsity")
    p.add_argument("--a", type=float, help="signal level")
    p.add_argument("--a0", type=float)
    p.add_argument("--a1", type=float)
    p.add_argument(
        "--family",
        choices=[f.value for f in Family],
        default="gaussian",
        help="family for --method llr",
    )
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--s-star", dest="s_star", type=int, help="adaptive sparsity budget")
    p.add_argument(
        "--by-abs",
        dest="by_abs",
        action="store_true",
        help="rank --method tops by |value|",
    )
    p.add_argument("--votes", help="crowd votes file (m rows of d 0/1 entries)")
    p.add_argument("--rates", help="crowd rates file (m rows of 'a0,a1')")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("mc", help="Monte Carlo risk of a selector")
    _add_instance_flags(p)
    p.add_argument("--selector", required=True, choices=list(SELECTOR_KINDS))
    p.add_argument("--s-star", dest="s_star", type=int, help="adaptive sparsity budget")
    p.add_argument("--reps", type=int, required=True, help="replications")
    p.add_argument("--seed", type=int, help="64-bit seed (auto-chosen and echoed if omitted)")
    p.add_argument("--rho", type=float, default=0.0, help="equicorrelation in [0,1)")
    p.add_argument("--loss", choices=list(_LOSS_FLAGS), default="hamming")
    p.add_argument("--threads", type=int, help=f"worker threads (default ${simulate.THREADS_ENV} or 1)")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("phase", help="risk table over a (d, a-multiplier, selector) grid")
    p.add_argument("--d-list", dest="d_list", required=True, help="e.g. 100,1000,10000")
    p.add_argument(
        "--s-rule",
        dest="s_rule",
        required=True,
        help="'fixed:k' or 'power:beta' (s = ceil(d^(1-beta)))",
    )
    p.add_argument("--a-mult", dest="a_mult", required=True, help="e.g. 0.8,1,1.2")
    p.add_argument("--selectors", required=True, help=f"comma list from {','.join(SELECTOR_KINDS)}")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, help="64-bit seed (auto-chosen and echoed if omitted)")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--loss", choices=list(_LOSS_FLAGS), default="hamming")
    p.add_argument("--a-ref", dest="a_ref", choices=["almost-full", "exact"], default="almost-full")
    p.add_argument("--s-star", dest="s_star", type=int, help="adaptive sparsity budget")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("sweep", help="run a sweep from a JSON config file")
    p.add_argument("config", help="JSON config path (key set documented in README)")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
