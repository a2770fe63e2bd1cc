"""Command-line front end.

Every subcommand validates its arguments, runs one computation, optionally
writes a CSV or JSON artifact atomically and prints a one-line summary.

Exit status: 0 on success, 2 for invalid arguments, 3 when a truncated
computation exceeds its tail-mass budget.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from . import distillation as dist
from ._io import csv_text, fmt, json_text, write_atomic
from .fock import NORM_TOL, FockError, NumericalFailure, auto_cutoff
from .loss import (
    NUMERIC_TAIL_TOL,
    LossScenario,
    analytic_report,
    known_loss_gains,
    numeric_lossy_report,
    optimize_gains,
)
from .states import make_psi1
from .witness import (
    SamplerConfig,
    WitnessReport,
    evaluate_criterion,
    psi1_stokes,
    separable_sampler,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("witness", "loss", "gains", "distill", "fig2")
#: refuse dense four-mode states larger than this many amplitudes
MAX_DIMENSION = 4_000_000


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    lam: float = 0.5
    lams: tuple = (0.7, 0.8, 0.9)
    cutoff: int | str | None = "auto"
    r_a: float = 0.0
    r_b: float = 0.0
    g_a: float | str | None = None
    g_b: float | str | None = None
    n_i: int = 0
    n_ii: int = 0
    minus: tuple | None = None
    n_max: int = 10
    state: str = "psi1"
    out_path: str | None = None
    format: str = "csv"
    seed: int = 0
    tail_tol: float = NORM_TOL
    numeric_tail_tol: float = NUMERIC_TAIL_TOL
    extra: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        lams = self.lams if self.command == "fig2" else (self.lam,)
        for lam in lams:
            if not 0 <= lam < 1:
                raise UsageError(f"lambda must lie in [0, 1), got {lam}")
        for name in ("r_a", "r_b"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise UsageError(f"{name} must lie in [0, 1], got {v}")
        for name in ("g_a", "g_b"):
            v = getattr(self, name)
            if v is not None and v != "auto" and not v > 0:
                raise UsageError(f"{name} must be positive or 'auto', got {v}")
        if isinstance(self.cutoff, int) and self.cutoff < 0:
            raise UsageError("cutoff must be non-negative")
        if self.n_i < 0 or self.n_ii < 0 or self.n_max < 0:
            raise UsageError("photon counts must be non-negative")
        if self.minus is not None and min(self.minus) < 0:
            raise UsageError("photon counts must be non-negative")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.state not in ("psi1", "separable"):
            raise UsageError(f"state must be psi1 or separable, got {self.state!r}")
        if not self.tail_tol > 0 or not self.numeric_tail_tol > 0:
            raise UsageError("tolerances must be positive")
        return self

    def resolved_cutoff(self, lam: float) -> int:
        """``auto`` follows the tail-bound rule ``lam^(2(c+1)) <= tail_tol``."""
        if self.cutoff == "auto":
            return auto_cutoff(lam, self.tail_tol)
        return int(self.cutoff)


@dataclass(frozen=True)
class RunResult:
    status: int
    summary: str
    artifact: str | None = None


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _cutoff_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoff must be an integer or 'auto', got {text!r}")


def _gain_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gain must be a number or 'auto', got {text!r}")


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pair(text: str) -> tuple:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N_I,N_II, got {text!r}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, default=0.5, help="squeezing amplitude tanh(r)")
    common.add_argument("--out", dest="out_path", default=None, help="artifact path (written atomically)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tail-tol", type=float, default=NORM_TOL, help="tail bound for state construction")

    p = argparse.ArgumentParser(prog="twinfock", description="Twin-condensate entanglement toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", parents=[common], help="separability criterion on the four-mode state")
    w.add_argument("--cutoff", type=_cutoff_arg, default="auto")
    w.add_argument("--gA", dest="g_a", type=float, default=None)
    w.add_argument("--gB", dest="g_b", type=float, default=None)
    w.add_argument("--state", choices=("psi1", "separable"), default="psi1")
    w.add_argument("--leak-tol", dest="numeric_tail_tol", type=float, default=1e-10,
                   help="allowed weight where the Stokes algebra is truncated")

    lo = sub.add_parser("loss", parents=[common], help="closed-form (and optional numeric) loss run")
    lo.add_argument("--rA", dest="r_a", type=float, required=True)
    lo.add_argument("--rB", dest="r_b", type=float, required=True)
    lo.add_argument("--gA", dest="g_a", type=_gain_arg, default=None)
    lo.add_argument("--gB", dest="g_b", type=_gain_arg, default=None)
    lo.add_argument("--cutoff", type=_cutoff_arg, default=None, help="run the Kraus oracle at this cutoff")
    lo.add_argument("--leak-tol", dest="numeric_tail_tol", type=float, default=NUMERIC_TAIL_TOL)

    g = sub.add_parser("gains", parents=[common], help="optimise the gain ratio for known losses")
    g.add_argument("--rA", dest="r_a", type=float, required=True)
    g.add_argument("--rB", dest="r_b", type=float, required=True)

    d = sub.add_parser("distill", parents=[common], help="one photon-count outcome")
    d.add_argument("--nI", dest="n_i", type=int, required=True)
    d.add_argument("--nII", dest="n_ii", type=int, required=True)
    d.add_argument("--minus", type=_pair, default=None,
                   help="second-sector outcome N_I,N_II; adds the relabelled witness")

    f = sub.add_parser("fig2", parents=[common], help="success probability versus entanglement table")
    f.add_argument("--lambdas", dest="lams", type=_float_list, default=(0.7, 0.8, 0.9))
    f.add_argument("--n-max", dest="n_max", type=int, default=10)
    f.add_argument("--threads", type=int, default=None)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    keys = {f for f in RunConfig.__dataclass_fields__}
    kw = {k: v for k, v in vars(ns).items() if k in keys and v is not None}
    if "cutoff" in vars(ns):
        kw["cutoff"] = ns.cutoff
    extra = {}
    if getattr(ns, "threads", None) is not None:
        extra["threads"] = ns.threads
    return RunConfig(**kw, extra=extra)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _emit(cfg: RunConfig, csv_fields, rows, payload) -> str | None:
    if cfg.out_path is None:
        return None
    text = json_text(payload) if cfg.format == "json" else csv_text(csv_fields, rows)
    write_atomic(cfg.out_path, text)
    return cfg.out_path


def _witness(cfg: RunConfig) -> RunResult:
    gains = None
    if cfg.g_a is not None or cfg.g_b is not None:
        gains = (cfg.g_a or 1.0, cfg.g_b or 1.0)
    if cfg.state == "separable":
        state = separable_sampler(cfg.seed, SamplerConfig())
    else:
        c = cfg.resolved_cutoff(cfg.lam)
        if (c + 1) ** 4 > MAX_DIMENSION:
            raise UsageError(f"cutoff {c} gives {(c + 1) ** 4} amplitudes, above {MAX_DIMENSION}")
        state = make_psi1(cfg.lam, c, tail_tol=cfg.tail_tol)
    alice, bob = psi1_stokes(state.space)
    rep = evaluate_criterion(state, alice, bob, gains=gains, tail_tol=cfg.numeric_tail_tol)
    art = _emit(cfg, WitnessReport.CSV_FIELDS, [rep.csv_row()], rep.to_dict())
    return RunResult(EXIT_OK, f"witness={rep.witness:.6f}", art)


def _loss_gains(cfg: RunConfig) -> tuple:
    g_a, g_b = cfg.g_a, cfg.g_b
    if "auto" in (g_a, g_b):
        if cfg.r_a < 1 and cfg.r_b < 1:
            ka, kb = known_loss_gains(cfg.r_a, cfg.r_b)
        else:
            res = optimize_gains(LossScenario(cfg.r_a, cfg.r_b, cfg.lam))
            ka, kb = res.g_a, res.g_b
        g_a = ka if g_a == "auto" else g_a
        g_b = kb if g_b == "auto" else g_b
    return g_a, g_b


def _loss(cfg: RunConfig) -> RunResult:
    g_a, g_b = _loss_gains(cfg)
    s = LossScenario(cfg.r_a, cfg.r_b, cfg.lam, g_a, g_b)
    if cfg.cutoff is None:
        rep = analytic_report(s)
        summary = f"detected={fmt(rep.detected)}"
    else:
        c = cfg.resolved_cutoff(cfg.lam)
        if (c + 1) ** 4 > 10 ** 4:
            raise UsageError(f"numeric loss runs are dense in the density matrix; cutoff {c} is above 9")
        rep = numeric_lossy_report(s, c, cfg.numeric_tail_tol)
        summary = f"detected={fmt(rep.detected)} detected_numeric={fmt(rep.detected_numeric)}"
    art = _emit(cfg, rep.CSV_FIELDS, [rep.to_dict()], rep.to_dict())
    return RunResult(EXIT_OK, summary, art)


GAIN_FIELDS = ("lam", "r_a", "r_b", "g_a", "g_b", "ratio", "paper_ratio", "margin", "detected")


def _gains(cfg: RunConfig) -> RunResult:
    res = optimize_gains(LossScenario(cfg.r_a, cfg.r_b, cfg.lam))
    row = {
        "lam": cfg.lam, "r_a": cfg.r_a, "r_b": cfg.r_b, "g_a": res.g_a, "g_b": res.g_b,
        "ratio": res.ratio, "paper_ratio": res.paper_ratio, "margin": res.margin, "detected": res.detected,
    }
    art = _emit(cfg, GAIN_FIELDS, [row], row)
    return RunResult(EXIT_OK, f"ratio={res.ratio:.6f} detected={fmt(res.detected)}", art)


def _distill(cfg: RunConfig) -> RunResult:
    o = dist.CountOutcome(cfg.n_i, cfg.n_ii)
    rec = dist.outcome_record(cfg.lam, o)
    payload = {"record": rec.to_dict()}
    summary = (
        f"probability={rec.prob_numeric:.6g} paper_formula={rec.prob_paper_formula:.6g} "
        f"entropy={rec.entropy_nats:.6f}"
    )
    row = rec.csv_row()
    row.update(prob_paper_formula=rec.prob_paper_formula, coeffs=" ".join(fmt(float(c)) for c in rec.coeffs))
    fields_ = dist.FIG2_HEADER + ("prob_paper_formula", "coeffs")
    if cfg.minus is not None:
        w = dist.distilled_witness(cfg.lam, o, dist.CountOutcome(*cfg.minus))
        payload["witness"] = w.to_dict()
        summary += f" witness={w.witness:.6f}"
        row["witness"] = w.witness
        fields_ += ("witness",)
    art = _emit(cfg, fields_, [row], payload)
    return RunResult(EXIT_OK, summary, art)


def _fig2(cfg: RunConfig) -> RunResult:
    table = dist.figure2_sweep(cfg.lams, cfg.n_max, threads=cfg.extra.get("threads"))
    summaries = [s.to_dict() for s in table.summaries]
    art = None
    if cfg.out_path is not None:
        if cfg.format == "json":
            text = json_text({"records": [r.to_dict() for r in table.records], "summaries": summaries})
        else:
            text = csv_text(dist.FIG2_HEADER, [r.csv_row() for r in table.records])
        write_atomic(cfg.out_path, text)
        write_atomic(sidecar_path(cfg.out_path), json_text({"summaries": summaries}))
        art = cfg.out_path
    return RunResult(EXIT_OK, f"rows={len(table.records)}", art)


def sidecar_path(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".summary.json"


_DISPATCH = {"witness": _witness, "loss": _loss, "gains": _gains, "distill": _distill, "fig2": _fig2}


def run(cfg: RunConfig) -> RunResult:
    try:
        cfg.validate()
        return _DISPATCH[cfg.command](cfg)
    except NumericalFailure as exc:
        return RunResult(EXIT_NUMERIC, f"numerical failure: {exc}")
    except (UsageError, FockError) as exc:
        return RunResult(EXIT_USAGE, f"invalid arguments: {exc}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    result = run(config_from_args(ns))
    stream = sys.stdout if result.status == EXIT_OK else sys.stderr
    print(result.summary, file=stream)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
