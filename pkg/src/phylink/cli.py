"""Experiment runner: ``phylink {run,list,gen-cov,gen-scenario}``.

Configs are flat ``key = value`` text files; ``--set key=value`` overrides
apply on top. A single ``seed`` drives every random stream through
:func:`phylink.harness.stream`, so reports are byte-identical across runs and
worker counts.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .channel import CovarianceSet, build_covariances, export_covariances, load_covariances
from .config import ChannelModelConfig, LinkDefaults, OllaConfig
from .errors import ConfigError, DegenerateReference, EvaluationFailure, PhyLinkError
from .grid import make_pilot_mask
from .harness import la_score, nve, stream
from .link import BlerModel, LinkScenario, OllaController, make_snr_trajectory
from .registry import REGISTRY, list_algorithms

log = logging.getLogger(__name__)

TASKS = ("ce-agnostic", "ce-cov", "link-adapt")
_CH = ChannelModelConfig()
_LINK = LinkDefaults()
_OLLA = OllaConfig()


@dataclass
class ExperimentConfig:
    task: str = "ce-cov"
    algorithm: str = "cov-kron"
    reference: str = "perfect-csi"
    seed: int = 0
    trials: int = 200
    snr_db: tuple[float, ...] = (6.0, 8.0, 10.0, 12.0)
    # channel
    n_s: int = _CH.n_s
    n_t: int = _CH.n_t
    n_f: int = _CH.n_f
    rho_t: float = _CH.rho_t
    tau_rms: float = _CH.tau_rms
    rho_s: float = _CH.rho_s
    pilot_symbols: tuple[int, ...] = (1, 10)
    cov_file: str = ""
    # link adaptation
    scenario_file: str = ""
    n_scenarios: int = 20
    n_slots: int = 3000
    ou_mean: float = 10.0
    ou_std: float = 4.0
    ou_theta: float = 0.005
    bler_alpha: float = 2.0
    target: float = _LINK.target
    batch: int = _LINK.batch
    olla_step: float = _OLLA.step_up
    olla_anchor: float = _OLLA.anchor_snr
    traces: bool = False
    # output
    out: str = "report"
    format: str = "json"
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; valid tasks: {', '.join(TASKS)}")
        for name in ("algorithm", "reference"):
            alg = getattr(self, name)
            if name == "reference" and self.task == "link-adapt":
                continue
            if alg not in REGISTRY:
                raise ConfigError(f"unknown {name} {alg!r}; valid ids: {', '.join(REGISTRY)}")
            if self.task not in REGISTRY[alg].tasks:
                valid = [k for k, e in REGISTRY.items() if self.task in e.tasks]
                raise ConfigError(f"{alg!r} does not support task {self.task!r}; valid ids: {', '.join(valid)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.workers < 1 or self.n_scenarios < 1 or self.n_slots < 1:
            raise ConfigError("workers, n_scenarios and n_slots must be >= 1")
        if not self.snr_db:
            raise ConfigError("snr_db needs at least one point")
        return self

    def to_dict(self) -> dict:
        """Echo for reports; excludes settings that must not change the bytes."""
        d = dataclasses.asdict(self)
        for key in ("out", "workers"):
            d.pop(key)
        return d


def _coerce(name: str, raw: str, kind):
    text = raw.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(text)
            return low in ("1", "true", "yes")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind in ("tuple[float, ...]", "tuple[int, ...]"):
            cast = float if "float" in kind else int
            parts = [p for p in text.strip("[]()").replace(",", " ").split() if p]
            return tuple(cast(p) for p in parts)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


_FIELD_TYPES = {f.name: {"int": int, "float": float, "bool": bool, "str": str}.get(f.type, f.type)
                for f in fields(ExperimentConfig)}


def apply_overrides(cfg: ExperimentConfig, pairs: Sequence[str]) -> ExperimentConfig:
    updates = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}; valid keys: {', '.join(_FIELD_TYPES)}")
        updates[key] = _coerce(key, value, _FIELD_TYPES[key])
    return dataclasses.replace(cfg, **updates)


def parse_config_text(text: str) -> list[str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        pairs.append(line)
    return pairs


def load_config(path: str | None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = apply_overrides(cfg, parse_config_text(text))
    return apply_overrides(cfg, overrides).validate()


# ------------------------------------------------------------------ tasks


def channel_config(cfg: ExperimentConfig) -> ChannelModelConfig:
    return ChannelModelConfig(cfg.n_s, cfg.n_t, cfg.n_f, cfg.rho_t, cfg.tau_rms, cfg.rho_s)


def covariances(cfg: ExperimentConfig) -> CovarianceSet:
    if cfg.cov_file:
        cov = load_covariances(cfg.cov_file)
        if cov.dims != (cfg.n_s, cfg.n_t, cfg.n_f):
            raise ConfigError(f"covariance file dims {cov.dims} differ from n_s/n_t/n_f")
        return cov
    return build_covariances(channel_config(cfg))


def bler_model(cfg: ExperimentConfig) -> BlerModel:
    return BlerModel.default(alpha=cfg.bler_alpha)


def make_scenarios(cfg: ExperimentConfig) -> list[LinkScenario]:
    """Scenarios from ``scenario_file`` or OU trajectories on stream ``(seed, i, 2)``."""
    if cfg.scenario_file:
        try:
            doc = json.loads(Path(cfg.scenario_file).read_text())
            docs = doc if isinstance(doc, list) else [doc]
            return [LinkScenario.from_dict(d) for d in docs]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad scenario file {cfg.scenario_file}: {exc}") from exc
    model = bler_model(cfg)
    params = {"mean": cfg.ou_mean, "std": cfg.ou_std, "theta": cfg.ou_theta}
    return [
        LinkScenario(make_snr_trajectory("ou", params, cfg.n_slots, stream(cfg.seed, i, 2)), model, cfg.target, cfg.batch)
        for i in range(cfg.n_scenarios)
    ]


def _controller_factory(cfg: ExperimentConfig):
    if cfg.algorithm == "la-olla":
        olla = OllaConfig(step_up=cfg.olla_step, anchor_snr=cfg.olla_anchor)
        return _OllaFactory(olla)
    return REGISTRY[cfg.algorithm].factory


@dataclass(frozen=True)
class _OllaFactory:
    """Picklable factory so scenario workers can build the configured baseline."""

    olla: OllaConfig

    def __call__(self, sc, rng):
        return OllaController(sc.model, sc.target, self.olla)


@dataclass
class RunOutcome:
    report: dict
    rows: list = field(default_factory=list)
    headline: str = ""
    exit_code: int = 0
    traces: dict = field(default_factory=dict)


def run_ce(cfg: ExperimentConfig) -> RunOutcome:
    cov = covariances(cfg)
    mask = make_pilot_mask(cfg.n_t, cfg.n_f, cfg.pilot_symbols)
    est = REGISTRY[cfg.algorithm].factory
    ref = REGISTRY[cfg.reference].factory
    try:
        rep = nve(est, ref, cov, mask, cfg.snr_db, cfg.trials, cfg.seed, cfg.workers)
    except DegenerateReference as exc:
        return RunOutcome({"error": str(exc), "nve": None}, headline=f"error: {exc}", exit_code=1)
    out = RunOutcome(rep.to_dict(), list(rep.csv_rows()), f"nve={rep.nve:.6g}")
    if rep.failures:
        out.exit_code = 1
        out.headline += f" (evaluation failures: {rep.failures})"
    return out


def run_la(cfg: ExperimentConfig) -> RunOutcome:
    scenarios = make_scenarios(cfg)
    score = la_score(_controller_factory(cfg), scenarios, cfg.seed, cfg.workers)
    out = RunOutcome(score.to_dict(), list(score.csv_rows()), f"mean_se={score.mean_se:.6g}")
    if not score.success:
        out.exit_code = 1
        out.headline += f" (BLER constraint violated on {score.violations}/{len(scenarios)} scenarios)"
    if cfg.traces:
        from .harness import _la_one

        fac = _controller_factory(cfg)
        for i, sc in enumerate(scenarios):
            res = _la_one((fac, sc, cfg.seed, i))
            out.traces[i] = [("slot", "snr_db", "mcs", "nack", "cum_bler", "cum_se"), *res.trace_rows()]
    return out


def run(cfg: ExperimentConfig) -> RunOutcome:
    if cfg.task == "link-adapt":
        return run_la(cfg)
    return run_ce(cfg)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def report_path(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out)
    return path if path.suffix else path.with_suffix("." + cfg.format)


def write_report(cfg: ExperimentConfig, outcome: RunOutcome) -> Path:
    path = report_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    if cfg.format == "json":
        doc = {"config": cfg.to_dict(), "result": outcome.report}
        path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    else:
        rows = outcome.rows or [("key", "value"), *sorted(outcome.report.items())]
        path.write_text(_csv_text(rows))
    for i, rows in sorted(outcome.traces.items()):
        path.with_name(f"{path.stem}_trace{i:03d}.csv").write_text(_csv_text(rows))
    return path


# ------------------------------------------------------------------ entry


def _cmd_run(args) -> int:
    overrides = list(args.set or [])
    for key in ("seed", "out", "format", "workers"):
        val = getattr(args, key)
        if val is not None:
            overrides.append(f"{key}={val}")
    cfg = load_config(args.config, overrides)
    try:
        outcome = run(cfg)
    except EvaluationFailure as exc:
        outcome = RunOutcome({"error": str(exc)}, headline=f"evaluation failure: {exc}", exit_code=1)
    path = write_report(cfg, outcome)
    print(outcome.headline)
    log.info("report written to %s", path)
    return outcome.exit_code


def _cmd_list(args) -> int:
    for e in list_algorithms():
        print(f"{e.id:<16}{e.kind:<12}{','.join(e.tasks):<22}{e.description}")
    return 0


def _cmd_gen_cov(args) -> int:
    cfg = load_config(args.config, list(args.set or []))
    out = Path(args.out or "cov.bin")
    export_covariances(build_covariances(channel_config(cfg)), out)
    print(out)
    return 0


def _cmd_gen_scenario(args) -> int:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = dataclasses.replace(load_config(args.config, overrides), scenario_file="")
    docs = [sc.to_dict() for sc in make_scenarios(cfg)]
    out = Path(args.out or "scenarios.json")
    out.write_text(json.dumps(docs if len(docs) > 1 else docs[0], sort_keys=True) + "\n")
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phylink", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
        sp.add_argument("--out")
        if seed:
            sp.add_argument("--seed", type=int)

    r = sub.add_parser("run", help="run an experiment and write its report")
    common(r)
    r.add_argument("--format", choices=("json", "csv"))
    r.add_argument("--workers", type=int)
    r.set_defaults(func=_cmd_run)
    sub.add_parser("list", help="list registered algorithms").set_defaults(func=_cmd_list)
    g = sub.add_parser("gen-cov", help="write the channel covariance file")
    common(g, seed=False)
    g.set_defaults(func=_cmd_gen_cov)
    s = sub.add_parser("gen-scenario", help="write OU link-adaptation scenarios as JSON")
    common(s)
    s.set_defaults(func=_cmd_gen_scenario)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhyLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
