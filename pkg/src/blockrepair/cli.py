"""Command-line front end.

Exit codes: 0 success, 1 evaluation negative (tests fail), 2 input error,
3 policy failure, 4 forge exhaustion.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__, canonical
from .errors import (
    BlockRepairError,
    ForgeExhausted,
    MalformedJson,
    NoDiscriminatingAssertion,
    PatchError,
    ProjectError,
    UnknownSignal,
)
from .evaluation import TmoAnswer, aggregate, render_table, score_repair, score_understanding
from .forge import CATALOG, ForgeConfig, forge, load_bundle
from .ir.codec import parse_project, serialize_project
from .ir.metrics import complexity_metrics
from .ir.refsem import ReferenceSemantics, validate_reference_semantics
from .oracle import TestSuite, TraceCache, hold_prob, rerun_outcomes, synthesize
from .patch import apply_patch, inverse_patch, validate_patch
from .scenarios import extract_metadata, instantiate, load_templates
from .vm.scenario import Scenario

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_POLICY, EXIT_EXHAUSTED = 0, 1, 2, 3, 4
ENV_PREFIX = "BLOCKREPAIR_"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


# --- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    R: int = 5
    theta_pass: float = 0.9
    theta_fail: float = 0.1
    K: int = 20
    H: int = 2000
    checkpoint_interval: int = 10
    seed: int = 0

    def forge_config(self) -> ForgeConfig:
        return ForgeConfig(self.R, self.theta_pass, self.theta_fail, self.K, self.seed, self.H, self.checkpoint_interval)

    def digest(self) -> str:
        return self.forge_config().digest()


_CASTS = {f.name: (float if f.type == "float" else int) for f in fields(PipelineConfig)}


def _coerce(name: str, raw: Any, origin: str) -> Any:
    try:
        if isinstance(raw, bool):
            raise ValueError
        return _CASTS[name](raw)
    except (TypeError, ValueError):
        raise CliError(f"{origin}: {name} must be a number, got {raw!r}") from None


def load_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> PipelineConfig:
    """Defaults, then the config file, then environment variables, then flags."""
    environ = os.environ if environ is None else environ
    values: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise CliError("config file must hold a JSON object")
        for k, v in doc.items():
            if k not in _CASTS:
                raise CliError(f"unknown config key {k!r}")
            values[k] = _coerce(k, v, "config file")
    for name in _CASTS:
        env = environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            values[name] = _coerce(name, env, ENV_PREFIX + name.upper())
    for name in _CASTS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        cfg = replace(PipelineConfig(), **values)
        cfg.forge_config()
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}") from None
    return cfg


# --- helpers ----------------------------------------------------------------------


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _project(path: str):
    try:
        return parse_project(_read(path))
    except ProjectError as exc:
        raise CliError(f"{path}: {type(exc).__name__}: {exc}") from None


def _suite(path: str) -> TestSuite:
    try:
        return TestSuite.loads(_read(path))
    except MalformedJson as exc:
        raise CliError(f"{path}: {exc}") from None


def _emit(obj: Any, out: str | None) -> None:
    data = canonical.dumps(obj)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)
    sys.stdout.write(data.decode("utf-8"))


def _scenarios(p, cfg: PipelineConfig, path: str | None) -> list[Scenario]:
    if path:
        try:
            doc = json.loads(_read(path))
            return [Scenario.from_dict(s) for s in doc["scenarios"]]
        except (ValueError, KeyError, TypeError, MalformedJson) as exc:
            raise CliError(f"{path}: bad scenarios file: {exc}") from None
    return instantiate(load_templates(), extract_metadata(p), cfg.H, cfg.checkpoint_interval)


# --- commands ---------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    p = _project(args.project)
    report = complexity_metrics(p)
    _emit(report.to_dict(), None)
    if args.require_complexity and not report.passes:
        return EXIT_POLICY
    return EXIT_OK


def _forge_one(job: tuple[bytes, dict, dict, str | None, bytes | None]) -> tuple[str, Any]:
    data, cfg_dict, coverage, pattern, refsem_bytes = job
    gold = parse_project(data)
    refsem = ReferenceSemantics.loads(refsem_bytes) if refsem_bytes is not None else None
    catalog = (pattern,) if pattern else CATALOG
    try:
        inst = forge(gold, ForgeConfig(**cfg_dict), catalog=catalog, coverage=coverage, refsem=refsem)
    except ForgeExhausted as exc:
        return "exhausted", exc.trials
    return "ok", (inst.files(), inst.pattern, [t.to_dict() for t in inst.trials])


def cmd_forge(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    if args.pattern and args.pattern not in CATALOG:
        raise CliError(f"unknown pattern {args.pattern!r}; choose from {', '.join(CATALOG)}")
    refsem_bytes = None
    jobs = []
    for i, path in enumerate(args.gold):
        gold = _project(path)
        if args.require_complexity and not complexity_metrics(gold).passes:
            sys.stderr.write(f"{path}: fails the complexity filter\n")
            return EXIT_POLICY
        if args.refsem:
            refsem_bytes = _read(args.refsem)
            try:
                violations = validate_reference_semantics(ReferenceSemantics.loads(refsem_bytes), gold)
            except (ValueError, KeyError, TypeError) as exc:
                raise CliError(f"{args.refsem}: {exc}") from None
            if violations:
                raise CliError(f"{args.refsem}: {violations[0].kind}: {violations[0].detail}")
        # Each project starts from a different pattern so a batch covers the
        # catalog evenly no matter how the work is split across processes.
        coverage = {tag: 1 for tag in CATALOG[: i % len(CATALOG)]}
        jobs.append((serialize_project(gold), asdict(cfg.forge_config()), coverage, args.pattern, refsem_bytes))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_forge_one, jobs))
    else:
        results = [_forge_one(j) for j in jobs]

    out = Path(args.out)
    summary = []
    code = EXIT_OK
    for path, (status, payload) in zip(args.gold, results):
        target = out if len(args.gold) == 1 else out / Path(path).stem
        if status == "exhausted":
            code = EXIT_EXHAUSTED
            summary.append({"gold": Path(path).name, "status": "exhausted", "trials": payload})
            continue
        files, pattern, trials = payload
        target.mkdir(parents=True, exist_ok=True)
        for name, data in files.items():
            (target / name).write_bytes(data)
        summary.append({"gold": Path(path).name, "status": "ok", "pattern": pattern, "bundle": str(target), "trials": trials})
    _emit({"config_digest": cfg.digest(), "results": summary}, None)
    return code


def cmd_gen_scenarios(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    p = _project(args.project)
    m = extract_metadata(p)
    scenarios = instantiate(load_templates(args.templates), m, cfg.H, cfg.checkpoint_interval)
    _emit(
        {"config_digest": cfg.digest(), "metadata": m.to_dict(), "scenarios": [s.to_dict() for s in scenarios]},
        args.out,
    )
    return EXIT_OK


def cmd_synth_tests(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    gold, buggy = _project(args.gold), _project(args.buggy)
    scenarios = _scenarios(gold, cfg, args.scenarios)
    try:
        suite = synthesize(gold, buggy, scenarios, cfg.forge_config().synth, TraceCache(), cfg.digest())
    except NoDiscriminatingAssertion as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_POLICY
    _emit(suite.to_dict(), args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    p = _project(args.project)
    suite = _suite(args.testsuite)
    R = cfg.R
    try:
        ok, traces = rerun_outcomes(p, suite, R)
        per_assertion = [
            {
                "scenario_id": a.scenario_id,
                "feature": a.feature.to_dict(),
                "hold_rate": float(hold_prob(a.feature, traces[a.scenario_id])),
            }
            for a in suite.assertions
        ]
    except UnknownSignal as exc:
        raise CliError(f"{args.testsuite}: UnknownSignal: {exc}") from None
    if args.traces:
        tdir = Path(args.traces)
        tdir.mkdir(parents=True, exist_ok=True)
        for sid, ts in traces.items():
            for r, t in enumerate(ts, 1):
                name = f"{sid.replace(':', '_').replace('+', '_')}.r{r}.trace.jsonl"
                (tdir / name).write_text(t.to_jsonl(cfg.digest()), "utf-8")
    rate = Fraction(sum(ok), R)
    _emit({"config_digest": cfg.digest(), "pass_rate": float(rate), "reruns": R, "assertions": per_assertion}, args.out)
    return EXIT_OK if rate >= Fraction(str(cfg.theta_pass)) else EXIT_NEGATIVE


def cmd_apply(args: argparse.Namespace) -> int:
    p = _project(args.project)
    try:
        patch = validate_patch(_read(args.patch))
        result = apply_patch(p, patch)
    except PatchError as exc:
        raise CliError(f"{args.patch}: {type(exc).__name__}: {exc}") from None
    data = serialize_project(result)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    if args.inverse_out:
        try:
            Path(args.inverse_out).write_bytes(inverse_patch(patch).dumps())
        except PatchError as exc:
            raise CliError(f"{args.patch}: {type(exc).__name__}: {exc}") from None
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    try:
        bug = load_bundle(args.bundle)
    except (ProjectError, PatchError) as exc:
        raise CliError(f"{args.bundle}: {type(exc).__name__}: {exc}") from None
    if args.patch:
        score = score_repair(bug, _read(args.patch), args.R)
        _emit(score.to_dict(), args.out)
        return EXIT_OK if score.functional_success else EXIT_NEGATIVE
    try:
        doc = json.loads(_read(args.answer))
        ans = TmoAnswer.from_dict(doc)
    except (ValueError, MalformedJson) as exc:
        raise CliError(f"{args.answer}: bad answer file: {exc}") from None
    us = score_understanding(ans, bug.spec.ground_truth, bug.refsem, global_fields=doc.get("global"))
    _emit(us.to_dict(), args.out)
    return EXIT_OK if us.u_acc_joint else EXIT_NEGATIVE


def cmd_report(args: argparse.Namespace) -> int:
    d = Path(args.scores)
    if not d.is_dir():
        raise CliError(f"{d} is not a directory")
    records = []
    for f in sorted(d.glob("*.json")):
        try:
            rec = json.loads(f.read_text("utf-8"))
        except ValueError as exc:
            raise CliError(f"{f}: {exc}") from None
        if isinstance(rec, dict) and rec.get("kind") in ("repair", "understanding"):
            records.append(rec)
    if not records:
        sys.stderr.write("no scores\n")
        return EXIT_POLICY
    summary = aggregate(records)
    sys.stdout.write(render_table(summary))
    if args.out:
        Path(args.out).write_bytes(canonical.dumps(summary))
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def _config_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("pipeline configuration (flags > environment > --config file > defaults)")
    g.add_argument("--config", help="JSON file with configuration values")
    g.add_argument("--reruns", "-R", dest="R", type=int, help="reruns per scenario (default 5)")
    g.add_argument("--theta-pass", type=float, help="minimum gold hold rate (default 0.9)")
    g.add_argument("--theta-fail", type=float, help="maximum buggy hold rate (default 0.1)")
    g.add_argument("--trials", "-K", dest="K", type=int, help="maximum forge trials (default 20)")
    g.add_argument("--ticks", "-H", dest="H", type=int, help="tick budget per scenario (default 2000)")
    g.add_argument("--checkpoint-interval", type=int, help="ticks between checkpoints (default 10)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockrepair", description="Fault injection and repair scoring for block projects.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a project and report its complexity")
    p.add_argument("project")
    p.add_argument("--require-complexity", action="store_true", help="exit 3 if the complexity filter fails")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("forge", help="inject one validated fault and write a bug bundle")
    p.add_argument("gold", nargs="+")
    p.add_argument("--out", required=True, help="bundle directory (one subdirectory per project when several)")
    p.add_argument("--pattern", help="restrict to one fault pattern")
    p.add_argument("--refsem", help="reference semantics record to ship instead of a generated one")
    p.add_argument("--require-complexity", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes across projects")
    _config_flags(p)
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("gen-scenarios", help="instantiate scenario templates for a project")
    p.add_argument("project")
    p.add_argument("--templates", help="template library JSON (default: bundled)")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_gen_scenarios)

    p = sub.add_parser("synth-tests", help="synthesize a differential test suite")
    p.add_argument("gold")
    p.add_argument("buggy")
    p.add_argument("--scenarios", help="scenarios file from gen-scenarios")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_synth_tests)

    p = sub.add_parser("run", help="run a project against a test suite")
    p.add_argument("project")
    p.add_argument("testsuite")
    p.add_argument("--traces", help="directory for per-run trace files")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("apply", help="apply a patch to a project")
    p.add_argument("project")
    p.add_argument("patch")
    p.add_argument("--out")
    p.add_argument("--inverse-out", help="also write the inverse patch here")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("score", help="score a repair patch or an explanation against a bundle")
    p.add_argument("bundle")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--patch")
    what.add_argument("--answer", help="JSON answer with trigger, mechanism, outcome, optional predicate and global")
    p.add_argument("--reruns", "-R", dest="R", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="aggregate a directory of score files")
    p.add_argument("scores")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except BlockRepairError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
