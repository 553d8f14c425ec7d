#!/usr/bin/env python3
"""
Chow-Künneth workbench.

Builds the variety described by a run configuration, constructs its Chow-Künneth
decomposition (standard on P^n, tensored on products, averaged on quotients, lifted
along blow-ups) and runs the requested verification tasks.

Usage:
    python ck_workbench.py describe configs/blowup_p2.cfg
    python ck_workbench.py run configs/p3_all_tasks.cfg
    python ck_workbench.py run configs/kummer_mock.cfg --format machine --save
    python ck_workbench.py fuzz configs/p3_all_tasks.cfg --cases 50 --seed 7
"""

import argparse
import json
import random
import re
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from tqdm import tqdm

from blowup import (IteratedBlowup, TAU_STRATEGIES, blow_up_many, exceptional_part, lift_ck,
                    split_AB, split_class_AB)
from chowring import ChowDatum, point_class, product, projective_space, quotient, swap_action, trivial_action
from correspond import (CKDecomposition, average_decomposition, compose, compose_oracle, corr_pullback,
                        kunneth_decomposition, product_cycle, random_class, random_correspondence,
                        tensor_decomposition)
from errors import ConfigError, ConfigParseError, ConfigSemanticError, UnsupportedDatumError
from murre import (ActionCache, CheckResult, VerificationReport, check_A, check_B, check_B_equivalence,
                   check_Bprime, check_C, check_D_cellular, check_filtration_compatibility,
                   check_poincare, verify_ck)
from run_config import (BlowupSpec, OUTPUT_FORMATS, ProductSpec, ProjectiveSpaceSpec, QuotientSpec,
                        RunConfig, VarietySpec, load_config)

# Import configuration (run_config has already warned if config.py is missing)
try:
    from config import *
except ImportError:
    from config_template import *


@dataclass(eq=False)
class BuiltVariety:
    """A datum together with the decomposition the pipeline constructed for it."""
    spec: VarietySpec
    datum: ChowDatum
    decomposition: CKDecomposition
    base: Optional["BuiltVariety"] = None
    iterated: Optional[IteratedBlowup] = None

    @property
    def stages(self) -> int:
        return len(self.iterated.stages) if self.iterated is not None else 0

    def summary(self) -> Dict[str, Any]:
        X = self.datum
        return {
            "name": X.name,
            "dimension": X.dimension,
            "ranks": X.ranks,
            "cellular": X.cellular,
            "kunneth": X.has_kunneth,
            "blowup_stages": self.stages,
            "decomposition": self.decomposition.label,
        }


def build_variety(spec: VarietySpec, cache: Optional[Dict[str, BuiltVariety]] = None) -> BuiltVariety:
    """
    Build the datum and base decomposition of a variety expression, bottom-up.

    Equal sub-expressions share one datum, so product(X, X) really is a square.

    Args:
        spec: Variety expression
        cache: Built sub-expressions keyed by their description

    Returns:
        BuiltVariety

    Raises:
        UnsupportedDatumError: a quotient loses its Künneth data
    """
    cache = {} if cache is None else cache
    key = spec.describe()
    if key in cache:
        return cache[key]

    if isinstance(spec, ProjectiveSpaceSpec):
        X = projective_space(spec.n)
        built = BuiltVariety(spec, X, kunneth_decomposition(X))

    elif isinstance(spec, ProductSpec):
        left = build_variety(spec.left, cache)
        right = build_variety(spec.right, cache)
        P = product(left.datum, right.datum)
        built = BuiltVariety(spec, P, tensor_decomposition(P, left.decomposition, right.decomposition))

    elif isinstance(spec, QuotientSpec):
        base = build_variety(spec.base, cache)
        action = swap_action(base.datum) if spec.action == "swap" else trivial_action(base.datum)
        Q, q = quotient(action)
        if not Q.has_kunneth:
            raise UnsupportedDatumError(f"averaged Künneth classes of {base.datum.name} leave the invariant span")
        built = BuiltVariety(spec, Q, average_decomposition(base.decomposition, q), base=base)

    elif isinstance(spec, BlowupSpec):
        base = build_variety(spec.base, cache)
        centers = [point_class(base.datum)] * spec.points
        iterated = blow_up_many(base.datum, centers, spec.multiplier)
        built = BuiltVariety(spec, iterated.result, iterated.lift(base.decomposition), base=base,
                             iterated=iterated)

    else:
        raise UnsupportedDatumError(f"unknown variety expression {spec!r}")

    cache[key] = built
    return built


# Tasks

@dataclass
class TaskContext:
    built: BuiltVariety
    config: RunConfig
    progress: bool
    cache: ActionCache


def _skipped(name: str, reason: str) -> VerificationReport:
    return VerificationReport((CheckResult(name, True, reason, skipped=True),))


def _tagged(task: str, report: VerificationReport) -> VerificationReport:
    checks = []
    for check in report.checks:
        name = check.name if check.name.startswith(task) else f"{task}: {check.name}"
        checks.append(CheckResult(name, check.passed, check.witness, check.skipped))
    return VerificationReport(tuple(checks))


def _lift_variant(built: BuiltVariety, strategy: str = "half", perturb: bool = False) -> CKDecomposition:
    pis = built.base.decomposition
    for stage in built.iterated.stages:
        delta = None
        if perturb and stage.dimension >= 2:
            delta = product_cycle(stage.exceptional_class(1), stage.exceptional_class(stage.dimension - 1))
        pis = lift_ck(pis, stage, doubly_exceptional=strategy, perturbation=delta)
    return pis


def run_verify_ck(ctx: TaskContext) -> VerificationReport:
    return verify_ck(ctx.built.decomposition, progress=ctx.progress)


def run_poincare(ctx: TaskContext) -> VerificationReport:
    return check_poincare(ctx.built.decomposition)


def run_murre_B(ctx: TaskContext) -> VerificationReport:
    return check_B(ctx.built.decomposition, ctx.cache)


def run_murre_Bprime(ctx: TaskContext) -> VerificationReport:
    return check_Bprime(ctx.built.decomposition, ctx.cache)


def run_murre_C(ctx: TaskContext) -> VerificationReport:
    built = ctx.built
    variants = [built.decomposition]
    if built.stages:
        variants += [_lift_variant(built, strategy) for strategy in TAU_STRATEGIES if strategy != "half"]
        variants.append(_lift_variant(built, perturb=True))
    if built.datum.has_kunneth:
        variants.append(kunneth_decomposition(built.datum))
    return check_C(variants)


def run_murre_D(ctx: TaskContext) -> VerificationReport:
    return check_D_cellular(ctx.built.decomposition)


def run_lift(ctx: TaskContext) -> VerificationReport:
    built = ctx.built
    if not built.stages:
        return _skipped("lift", f"{built.datum.name} has no blow-up stage")
    report = VerificationReport()
    current = built.base.decomposition
    for k, stage in enumerate(built.iterated.stages, start=1):
        lifted = lift_ck(current, stage)
        stage_report = check_filtration_compatibility(current, lifted, stage).merge(
            check_B_equivalence(current, lifted))
        if built.stages > 1:
            stage_report = VerificationReport(tuple(
                CheckResult(f"{c.name} (stage {k})", c.passed, c.witness, c.skipped) for c in stage_report.checks))
        report = report.merge(stage_report)
        current = lifted
    return check_A(current).merge(report)


def run_blowdown(ctx: TaskContext) -> VerificationReport:
    built = ctx.built
    if not built.stages:
        return _skipped("blowdown", f"{built.datum.name} has no blow-up stage")
    lowered = built.iterated.lower(built.decomposition)
    recovered = [] if lowered == built.base.decomposition else [
        f"pushforward of the lift differs from the base decomposition on {built.base.datum.name}"]
    report = VerificationReport((CheckResult("recovers base decomposition", not recovered, "; ".join(recovered)),))
    return report.merge(verify_ck(lowered))


def run_roundtrip(ctx: TaskContext) -> VerificationReport:
    """lower(lift(π)) = π plus sampled A ⊕ B splittings on the last blow-up stage."""
    built = ctx.built
    if not built.stages:
        return _skipped("roundtrip", f"{built.datum.name} has no blow-up stage")
    base = built.base.decomposition
    lowered = built.iterated.lower(built.iterated.lift(base))
    offenders = [] if lowered == base else ["lower(lift(π)) ≠ π"]
    report = VerificationReport((CheckResult("lower after lift", not offenders, "; ".join(offenders)),))

    stage = built.iterated.stages[-1]
    X, Y, d = stage.base, stage.result, stage.dimension
    rng = random.Random(ctx.config.seed)
    ranges = dict(numerator_range=RANDOM_NUMERATOR_RANGE, denominator_range=RANDOM_DENOMINATOR_RANGE)
    split_offenders, class_offenders, orthogonal_offenders = [], [], []
    samples = tqdm(range(ROUNDTRIP_SAMPLES), desc="Roundtrip samples", unit="sample",
                   disable=not ctx.progress, file=sys.stderr, leave=False)
    for n in samples:
        gamma = random_correspondence(rng, Y, Y, d, **ranges)
        parts = split_AB(gamma, stage)
        if parts.reconstruct() != gamma:
            split_offenders.append(f"sample {n}: A + B ≠ γ")

        x = random_class(rng, Y, rng.randint(0, d), **ranges)
        pieces = split_class_AB(x, stage)
        if pieces.a_part + pieces.b_part != x:
            class_offenders.append(f"sample {n}: a + b ≠ {x}")

        alpha = corr_pullback(stage.f, random_correspondence(rng, X, X, d, **ranges))
        beta = exceptional_part(random_correspondence(rng, Y, Y, d, **ranges), stage)
        if not compose(alpha, beta).is_zero() or not compose(beta, alpha).is_zero():
            orthogonal_offenders.append(f"sample {n}: A•B ≠ 0")

    checks = (
        CheckResult("A ⊕ B reconstruction", not split_offenders, "; ".join(split_offenders[:5])),
        CheckResult("class splitting", not class_offenders, "; ".join(class_offenders[:5])),
        CheckResult("A, B orthogonality", not orthogonal_offenders, "; ".join(orthogonal_offenders[:5])),
    )
    return report.merge(VerificationReport(checks))


def run_oracle_fuzz(ctx: TaskContext) -> VerificationReport:
    """Compare compose against the term-by-term oracle on seeded random pairs."""
    X = ctx.built.datum
    if not X.has_kunneth:
        return _skipped("oracle-fuzz", f"{X.name} carries no Künneth data, so X × X × X is not modelled")
    d = X.dimension
    rng = random.Random(ctx.config.seed)
    ranges = dict(numerator_range=RANDOM_NUMERATOR_RANGE, denominator_range=RANDOM_DENOMINATOR_RANGE)
    offenders = []
    cases = tqdm(range(ctx.config.fuzz_cases), desc="Oracle cases", unit="case",
                 disable=not ctx.progress, file=sys.stderr, leave=False)
    for n in cases:
        right = random_correspondence(rng, X, X, rng.randint(0, 2 * d), **ranges)
        left = random_correspondence(rng, X, X, rng.randint(0, 2 * d), **ranges)
        if compose(left, right) != compose_oracle(left, right):
            offenders.append(f"case {n}: codims ({left.codim}, {right.codim})")
    witness = "; ".join(offenders[:5])
    return VerificationReport((CheckResult("oracle-fuzz", not offenders, witness),))


TASK_RUNNERS: Dict[str, Callable[[TaskContext], VerificationReport]] = {
    "verify-ck": run_verify_ck,
    "poincare": run_poincare,
    "murre-B": run_murre_B,
    "murre-Bprime": run_murre_Bprime,
    "murre-C": run_murre_C,
    "murre-D": run_murre_D,
    "lift": run_lift,
    "blowdown": run_blowdown,
    "roundtrip": run_roundtrip,
    "oracle-fuzz": run_oracle_fuzz,
}


def run(config: RunConfig, progress: bool = False, timing: bool = False) -> Tuple[int, Dict[str, Any]]:
    """
    Build the variety, run the configured tasks in order and assemble the report.

    Every exception raised while building or inside a task becomes a failed check.

    Args:
        config: Validated run configuration
        progress: Show progress bars on stderr
        timing: Record wall-clock seconds per phase

    Returns:
        (exit code, machine report with keys config, datum, checks, timing)
    """
    times: Dict[str, Any] = {"tasks": {}}
    started = time.perf_counter()
    try:
        built = build_variety(config.variety)
    except Exception as e:
        check = CheckResult("build", False, f"{type(e).__name__}: {e}")
        report = VerificationReport((check,))
        times["build"] = round(time.perf_counter() - started, 3)
        return 1, _report_document(config, None, report, times if timing else None)
    times["build"] = round(time.perf_counter() - started, 3)

    ctx = TaskContext(built, config, progress, ActionCache(built.decomposition))
    report = VerificationReport()
    tasks = tqdm(config.tasks, desc="Tasks", unit="task", disable=not progress, file=sys.stderr)
    for task in tasks:
        tasks.set_postfix_str(task)
        started = time.perf_counter()
        try:
            result = _tagged(task, TASK_RUNNERS[task](ctx))
        except Exception as e:
            result = VerificationReport((CheckResult(task, False, f"{type(e).__name__}: {e}"),))
        times["tasks"][task] = round(time.perf_counter() - started, 3)
        report = report.merge(result)

    return (0 if report.overall else 1), _report_document(config, built, report, times if timing else None)


def _report_document(config: RunConfig, built: Optional[BuiltVariety], report: VerificationReport,
                     timing: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        "config": config.echo(),
        "datum": built.summary() if built is not None else None,
        "checks": report.to_dict(),
        "timing": timing,
    }


def describe_document(config: RunConfig, built: BuiltVariety) -> Dict[str, Any]:
    """Datum summary plus the nonzero block types of every base projector."""
    X = built.datum
    return {
        "config": config.echo(),
        "datum": built.summary(),
        "labels": [list(X.labels(i)) for i in range(X.dimension + 1)],
        "projectors": [{"index": i, "blocks": [list(key) for key in pi.block_types()]}
                       for i, pi in enumerate(built.decomposition)],
    }


# Output

STATUS_MARKERS = {"pass": "✅", "fail": "❌", "skip": "⚠️ "}


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_\-]+", "_", name).strip("_") or "run"


def save_report(document: Dict[str, Any], name: str, output_dir: str = REPORT_OUTPUT_DIR) -> Path:
    """
    Write a machine report to ``output_dir/ck_report_<name>.json``.

    Returns:
        Path of the written file
    """
    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    path = output_path / f"ck_report_{_slug(name)}.json"
    with open(path, 'w', encoding='utf-8') as f:
        f.write(render_machine(document))
    return path


def render_machine(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, default=str) + "\n"


def print_settings(config: RunConfig):
    print("Chow-Künneth Workbench")
    print("=" * 50)
    if config.name:
        print(f"Configuration: {config.name}")
    print(f"Variety: {config.variety.describe()}")
    print(f"Tasks: {', '.join(config.tasks)}")
    print(f"Seed: {config.seed}")
    if "oracle-fuzz" in config.tasks:
        print(f"Fuzz cases: {config.fuzz_cases}")
    print("=" * 50)


def print_datum(summary: Optional[Dict[str, Any]]):
    if summary is None:
        return
    print(f"📊 Datum: {summary['name']} (dimension {summary['dimension']})")
    print(f"   Ranks per codimension: {summary['ranks']}")
    print(f"   Cellular: {'Yes' if summary['cellular'] else 'No'}, "
          f"Künneth data: {'Yes' if summary['kunneth'] else 'No'}, "
          f"blow-up stages: {summary['blowup_stages']}")
    print(f"   Decomposition: {summary['decomposition']}")


def print_text_report(document: Dict[str, Any]):
    print_datum(document["datum"])
    print("\nChecks:")
    for check in document["checks"]:
        line = f"{STATUS_MARKERS[check['status']]} {check['name']}"
        if check["witness"]:
            line += f": {check['witness']}"
        print(line)

    counts = {status: sum(1 for c in document["checks"] if c["status"] == status) for status in STATUS_MARKERS}
    print("\n" + "=" * 50)
    print(f"📊 Summary: {counts['pass']} passed, {counts['fail']} failed, {counts['skip']} skipped")
    if document["timing"] is not None:
        timing = document["timing"]
        print(f"   Build: {timing['build']}s")
        for task, seconds in timing["tasks"].items():
            print(f"   {task}: {seconds}s")
    if counts["fail"]:
        print("❌ Some checks failed")
    else:
        print("✅ All checks passed!")


def print_usage_tips():
    print("\nUsage tips:")
    print("- Use --format machine for a JSON report on stdout")
    print("- Use --save to also write the JSON report to the output directory")
    print("- Use --timing to record seconds per task (reports then differ between runs)")
    print("- Example: python ck_workbench.py run configs/blowup_p2.cfg")
    print("- Example: python ck_workbench.py fuzz configs/p3_all_tasks.cfg --cases 50 --seed 7")
    print("\nConfiguration:")
    print("- Update config.py to change defaults such as the fuzz case count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Construct and verify Chow-Künneth decompositions")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser):
        sub.add_argument("config", help="Configuration file, or inline configuration text")
        sub.add_argument("--format", choices=OUTPUT_FORMATS, default=None,
                         help="Report format (default: the configuration's output_format)")
        sub.add_argument("--no-progress", action="store_true", help="Hide progress bars")

    describe = subparsers.add_parser("describe", help="Show the built datum and its base decomposition")
    common(describe)

    for name, help_text in (("run", "Run the configured tasks"), ("fuzz", "Run only the oracle fuzz task")):
        sub = subparsers.add_parser(name, help=help_text)
        common(sub)
        sub.add_argument("--cases", type=int, default=None, help="Number of fuzz cases")
        sub.add_argument("--seed", type=int, default=None, help="Seed for randomized checks")
        sub.add_argument("--timing", action="store_true", default=REPORT_TIMING,
                         help="Record seconds per task in the report")
        sub.add_argument("--save", action="store_true", default=SAVE_REPORTS_BY_DEFAULT,
                         help="Write the machine report to the output directory")
        sub.add_argument("--output-dir", default=REPORT_OUTPUT_DIR, help="Directory for saved reports")
    return parser


def _load(source: str) -> RunConfig:
    try:
        return load_config(source)
    except ConfigParseError as e:
        print(f"❌ Configuration syntax error: {e}", file=sys.stderr)
        raise
    except ConfigSemanticError as e:
        print(f"❌ Invalid configuration field {e}", file=sys.stderr)
        raise


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line entry point.

    Returns:
        0 when every check passes, 1 on a failed check, 2 on a configuration error
    """
    args = build_parser().parse_args(argv)

    try:
        config = _load(args.config)
    except ConfigError:
        return 2

    overrides = {}
    if args.format is not None:
        overrides["output_format"] = args.format
    if args.command != "describe":
        if args.cases is not None:
            if args.cases < 1:
                print("❌ --cases must be at least 1", file=sys.stderr)
                return 2
            overrides["fuzz_cases"] = args.cases
        if args.seed is not None:
            overrides["seed"] = args.seed
    if args.command == "fuzz":
        overrides["tasks"] = ("oracle-fuzz",)
    config = replace(config, **overrides)

    machine = config.output_format == "machine"
    progress = SHOW_PROGRESS and not args.no_progress and not machine

    if args.command == "describe":
        try:
            built = build_variety(config.variety)
        except Exception as e:
            print(f"❌ Error building {config.variety.describe()}: {type(e).__name__}: {e}", file=sys.stderr)
            return 1
        document = describe_document(config, built)
        if machine:
            sys.stdout.write(render_machine(document))
            return 0
        print_settings(config)
        print_datum(document["datum"])
        print("\nBasis per codimension:")
        for i, labels in enumerate(document["labels"]):
            print(f"   CH^{i}: {', '.join(labels) if labels else '0'}")
        print("\nBase projectors (nonzero block types):")
        for entry in document["projectors"]:
            blocks = ", ".join(f"({i}, {j})" for i, j in entry["blocks"]) or "zero"
            print(f"   π_{entry['index']}: {blocks}")
        return 0

    if not machine:
        print_settings(config)
    code, document = run(config, progress=progress, timing=args.timing)

    if machine:
        sys.stdout.write(render_machine(document))
    else:
        print_text_report(document)

    if args.save:
        try:
            path = save_report(document, config.name or config.variety.describe(), args.output_dir)
            size_kb = path.stat().st_size / 1024
            print(f"📁 Report saved to: {path} (size: {size_kb:.1f} KB)", file=sys.stderr if machine else sys.stdout)
        except OSError as e:
            print(f"❌ Error saving report: {e}", file=sys.stderr)

    if not machine:
        print_usage_tips()
    return code


if __name__ == "__main__":
    sys.exit(main())
