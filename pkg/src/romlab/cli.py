"""``romlab`` command line.

Every output starts with the package version and the full configuration, and
is a pure function of that configuration: rerunning a command with the same
flags (seed included) reproduces the output byte for byte.

Exit codes: 0 success, 2 usage error or infeasible parameters, 3 internal
invariant violation.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from romlab import __version__
from romlab.diagnostics import order_uniformity_test, verify_lemma2
from romlab.disjointness import Kind, gen_instance_for
from romlab.errors import AssemblyIncomplete, DecompositionGap, InfeasiblePromise, InvalidScale
from romlab.estimators import ESTIMATORS
from romlab.intervals import verify_lemma1
from romlab.params import DEFAULT_C, DEFAULT_C1, DEFAULT_C2, DEFAULT_T_FACTOR, derive_params
from romlab.protocol import ProtocolOutcome, export_stream, run_protocol
from romlab.seeding import sub_seed


class Scale(click.ParamType):
    """Integer that may be written in scientific notation (``1e6``)."""

    name = "scale"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            number = float(value)
        except ValueError:
            self.fail(f"{value!r} is not a number", param, ctx)
        if not number.is_integer() or number < 1:
            self.fail(f"{value!r} is not a positive integer", param, ctx)
        return int(number)


class ListOf(click.ParamType):
    """Comma-separated list of values of another type."""

    def __init__(self, inner: click.ParamType):
        self.inner = inner
        self.name = f"{inner.name}-list"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        return [self.inner.convert(v.strip(), param, ctx) for v in str(value).split(",") if v.strip()]


SCALE = Scale()
SEED = click.IntRange(0, 2**64 - 1)


def params_options(f):
    f = click.option("--t-factor", type=int, default=DEFAULT_T_FACTOR, show_default=True)(f)
    f = click.option("--c2", type=float, default=DEFAULT_C2, show_default=True)(f)
    f = click.option("--c1", type=float, default=DEFAULT_C1, show_default=True)(f)
    f = click.option("--c", "c", type=float, default=DEFAULT_C, show_default=True)(f)
    f = click.option("--k", type=int, default=3, show_default=True)(f)
    f = click.option("--n", type=SCALE, default="1e6", show_default=True)(f)
    return f


def output_options(default_format: str = "csv"):
    def wrap(f):
        f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=default_format,
                         show_default=True)(f)
        f = click.option("--out", type=click.Path(dir_okay=False, allow_dash=True), default="-",
                         show_default=True)(f)
        return f
    return wrap


def _config(ctx: click.Context) -> dict:
    cfg = {"command": ctx.info_name}
    cfg.update({k: v for k, v in sorted(ctx.params.items())})
    return cfg


def _write(out: str, text: str) -> None:
    if out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return value


def render(config: dict, fields, rows: list[dict], fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"romlab_version": __version__, "config": config,
               "rows": [{f: _fmt(r[f]) for f in fields} for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# romlab {__version__}\n")
    buf.write(f"# config: {json.dumps(config)}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({f: _fmt(row[f]) for f in fields})
    for key, value in (extra or {}).items():
        buf.write(f"# {key}: {json.dumps(value)}\n")
    return buf.getvalue()


class Fail(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _derive(n, k, c, c1, c2, t_factor):
    try:
        return derive_params(n, k, c=c, c1=c1, c2=c2, t_factor=t_factor)
    except (InvalidScale, ValueError) as exc:
        raise Fail(f"infeasible parameters: {exc}", 2) from exc


@click.group()
@click.version_option(__version__, prog_name="romlab")
def main():
    """Random-order streaming lab."""


@main.command("gen-instance")
@params_options
@click.option("--kind", type=click.Choice(["yes", "no"], case_sensitive=False), required=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@output_options("json")
@click.pass_context
def gen_instance_cmd(ctx, n, k, c, c1, c2, t_factor, kind, seed, out, fmt):
    """Write a promise set-disjointness instance."""
    params = _derive(n, k, c, c1, c2, t_factor)
    try:
        instance = gen_instance_for(params, kind, seed)
    except InfeasiblePromise as exc:
        raise Fail(f"infeasible promise: {exc}", 2) from exc
    config = _config(ctx)
    if fmt == "json":
        doc = {"romlab_version": __version__, "config": config, "instance": instance.to_dict()}
        text = json.dumps(doc, separators=(",", ":")) + "\n"
    else:
        head = {f: v for f, v in instance.to_dict().items() if f != "sets"}
        rows = [{"player": i, "element": int(x)}
                for i, s in enumerate(instance.sets, start=1) for x in sorted(s)]
        text = render(config, ("player", "element"), rows, "csv", {"instance": head})
    _write(out, text)


def _protocol_job(args):
    params, kind, trial, root, estimator, samples, keep = args
    kind = Kind(kind)
    code = 0 if kind is Kind.NO else 1
    instance = gen_instance_for(params, kind, sub_seed(root, "cli-instance", code, trial))
    seed = sub_seed(root, "cli-run", code, trial)
    return run_protocol(instance, params, estimator, seed, samples, keep_assembly=keep)


def _summary(outcomes, params) -> dict:
    done = [o for o in outcomes if o.aborted is None]
    return {
        "runs": len(outcomes),
        "accuracy": sum(o.correct for o in outcomes) / len(outcomes),
        "accuracy_completed": (sum(o.correct for o in done) / len(done)) if done else None,
        "abort_rate": (len(outcomes) - len(done)) / len(outcomes),
        "mean_messages": float(np.mean([o.messages for o in done])) if done else None,
        "mean_total_bits": float(np.mean([o.total_bits for o in done])) if done else None,
        "reference_budget": outcomes[0].reference_budget,
        "t": params.t, "w": params.w, "N": params.N, "w2": params.w2,
    }


def _run_protocols(params, trials, seed, estimator, samples, workers, export_to=None):
    jobs = [(params, kind.value, i, seed, estimator, samples, export_to is not None and i == 0)
            for kind in (Kind.YES, Kind.NO) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_protocol_job, jobs, chunksize=4))
    else:
        results = [_protocol_job(j) for j in jobs]
    outcomes = []
    for job, res in zip(jobs, results):
        if job[-1]:
            outcome, assembly = res
            if assembly is not None:
                path = Path(export_to)
                export_stream(path.with_name(f"{path.stem}.{job[1].lower()}{path.suffix}"),
                              assembly.elements, params.k)
        else:
            outcome = res
        outcomes.append(outcome)
    return outcomes


@main.command("protocol")
@params_options
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True,
              help="Runs per instance kind.")
@click.option("--estimator", type=click.Choice(ESTIMATORS), default="exact", show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=4096, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--export-stream", type=click.Path(dir_okay=False), default=None,
              help="Write the first YES and NO streams as PATH-stem.yes/.no binary files.")
@output_options()
@click.pass_context
def protocol_cmd(ctx, n, k, c, c1, c2, t_factor, trials, estimator, samples, seed, workers,
                 export_stream, out, fmt):
    """Run the reduction on YES and NO instances; one row per run plus a summary."""
    params = _derive(n, k, c, c1, c2, t_factor)
    outcomes = _run_protocols(params, trials, seed, estimator, samples, workers, export_stream)
    rows = [o.csv_row() for o in outcomes]
    _write(out, render(_config(ctx), ProtocolOutcome.CSV_FIELDS, rows, fmt,
                       {"summary": _summary(outcomes, params)}))


@main.command("build-stream")
@params_options
@click.option("--kind", type=click.Choice(["yes", "no"], case_sensitive=False), required=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--stream-out", type=click.Path(dir_okay=False), required=True,
              help="Binary stream file (ROML header + u32 ids).")
@output_options()
@click.pass_context
def build_stream_cmd(ctx, n, k, c, c1, c2, t_factor, kind, seed, stream_out, out, fmt):
    """Assemble one stream and export it; the summary row goes to --out."""
    params = _derive(n, k, c, c1, c2, t_factor)
    instance = gen_instance_for(params, kind, sub_seed(seed, "cli-instance"))
    outcome, assembly = run_protocol(instance, params, "exact", seed, keep_assembly=True)
    if assembly is not None:
        export_stream(stream_out, assembly.elements, params.k)
    row = {
        "seed": seed, "kind": instance.kind.value, "aborted": outcome.aborted or "",
        "n": params.n, "k": params.k, "messages": outcome.messages,
        "exact_fk": "" if outcome.exact_fk is None else outcome.exact_fk,
        "witness_multiplicity": "" if outcome.witness_multiplicity is None else outcome.witness_multiplicity,
        "written": int(assembly is not None),
    }
    _write(out, render(_config(ctx), list(row), [row], fmt))


def _lemma1_rows(ns, k, c1s, trials, seed):
    return [verify_lemma1(n, k, c1, trials, seed).csv_row() for n, c1 in itertools.product(ns, c1s)]


def _lemma2_rows(ns, k, c2s, trials, seed):
    return [verify_lemma2(n, k, c2, trials, seed).csv_row() for n, c2 in itertools.product(ns, c2s)]


@main.command("lemma1")
@click.option("--n", "ns", type=ListOf(SCALE), default="1e6", show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--c1", "c1s", type=ListOf(click.FLOAT), default="0.05", show_default=True)
@click.option("--trials", type=click.IntRange(min=100), default=10_000, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@output_options()
@click.pass_context
def lemma1_cmd(ctx, ns, k, c1s, trials, seed, out, fmt):
    """Monte-Carlo overlap statistics of random cyclic intervals."""
    from romlab.intervals import Lemma1Report

    rows = _lemma1_rows(ns, k, c1s, trials, seed)
    _write(out, render(_config(ctx), Lemma1Report.CSV_FIELDS, rows, fmt))


@main.command("lemma2")
@click.option("--n", "ns", type=ListOf(SCALE), default="1e6", show_default=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--c2", "c2s", type=ListOf(click.FLOAT), default="0.005", show_default=True)
@click.option("--trials", type=click.IntRange(min=100), default=10_000, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@output_options()
@click.pass_context
def lemma2_cmd(ctx, ns, k, c2s, trials, seed, out, fmt):
    """Monte-Carlo minimum spacing of random subsets."""
    from romlab.diagnostics import GapReport

    rows = _lemma2_rows(ns, k, c2s, trials, seed)
    _write(out, render(_config(ctx), GapReport.CSV_FIELDS, rows, fmt))


@main.command("diagnose")
@params_options
@click.option("--batches", type=click.IntRange(min=30), default=1000, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@output_options()
@click.pass_context
def diagnose_cmd(ctx, n, k, c, c1, c2, t_factor, batches, seed, out, fmt):
    """Order-uniformity diagnostics over many YES assemblies."""
    from romlab.diagnostics import UniformityReport

    params = _derive(n, k, c, c1, c2, t_factor)
    report = order_uniformity_test(params, batches, seed)
    _write(out, render(_config(ctx), UniformityReport.CSV_FIELDS, [report.csv_row()], fmt))


SWEEP_PROTOCOL_FIELDS = ("n", "k", "c", "c1", "c2", "t_factor", "t", "w", "N", "w2", "runs", "accuracy",
                         "abort_rate", "mean_messages", "mean_total_bits", "reference_budget")


@main.command("sweep")
@click.option("--experiment", type=click.Choice(["lemma1", "lemma2", "protocol"]), required=True)
@click.option("--n", "ns", type=ListOf(SCALE), default="1e6", show_default=True)
@click.option("--k", "ks", type=ListOf(click.INT), default="3", show_default=True)
@click.option("--c", "cs", type=ListOf(click.FLOAT), default=str(DEFAULT_C), show_default=True)
@click.option("--c1", "c1s", type=ListOf(click.FLOAT), default=str(DEFAULT_C1), show_default=True)
@click.option("--c2", "c2s", type=ListOf(click.FLOAT), default=str(DEFAULT_C2), show_default=True)
@click.option("--t-factor", "tfs", type=ListOf(click.INT), default=str(DEFAULT_T_FACTOR), show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--estimator", type=click.Choice(ESTIMATORS), default="exact", show_default=True)
@click.option("--samples", type=click.IntRange(min=1), default=4096, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@output_options()
@click.pass_context
def sweep_cmd(ctx, experiment, ns, ks, cs, c1s, c2s, tfs, trials, estimator, samples, seed, workers,
              out, fmt):
    """One row per grid point of the chosen experiment."""
    if experiment in ("lemma1", "lemma2") and trials < 100:
        raise click.BadParameter("lemma sweeps need --trials >= 100", param_hint="--trials")
    rows: list[dict] = []
    if experiment == "lemma1":
        from romlab.intervals import Lemma1Report

        fields = Lemma1Report.CSV_FIELDS
        for k in ks:
            rows += _lemma1_rows(ns, k, c1s, trials, seed)
    elif experiment == "lemma2":
        from romlab.diagnostics import GapReport

        fields = GapReport.CSV_FIELDS
        for k in ks:
            rows += _lemma2_rows(ns, k, c2s, trials, seed)
    else:
        fields = SWEEP_PROTOCOL_FIELDS
        for n, k, c, c1, c2, tf in itertools.product(ns, ks, cs, c1s, c2s, tfs):
            params = _derive(n, k, c, c1, c2, tf)
            outcomes = _run_protocols(params, trials, seed, estimator, samples, workers)
            summary = _summary(outcomes, params)
            rows.append({"n": n, "k": k, "c": c, "c1": c1, "c2": c2, "t_factor": tf,
                         **{f: "" if summary[f] is None else summary[f] for f in SWEEP_PROTOCOL_FIELDS
                            if f in summary}})
    _write(out, render(_config(ctx), fields, rows, fmt))


def run(argv=None) -> int:
    """Invoke the CLI, mapping internal invariant failures to exit code 3."""
    try:
        main.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 1
    except (DecompositionGap, AssemblyIncomplete) as exc:
        click.echo(f"internal invariant violation: {exc}", err=True)
        return 3
    return 0


def entrypoint() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entrypoint()
