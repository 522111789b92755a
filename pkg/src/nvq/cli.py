#!/usr/bin/env python3
"""Command-line interface for NVQ."""

import csv
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import configargparse
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .bench import OP_COSTS, decode_ordering, run_bench
from .codec import (
    container_size,
    decode_dataset,
    encode_dataset,
    fvecs_size,
    parse_container,
    read_nvq_file,
    record_dtype,
    vector_objective,
    write_nvq_file,
)
from .core.config import add_settings_arguments, get_settings, settings_from_args
from .core.errors import ConfigError, DomainError, NvqError, exit_code_for
from .core.logging import setup_logging
from .eval import error_stats, exact_knn, ground_truth_results, iter_sweep, objective_histogram
from .optimizer import default_hyperparams
from .schemas import Command, MetricsReport, NonlinearityFamily, RunConfig, SnesHyperparams
from .synth import bell_vectors
from .vecs import read_vectors, write_vectors

console = Console()
logger = logging.getLogger(__name__)

FITTED_FAMILIES = [NonlinearityFamily.KUMARASWAMY, NonlinearityFamily.LOGLOG, NonlinearityFamily.NQT]


def _format_bytes(size: float) -> str:
    for unit in ["B", "KB", "MB", "GB"]:
        if size < 1024.0:
            return f"{size:.1f} {unit}"
        size /= 1024.0
    return f"{size:.1f} TB"


def _require(path: Optional[Path], flag: str, command: Command) -> Path:
    if path is None:
        raise ConfigError(f"{command.value} requires {flag}")
    return path


def _hyperparams(config: RunConfig) -> SnesHyperparams:
    return default_hyperparams(tol=config.tol, max_iters=config.max_iters)


def _summary_table(title: str, rows: Iterable[Sequence[Any]]) -> Table:
    table = Table(title=title)
    table.add_column("Field", style="cyan", no_wrap=True)
    table.add_column("Value", style="green")
    for name, value in rows:
        table.add_row(name, str(value))
    return table


def write_csv(path: Path, rows: Sequence[Dict[str, Any]]) -> None:
    """UTF-8 CSV with a header row taken from the first row's keys."""
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


# Commands


def cmd_compress(config: RunConfig) -> None:
    """Encode an fvecs dataset into an NVQ1 container."""
    source = _require(config.input, "--input", config.command)
    target = _require(config.output, "--output", config.command)
    data = read_vectors(source)
    if data.shape[0] == 0:
        raise DomainError(f"{source} holds no vectors")
    n, d = data.shape

    with console.status(f"Encoding {n} vectors with {config.family.value}..."):
        encoded = encode_dataset(
            data,
            config.family,
            config.beta,
            config.m,
            hp=_hyperparams(config),
            seed=config.seed,
            threads=config.threads,
            fast_math=config.fast_math,
            chunk_size=config.chunk_size,
        )
    size = write_nvq_file(target, encoded.meta, encoded.vectors)

    console.print(
        _summary_table(
            "Compressed",
            [
                ("Vectors", n),
                ("Dimension", d),
                ("Subvectors", config.m),
                ("Bits", config.beta),
                ("Family", config.family.value),
                ("Mean objective", f"{encoded.mean_objective:.4f}"),
                ("Fallback fraction", f"{encoded.fallback_fraction:.4f}"),
                ("File size", _format_bytes(size)),
                ("Ratio vs f32", f"{fvecs_size(d, n) / size:.2f}x"),
            ],
        )
    )


def cmd_decompress(config: RunConfig) -> None:
    """Decode an NVQ1 container back into fvecs."""
    source = _require(config.input, "--input", config.command)
    target = _require(config.output, "--output", config.command)
    meta, vectors = read_nvq_file(source)
    decoded = decode_dataset(meta, vectors, config.fast_math)
    size = write_vectors(target, decoded)
    console.print(f"[green]Decoded {meta.n} vectors of dimension {meta.d} to {target} ({_format_bytes(size)})[/green]")


def _load_queries(config: RunConfig, d: int, n: int) -> np.ndarray:
    if config.queries is not None:
        queries = read_vectors(config.queries)
        if queries.shape[0] == 0:
            raise DomainError(f"{config.queries} holds no queries")
        if queries.shape[1] != d:
            raise DomainError(f"queries have dimension {queries.shape[1]}, dataset {d}")
        return queries[: config.query_count]
    # held out rows of the synthetic corpus the dataset was drawn from
    return bell_vectors(config.query_count, d, config.seed, start=n)


def _histogram_rows(report: MetricsReport, objectives: Sequence[float]) -> List[Dict[str, Any]]:
    return [
        {"family": report.family, "beta": report.beta, "m": report.m, "lower": lo, "upper": hi, "count": count}
        for lo, hi, count in objective_histogram(objectives)
    ]


def _metrics_table(reports: Sequence[MetricsReport], k: int) -> Table:
    table = Table(title="Evaluation")
    for name, style in [("Family", "cyan"), ("Bits", "yellow"), ("m", "yellow")]:
        table.add_column(name, style=style, no_wrap=True)
    for name in ["Objective", "MSE", "Dot error", f"Recall@{k}", f"MAP@{k}", "Fallback"]:
        table.add_column(name, justify="right")
    for r in reports:
        table.add_row(
            str(r.family),
            str(r.beta),
            str(r.m),
            f"{r.mean_objective:.4f}",
            f"{r.mean_recon_error:.4g}",
            f"{r.mean_dot_error:.4g}",
            f"{r.recall_at_k:.4f}",
            f"{r.map_at_k:.4f}",
            f"{r.fallback_fraction:.3f}",
        )
    return table


def cmd_eval(config: RunConfig) -> List[MetricsReport]:
    """Evaluate existing containers, or sweep (family, bits, subvectors) over the raw dataset."""
    source = _require(config.input, "--input", config.command)
    raw = read_vectors(source).astype(np.float64)
    if raw.shape[0] == 0:
        raise DomainError(f"{source} holds no vectors")
    n, d = raw.shape
    k = min(config.k, n)
    queries = _load_queries(config, d, n).astype(np.float64)

    if config.ground_truth is not None:
        ids = read_vectors(config.ground_truth, "ivecs")
        if ids.shape[0] < queries.shape[0] or ids.shape[1] < k:
            raise DomainError(f"ground truth {ids.shape} is too small for {queries.shape[0]} queries at k={k}")
        ground = ground_truth_results(ids[: queries.shape[0], :k], queries, raw)
    else:
        ground = exact_knn(queries, raw, k)

    reports: List[MetricsReport] = []
    histogram: List[Dict[str, Any]] = []
    if config.compressed:
        for path in config.compressed:
            meta, vectors = read_nvq_file(path)
            if (meta.n, meta.d) != (n, d):
                raise DomainError(f"{path} holds {meta.n} x {meta.d} vectors, raw dataset is {n} x {d}")
            objectives = [vector_objective(x, ev, meta, config.fast_math) for x, ev in zip(raw, vectors)]
            report = error_stats(
                raw, meta, vectors, queries, k, ground, objectives=objectives, fast_math=config.fast_math
            )
            reports.append(report)
            histogram.extend(_histogram_rows(report, objectives))
    else:
        runs = iter_sweep(
            raw,
            queries,
            config.families,
            config.bits,
            config.subvectors,
            k,
            hp=_hyperparams(config),
            seed=config.seed,
            threads=config.threads,
            ground=ground,
            fast_math=config.fast_math,
        )
        for encoded, report in runs:
            reports.append(report)
            histogram.extend(_histogram_rows(report, encoded.objectives))

    console.print(_metrics_table(reports, k))
    if config.output is not None:
        write_csv(config.output, [report.as_row() for report in reports])
        console.print(f"[green]Wrote {len(reports)} rows to {config.output}[/green]")
    if config.histogram is not None:
        write_csv(config.histogram, histogram)
    return reports


def cmd_bench(config: RunConfig) -> None:
    """Encode/decode throughput per family plus the per-op cost reference."""
    results = run_bench(
        config.families, config.bench_values, warmup=config.warmup, beta=config.beta, fast_math=config.fast_math
    )

    table = Table(title=f"Throughput over {results[0].values:,} values" if results else "Throughput")
    table.add_column("Family", style="cyan", no_wrap=True)
    table.add_column("Encode (values/s)", justify="right")
    table.add_column("Decode (values/s)", justify="right")
    table.add_column("Encode ops (exp/log/fma/mul/div)", style="dim")
    table.add_column("Decode ops (exp/log/fma/mul/div)", style="dim")
    for r in results:
        costs = OP_COSTS.get(r.family)
        table.add_row(
            r.family,
            f"{r.encode_rate:.3g}",
            f"{r.decode_rate:.3g}",
            "/".join(str(v) for v in costs["encode"].values()) if costs else "-",
            "/".join(str(v) for v in costs["decode"].values()) if costs else "-",
        )
    console.print(table)
    console.print(f"Decode ordering: {' > '.join(decode_ordering(results))}")

    if config.output is not None:
        write_csv(config.output, [r.model_dump() for r in results])


def cmd_synth(config: RunConfig) -> None:
    """Write a bell-shaped synthetic dataset as fvecs."""
    target = _require(config.output, "--output", config.command)
    vectors = bell_vectors(config.n, config.d, config.seed)
    size = write_vectors(target, vectors)
    console.print(f"[green]Wrote {config.n} x {config.d} vectors to {target} ({_format_bytes(size)})[/green]")


def cmd_inspect(config: RunConfig) -> None:
    """Show the header of an NVQ1 container and check its size."""
    source = _require(config.input, "--input", config.command)
    raw = source.read_bytes()
    meta, _ = parse_container(raw)
    expected = container_size(meta.d, meta.n, meta.m, meta.beta)
    console.print(
        _summary_table(
            str(source),
            [
                ("Vectors", meta.n),
                ("Dimension", meta.d),
                ("Subvectors", meta.m),
                ("Bits", meta.beta),
                ("Family", meta.family.value),
                ("Partition seed", meta.partition_seed),
                ("Record size", f"{record_dtype(meta.m, meta.d, meta.beta).itemsize} B"),
                ("File size", f"{len(raw)} B"),
                ("Expected size", f"{expected} B ({'ok' if expected == len(raw) else 'mismatch'})"),
                ("Ratio vs f32", f"{fvecs_size(meta.d, meta.n) / len(raw):.2f}x"),
            ],
        )
    )


COMMANDS = {
    Command.COMPRESS: cmd_compress,
    Command.DECOMPRESS: cmd_decompress,
    Command.EVAL: cmd_eval,
    Command.BENCH: cmd_bench,
    Command.SYNTH: cmd_synth,
    Command.INSPECT: cmd_inspect,
}


def build_parser() -> configargparse.ArgParser:
    parser = configargparse.ArgParser(description="NVQ vector compression CLI", default_config_files=[".env"])
    parser.add_argument("command", choices=[c.value for c in Command], help="Command to run")
    parser.add_argument("--config", is_config_file=True, help="Key-value config file")
    add_settings_arguments(parser, get_settings())

    parser.add_argument("-i", "--input", env_var="NVQ_INPUT", type=Path, help="Input file (fvecs or NVQ1)")
    parser.add_argument("-o", "--output", env_var="NVQ_OUTPUT", type=Path, help="Output file")
    parser.add_argument("--compressed", action="append", type=Path, help="NVQ1 container to evaluate (repeatable)")
    parser.add_argument("--queries", env_var="NVQ_QUERIES", type=Path, help="Query vectors (fvecs)")
    parser.add_argument("--ground-truth", env_var="NVQ_GROUND_TRUTH", type=Path, help="Neighbor ids (ivecs)")
    parser.add_argument(
        "--family",
        action="append",
        choices=[f.value for f in NonlinearityFamily],
        help="Nonlinearity family (repeatable for sweeps)",
    )
    parser.add_argument("--bits", action="append", type=int, help="Bits per code, 4 or 8 (repeatable)")
    parser.add_argument("--subvectors", action="append", type=int, help="Subvector count (repeatable)")
    parser.add_argument("--k", env_var="NVQ_K", type=int, default=10, help="Neighbors per query")
    parser.add_argument("--query-count", env_var="NVQ_QUERY_COUNT", type=int, default=100, help="Queries to use")
    parser.add_argument("--n", env_var="NVQ_N", type=int, default=1000, help="Synthetic vector count")
    parser.add_argument("--d", env_var="NVQ_D", type=int, default=768, help="Synthetic dimension")
    parser.add_argument("--bench-values", type=int, default=100_000_000, help="Scalar values timed per family")
    parser.add_argument("--warmup", type=int, default=1, help="Untimed warm-up passes")
    parser.add_argument("--histogram", type=Path, help="Write per-vector objective histogram CSV")
    return parser


def config_from_args(args: Any) -> RunConfig:
    """Validate parsed arguments; ConfigError on any invalid value."""
    command = Command(args.command)
    if args.family:
        families = [NonlinearityFamily(f) for f in args.family]
    elif command is Command.BENCH:
        families = FITTED_FAMILIES
    else:
        families = [NonlinearityFamily.LOGLOG]
    try:
        return RunConfig(
            command=command,
            input=args.input,
            output=args.output,
            compressed=args.compressed or [],
            queries=args.queries,
            ground_truth=args.ground_truth,
            families=families,
            bits=args.bits or [8],
            subvectors=args.subvectors or [1],
            seed=args.seed,
            k=args.k,
            query_count=args.query_count,
            n=args.n,
            d=args.d,
            threads=args.threads,
            max_iters=args.max_iters,
            tol=args.tol,
            bench_values=args.bench_values,
            warmup=args.warmup,
            histogram=args.histogram,
            fast_math=args.fast_math,
            chunk_size=args.chunk_size,
        )
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid configuration: {problems}") from None


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(settings_from_args(args).log_level)

    try:
        config = config_from_args(args)
        COMMANDS[config.command](config)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        sys.exit(130)
    except Exception as e:
        if not isinstance(e, (NvqError, OSError)):
            logger.exception("unexpected failure")
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(exit_code_for(e))


if __name__ == "__main__":
    main()
