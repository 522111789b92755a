#!/usr/bin/env python3
"""Run the experiment sweeps listed in experiments.yml and write one CSV per experiment."""

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(__file__)), "src"))

from nvq.bench import run_bench
from nvq.cli import write_csv
from nvq.core.config import Settings, parse_cli_args
from nvq.core.logging import setup_logging
from nvq.eval import iter_sweep, objective_histogram
from nvq.optimizer import default_hyperparams
from nvq.schemas import NonlinearityFamily
from nvq.synth import bell_vectors
from nvq.vecs import read_vectors

console = Console()


class Experiment(BaseModel):
    """One sweep over (family, bits, subvectors), or a throughput run when bench is set."""

    input: Optional[Path] = None
    queries: Optional[Path] = None
    n: int = Field(1000, ge=1)
    d: int = Field(768, ge=1)
    query_count: int = Field(100, ge=1)
    k: int = Field(10, ge=1)
    families: List[NonlinearityFamily] = [NonlinearityFamily.LOGLOG]
    bits: List[int] = [8]
    subvectors: List[int] = [1]
    bench: bool = False
    bench_values: int = Field(10_000_000, ge=1)
    histogram: bool = False


class ExperimentRunner:
    """Load experiments from YAML and run them in order."""

    def __init__(self, config_file: Path, output_dir: Path, settings: Settings):
        self.config_file = config_file
        self.output_dir = output_dir
        self.settings = settings
        self.experiments: Dict[str, Experiment] = {}
        self.stats = {"experiments": 0, "rows": 0, "errors": 0}

    def load_config(self) -> Dict[str, Experiment]:
        """Parse the YAML file, merging the defaults block into every experiment."""
        if not self.config_file.exists():
            console.print(f"[red]Experiment file not found: {self.config_file}[/red]")
            sys.exit(3)

        try:
            with open(self.config_file, "r") as f:
                raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            console.print(f"[red]Error parsing YAML file: {e}[/red]")
            sys.exit(2)

        defaults = raw.get("defaults", {})
        for name, body in (raw.get("experiments") or {}).items():
            try:
                self.experiments[name] = Experiment(**{**defaults, **(body or {})})
            except ValidationError as e:
                console.print(f"[red]Invalid experiment '{name}': {e}[/red]")
                sys.exit(2)
        console.print(f"[green]Loaded {len(self.experiments)} experiments from {self.config_file}[/green]")
        return self.experiments

    def show_preview(self) -> None:
        table = Table(title="Experiments")
        table.add_column("Name", style="cyan")
        table.add_column("Data", style="green")
        table.add_column("Families", style="yellow")
        table.add_column("Bits", style="magenta")
        table.add_column("Subvectors", style="magenta")
        for name, exp in self.experiments.items():
            data = str(exp.input) if exp.input else f"synthetic {exp.n} x {exp.d}"
            table.add_row(
                name,
                "throughput" if exp.bench else data,
                ", ".join(f.value for f in exp.families),
                ", ".join(str(b) for b in exp.bits),
                "-" if exp.bench else ", ".join(str(m) for m in exp.subvectors),
            )
        console.print(table)

    def _load_data(self, exp: Experiment) -> Any:
        if exp.input is not None:
            data = read_vectors(exp.input).astype(np.float64)
            n, d = data.shape
            if exp.queries is not None:
                queries = read_vectors(exp.queries)[: exp.query_count]
            else:
                queries = bell_vectors(exp.query_count, d, self.settings.seed, start=n)
        else:
            data = bell_vectors(exp.n, exp.d, self.settings.seed).astype(np.float64)
            queries = bell_vectors(exp.query_count, exp.d, self.settings.seed, start=exp.n)
        return data, queries.astype(np.float64)

    def run_experiment(self, name: str, exp: Experiment) -> int:
        """Run one experiment and return the number of CSV rows written."""
        if exp.bench:
            results = run_bench(exp.families, exp.bench_values, beta=exp.bits[0], fast_math=self.settings.fast_math)
            rows = [r.model_dump() for r in results]
            write_csv(self.output_dir / f"{name}.csv", rows)
            return len(rows)

        data, queries = self._load_data(exp)
        hp = default_hyperparams(tol=self.settings.tol, max_iters=self.settings.max_iters)
        rows: List[Dict[str, Any]] = []
        histogram: List[Dict[str, Any]] = []
        runs = iter_sweep(
            data,
            queries,
            exp.families,
            exp.bits,
            exp.subvectors,
            exp.k,
            hp=hp,
            seed=self.settings.seed,
            threads=self.settings.threads,
            fast_math=self.settings.fast_math,
        )
        for encoded, report in runs:
            rows.append(report.as_row())
            if exp.histogram:
                histogram.extend(
                    {"family": report.family, "beta": report.beta, "m": report.m, "lower": lo, "upper": hi, "count": c}
                    for lo, hi, c in objective_histogram(encoded.objectives)
                )
        write_csv(self.output_dir / f"{name}.csv", rows)
        if exp.histogram:
            write_csv(self.output_dir / f"{name}_histogram.csv", histogram)
        return len(rows)

    def run(self, only: Optional[List[str]] = None) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        selected = {k: v for k, v in self.experiments.items() if not only or k in only}

        with Progress(
            SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console
        ) as progress:
            task = progress.add_task("Running experiments...", total=len(selected))
            for name, exp in selected.items():
                progress.update(task, description=f"Running experiment: {name}")
                try:
                    self.stats["rows"] += self.run_experiment(name, exp)
                    self.stats["experiments"] += 1
                except Exception as e:
                    console.print(f"[red]Experiment '{name}' failed: {e}[/red]")
                    self.stats["errors"] += 1
                progress.advance(task)

        self.show_summary()

    def show_summary(self) -> None:
        table = Table(title="Summary")
        table.add_column("Experiments", style="green")
        table.add_column("Rows", style="cyan")
        table.add_column("Errors", style="red")
        table.add_row(str(self.stats["experiments"]), str(self.stats["rows"]), str(self.stats["errors"]))
        console.print(table)
        console.print(f"Results in {self.output_dir}")


def main() -> None:
    parser = argparse.ArgumentParser(description="Run NVQ experiment sweeps")
    parser.add_argument("--experiments", type=Path, default=Path("experiments.yml"), help="Experiment file")
    parser.add_argument("--output-dir", type=Path, default=Path("results"), help="Directory for CSV results")
    parser.add_argument("--only", nargs="*", help="Run only the named experiments")
    parser.add_argument("--preview", action="store_true", help="Only list the experiments")
    args, _ = parser.parse_known_args()

    # --seed, --threads, --max-iters, --tol and --fast-math come from the shared settings flags
    settings = parse_cli_args()
    setup_logging(settings.log_level)

    runner = ExperimentRunner(args.experiments, args.output_dir, settings)
    runner.load_config()
    runner.show_preview()
    if args.preview:
        return

    try:
        runner.run(args.only)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted by user[/yellow]")
        sys.exit(130)
    if runner.stats["errors"]:
        sys.exit(1)


if __name__ == "__main__":
    main()
