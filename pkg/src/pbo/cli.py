"""Command-line entry point: batch experiments, oracle audits, and the service."""

from __future__ import annotations

import json
import sys

import click

from .benchmarks import BENCHMARKS
from .harness import ExperimentConfig, POLICIES, oracle_check, run_experiment, write_results

FN_CHOICES = click.Choice(sorted(BENCHMARKS))


@click.group()
def main():
    """Black-box optimization from pairwise preference duels."""


@main.command()
@click.option("--function", "fn_id", type=FN_CHOICES, required=True)
@click.option("--policy", type=click.Choice(POLICIES), required=True)
@click.option("--budget", type=int, default=200, show_default=True)
@click.option("--init", "n_init", type=int, default=5, show_default=True)
@click.option("--grid", "grid_per_dim", type=int, default=33, show_default=True)
@click.option("--replicates", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--features", "n_features", type=int, default=500, show_default=True)
@click.option("--landmarks", type=click.Choice(["grid", "sample"]), default="grid", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), required=True)
@click.option("--format", "out_format", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def run(fn_id, policy, budget, n_init, grid_per_dim, replicates, seed, n_features, landmarks, out, out_format):
    """Run a multi-replicate simulated-oracle experiment and write results."""
    try:
        config = ExperimentConfig(
            fn_id=fn_id, policy=policy, budget=budget, n_init=n_init,
            grid_per_dim=grid_per_dim, replicates=replicates, seed=seed,
            n_features=n_features, landmarks=landmarks, out=out, out_format=out_format,
        )
        result = run_experiment(config)
        write_results(result.records, out, out_format)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(json.dumps({"code": "run_failed", "message": str(exc)}), err=True)
        sys.exit(1)
    for row in result.summary:
        click.echo(
            f"iter {row['iteration']:4d}  median g(x_c) {row['median_g']:+.6f}  "
            f"mean {row['mean_g']:+.6f}"
        )
    click.echo(f"wrote {len(result.records)} records to {out}")


@main.command("oracle-check")
@click.option("--function", "fn_id", type=FN_CHOICES, required=True)
@click.option("--grid", "grid_per_dim", type=int, default=33, show_default=True)
def oracle_check_cmd(fn_id, grid_per_dim):
    """Audit that the exact-oracle Condorcet winner equals the grid argmin."""
    try:
        report = oracle_check(fn_id, grid_per_dim)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(json.dumps({"code": "oracle_check_failed", "message": str(exc)}), err=True)
        sys.exit(1)
    click.echo(json.dumps(report))
    if not report["match"]:
        click.echo(
            json.dumps({"code": "condorcet_mismatch", "message": f"{fn_id}: argmax != argmin"}),
            err=True,
        )
        sys.exit(2)


@main.command()
@click.option("--addr", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default="./pbo-sessions", show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="Directory with built UI assets to serve under /ui/ "
                   "[default: ./frontend/dist when present]")
def serve(addr, port, data_dir, ui_dir):
    """Run the interactive session service."""
    import os

    import uvicorn

    from .service import create_app

    if ui_dir is None and os.path.isdir("frontend/dist"):
        ui_dir = "frontend/dist"
    uvicorn.run(create_app(data_dir, ui_dir), host=addr, port=port, log_level="info")


if __name__ == "__main__":
    main()
