"""Command line front end: one figure or one stats report per invocation.

Exit codes: 0 success, 2 bad usage, unreadable CSV, or missing column
(JSON error object on stderr).
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .core import RenderSpec, render, stats_report


def _json_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, OSError) as exc:
            click.echo(
                json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                err=True,
            )
            sys.exit(2)

    return wrapper


@click.command()
@click.option("--csv", "csv_paths", multiple=True, required=True,
              help="input CSV; repeat to overlay curves")
@click.option("--column", required=True, help="probe column to draw")
@click.option("--out", default=None, help="output PNG path")
@click.option("--switch-times", default=None,
              help="comma separated Hamiltonian switch times")
@click.option("--title", default=None)
@click.option("--label", "labels", multiple=True,
              help="legend entry per CSV, in order (default: file stem)")
@click.option("--dump-stats", is_flag=True,
              help="print per-phase min/max of the column as JSON")
@_json_errors
def main(csv_paths, column, out, switch_times, title, labels, dump_stats):
    """Render a probe time-series CSV to a static figure."""
    if out is None and not dump_stats:
        raise ValueError("nothing to do: pass --out, --dump-stats, or both")
    spec = RenderSpec(
        csv_paths=list(csv_paths),
        column=column,
        out_path=out,
        switch_times=(
            [float(x) for x in switch_times.split(",")] if switch_times else []
        ),
        title=title,
        labels=list(labels) or None,
    )
    if dump_stats:
        click.echo(json.dumps(stats_report(spec), indent=2, sort_keys=True))
    if out is not None:
        render(spec)


if __name__ == "__main__":
    main()
