import json
from typing import Any

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.syntax import Syntax
from rich.table import Table
from rich.text import Text

from covtail.reporting import TrialReport
from covtail.sparse import REResult

console = Console()


def _verdict(passed: bool | None) -> Text:
    if passed is None:
        return Text("VACUOUS", style="yellow")
    return Text("PASS", style="bold green") if passed else Text("FAIL", style="bold red")


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_start_panel(experiment: str, master_seed: int, trials: int | None, workers: int) -> None:
    """Print the panel announcing a run."""
    console.print()
    console.print(
        Panel(
            f"[bold]Experiment:[/bold] {experiment}\n"
            f"[bold]Master seed:[/bold] {master_seed}\n"
            f"[bold]Trials:[/bold] {trials if trials is not None else 'default'}\n"
            f"[bold]Workers:[/bold] {workers}",
            title="[bold cyan]Starting Run[/bold cyan]",
            border_style="cyan",
        )
    )
    console.print()


def create_summary_table(report: TrialReport) -> Table:
    """Aggregate figures of one report."""
    table = Table(
        title=f"[bold cyan]{report.experiment}[/bold cyan]",
        box=box.ROUNDED,
        show_header=False,
        expand=True,
        padding=(0, 1),
    )
    table.add_column("Info", style="bold", width=22)
    table.add_column("Value", style="white")

    table.add_row("Verdict", _verdict(report.passed))
    table.add_row("Trials", str(report.trials))
    table.add_row("Violations", f"[red]{report.violations}[/red]" if report.violations else "0")
    table.add_row("Frequency", f"{report.frequency:.6g}")
    table.add_row("Wilson 95%", f"[{report.wilson_low:.4g}, {report.wilson_high:.4g}]")
    table.add_row("Bound", _fmt(report.bound_value))
    table.add_row("Target probability", _fmt(report.target_probability))
    if report.flags:
        table.add_row("Flags", Text(", ".join(report.flags), style="magenta"))
    table.add_row("Wall clock", f"{report.wall_clock:.2f}s")
    return table


def create_checks_table(report: TrialReport) -> Table:
    """One line per check of a suite report."""
    table = Table(title="[bold]Checks[/bold]", box=box.ROUNDED, expand=True)
    table.add_column("#", justify="right", style="dim")
    table.add_column("Check")
    table.add_column("Estimate", justify="right")
    table.add_column("Bound", justify="right")
    table.add_column("SE", justify="right")
    table.add_column("", justify="center")
    for row in report.rows:
        table.add_row(
            str(row.trial),
            str(row.extras.get("name", "")),
            f"{row.statistic:.6g}",
            f"{row.bound:.6g}",
            f"{row.extras.get('standard_error', 0.0):.3g}",
            _verdict(not row.violated),
        )
    return table


def print_report(report: TrialReport) -> None:
    console.print(create_summary_table(report))
    if report.rows and "name" in report.rows[0].extras:
        console.print(create_checks_table(report))
    console.print()


def print_re_panel(result: REResult) -> None:
    """Print a restricted-eigenvalue certificate."""
    minimizer = ", ".join(f"{x:.4g}" for x in result.minimizer)
    console.print(
        Panel(
            f"[bold]re(A, S, α):[/bold] {result.value:.8g}\n"
            f"[bold]Lower bracket:[/bold] {result.lower_bound:.8g}\n"
            f"[bold]Certificate gap:[/bold] {result.certificate_gap:.3g}\n"
            f"[bold]Restarts used:[/bold] {result.restarts_used}\n"
            f"[bold]Minimizer:[/bold] [{minimizer}]",
            title="[bold green]Restricted Eigenvalue[/bold green]",
            border_style="green",
        )
    )
    console.print()


def print_error_panel(message: str) -> None:
    """Print the error panel."""
    console.print(
        Panel(
            f"[red]{message}[/red]",
            title="[bold red]Error[/bold red]",
            border_style="red",
        )
    )
    console.print()


def print_json_panel(document: dict, title: str = "Report") -> None:
    """Print a JSON document with syntax highlighting."""
    syntax = Syntax(json.dumps(document, indent=2), "json", theme="monokai", line_numbers=True)
    console.print(Panel(syntax, title=f"[bold]{title}[/bold]", border_style="blue"))
