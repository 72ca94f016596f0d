"""Command-line interface for tripartite-optomech.

This module requires optional CLI dependencies (typer, rich).
Install with: pip install tripartite-optomech[cli]
"""

import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

# Check for optional CLI dependencies
try:
    import typer
    from rich.console import Console
    from rich.logging import RichHandler
    from rich.table import Table

    CLI_AVAILABLE = True
except ImportError:
    CLI_AVAILABLE = False

EXIT_CONFIG_ERROR = 1
EXIT_SELFTEST_FAILURE = 2


def _check_cli_dependencies():
    """Raise error if CLI dependencies are not installed."""
    if not CLI_AVAILABLE:
        raise ImportError(
            "CLI dependencies not installed. "
            "Install with: pip install tripartite-optomech[cli]"
        )


def _complex_dict(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


# Only define CLI if dependencies are available
if CLI_AVAILABLE:
    from pydantic import ValidationError

    from tripartite_optomech import __version__
    from tripartite_optomech.config import load_config
    from tripartite_optomech.dynamics import build_drift_matrix, layout_discrepancy, stability
    from tripartite_optomech.exceptions import ConfigError, OptomechError
    from tripartite_optomech.gaussian import all_negativities, diffusion_matrix, solve_lyapunov
    from tripartite_optomech.modes import nonlinearity_table
    from tripartite_optomech.params import derive_parameters
    from tripartite_optomech.selftest import FAULTS, selftest as run_selftest
    from tripartite_optomech.spectrum import displacement_spectrum
    from tripartite_optomech.steady_state import excitation_probability, solve_for_params
    from tripartite_optomech.sweep import GridAxis, SweepSpec, run_sweep, write_records

    app = typer.Typer(
        name="optomech",
        help="Steady state, entanglement and spectra of a tripartite atom-cavity-mirror system",
        add_completion=False,
    )
    console = Console()

    def version_callback(value: bool) -> None:
        """Print version and exit."""
        if value:
            console.print(f"tripartite-optomech version: {__version__}")
            raise typer.Exit()

    def _fail(message: object, code: int = EXIT_CONFIG_ERROR) -> None:
        console.print(f"[bold red]✗ Error:[/bold red] {message}")
        raise typer.Exit(code=code)

    def _load(config_path: Path):
        """Load a config file, exiting with code 1 on any configuration error."""
        try:
            return load_config(config_path)
        except (ConfigError, ValidationError) as e:
            _fail(e)

    @app.callback()
    def main(
        version: Optional[bool] = typer.Option(
            None,
            "--version",
            "-v",
            help="Show version and exit",
            callback=version_callback,
            is_eager=True,
        ),
        verbose: bool = typer.Option(
            False,
            "--verbose",
            "-V",
            help="Enable verbose logging",
        ),
    ) -> None:
        """Tripartite optomechanics toolkit."""
        log_level = logging.DEBUG if verbose else logging.INFO
        logging.basicConfig(
            level=log_level,
            format="%(message)s",
            handlers=[RichHandler(console=console, rich_tracebacks=True)],
        )

    @app.command()
    def steady(
        config: Path = typer.Option(
            ..., "--config", "-c", help="Configuration file", exists=True, dir_okay=False, readable=True
        ),
        out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the result as JSON"),
        census: bool = typer.Option(
            False, "--census/--no-census", help="Count coexisting fixed points"
        ),
        check_layout: bool = typer.Option(
            False, "--check-layout", help="Compare the drift matrix with the closed-form layout"
        ),
    ) -> None:
        """
        Solve the steady state and report stability and entanglement.

        Negativities are printed only when the drift matrix is stable.
        """
        cfg = _load(config)
        try:
            params = derive_parameters(cfg)
        except ConfigError as e:
            _fail(e)

        try:
            ss = solve_for_params(params, detect_multiplicity=census)
            drift = build_drift_matrix(ss, params)
            verdict = stability(drift)
            negativities = (
                all_negativities(solve_lyapunov(drift, diffusion_matrix(params), verdict))
                if verdict.stable
                else {}
            )
            excitation = excitation_probability(ss)
            discrepancy = layout_discrepancy(ss, params) if check_layout else None
        except OptomechError as e:
            console.print(f"[bold red]✗ Error:[/bold red] {e}")
            raise typer.Exit(code=1)

        table = Table(title="Steady State", show_header=True)
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", style="bold")
        table.add_row("alpha_s", f"{ss.alpha_s:.6g}")
        table.add_row("b_s", f"{ss.b_s:.6g}")
        table.add_row("c_s", f"{ss.c_s:.6g}")
        table.add_row("delta_f / omega_m", f"{ss.delta_f / params.omega_m:.6g}")
        table.add_row("delta_0f / omega_m", f"{ss.delta_0f / params.omega_m:.6g}")
        table.add_row("|E|", f"{abs(ss.drive_e):.6g}")
        table.add_row("residual", f"{ss.residual_norm:.3e} (tol {ss.tolerance:.3e})")
        table.add_row("|c_s|^2", f"{excitation:.3e}")
        if ss.roots_found is not None:
            table.add_row("fixed points", str(ss.roots_found))
        if discrepancy is not None:
            table.add_row("layout mismatches", str(len(discrepancy.mismatched)))
        table.add_row(
            "stable",
            "[green]yes[/green]" if verdict.stable else "[red]no[/red]",
        )
        table.add_row("max Re(lambda) / omega_m", f"{verdict.max_real_over_omega_m:.6g}")
        for pair, result in negativities.items():
            table.add_row(f"E_N {pair}", f"{result.e_n:.6g}")
        console.print(table)

        if out is not None:
            document = {
                "alpha_s": _complex_dict(ss.alpha_s),
                "b_s": _complex_dict(ss.b_s),
                "c_s": _complex_dict(ss.c_s),
                "delta_f": ss.delta_f,
                "delta_0f": ss.delta_0f,
                "drive_e": _complex_dict(ss.drive_e),
                "residual_norm": ss.residual_norm,
                "iterations": ss.iterations,
                "method": ss.method,
                "roots_found": ss.roots_found,
                "multiple_roots": ss.multiple_roots,
                "excitation_probability": excitation,
                "stable": verdict.stable,
                "max_real_eigenvalue": verdict.max_real_over_omega_m,
                "method_agreement": verdict.method_agreement,
                "negativities": {pair: r.e_n for pair, r in negativities.items()},
                "layout_mismatch": (
                    [list(rc) for rc in discrepancy.mismatched] if discrepancy is not None else None
                ),
            }
            out.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
            console.print(f"[bold green]✓[/bold green] Wrote {out}")

    def _run_and_write(spec: SweepSpec, out: Path, fmt: str, jobs: int) -> None:
        if fmt not in ("csv", "json"):
            _fail(f"Unsupported format '{fmt}'. Use csv or json")
        try:
            records = run_sweep(spec, jobs=jobs)
        except ConfigError as e:
            _fail(e)
        write_records(records, spec, out, fmt=fmt)  # type: ignore[arg-type]

        stable = sum(r.stable for r in records)
        failed = sum(r.error is not None for r in records)
        console.print(
            f"[bold green]✓[/bold green] {len(records)} points "
            f"({stable} stable, {failed} failed) written to: {out}"
        )

    @app.command("entangle-sweep")
    def entangle_sweep(
        config: Path = typer.Option(
            ..., "--config", "-c", help="Configuration file", exists=True, dir_okay=False, readable=True
        ),
        var: str = typer.Option(..., "--var", help="delta_a, delta_f, eta, temperature, drive or gamma_a"),
        start: float = typer.Option(..., "--from", help="First value (frequencies in omega_m)"),
        stop: float = typer.Option(..., "--to", help="Last value"),
        points: int = typer.Option(101, "--points", "-n", help="Number of grid points"),
        out: Path = typer.Option(..., "--out", "-o", help="Output file"),
        fmt: str = typer.Option("csv", "--format", "-f", help="csv or json"),
        jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Worker processes"),
        spectrum: bool = typer.Option(
            False, "--spectrum/--no-spectrum", help="Also count spectral modes per point"
        ),
        steady_state: bool = typer.Option(
            False, "--steady-state/--no-steady-state", help="Also write alpha_s, b_s, c_s and delta_f"
        ),
    ) -> None:
        """
        Sweep one parameter and record the three logarithmic negativities.

        Unstable points are kept with empty negativity cells.
        """
        cfg = _load(config)
        outputs = ["negativities", "stability"]
        if spectrum:
            outputs.append("spectrum")
        if steady_state:
            outputs.append("steady_state")
        try:
            spec = SweepSpec(
                variable=var, start=start, stop=stop, count=points, config=cfg, outputs=tuple(outputs)
            )
        except ValidationError as e:
            _fail(e)
        _run_and_write(spec, out, fmt, jobs)

    @app.command("stability-map")
    def stability_map(
        config: Path = typer.Option(
            ..., "--config", "-c", help="Configuration file", exists=True, dir_okay=False, readable=True
        ),
        var: str = typer.Option(..., "--var", help="Outer axis variable"),
        start: float = typer.Option(..., "--from", help="Outer axis first value"),
        stop: float = typer.Option(..., "--to", help="Outer axis last value"),
        points: int = typer.Option(51, "--points", "-n", help="Outer axis points"),
        var2: str = typer.Option(..., "--var2", help="Inner axis variable"),
        start2: float = typer.Option(..., "--from2", help="Inner axis first value"),
        stop2: float = typer.Option(..., "--to2", help="Inner axis last value"),
        points2: int = typer.Option(51, "--points2", help="Inner axis points"),
        out: Path = typer.Option(..., "--out", "-o", help="Output file"),
        fmt: str = typer.Option("csv", "--format", "-f", help="csv or json"),
        jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Worker processes"),
        negativities: bool = typer.Option(
            False, "--negativities/--no-negativities", help="Also compute negativities"
        ),
        spectrum: bool = typer.Option(
            False, "--spectrum/--no-spectrum", help="Also count spectral modes"
        ),
    ) -> None:
        """
        Two-dimensional stability map, optionally with negativities or mode counts.

        Rows are ordered with the outer axis varying slowest.
        """
        cfg = _load(config)
        outputs = ["stability"]
        if negativities:
            outputs.append("negativities")
        if spectrum:
            outputs.append("spectrum")
        try:
            spec = SweepSpec(
                variable=var,
                start=start,
                stop=stop,
                count=points,
                config=cfg,
                outputs=tuple(outputs),
                second=GridAxis(variable=var2, start=start2, stop=stop2, count=points2),
            )
        except ValidationError as e:
            _fail(e)
        _run_and_write(spec, out, fmt, jobs)

    @app.command("spectrum")
    def spectrum_command(
        config: Path = typer.Option(
            ..., "--config", "-c", help="Configuration file", exists=True, dir_okay=False, readable=True
        ),
        out: Path = typer.Option(..., "--out", "-o", help="Output CSV"),
        start: float = typer.Option(-2.0, "--from", help="Lowest frequency in omega_m"),
        stop: float = typer.Option(2.0, "--to", help="Highest frequency in omega_m"),
        points: int = typer.Option(2001, "--points", "-n", help="Number of grid points"),
    ) -> None:
        """
        Mirror displacement spectrum with peak detection.

        Writes a two-column CSV and a `.peaks.json` sidecar with the peaks
        and the mode classification.
        """
        cfg = _load(config)
        if not start < stop or points < 2:
            _fail("Spectrum grid needs --from < --to and at least 2 points")
        try:
            params = derive_parameters(cfg)
        except ConfigError as e:
            _fail(e)

        try:
            ss = solve_for_params(params)
            drift = build_drift_matrix(ss, params)
            verdict = stability(drift)
            grid = np.linspace(start, stop, points) * params.omega_m
            series = displacement_spectrum(drift, diffusion_matrix(params), grid=grid, verdict=verdict)
        except OptomechError as e:
            console.print(f"[bold red]✗ Error:[/bold red] {e}")
            raise typer.Exit(code=1)

        series.to_frame().to_csv(out, index=False, float_format="%.17g", lineterminator="\n")
        sidecar = out.with_suffix(".peaks.json")
        document = {
            "mode_count": series.mode_count,
            "classification": series.classification,
            "peaks": [
                {
                    "omega_over_omega_m": p.omega / series.omega_m,
                    "height": p.height,
                    "prominence": p.prominence,
                }
                for p in series.peaks
            ],
        }
        sidecar.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
        console.print(
            f"[bold green]✓[/bold green] {series.classification} spectrum "
            f"({series.mode_count} modes) written to: {out}"
        )

    @app.command()
    def ftable(
        out: Path = typer.Option(..., "--out", "-o", help="Output CSV"),
        eta: List[float] = typer.Option(
            [0.04, 0.08, 0.1, 0.2], "--eta", help="Lamb-Dicke parameters (repeatable)"
        ),
        j_max: int = typer.Option(3, "--j-max", min=0, help="Highest sideband order"),
        nb_max: int = typer.Option(100, "--nb-max", min=0, help="Highest phonon number"),
    ) -> None:
        """Tabulate the nonlinearity function f_j(n_b) on a (j, n_b, eta) grid."""
        if any(e < 0 for e in eta):
            _fail("--eta values must be >= 0")
        df = nonlinearity_table(range(j_max + 1), range(nb_max + 1), eta)
        df.to_csv(out, index=False, float_format="%.17g", lineterminator="\n")
        console.print(f"[bold green]✓[/bold green] {len(df)} values written to: {out}")

    @app.command("selftest")
    def selftest_command(
        inject_fault: Optional[str] = typer.Option(
            None, "--inject-fault", help=f"Corrupt the pipeline on purpose: {', '.join(FAULTS)}"
        ),
    ) -> None:
        """Run the built-in invariant suite; exit code 2 if any property fails."""
        try:
            report = run_selftest(inject_fault)
        except ValueError as e:
            _fail(e)

        table = Table(title="Selftest", show_header=True)
        table.add_column("Property", style="cyan")
        table.add_column("Status")
        table.add_column("Detail", style="dim")
        for result in report.results:
            status = "[green]✓ pass[/green]" if result.passed else "[bold red]✗ fail[/bold red]"
            table.add_row(result.name, status, result.detail)
        console.print(table)

        if not report.passed:
            raise typer.Exit(code=EXIT_SELFTEST_FAILURE)
        console.print("[bold green]✓[/bold green] All properties passed")

else:
    # Stub app when CLI dependencies are not available
    def app():
        """Raise error when CLI is not available."""
        _check_cli_dependencies()


if __name__ == "__main__":
    _check_cli_dependencies()
    app()
