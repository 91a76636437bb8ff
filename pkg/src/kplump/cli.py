"""Command line entry point: `kplump <subcommand> ...`.

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 numerical non-convergence.
"""

from __future__ import annotations

import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, default=_jsonable)
    if path is None:
        return
    if path == "-":
        click.echo(text)
        return
    try:
        Path(path).write_text(text + "\n")
    except OSError as exc:
        raise click.ClickException(f"cannot write report: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _parse_ctx(_ctx, _param, values):
    out = []
    for v in values:
        try:
            s, t = (int(p) for p in v.split(","))
        except ValueError:
            raise click.BadParameter(f"expected s,t with integers, got {v!r}") from None
        from .numfield import make_context

        try:
            make_context(s, t)
        except (ValueError, TypeError) as exc:
            raise click.BadParameter(str(exc)) from None
        out.append((s, t))
    return tuple(out)


def _parse_k(_ctx, _param, value):
    if value is None:
        return None
    try:
        k = Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"expected a rational p/q, got {value!r}") from None
    if not 0 < k < Fraction(1, 2):
        raise click.BadParameter(f"k = {k} is outside (0, 1/2)")
    from .numfield import pythagorean_pair

    if pythagorean_pair(k) is None:
        warnings.warn(f"k = {k} is not Pythagorean: sqrt(1 - k^2) is irrational, exact cases are skipped")
    return k


def _load_config(ctx, _param, value):
    if value is None:
        return
    try:
        data = json.loads(Path(value).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(f"cannot read config: {exc}") from None
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object keyed by subcommand")
    ctx.default_map = {k: v for k, v in data.items() if isinstance(v, dict)}


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True,
              expose_value=False, help="JSON file of per-subcommand defaults, e.g. {\"spectrum\": {\"nx\": 128}}.")
@click.version_option(package_name="artifact")
def main():
    """Exact identity checks and numerics for the KP-I lump and its periodic family."""


# ---------------------------------------------------------------------------
# verify


@main.command()
@click.option("--suite", type=click.Choice(["all", "lump", "periodic", "props"]), default="all",
              show_default=True, help="Case filter.")
@click.option("--ctx", "contexts", multiple=True, callback=_parse_ctx, metavar="S,T",
              help="Pythagorean context (repeatable); default 1,5 1,12 2,11.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the random operator-identity pairs.")
@click.option("--json", "json_path", type=str, default=None, help="Write the JSON report here ('-' for stdout).")
@click.option("--mutate", type=str, default=None,
              help="Test hook: corrupt one stated display (id or 1-based index) before checking.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes.")
@click.option("--case", "case_ids", multiple=True, help="Run only these case ids (repeatable).")
@click.option("--list", "list_only", is_flag=True, help="List the selected case ids and exit.")
def verify(suite, contexts, seed, json_path, mutate, jobs, case_ids, list_only):
    """Run the exact identity suite. Exit 1 if any case fails."""
    from . import identity_suite as ids

    contexts = contexts or ids.DEFAULT_CONTEXTS
    if list_only:
        for c in ids.build_cases(suite, contexts, seed):
            click.echo(f"{c.id}\t{c.description}")
        sys.exit(EXIT_OK)
    try:
        report = ids.run_suite(suite, contexts, jobs=jobs, mutate=mutate, ids=list(case_ids) or None, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    for r in report.results:
        line = f"{r.status.upper():8s} {r.case_id}"
        if r.status != "pass" and r.note:
            line += f"  ({r.note})"
        click.echo(line)
    c = report.counts
    click.echo(f"{len(report.results)} cases: {c['pass']} pass, {c['erratum']} erratum, {c['fail']} fail")
    _emit(report.to_json(), json_path)
    sys.exit(EXIT_OK if report.ok else EXIT_FAIL)


# ---------------------------------------------------------------------------
# spectrum


@main.command()
@click.option("--potential", type=click.Choice(["lump", "qk", "free"]), default="lump", show_default=True)
@click.option("--k", "k", type=str, callback=_parse_k, default=None, help="Periodic-family parameter p/q.")
@click.option("--Lx", "lx", type=click.FloatRange(min=0, min_open=True), default=40.0, show_default=True)
@click.option("--Ly", "ly", type=click.FloatRange(min=0, min_open=True), default=None,
              help="Default: Lx for lump/free, one y-period for qk.")
@click.option("--Nx", "nx", type=click.IntRange(min=2), default=256, show_default=True)
@click.option("--Ny", "ny", type=click.IntRange(min=2), default=None, help="Default: Nx.")
@click.option("--periods", type=click.IntRange(min=1), default=1, show_default=True,
              help="y-periods in the box for qk.")
@click.option("--neigs", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--method", type=click.Choice(["dense", "krylov"]), default="krylov", show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True, help="Eigenpair residual tolerance.")
@click.option("--zero-band", type=float, default=None, help="Override the near-zero band.")
@click.option("--seed", type=int, default=0, show_default=True, help="Lanczos start vector seed.")
@click.option("--json", "json_path", type=str, default=None)
@click.option("--dump-eigvecs", type=click.Path(file_okay=False), default=None,
              help="Directory for float64 eigenvector files plus JSON sidecar.")
def spectrum(potential, k, lx, ly, nx, ny, periods, neigs, method, tol, zero_band, seed, json_path, dump_eigvecs):
    """Low spectrum of the linearized operator. The Morse index is data: exit 0 on convergence."""
    from .spectral import ConvergenceError, GridSpec, OperatorSpec, eigensolve, period_y

    if potential == "qk" and k is None:
        raise click.UsageError("--potential qk needs --k")
    if potential != "qk" and k is not None:
        raise click.UsageError("--k only applies to --potential qk")
    ny = ny or nx
    if ly is None:
        ly = periods * period_y(k) / 2 if potential == "qk" else lx
    try:
        grid = GridSpec(lx, ly, nx, ny)
        spec = OperatorSpec(potential, grid, k)
        rep = eigensolve(spec, neigs, method, zero_band=zero_band, tol=tol, seed=seed,
                         keep_vectors=dump_eigvecs is not None)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    except ConvergenceError as exc:
        click.echo(f"no convergence: {exc}", err=True)
        sys.exit(EXIT_NONCONV)
    click.echo(f"eigenvalues: {' '.join(f'{v:.8g}' for v in rep.eigenvalues)}")
    click.echo(f"morse_index={rep.morse_index} near_zero={len(rep.near_zero)} zero_band={rep.zero_band:.3g} "
               f"census_complete={rep.census_complete}")
    if dump_eigvecs:
        rep.dump_eigenvectors(dump_eigvecs)
    _emit(rep.to_json(), json_path)
    sys.exit(EXIT_OK)


# ---------------------------------------------------------------------------
# one-dimensional modes and roots


@main.command()
@click.option("--n", "n", type=click.IntRange(min=0), required=True)
@click.option("--L", "L", type=click.FloatRange(min=40), default=60.0, show_default=True)
@click.option("--N", "N", type=click.IntRange(min=1024), default=2048, show_default=True)
@click.option("--neigs", type=click.IntRange(min=1), default=6, show_default=True)
@click.option("--json", "json_path", type=str, default=None)
def bn(n, L, N, neigs, json_path):
    """Low spectrum of the one-dimensional mode operator B_n."""
    from .spectral import SCHEMA_VERSION, bn_spectrum

    if N % 2:
        raise click.UsageError("--N must be even")
    vals = bn_spectrum(n, L, N, neigs)
    click.echo(" ".join(f"{v:.10g}" for v in vals))
    _emit({"schema_version": SCHEMA_VERSION, "kind": "bn", "n": n, "L": L, "N": N, "eigenvalues": vals}, json_path)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--which", type=click.Choice(["eta_eq", "reverse_ode", "kernel_decay"]), required=True)
@click.option("--k", "k", type=str, callback=_parse_k, required=True)
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Mode number for kernel_decay.")
@click.option("--json", "json_path", type=str, default=None)
def roots(which, k, n, json_path):
    """Characteristic roots with closed-form cross-checks. Exit 1 if a check fails."""
    from .spectral import SCHEMA_VERSION, indicial_roots

    if which == "kernel_decay" and n is None:
        raise click.UsageError("kernel_decay needs --n")
    rep = indicial_roots(which, k, n)
    rep["schema_version"] = SCHEMA_VERSION
    rep["kind"] = "roots"
    click.echo(json.dumps(rep["roots"] if "roots" in rep else {"plus": rep["plus"], "minus": rep["minus"],
                                                                 "t2": rep["t2"]}))
    ok = rep["agrees"] and rep.get("claim_abs_re_gt_k", True)
    if "claim_abs_re_gt_k" in rep:
        click.echo(f"min |Re| = {rep['min_abs_re']:.12g}, k = {float(k):.12g}, "
                   f"|Re| > k: {rep['claim_abs_re_gt_k']}")
    click.echo(f"closed forms agree: {rep['agrees']} (max deviation {rep['max_deviation']:.2e})")
    _emit(rep, json_path)
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


# ---------------------------------------------------------------------------
# evolution


@main.command()
@click.option("--Lx", "lx", type=click.FloatRange(min=0, min_open=True), default=48.0, show_default=True)
@click.option("--Ly", "ly", type=click.FloatRange(min=0, min_open=True), default=None, help="Default: Lx.")
@click.option("--Nx", "nx", type=click.IntRange(min=2), default=384, show_default=True)
@click.option("--Ny", "ny", type=click.IntRange(min=2), default=None, help="Default: Nx.")
@click.option("--dt", type=click.FloatRange(min=0, min_open=True), default=0.01, show_default=True)
@click.option("--T", "T", type=click.FloatRange(min=0, min_open=True), default=10.0, show_default=True)
@click.option("--shape", type=click.Choice(["none", "random", "dxQ", "dyQ"]), default="random", show_default=True)
@click.option("--eps", type=click.FloatRange(min=-1e-2, max=1e-2), default=1e-3, show_default=True)
@click.option("--stride", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mass-rescale", is_flag=True, help="Rescale u(0) to the mass of the unperturbed profile.")
@click.option("--base", type=click.Choice(["periodic", "closed_form"]), default="periodic", show_default=True,
              help="Unperturbed profile: the box travelling wave or the sampled closed form.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Trace CSV output.")
@click.option("--json", "json_path", type=str, default=None, help="Run metadata JSON.")
def evolve(lx, ly, nx, ny, dt, T, shape, eps, stride, seed, mass_rescale, base, csv_path, json_path):
    """Perturbed-lump evolution with conserved quantities and orbital distance."""
    from .evolution import EvolutionConfig, stability_experiment
    from .spectral import GridSpec

    try:
        cfg = EvolutionConfig(GridSpec(lx, ly or lx, nx, ny or nx), dt, T, (shape, eps), stride=stride,
                              seed=seed, mass_rescale=mass_rescale, base=base)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    if abs(round(T / dt) * dt - T) > 1e-9 * max(1.0, T):
        raise click.UsageError("--T must be a whole number of --dt steps")
    try:
        trace = stability_experiment(cfg)
    except RuntimeError as exc:
        click.echo(f"no convergence: {exc}", err=True)
        sys.exit(EXIT_NONCONV)
    s = trace.summary()
    click.echo(f"samples={s['samples']} mass_drift={s['mass_drift']:.3e} hamiltonian_drift={s['hamiltonian_drift']:.3e}")
    click.echo(f"distance: initial={s['initial_distance']:.4e} max={s['max_distance']:.4e}; "
               f"fitted speed={s['fitted_speed']:.6f}")
    if csv_path:
        trace.write_csv(csv_path)
    _emit(s, json_path)
    if trace.aborted:
        click.echo(f"aborted: {trace.aborted}", err=True)
        sys.exit(EXIT_NONCONV)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--cmin", type=click.FloatRange(min=0, min_open=True), default=0.5, show_default=True)
@click.option("--cmax", type=click.FloatRange(min=0, min_open=True), default=2.0, show_default=True)
@click.option("--steps", type=click.IntRange(min=3), default=16, show_default=True)
@click.option("--L", "L", type=click.FloatRange(min=0, min_open=True), default=60.0, show_default=True)
@click.option("--N", "N", type=click.IntRange(min=2), default=384, show_default=True)
@click.option("--json", "json_path", type=str, default=None)
@click.option("--data", "data_path", type=click.Path(dir_okay=False), default=None,
              help="Two-column plot data file (c, d).")
def dc(cmin, cmax, steps, L, N, json_path, data_path):
    """Tabulate d(c); exit 1 unless the table is convex."""
    from .evolution import d_of_c
    from .spectral import GridSpec

    if cmax <= cmin:
        raise click.UsageError("--cmax must exceed --cmin")
    try:
        tab = d_of_c(np.linspace(cmin, cmax, steps), GridSpec(L, L, N, N))
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    click.echo("c d d' d'' sqrt(c)/2*m1")
    for row in zip(tab.c, tab.d, tab.d1, tab.d2, tab.d1_formula):
        click.echo(" ".join(f"{v:.10g}" for v in row))
    click.echo(f"convex: {tab.convex}")
    if data_path:
        Path(data_path).write_text("".join(f"{c!r} {d!r}\n" for c, d in zip(tab.c, tab.d)))
    _emit(tab.to_json(), json_path)
    sys.exit(EXIT_OK if tab.convex else EXIT_FAIL)


if __name__ == "__main__":
    main()
