"""Command line driver.

Exit codes: 0 ok, 1 validation error, 2 numeric failure, 3 budget exceeded.
Surfaces are given as a surface file or a name such as ``RegularOctagon``,
``RectTorus:2,1/2`` or ``genus2:1,0.01,2``.
"""
from __future__ import annotations

import csv
import io
import math
import sys
from pathlib import Path

import click

from .errors import HourglassError

FORMATS = click.Choice(["csv", "report"])


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _emit(ctx, text: str) -> None:
    out = ctx.obj["out"]
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _surface(ctx, ref):
    from .io import load_surface
    return load_surface(ref, lax=ctx.obj["lax"], tol=ctx.obj["cfg"]["tol"])


def _params(ctx, mu0, B):
    from .decomposition import PADParams
    cfg = ctx.obj["cfg"]
    return PADParams(mu0 if mu0 is not None else cfg["mu0"], B if B is not None else cfg["B"])


def _output_options(f):
    """``--out`` and ``--format`` are accepted after the subcommand too."""
    def keep(ctx, param, value):
        if value is not None:
            ctx.ensure_object(dict)[param.name] = value
        return value
    f = click.option("--format", "fmt", type=FORMATS, default=None, expose_value=False, callback=keep,
                     help="csv or report.")(f)
    return click.option("--out", "out", type=click.Path(dir_okay=False, writable=True), default=None,
                        expose_value=False, callback=keep, help="Write output here.")(f)


@click.group()
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with tol, mu0, B, h, max_flips, max_vertices, saddle_cap.")
@click.option("--out", "out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write output here instead of stdout.")
@click.option("--format", "fmt", type=FORMATS, default=None, help="csv or report (default per command).")
@click.option("--lax", is_flag=True, help="Accept unknown keys in surface files.")
@click.pass_context
def cli(ctx, config, out, fmt, lax):
    """Flat-surface geometry, hourglass ratio and Hodge-norm diagnostics."""
    from .io import load_config
    ctx.obj = {"cfg": load_config(config), "out": out, "fmt": fmt, "lax": lax}


@cli.command()
@click.argument("surface")
@_output_options
@click.pass_context
def build(ctx, surface):
    """Validate a surface and print its invariants."""
    X = _surface(ctx, surface)
    rows = [("name", X.name), ("polygons", len(X.polygons)), ("genus", X.genus), ("area", float(X.area)),
            ("exact", X.exact), ("global_square", X.is_square), ("marked_points", X.num_marked),
            ("gauss_bonnet_defect", float(X.gauss_bonnet_defect()))]
    for k, s in enumerate(X.singularities):
        rows.append((f"cone_angle_over_pi_{k}", float(s.cone_angle / math.pi)))
    if (ctx.obj["fmt"] or "report") == "csv":
        _emit(ctx, _csv([("key", "value")] + rows))
    else:
        _emit(ctx, "\n".join(f"{k:<22}{v}" for k, v in rows) + "\n")


@cli.command()
@click.argument("surface")
@click.option("--mu0", type=float, default=None)
@click.option("--B", "B", type=float, default=None)
@_output_options
@click.pass_context
def decompose(ctx, surface, mu0, B):
    """Admitted annuli, level circles and the components of the decomposition."""
    from .decomposition import build_pad
    X = _surface(ctx, surface)
    pad = build_pad(X, _params(ctx, mu0, B))
    rows = [("component", "kind", "area", "annulus")]
    rows += [(i, c.kind, float(c.area), c.annulus) for i, c in enumerate(pad.components)]
    if (ctx.obj["fmt"] or "report") == "csv":
        _emit(ctx, _csv(rows))
        return
    lines = [f"annuli admitted: {len(pad.annuli)} (mu0 = {pad.params.mu0}, B = {pad.params.B})"]
    lines += [f"  cylinder {i}: core {a.core_length:.6g}, modulus {a.modulus:.6g}" for i, a in enumerate(pad.annuli)]
    lines += [f"level circles: {len(pad.circles)}"]
    lines += [f"  circle {i}: annulus {c.annulus} {c.kind}, length {c.length:.6g}" for i, c in enumerate(pad.circles)]
    lines += [f"components: {len(pad.components)}, total area {pad.area:.12g}"]
    lines += [f"  {i}: {c.kind:<15} area {c.area:.6g}" for i, c in enumerate(pad.components)]
    _emit(ctx, "\n".join(lines) + "\n")


@cli.command()
@click.argument("surface")
@click.option("--mu0", type=float, default=None)
@click.option("--B", "B", type=float, default=None)
@_output_options
@click.pass_context
def hourglass(ctx, surface, mu0, B):
    """Hourglass ratio H and its witness circle system."""
    from .decomposition import build_pad, hourglass_ratio
    X = _surface(ctx, surface)
    r = hourglass_ratio(X, build_pad(X, _params(ctx, mu0, B)))
    rows = [("H", float(r.value)), ("witness", " ".join(map(str, r.witness))),
            ("smaller_side_area", float(r.smaller_side_area))]
    if (ctx.obj["fmt"] or "report") == "csv":
        _emit(ctx, _csv([("key", "value")] + rows))
    else:
        _emit(ctx, "\n".join(f"{k:<20}{v}" for k, v in rows) + "\n")


@cli.command()
@click.argument("surface")
@click.option("--t0", type=float, default=0.0, show_default=True)
@click.option("--t1", type=float, default=1.0, show_default=True)
@click.option("--dt", type=float, default=0.1, show_default=True)
@click.option("--gap", is_flag=True, help="Also compute delta at every sample (expensive).")
@click.option("--classes", type=int, default=None, help="Number of tracked classes (default: all).")
@click.option("--h", type=float, default=None, help="Mesh size for the Hodge quantities.")
@click.option("--no-fd", is_flag=True, help="Skip the finite-difference cross-check.")
@_output_options
@click.pass_context
def flow(ctx, surface, t0, t1, dt, gap, classes, h, no_fd):
    """Trace H, systole, delta, area and log-derivatives along the flow (CSV)."""
    from .flow import integral_h_squared, trace_flow, trace_to_csv
    X = _surface(ctx, surface)
    cfg = ctx.obj["cfg"]
    tr = trace_flow(X, t0, t1, dt, params=_params(ctx, None, None), h=h or cfg["h"], gap=gap,
                    classes=classes, fd=not no_fd, surface_id=surface)
    if (ctx.obj["fmt"] or "csv") == "csv":
        _emit(ctx, trace_to_csv(tr))
        return
    lines = [f"surface {tr.params['surface']}: {len(tr.samples)} samples, {tr.k} classes "
             f"({tr.params['classes']}), h = {tr.params['h']:.4g}"]
    for s in tr.samples:
        d = " ".join(f"{v:+.6f}" for v in s.dlog)
        lines.append(f"t={s.t:<8.4g} H={s.H:<10.6g} kappa={s.kappa:<10.6g} delta={s.delta:<10.6g} "
                     f"dlog=[{d}] {';'.join(s.flags)}")
    if len(tr.samples) >= 2:
        ih, ik = integral_h_squared(tr)
        lines.append(f"int H^2 dt = {ih:.8g}, int kappa^2 dt = {ik:.8g}")
    _emit(ctx, "\n".join(lines) + "\n")


@cli.command("gap")
@click.argument("surface")
@_output_options
@click.option("--h", type=float, default=None, help="Mesh size (default sqrt(area) / 10).")
@click.pass_context
def gap_cmd(ctx, surface, h):
    """Spectral gap delta of the surface (on its orienting double cover if needed)."""
    from .flow import class_mesh
    from .hodge import spectral_gap
    X = _surface(ctx, surface)
    cfg = ctx.obj["cfg"]
    h = h or cfg["h"] or 0.1 * math.sqrt(float(X.area))
    mesh, convention = class_mesh(X, h, max_vertices=cfg["max_vertices"])
    r = spectral_gap(mesh)
    rows = [("delta", float(r.delta)), ("delta_extrapolated", float(r.delta_extrapolated)),
            ("surface_classes", convention), ("triangles", mesh.n_triangles), ("h", float(h)),
            ("admissible_dimension", r.l2_dimension), ("product_dimension", r.space_dimension),
            ("gram_condition", float(r.gram_condition)), ("holomorphic_gap", float(r.holomorphic_gap))]
    if (ctx.obj["fmt"] or "report") == "csv":
        _emit(ctx, _csv([("key", "value")] + rows))
    else:
        _emit(ctx, "\n".join(f"{k:<22}{v}" for k, v in rows) + "\n")


@cli.command("verify-lemmas")
@_output_options
@click.option("--suite", type=click.Choice(["cylinder", "shells", "gradient", "walkthrough"]),
              default="cylinder", show_default=True)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def verify_lemmas(ctx, suite, trials, seed):
    """Empirical constants of the analytic estimates."""
    from . import analytic as an
    fmt = ctx.obj["fmt"] or "report"
    if suite == "walkthrough":
        rep = an.genus2_walkthrough(1.0, 0.01, 2.0, h=ctx.obj["cfg"]["h"])
        _emit(ctx, _csv(rep.csv_rows()) if fmt == "csv" else rep.table() + "\n")
        return
    fn = {"cylinder": an.cylinder_suite, "shells": an.shells_suite, "gradient": an.gradient_suite}[suite]
    res = fn(seed=seed) if trials is None else fn(trials=trials, seed=seed)
    if fmt == "csv":
        _emit(ctx, _csv(res.csv_rows()))
        return
    lines = [f"suite {res.name}: {len(res.rows)} rows"]
    lines += [f"  {k}: {v}" for k, v in res.summary.items()]
    _emit(ctx, "\n".join(lines) + "\n")


@cli.command()
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@_output_options
@click.option("--classes", type=str, default=None, help="Comma-separated 1-based class columns.")
@click.pass_context
def audit(ctx, trace, classes):
    """Fit c in |d/dt log||alpha||| <= 1 - c H^2 (and the systole variant) on a trace."""
    from .flow import hodge_gap_audit, trace_from_csv
    tr = trace_from_csv(Path(trace).read_text())
    cols = None if classes is None else [int(c) - 1 for c in classes.split(",") if c.strip()]
    a = hodge_gap_audit(tr, cols)
    if (ctx.obj["fmt"] or "report") == "csv":
        rows = [["t"] + [f"margin_{c + 1}" for c in a.classes] + [f"systole_margin_{c + 1}" for c in a.classes]]
        for s, m, mk in zip(tr.samples, a.margins, a.systole_margins):
            rows.append([float(s.t)] + [float(v) for v in m] + [float(v) for v in mk])
        _emit(ctx, _csv(rows))
        return
    _emit(ctx, f"c = {a.c:.8g}  pass = {a.passed}\n"
               f"c_systole = {a.c_systole:.8g}  pass = {a.systole_passed}\n")


def main(argv=None) -> int:
    """Entry point; maps library errors onto exit codes."""
    try:
        cli.main(args=argv, prog_name="hourglass", standalone_mode=False)
    except HourglassError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    run()
