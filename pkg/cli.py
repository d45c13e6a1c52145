"""
helfrich-forge - command line front end for building sphere-catenoid surfaces,
evaluating their curvature energies and running the verification suites.
"""

import functools
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields

import click
import numpy as np
import pandas as pd

from config import ActiveConfig
from helfrich_forge.constructions import (
    GenusSurfaceSpec, flattened_catenoid, flattened_sphere, genus_surface, rescale_to_area, round_sphere,
)
from helfrich_forge.diagnostics import convergence_distance, mueller_roeger_check
from helfrich_forge.energy import HelfrichParams, genus_from_gauss, integrate
from helfrich_forge.errors import (
    BudgetExhausted, ConfigError, ContradictionDetected, CurvatureMismatch, DegeneratePoint,
    InfeasibleProfile, InvalidSpec, NoConvergence, NonIntegerGenus, NonPositiveEnergy, NotInBall,
    NotWatertight, SupportTooLarge,
)
from helfrich_forge.mesh import euler_genus, triangulate, write_obj
from helfrich_forge.optimizer import helfrich_divergence_demo, minimize_excess, sweep, tuned_spec
from helfrich_forge.presets import PresetLibrary
from helfrich_forge.verification import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_SPEC, EXIT_NUMERIC, EXIT_BUDGET = 0, 1, 2, 3, 4

logger = logging.getLogger('helfrich_forge.cli')


@dataclass
class RunConfig:
    """Settings for one invocation: Config defaults < settings file < flags."""
    tol: float = ActiveConfig.TOL
    threads: int = ActiveConfig.THREADS
    max_depth: int = ActiveConfig.MAX_DEPTH
    resolution: int = ActiveConfig.RESOLUTION
    output_dir: str = ActiveConfig.OUTPUT_DIR
    log_level: str = ActiveConfig.LOG_LEVEL
    presets_path: str = ActiveConfig.PRESETS_PATH
    seed: int = 0
    settings_version: int = 1

    @classmethod
    def from_sources(cls, path=None, **flags) -> 'RunConfig':
        values = {}
        if path:
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    values = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read settings file {path}: {e}")
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(values) - known)
            if unknown:
                raise ConfigError(f"unknown settings keys: {', '.join(unknown)}")
            if values.get('settings_version', 1) != 1:
                raise ConfigError(f"unsupported settings_version {values['settings_version']}")
        values.update({k: v for k, v in flags.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)


def parse_list(text, cast=float):
    if text is None:
        return None
    return [cast(x) for x in str(text).split(',') if x.strip()]


def emit(text: str, output=None) -> None:
    """Write to a file (LF endings) or stdout."""
    if output:
        with open(output, 'w', newline='\n') as f:
            f.write(text if text.endswith('\n') else text + '\n')
        logger.info(f"Wrote {output}")
    else:
        click.echo(text.rstrip('\n'))


def dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True)


def handle_errors(fn):
    """Map toolkit exceptions to documented exit codes."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BudgetExhausted as e:
            logger.error(f"Budget exhausted: {str(e)}")
            if e.best is not None:
                emit(dumps(e.best.to_dict()), kwargs.get('output'))
            sys.exit(EXIT_BUDGET)
        except (InvalidSpec, ConfigError, InfeasibleProfile, SupportTooLarge) as e:
            click.echo(f"error: {str(e)}", err=True)
            for violation in getattr(e, 'violations', []):
                click.echo(f"  - {violation}", err=True)
            sys.exit(EXIT_SPEC)
        except (NoConvergence, DegeneratePoint, NonIntegerGenus, NotWatertight, CurvatureMismatch,
                NotInBall, ContradictionDetected, NonPositiveEnergy) as e:
            click.echo(f"numerical failure: {str(e)}", err=True)
            sys.exit(EXIT_NUMERIC)
    return wrapper


def spec_options(fn):
    """Shared flags describing a construction spec."""
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='Spec JSON document; flags override its fields'),
        click.option('--m', type=int, help='Number of sheets'),
        click.option('--g', type=int, help='Genus'),
        click.option('--delta', type=float, help='Flattening scale'),
        click.option('--R', 'R', type=float, help='Neck parameter'),
        click.option('--eta', type=float, help='Neck scale (default: theta-eta times its maximum)'),
        click.option('--theta-eta', type=float, help='Neck scale fraction in (0, 1)'),
        click.option('--t', 't', type=str, help="Bump amplitude, or 'auto'"),
        click.option('--alpha', type=float, help='Bump width factor'),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_spec(run: RunConfig, config_path=None, m=None, g=None, delta=None, R=None, eta=None,
               theta_eta=None, t=None, alpha=None) -> GenusSurfaceSpec:
    """Spec from a JSON document and/or flags; flags win."""
    if config_path:
        with open(config_path, 'r', encoding='utf-8') as f:
            spec = GenusSurfaceSpec.from_json(f.read())
        data = spec.to_dict()
        for key, value in (('m', m), ('g', g), ('delta', delta), ('R', R), ('eta', eta), ('alpha', alpha)):
            if value is not None:
                data[key] = value
        if t not in (None, 'auto'):
            data['t'] = float(t)
        spec = GenusSurfaceSpec.from_dict(data)
    else:
        if m is None or g is None:
            raise ConfigError('give --m and --g, or --config')
        presets = PresetLibrary(run.presets_path)
        spec = presets.spec(m, g, delta=delta, R=R, theta_eta=theta_eta, alpha=alpha)
        if eta is not None:
            spec = GenusSurfaceSpec.from_dict({**spec.to_dict(), 'eta': eta})
        if t not in (None, 'auto'):
            spec = GenusSurfaceSpec.from_dict({**spec.to_dict(), 't': float(t)})
    if t == 'auto':
        spec.validate()
        auto = tuned_spec(spec.m, spec.g, spec.delta, spec.R, alpha=spec.alpha, tol=run.tol)
        spec = GenusSurfaceSpec.from_dict({**spec.to_dict(), 't': auto.t})
    return spec


@click.group()
@click.option('--settings', type=click.Path(exists=True, dir_okay=False), help='Run settings JSON file')
@click.option('--tol', type=float, help='Quadrature tolerance')
@click.option('--threads', type=int, help='Worker threads')
@click.option('--output-dir', type=click.Path(file_okay=False), help='Directory for generated files')
@click.option('--seed', type=int, help='Random seed for search restarts and sampling')
@click.option('--verbose', is_flag=True, help='Log at DEBUG level')
@click.pass_context
@handle_errors
def cli(ctx, settings, tol, threads, output_dir, seed, verbose):
    """Build sphere-catenoid surfaces and check their curvature energies."""
    run = RunConfig.from_sources(settings, tol=tol, threads=threads, output_dir=output_dir, seed=seed,
                                 log_level='DEBUG' if verbose else None)
    logging.basicConfig(
        level=getattr(logging, run.log_level, logging.WARNING),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    ctx.obj = run


@cli.command()
@spec_options
@click.option('--resolution', type=int, help='Azimuthal mesh resolution')
@click.pass_obj
@handle_errors
def generate(run, resolution, **spec_flags):
    """Validate a spec and write spec.json plus mesh.obj."""
    spec = build_spec(run, **spec_flags)
    assembly = genus_surface(spec)
    mesh = triangulate(assembly, resolution=resolution or run.resolution)
    genus = euler_genus(mesh)
    if genus != spec.g:
        raise NonIntegerGenus(f"mesh genus {genus} differs from spec genus {spec.g}")
    os.makedirs(run.output_dir, exist_ok=True)
    spec_path = os.path.join(run.output_dir, 'spec.json')
    mesh_path = os.path.join(run.output_dir, 'mesh.obj')
    emit(spec.to_json(), spec_path)
    write_obj(mesh, mesh_path)
    click.echo(dumps({'spec': spec_path, 'mesh': mesh_path, 'euler_genus': genus,
                      'vertices': int(len(mesh.vertices)), 'triangles': int(len(mesh.triangles))}))


FIXTURES = ('sphere', 'flattened-sphere', 'catenoid')


@cli.command()
@spec_options
@click.option('--fixture', type=click.Choice(FIXTURES), help='Evaluate a fixture instead of a spec')
@click.option('--multiplicity', type=int, default=1, show_default=True, help='Fixture multiplicity')
@click.option('--chi-h', 'chi_H', type=float, default=0.25, show_default=True)
@click.option('--chi-k', 'chi_K', type=float, default=0.0, show_default=True)
@click.option('--h0', 'H0', type=float, default=0.0, show_default=True)
@click.option('--rescale/--no-rescale', default=True, help='Rescale spec surfaces to area 4 pi m')
@click.option('--format', 'fmt', type=click.Choice(['json', 'csv']), default='json', show_default=True)
@click.option('--output', type=click.Path(dir_okay=False), help='Write to a file instead of stdout')
@click.pass_obj
@handle_errors
def energy(run, fixture, multiplicity, chi_H, chi_K, H0, rescale, fmt, output, **spec_flags):
    """Evaluate area, Willmore, Helfrich and Gauss totals."""
    params = HelfrichParams(chi_H, chi_K, H0)
    if fixture == 'sphere':
        assembly = round_sphere(multiplicity=multiplicity)
    elif fixture == 'flattened-sphere':
        assembly = flattened_sphere(spec_flags.get('delta') or 0.05).with_multiplicity(multiplicity)
    elif fixture == 'catenoid':
        assembly = flattened_catenoid(spec_flags.get('R') or 3.0)
    else:
        spec = build_spec(run, **spec_flags)
        assembly = genus_surface(spec)
        if rescale:
            assembly = rescale_to_area(assembly, 4.0 * np.pi * spec.m, tol=0.1 * run.tol, workers=run.threads)
    report = integrate(assembly, tol=run.tol, max_depth=run.max_depth, workers=run.threads, params=params)
    if fmt == 'csv':
        emit(report.to_csv(), output)
        return
    data = report.to_dict()
    data['genus'] = genus_from_gauss(assembly, report=report) if assembly.meta.closed else None
    data['mueller_roeger_margin'] = (mueller_roeger_check(assembly, report=report).margin
                                     if assembly.contained_in_ball(1.0) else None)
    emit(dumps(data), output)


@cli.command()
@click.argument('suites', nargs=-1, required=True)
@click.option('--output', type=click.Path(dir_okay=False), help='Write the JSON report to a file')
@click.pass_obj
@handle_errors
def verify(run, suites, output):
    """Run verification suites (or 'all'); exit 1 if any check fails."""
    names = list(SUITES) if 'all' in suites else list(suites)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites: {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    presets = PresetLibrary(run.presets_path)
    reports = [run_suite(n, presets=presets, tol=run.tol, workers=run.threads, seed=run.seed,
                         resolution=run.resolution) for n in names]
    passed = all(r.passed for r in reports)
    emit(dumps({'passed': passed, 'suites': [r.to_dict() for r in reports]}), output)
    if not passed:
        sys.exit(EXIT_VERIFY)


@cli.command('sweep')
@click.option('--m', type=int, required=True)
@click.option('--g', type=int, required=True)
@click.option('--delta', 'deltas', required=True, help='Comma-separated flattening scales')
@click.option('--R', 'Rs', required=True, help='Comma-separated neck parameters')
@click.option('--eta', 'etas', default=None, help="Comma-separated neck scales (default: automatic)")
@click.option('--t', 'ts', default='0', show_default=True, help="Comma-separated bump amplitudes or 'auto'")
@click.option('--output', type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def sweep_cmd(run, m, g, deltas, Rs, etas, ts, output):
    """Grid sweep over (delta, R, eta, t) written as CSV."""
    t_values = ['auto' if x.strip() == 'auto' else float(x) for x in ts.split(',')]
    table = sweep(m, g, parse_list(deltas), parse_list(Rs), etas=parse_list(etas) or [None],
                  ts=t_values, tol=run.tol, workers=run.threads)
    emit(table.to_csv(), output)


@cli.command()
@click.option('--m', type=int, required=True)
@click.option('--g', type=int, required=True)
@click.option('--eps', type=float, required=True, help='Target Willmore excess')
@click.option('--budget', type=int, default=200, show_default=True, help='Energy evaluations')
@click.option('--output', type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def minimize(run, m, g, eps, budget, output):
    """Search for a surface with W < 4 pi m + eps at area 4 pi m."""
    result = minimize_excess(m, g, eps, budget=budget, tol=run.tol, seed=run.seed, workers=run.threads)
    emit(dumps(result.to_dict()), output)


@cli.command('demo-divergence')
@click.option('--chi-h', 'chi_H', type=float, default=0.25, show_default=True)
@click.option('--chi-k', 'chi_K', type=float, required=True)
@click.option('--h0', 'H0', type=float, default=0.0, show_default=True)
@click.option('--genus', 'genera', default='1,2,4,8', show_default=True)
@click.option('--output', type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def demo_divergence(run, chi_H, chi_K, H0, genera, output):
    """Helfrich energy against genus for chi_K > 0 (CSV)."""
    table = helfrich_divergence_demo(chi_H, chi_K, H0, parse_list(genera, int), tol=run.tol, workers=run.threads)
    logger.info(f"Fitted slope {table.fit.slope:.6g}")
    emit(table.to_frame().to_csv(index=False, lineterminator='\n'), output)


@cli.command()
@click.option('--m', type=int, default=2, show_default=True)
@click.option('--g', type=int, default=1, show_default=True)
@click.option('--delta', 'deltas', default='0.1,0.05,0.02', show_default=True)
@click.option('--output', type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def profile(run, m, g, deltas, output):
    """Distance to the m-fold unit sphere along the tuned delta family (CSV)."""
    presets = PresetLibrary(run.presets_path)
    family = presets.tuned_family
    rows = []
    for delta in parse_list(deltas):
        spec = tuned_spec(m, g, delta, family['R'], family['theta_eta'], family['alpha'], run.tol)
        assembly = rescale_to_area(genus_surface(spec), 4.0 * np.pi * m, workers=run.threads)
        rows.append({'delta': delta, 'convergence_distance': convergence_distance(assembly, m, workers=run.threads)})
    frame = pd.DataFrame(rows, columns=['delta', 'convergence_distance'])
    emit(frame.to_csv(index=False, lineterminator='\n'), output)


if __name__ == '__main__':
    cli()
