"""
CSV output, run manifests and run records.
"""
import csv
import io
import json
import logging
import math
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Optional

from django.conf import settings
from django.db import DatabaseError, transaction

from .models import RatePoint, SweepRun
from .optimizer import OptimizationResult

logger = logging.getLogger(__name__)

RATE_HEADER = ['L_tot_km', 'skr_hz', 'cost', 'L0_km', 'm_II', 'm_tot', 'b0', 'b1', 'b2', 'eps_r', 'kappa', 'diagnostic']
BASELINE_HEADER = ['L_tot_km', 'skr_hz', 'skr_x5_hz', 'cost', 'L0_km', 'm_tot', 'b0', 'b1', 'b2', 'eps_r', 'diagnostic']
BASELINE_FACTOR = 5
VERSIONED_PACKAGES = ['Django', 'djangorestframework', 'dj-database-url', 'numpy', 'scipy']


def format_value(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return f'{value:.10g}'
    return str(value)


def _write_rows(handle, fieldnames: list[str], rows: Iterable[dict]):
    writer = csv.DictWriter(handle, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow({key: format_value(row.get(key)) for key in fieldnames})


def write_csv(path, fieldnames: list[str], rows: Iterable[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        _write_rows(handle, fieldnames, rows)
    logger.info('Wrote %s', path)


def render_csv(fieldnames: list[str], rows: Iterable[dict]) -> str:
    buffer = io.StringIO()
    _write_rows(buffer, fieldnames, rows)
    return buffer.getvalue()


def package_versions() -> dict[str, str]:
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = 'unknown'
    return versions


def manifest_path(out) -> Path:
    return Path(f'{out}.manifest.json')


def write_manifest(out, command: str, seed: Optional[int], config: dict) -> Path:
    """Versions, seed and configuration next to ``out``; no timestamps."""
    path = manifest_path(out)
    manifest = {'command': command, 'seed': seed, 'config': config, 'versions': package_versions()}
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def baseline_path(out) -> Path:
    out = Path(out)
    return out.with_name(f'{out.stem}_baseline{out.suffix or ".csv"}')


def rate_row(l_tot_km: float, eps_r: float, kappa: float,
             result: Optional[OptimizationResult] = None, diagnostic: str = '') -> dict:
    """One optimize row; an infeasible point has zero rate and infinite cost."""
    row = {'L_tot_km': l_tot_km, 'eps_r': eps_r, 'kappa': kappa, 'skr_hz': 0.0, 'cost': math.inf,
           'diagnostic': diagnostic}
    if result is not None:
        b0, b1, b2 = result.candidate.tree.branches
        row.update({
            'skr_hz': result.skr,
            'cost': result.cost,
            'L0_km': result.l0_km,
            'm_II': result.candidate.m_ii,
            'm_tot': result.candidate.m_tot,
            'b0': b0, 'b1': b1, 'b2': b2,
        })
    return row


def baseline_row(l_tot_km: float, eps_r: float, result: Optional[OptimizationResult] = None,
                 diagnostic: str = '') -> dict:
    row = rate_row(l_tot_km, eps_r, 0.0, result, diagnostic)
    row['skr_x5_hz'] = BASELINE_FACTOR * row['skr_hz']
    return row


def record_run(command: str, config: dict, seed: Optional[int], output_path: str,
               rows: Iterable[dict] = ()) -> Optional[SweepRun]:
    """Store the run and its rate rows; database problems are logged, not raised."""
    if not getattr(settings, 'REPEATER_PERSIST_RESULTS', True):
        return None
    try:
        with transaction.atomic():
            run = SweepRun.objects.create(
                command=command, config=config, seed=seed, output_path=str(output_path),
                versions=package_versions(),
            )
            RatePoint.objects.bulk_create([
                RatePoint(
                    run=run,
                    l_tot_km=row['L_tot_km'],
                    eps_r=row['eps_r'],
                    kappa=row.get('kappa', 0.0),
                    skr_hz=row['skr_hz'],
                    cost=row['cost'] if math.isfinite(row['cost']) else None,
                    l0_km=row.get('L0_km'),
                    m_ii=row.get('m_II'),
                    m_tot=row.get('m_tot'),
                    tree=','.join(str(row[key]) for key in ('b0', 'b1', 'b2')) if 'b0' in row else '',
                    diagnostic=row.get('diagnostic', '')[:200],
                )
                for row in rows
            ])
    except DatabaseError as exc:
        logger.warning('Could not record %s run: %s', command, exc)
        return None
    return run
