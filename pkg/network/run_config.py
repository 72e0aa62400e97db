"""
Run configuration files: JSON objects validated by RunConfigSerializer.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from stabilizer.exceptions import InvalidArgumentError

from .rate import HardwareConstants
from .serializers import RunConfigSerializer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    l_tot_km: tuple[float, ...]
    eps_r: tuple[float, ...]
    kappa: tuple[float, ...]
    objective: str
    trials: int
    seed: int
    max_photons: int
    min_link_km: float
    max_segment_links: int
    full_enumeration_limit: int
    include_erasure: bool
    constants: HardwareConstants = field(default_factory=HardwareConstants)
    out: str = ''

    def with_overrides(self, **overrides) -> 'RunConfig':
        """Copy with the given non-None values replaced and revalidated."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return parse_data({**self.as_dict(), **_plain(changes)})

    def as_dict(self) -> dict:
        return {
            'l_tot_km': list(self.l_tot_km),
            'eps_r': list(self.eps_r),
            'kappa': list(self.kappa),
            'objective': self.objective,
            'trials': self.trials,
            'seed': self.seed,
            'out': self.out,
            'max_photons': self.max_photons,
            'min_link_km': self.min_link_km,
            'max_segment_links': self.max_segment_links,
            'full_enumeration_limit': self.full_enumeration_limit,
            'include_erasure': self.include_erasure,
            'constants': self.constants.as_dict(),
        }


def _plain(values: dict) -> dict:
    return {key: list(value) if isinstance(value, tuple) else value for key, value in values.items()}


def _format_errors(errors) -> str:
    if isinstance(errors, dict):
        return '; '.join(f'{key}: {_format_errors(value)}' for key, value in sorted(errors.items()))
    if isinstance(errors, list):
        return ', '.join(_format_errors(value) for value in errors)
    return str(errors)


def parse_data(data: Optional[dict]) -> RunConfig:
    serializer = RunConfigSerializer(data=data if data is not None else {})
    if not serializer.is_valid():
        raise InvalidArgumentError(f'Invalid run configuration: {_format_errors(serializer.errors)}')
    values = dict(serializer.validated_data)
    values['constants'] = HardwareConstants.from_dict(values['constants'])
    for key in ('l_tot_km', 'eps_r', 'kappa'):
        values[key] = tuple(values[key])
    return RunConfig(**values)


def loads(text: str) -> RunConfig:
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f'Run configuration is not valid JSON: {exc}') from exc
    return parse_data(data)


def load(path: Optional[str]) -> RunConfig:
    """Configuration from ``path``, or the defaults alone when ``path`` is empty."""
    if not path:
        return parse_data({})
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise InvalidArgumentError(f'Cannot read run configuration {path}: {exc}') from exc
    logger.debug('Loaded run configuration from %s', path)
    return loads(text)


def add_run_arguments(parser, out_help: str = 'Output CSV path (stdout when omitted)'):
    """The --config, --out and --seed flags every command takes."""
    parser.add_argument('--config', type=str, default='', help='JSON run configuration')
    parser.add_argument('--out', type=str, default=None, help=out_help)
    parser.add_argument('--seed', type=int, default=None, help='Random seed, recorded in the manifest')


def from_options(options: dict, **overrides) -> RunConfig:
    """
    The ``--config`` file with ``--seed``, ``--out`` and ``overrides`` on top.

    None values leave the file (or the defaults) in place.
    """
    run = load(options.get('config'))
    return run.with_overrides(seed=options.get('seed'), out=options.get('out'), **overrides)


def dumps(config: RunConfig) -> str:
    return json.dumps(config.as_dict(), indent=2, sort_keys=True) + '\n'


def emit(config: RunConfig, path: str):
    Path(path).write_text(dumps(config), encoding='utf-8')
