import itertools

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from stabilizer.channels import NoiseParams
from stabilizer.exceptions import DegenerateRecursionError, InvalidArgumentError
from network.exceptions import NoFeasibleConfigError
from network.exports import (
    BASELINE_HEADER,
    RATE_HEADER,
    baseline_path,
    baseline_row,
    rate_row,
    record_run,
    write_csv,
    write_manifest,
)
from network.optimizer import OBJECTIVES, SearchSpace, minimize
from network.run_config import RunConfig, add_run_arguments, from_options
from network.summary_store import cached_channel_summary


class Command(BaseCommand):
    help = 'Minimise the network cost for every (L_tot, eps_r, kappa) and write one CSV row per point'

    def add_arguments(self, parser):
        add_run_arguments(parser, out_help='Output CSV path')
        parser.add_argument('--l-tot', type=float, nargs='+', default=None, help='Total distances in km')
        parser.add_argument('--eps-r', type=float, nargs='+', default=None, help='Re-encoding errors')
        parser.add_argument('--kappa', type=float, nargs='+', default=None, help='Relative TYPE II node costs')
        parser.add_argument('--objective', choices=OBJECTIVES, default=None)
        parser.add_argument('--baseline', action='store_true', help='Also write the homogeneous TYPE I baseline')
        parser.add_argument('--no-erasure', action='store_true', help='Ignore 1-erasure correction at TYPE II nodes')
        parser.add_argument('--workers', type=int, default=None, help='Threads for candidate evaluation')

    def _run_config(self, options) -> RunConfig:
        return from_options(
            options,
            l_tot_km=options['l_tot'],
            eps_r=options['eps_r'],
            kappa=options['kappa'],
            objective=options['objective'],
            include_erasure=False if options['no_erasure'] else None,
        )

    def _optimum(self, run: RunConfig, l_tot_km, noise, kappa, objective, workers):
        space = SearchSpace(
            l_tot_km,
            max_photons=run.max_photons,
            min_link_km=run.min_link_km,
            max_segment_links=run.max_segment_links,
            full_enumeration_limit=run.full_enumeration_limit,
        )
        return minimize(space, noise, kappa, run.constants, objective, run.include_erasure,
                        provider=cached_channel_summary, workers=workers)

    def handle(self, *args, **options):
        try:
            run = self._run_config(options)
        except InvalidArgumentError as exc:
            raise CommandError(str(exc)) from exc
        if not run.out:
            raise CommandError('An output path is required (--out or "out" in the configuration)')
        workers = options['workers'] or settings.REPEATER_WORKERS

        rows = []
        for l_tot_km, eps_r, kappa in itertools.product(run.l_tot_km, run.eps_r, run.kappa):
            try:
                result = self._optimum(run, l_tot_km, NoiseParams(eps_r), kappa, run.objective, workers)
                rows.append(rate_row(l_tot_km, eps_r, kappa, result))
            except (NoFeasibleConfigError, DegenerateRecursionError, InvalidArgumentError) as exc:
                self.stderr.write(self.style.WARNING(f'L_tot={l_tot_km:g} eps_r={eps_r:g} kappa={kappa:g}: {exc}'))
                rows.append(rate_row(l_tot_km, eps_r, kappa, diagnostic=str(exc)))
            self.stdout.write(f'L_tot={l_tot_km:g} km eps_r={eps_r:g} kappa={kappa:g}: SKR={rows[-1]["skr_hz"]:.4g} Hz')

        config = run.as_dict()
        write_csv(run.out, RATE_HEADER, rows)
        write_manifest(run.out, 'optimize', run.seed, config)
        record_run('optimize', config, run.seed, run.out, rows)

        if options['baseline']:
            baseline_rows = []
            for l_tot_km, eps_r in itertools.product(run.l_tot_km, run.eps_r):
                try:
                    result = self._optimum(run, l_tot_km, NoiseParams(eps_r), 1.0, 'homogeneous', workers)
                    baseline_rows.append(baseline_row(l_tot_km, eps_r, result))
                except (NoFeasibleConfigError, InvalidArgumentError) as exc:
                    baseline_rows.append(baseline_row(l_tot_km, eps_r, diagnostic=str(exc)))
            companion = baseline_path(run.out)
            write_csv(companion, BASELINE_HEADER, baseline_rows)
            write_manifest(companion, 'optimize --baseline', run.seed, config)
            record_run('optimize --baseline', config, run.seed, str(companion), baseline_rows)

        feasible = sum(1 for row in rows if row['skr_hz'] > 0)
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows ({feasible} feasible) to {run.out}'))
