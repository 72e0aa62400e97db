from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from stabilizer.channels import NoiseParams
from stabilizer.exceptions import InvalidArgumentError
from stabilizer.node_sim import NodeChannelParams
from network.exports import record_run, render_csv, write_csv, write_manifest
from network.fidelity import recursion_accuracy
from network.run_config import add_run_arguments, from_options
from network.summary_store import cached_channel_summary

HEADER = ['eps_r', 'eps_eff_exact', 'eps_eff_recursion', 'eps_eff_naive']


class Command(BaseCommand):
    help = 'Compare the exact effective error of m_II equal nodes with the recursion and naive estimates'

    def add_arguments(self, parser):
        defaults = settings.REPEATER_DEFAULTS
        add_run_arguments(parser)
        parser.add_argument('--n', type=int, default=defaults['validate_n'], help='Links per TYPE II segment')
        parser.add_argument('--m-ii', type=int, default=defaults['validate_m_ii'], help='TYPE II node count')
        parser.add_argument('--eps-r', type=float, nargs='+', default=None,
                            help='Re-encoding errors (default: the configuration file, else the validation sweep)')

    def _eps_r(self, options, run) -> list[float]:
        if options['eps_r']:
            return list(options['eps_r'])
        if options['config']:
            return list(run.eps_r)
        return list(settings.REPEATER_DEFAULTS['validate_eps_r'])

    def handle(self, *args, **options):
        rows = []
        try:
            run = from_options(options)
            eps_values = self._eps_r(options, run)
            for eps_r in eps_values:
                params = NodeChannelParams(options['n'], NoiseParams(eps_r))
                check = recursion_accuracy(params, options['m_ii'], provider=cached_channel_summary)
                rows.append({
                    'eps_r': check.eps_r,
                    'eps_eff_exact': check.exact,
                    'eps_eff_recursion': check.recursion,
                    'eps_eff_naive': check.naive,
                })
        except InvalidArgumentError as exc:
            raise CommandError(str(exc)) from exc

        config = {'n': options['n'], 'm_ii': options['m_ii'], 'eps_r': eps_values}
        if not run.out:
            self.stdout.write(render_csv(HEADER, rows), ending='')
            return
        write_csv(run.out, HEADER, rows)
        write_manifest(run.out, 'validate_recursion', run.seed, config)
        record_run('validate_recursion', config, run.seed, run.out)
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows to {run.out}'))
