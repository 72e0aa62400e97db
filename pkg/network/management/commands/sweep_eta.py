from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from stabilizer.exceptions import InvalidArgumentError
from network.exports import render_csv, write_csv, write_manifest
from network.rate import node_loss_profile
from network.run_config import add_run_arguments, from_options

HEADER = ['n', 'p_no_loss', 'p_one_lost', 'p_two_lost', 'p_total_1erasure', 'p_total_2erasure', 'p_abort']


class Command(BaseCommand):
    help = 'Per-node erasure probabilities of a TYPE II node against the number of links n'

    def add_arguments(self, parser):
        defaults = settings.REPEATER_DEFAULTS
        add_run_arguments(parser)
        parser.add_argument('--eta-e', type=float, default=defaults['sweep_eta_e'], help='Per-link tree efficiency')
        parser.add_argument('--n-max', type=int, default=defaults['sweep_n_max'])

    def handle(self, *args, **options):
        eta = options['eta_e']
        if not 0.0 <= eta <= 1.0:
            raise CommandError(f'--eta-e must lie in [0, 1], got {eta}')
        if options['n_max'] < 1:
            raise CommandError(f'--n-max must be >= 1, got {options["n_max"]}')
        try:
            run = from_options(options)
        except InvalidArgumentError as exc:
            raise CommandError(str(exc)) from exc

        rows = [{'n': n, **node_loss_profile(eta, n)} for n in range(1, options['n_max'] + 1)]
        if not run.out:
            self.stdout.write(render_csv(HEADER, rows), ending='')
            return
        write_csv(run.out, HEADER, rows)
        write_manifest(run.out, 'sweep_eta', run.seed, {'eta_e': eta, 'n_max': options['n_max']})
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows to {run.out}'))
