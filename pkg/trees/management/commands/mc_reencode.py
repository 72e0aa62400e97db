from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from stabilizer.exceptions import InvalidArgumentError
from network.exports import render_csv, write_csv, write_manifest
from network.run_config import add_run_arguments, from_options
from trees.reencode_mc import compose_reencoding, simulate_decode
from trees.tree_code import BranchingVector, eta_e, photon_count

HEADER = [
    'tree', 'photons', 'mu', 'eps_0', 'trials', 'eta_e', 'success_rate', 'success_sigma',
    'x_rate', 'y_rate', 'z_rate', 'eps_tree', 'eps_tree_sigma', 'eps_r', 'eps_r_over_eps_0',
]


class Command(BaseCommand):
    help = 'Monte Carlo estimate of tree decoding success and the re-encoding error for each (tree, mu, eps_0)'

    def add_arguments(self, parser):
        defaults = settings.REPEATER_DEFAULTS
        add_run_arguments(parser)
        parser.add_argument('--tree', action='append', default=None, help='Branching vector, e.g. 4,13,4 (repeatable)')
        parser.add_argument('--mu', type=float, nargs='+', default=[defaults['mc_mu']], help='Per-photon loss')
        parser.add_argument('--eps-0', type=float, nargs='+', default=defaults['mc_eps_0'], help='Operation errors')
        parser.add_argument('--trials', type=int, default=None, help='Trials per point (default from the configuration)')
        parser.add_argument('--workers', type=int, default=None, help='Threads over trial chunks')
        parser.add_argument('--sampled', action='store_true',
                            help='Sample the stored photon error instead of averaging over it')

    def handle(self, *args, **options):
        workers = options['workers'] or settings.REPEATER_WORKERS
        texts = options['tree'] or settings.REPEATER_DEFAULTS['mc_trees']
        rows = []
        try:
            run = from_options(options, trials=options['trials'])
            out = run.out or None
            trees = [BranchingVector.parse(text) for text in texts]
            for tree in trees:
                for mu in options['mu']:
                    for eps0 in options['eps_0']:
                        estimate = simulate_decode(tree, mu, eps0, run.trials, run.seed,
                                                   conditional=not options['sampled'], workers=workers)
                        eps_r = compose_reencoding(eps0, estimate.effective_epsilon)
                        rows.append({
                            'tree': str(tree),
                            'photons': photon_count(tree),
                            'mu': mu,
                            'eps_0': eps0,
                            'trials': estimate.trials,
                            'eta_e': eta_e(tree, mu),
                            'success_rate': estimate.success_rate,
                            'success_sigma': estimate.success_sigma,
                            'x_rate': estimate.logical_x_rate,
                            'y_rate': estimate.logical_y_rate,
                            'z_rate': estimate.logical_z_rate,
                            'eps_tree': estimate.effective_epsilon,
                            'eps_tree_sigma': estimate.effective_sigma,
                            'eps_r': eps_r,
                            'eps_r_over_eps_0': eps_r / eps0 if eps0 > 0 else None,
                        })
                        if out:
                            self.stdout.write(f'{tree} mu={mu:g} eps_0={eps0:g}: success {estimate.success_rate:.6f}, '
                                              f'eps_r={eps_r:.4e}')
        except InvalidArgumentError as exc:
            raise CommandError(str(exc)) from exc

        if out is None:
            self.stdout.write(render_csv(HEADER, rows), ending='')
            return
        config = {
            'trees': [str(tree) for tree in trees], 'mu': list(options['mu']), 'eps_0': list(options['eps_0']),
            'trials': run.trials, 'conditional': not options['sampled'],
        }
        write_csv(out, HEADER, rows)
        write_manifest(out, 'mc_reencode', run.seed, config)
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(rows)} rows to {out}'))
