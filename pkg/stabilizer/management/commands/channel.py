from django.core.management.base import BaseCommand, CommandError

from network.exports import write_csv, write_manifest
from network.run_config import add_run_arguments, from_options
from stabilizer.channels import NoiseParams
from stabilizer.exceptions import DegenerateRecursionError, InvalidArgumentError
from stabilizer.node_sim import NodeChannelParams, channel_summary

HEADER = ['n', 'eps_r', 'eps_0', 'alpha1', 'alpha2', 'eps_loss'] + [f'eps_loss_{k}' for k in range(1, 6)]


class Command(BaseCommand):
    help = 'Print alpha1, alpha2 and eps_loss of the TYPE II node channel for given (n, eps_r)'

    def add_arguments(self, parser):
        add_run_arguments(parser, out_help='Also write the summary as a one-row CSV')
        parser.add_argument('--n', type=int, required=True, help='Links between consecutive TYPE II nodes')
        parser.add_argument('--eps-r', type=float, default=None,
                            help='Re-encoding error probability (default: first eps_r of the configuration)')
        parser.add_argument('--eps-0', type=float, default=None, help='Operation error (default eps_r/3)')
        parser.add_argument('--local-qubit', type=int, default=1, help='Data qubit sharing the ancilla module')

    def handle(self, *args, **options):
        try:
            run = from_options(options)
            eps_r = options['eps_r'] if options['eps_r'] is not None else run.eps_r[0]
            params = NodeChannelParams(
                n=options['n'],
                noise=NoiseParams(eps_r, options['eps_0']),
                local_qubit=options['local_qubit'],
            )
            summary = channel_summary(params)
        except (InvalidArgumentError, DegenerateRecursionError) as exc:
            raise CommandError(str(exc)) from exc

        self.stdout.write(f'n={summary.n} eps_r={summary.noise.epsilon_r:g} eps_0={summary.noise.epsilon_0:g}')
        self.stdout.write(f'alpha1={summary.alpha1:.12f}')
        self.stdout.write(f'alpha2={summary.alpha2:.12f}')
        self.stdout.write(f'eps_loss={summary.eps_loss:.6e}')
        per_position = ' '.join(f'{value:.6e}' for value in summary.eps_loss_per_position)
        self.stdout.write(f'eps_loss_per_position={per_position}')
        if run.out:
            row = {
                'n': summary.n, 'eps_r': summary.noise.epsilon_r, 'eps_0': summary.noise.epsilon_0,
                'alpha1': summary.alpha1, 'alpha2': summary.alpha2, 'eps_loss': summary.eps_loss,
                **{f'eps_loss_{k}': value for k, value in enumerate(summary.eps_loss_per_position, start=1)},
            }
            write_csv(run.out, HEADER, [row])
            write_manifest(run.out, 'channel', run.seed, {
                'n': summary.n, 'eps_r': summary.noise.epsilon_r, 'eps_0': summary.noise.epsilon_0,
                'local_qubit': options['local_qubit'],
            })
        self.stdout.write(self.style.SUCCESS('Channel summary computed'))
