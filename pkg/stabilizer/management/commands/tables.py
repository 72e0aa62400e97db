from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from network.exports import write_manifest
from network.run_config import add_run_arguments, from_options
from stabilizer.exceptions import InvalidArgumentError
from stabilizer.five_qubit import all_tables


class Command(BaseCommand):
    help = 'Print the weight-1, flagged and erasure correction tables of the 5-qubit code'

    def add_arguments(self, parser):
        add_run_arguments(parser, out_help='Also write the tables to this text file')

    def handle(self, *args, **options):
        try:
            run = from_options(options)
        except InvalidArgumentError as exc:
            raise CommandError(str(exc)) from exc

        lines = []
        for table in all_tables():
            lines.extend(table.render())
            lines.append('')
        for line in lines:
            self.stdout.write(line)
        if run.out:
            path = Path(run.out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text('\n'.join(lines), encoding='utf-8')
            write_manifest(path, 'tables', run.seed, {'tables': [table.context for table in all_tables()]})
        self.stdout.write(self.style.SUCCESS(f'{len(all_tables())} tables'))
