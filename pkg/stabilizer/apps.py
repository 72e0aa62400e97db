from django.apps import AppConfig


class StabilizerConfig(AppConfig):
    name = 'stabilizer'
    verbose_name = 'Five-qubit code and node channel'
