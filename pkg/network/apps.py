from django.apps import AppConfig


class NetworkAppConfig(AppConfig):
    name = 'network'
    verbose_name = 'Repeater network rate model and optimizer'
