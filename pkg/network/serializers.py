from django.conf import settings
from rest_framework import serializers

from .optimizer import OBJECTIVES


def _defaults():
    return settings.REPEATER_DEFAULTS


class HardwareConstantsSerializer(serializers.Serializer):
    """Serializer for the hardware time and length constants (seconds, km)"""
    tau_ss = serializers.FloatField()
    tau_ph = serializers.FloatField()
    tau_meas = serializers.FloatField()
    tau_tele = serializers.FloatField()
    l_att_km = serializers.FloatField(min_value=0.0)
    eta_d = serializers.FloatField(min_value=0.0, max_value=1.0)

    DURATIONS = ('tau_ss', 'tau_ph', 'tau_meas', 'tau_tele')

    def validate(self, attrs):
        errors = {name: ['Duration must be positive.'] for name in self.DURATIONS if attrs[name] <= 0}
        if errors:
            raise serializers.ValidationError(errors)
        return attrs

    def validate_l_att_km(self, value):
        if value <= 0:
            raise serializers.ValidationError('Attenuation length must be positive.')
        return value

    def validate_eta_d(self, value):
        if value <= 0:
            raise serializers.ValidationError('Detection efficiency must be positive.')
        return value

    def to_internal_value(self, data):
        # missing constants fall back to the defaults block
        merged = dict(_defaults()['constants'])
        merged.update(data or {})
        return super().to_internal_value(merged)


class RunConfigSerializer(serializers.Serializer):
    """
    Serializer for a run configuration file.
    Every key is optional; absent keys take their value from REPEATER_DEFAULTS.
    """
    l_tot_km = serializers.ListField(child=serializers.FloatField(min_value=1.0), allow_empty=False)
    eps_r = serializers.ListField(child=serializers.FloatField(min_value=0.0, max_value=1.0), allow_empty=False)
    kappa = serializers.ListField(child=serializers.FloatField(min_value=0.0), allow_empty=False)
    objective = serializers.ChoiceField(choices=OBJECTIVES)
    trials = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    out = serializers.CharField(required=False, allow_blank=True, default='')
    max_photons = serializers.IntegerField(min_value=1, max_value=300)
    min_link_km = serializers.FloatField(min_value=1.0)
    max_segment_links = serializers.IntegerField(min_value=1)
    full_enumeration_limit = serializers.IntegerField(min_value=1)
    include_erasure = serializers.BooleanField()
    constants = HardwareConstantsSerializer()

    FIELDS_WITH_DEFAULTS = (
        'l_tot_km', 'eps_r', 'kappa', 'objective', 'trials', 'seed', 'max_photons', 'min_link_km',
        'max_segment_links', 'full_enumeration_limit', 'include_erasure', 'constants',
    )

    def to_internal_value(self, data):
        if not isinstance(data, dict):
            raise serializers.ValidationError({'non_field_errors': ['Run configuration must be a JSON object.']})
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: ['Unknown setting.'] for key in unknown})
        defaults = _defaults()
        merged = {key: defaults[key] for key in self.FIELDS_WITH_DEFAULTS}
        merged.update(data)
        return super().to_internal_value(merged)
