from django.db import models
from django.core.validators import MinValueValidator, MaxValueValidator


class SweepRun(models.Model):
    """One invocation of a sweep command"""
    command = models.CharField(max_length=50, db_index=True)
    config = models.JSONField(default=dict)
    seed = models.BigIntegerField(null=True, blank=True)
    output_path = models.CharField(max_length=500, blank=True, default='')
    versions = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} -> {self.output_path or '-'}"


class RatePoint(models.Model):
    """One CSV row of an optimize or baseline run"""
    run = models.ForeignKey(SweepRun, related_name='points', on_delete=models.CASCADE)
    l_tot_km = models.FloatField()
    eps_r = models.FloatField()
    kappa = models.FloatField()
    skr_hz = models.FloatField()
    cost = models.FloatField(null=True, blank=True, help_text='Empty for infeasible points')
    l0_km = models.FloatField(null=True, blank=True)
    m_ii = models.PositiveIntegerField(null=True, blank=True)
    m_tot = models.PositiveIntegerField(null=True, blank=True)
    tree = models.CharField(max_length=50, blank=True, default='')
    diagnostic = models.CharField(max_length=200, blank=True, default='')

    class Meta:
        ordering = ['run', 'l_tot_km', 'eps_r', 'kappa']

    def __str__(self):
        return f"L={self.l_tot_km:g} km eps_r={self.eps_r:g}: {self.skr_hz:.4g} Hz"


class ChannelSummaryRecord(models.Model):
    """Persisted alpha1, alpha2 and eps_loss of the TYPE II node channel"""
    n = models.PositiveIntegerField(validators=[MinValueValidator(1)])
    eps_r = models.FloatField()
    eps_0 = models.FloatField()
    local_qubit = models.PositiveSmallIntegerField(default=1, validators=[MinValueValidator(1), MaxValueValidator(5)])
    alpha1 = models.FloatField()
    alpha2 = models.FloatField()
    eps_loss = models.FloatField()
    eps_loss_per_position = models.JSONField(default=list)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        unique_together = ['n', 'eps_r', 'eps_0', 'local_qubit']
        ordering = ['eps_r', 'n']

    def __str__(self):
        return f"n={self.n} eps_r={self.eps_r:g}: alpha1={self.alpha1:.9f}"
