# Generated by Django 6.0 on 2026-10-19 10:12

import django.core.validators
import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ChannelSummaryRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('n', models.PositiveIntegerField(validators=[django.core.validators.MinValueValidator(1)])),
                ('eps_r', models.FloatField()),
                ('eps_0', models.FloatField()),
                ('local_qubit', models.PositiveSmallIntegerField(default=1, validators=[django.core.validators.MinValueValidator(1), django.core.validators.MaxValueValidator(5)])),
                ('alpha1', models.FloatField()),
                ('alpha2', models.FloatField()),
                ('eps_loss', models.FloatField()),
                ('eps_loss_per_position', models.JSONField(default=list)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['eps_r', 'n'],
                'unique_together': {('n', 'eps_r', 'eps_0', 'local_qubit')},
            },
        ),
        migrations.CreateModel(
            name='SweepRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(db_index=True, max_length=50)),
                ('config', models.JSONField(default=dict)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('output_path', models.CharField(blank=True, default='', max_length=500)),
                ('versions', models.JSONField(default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='RatePoint',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('l_tot_km', models.FloatField()),
                ('eps_r', models.FloatField()),
                ('kappa', models.FloatField()),
                ('skr_hz', models.FloatField()),
                ('cost', models.FloatField(blank=True, help_text='Empty for infeasible points', null=True)),
                ('l0_km', models.FloatField(blank=True, null=True)),
                ('m_ii', models.PositiveIntegerField(blank=True, null=True)),
                ('m_tot', models.PositiveIntegerField(blank=True, null=True)),
                ('tree', models.CharField(blank=True, default='', max_length=50)),
                ('diagnostic', models.CharField(blank=True, default='', max_length=200)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='points', to='network.sweeprun')),
            ],
            options={
                'ordering': ['run', 'l_tot_km', 'eps_r', 'kappa'],
            },
        ),
    ]
