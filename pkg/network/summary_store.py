"""
Database-backed layer over the in-process channel summary cache.
"""
import logging

from django.conf import settings
from django.db import DatabaseError

from stabilizer.channels import NoiseParams
from stabilizer.node_sim import ChannelSummary, NodeChannelParams, channel_summary, peek_summary, seed_summary_cache

from .models import ChannelSummaryRecord

logger = logging.getLogger(__name__)


def _persistence_enabled() -> bool:
    return getattr(settings, 'REPEATER_PERSIST_RESULTS', True)


def _lookup(params: NodeChannelParams):
    return ChannelSummaryRecord.objects.filter(
        n=params.n,
        eps_r=params.noise.epsilon_r,
        eps_0=params.noise.epsilon_0,
        local_qubit=params.local_qubit,
    ).first()


def summary_from_record(record: ChannelSummaryRecord) -> ChannelSummary:
    return ChannelSummary(
        n=record.n,
        noise=NoiseParams(record.eps_r, record.eps_0),
        alpha1=record.alpha1,
        alpha2=record.alpha2,
        eps_loss=record.eps_loss,
        eps_loss_per_position=tuple(record.eps_loss_per_position),
        local_qubit=record.local_qubit,
    )


def store_summary(summary: ChannelSummary):
    ChannelSummaryRecord.objects.update_or_create(
        n=summary.n,
        eps_r=summary.noise.epsilon_r,
        eps_0=summary.noise.epsilon_0,
        local_qubit=summary.local_qubit,
        defaults={
            'alpha1': summary.alpha1,
            'alpha2': summary.alpha2,
            'eps_loss': summary.eps_loss,
            'eps_loss_per_position': list(summary.eps_loss_per_position),
        },
    )


def cached_channel_summary(params: NodeChannelParams) -> ChannelSummary:
    """
    channel_summary backed by ChannelSummaryRecord rows.

    Database problems are logged and the summary is computed in memory.
    """
    cached = peek_summary(params)
    if cached is not None or not _persistence_enabled():
        return cached if cached is not None else channel_summary(params)

    try:
        record = _lookup(params)
    except DatabaseError as exc:
        logger.warning("Could not read stored channel summary for n=%d: %s", params.n, exc)
        record = None
    if record is not None:
        summary = summary_from_record(record)
        seed_summary_cache(summary)
        logger.debug("Loaded channel summary n=%d eps_r=%g from the database", params.n, params.noise.epsilon_r)
        return channel_summary(params)

    summary = channel_summary(params)
    try:
        store_summary(summary)
    except DatabaseError as exc:
        logger.warning("Could not store channel summary for n=%d: %s", params.n, exc)
    return summary
