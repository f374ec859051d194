"""Experiment drivers: adversary families, sweeps, audits and the protocol suite."""

from .adversaries import AdversaryFamily, AdversaryFn, gen_adversaries
from .audits import AuditConfig, run_preimage_audits
from .bounds import BoundCheck, comparison_table, existence_bound_check
from .checks import mac_check, weak_seed_check
from .config import Construction, ExperimentConfig, SourceFamily
from .protocol_suite import ProtocolSuiteConfig, run_protocol_suite
from .sweeps import run_nm_sweep

__all__ = [
    "AdversaryFamily",
    "AdversaryFn",
    "AuditConfig",
    "BoundCheck",
    "Construction",
    "ExperimentConfig",
    "ProtocolSuiteConfig",
    "SourceFamily",
    "comparison_table",
    "existence_bound_check",
    "gen_adversaries",
    "mac_check",
    "run_nm_sweep",
    "run_preimage_audits",
    "run_protocol_suite",
    "weak_seed_check",
]
