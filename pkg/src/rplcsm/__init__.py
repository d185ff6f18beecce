"""Discrete-event simulation of RPL control-plane security modes.

UM, PSM and PSMrp follow the RPL security modes; CSM chains consecutive
control messages per neighbor and per flow with secret values.  The package
also models a DIO-replaying neighbor attacker and a wormhole, and reports PDR,
latency, control-message counts and energy per delivered packet.
"""

from .adversary import AttackClass, AttackKind, Locus, ThreatVerdict, in_threat_period
from .config import DEFAULT_PRESET, ConfigError, NodeSpec, ScenarioConfig, emit_config, parse_config
from .experiment import build_world, emit_report, run_experiment, run_matrix, run_round
from .secmode import DropReason, ModeState, SecureMode, prepare_outgoing, process_incoming
from .wire import ControlMessage, DaoAckBody, DaoBody, DioBody, MsgKind, decode_wire, encode_wire

__version__ = "0.1.0"

__all__ = [
    "AttackClass", "AttackKind", "ConfigError", "ControlMessage", "DaoAckBody", "DaoBody",
    "DEFAULT_PRESET", "DioBody", "DropReason", "Locus", "ModeState", "MsgKind", "NodeSpec",
    "ScenarioConfig", "SecureMode", "ThreatVerdict",
    "build_world", "decode_wire", "emit_config", "emit_report", "encode_wire", "in_threat_period",
    "parse_config", "prepare_outgoing", "process_incoming", "run_experiment", "run_matrix", "run_round",
]
