from nv_multifreq.sequence.builder import build_echo_sequence
from nv_multifreq.sequence.codec import parse_sequence, serialize_sequence
from nv_multifreq.sequence.topology import validate_against_topology
from nv_multifreq.sequence.validation import check_program, flip_signs

__all__ = [
    "build_echo_sequence",
    "parse_sequence",
    "serialize_sequence",
    "validate_against_topology",
    "check_program",
    "flip_signs",
]
