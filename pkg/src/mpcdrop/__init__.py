"""mpcdrop: a desk-scale two-party secure-computation simulator for dynamic
token dropping, with exact operation-count accounting and a staged cost model
of secure transformer inference."""

from ._kernels import backend_name
from .errors import DomainError, ProtocolError, RangeError
from .ledger import CostLedger, CostTable, Counts, TraceRecorder
from .median import (MedianConfig, MedianResult, bitonic_comparator_count,
                     bitonic_median, bitonic_sort_shares, oblivious_median,
                     traces_equal, verify_partition_trace)
from .protocol import Protocol
from .ring import RingParams, decode_fixed, encode_fixed
from .scoring import (aggregate_scores, normalize_rows, secure_row_max,
                      synthetic_attention, synthetic_scores)
from .sharing import AdditiveShare, BeaverTriple, Shares, TrustedDealer, add_local
from .tokendrop import DropPlan, drop_site, keep_bits, keep_bits_keyed, oblivious_compact

__version__ = "0.1.0"

__all__ = [
    "AdditiveShare", "BeaverTriple", "CostLedger", "CostTable", "Counts",
    "DomainError", "DropPlan", "MedianConfig", "MedianResult", "Protocol",
    "ProtocolError", "RangeError", "RingParams", "Shares", "TraceRecorder",
    "TrustedDealer", "add_local", "aggregate_scores", "backend_name",
    "bitonic_comparator_count", "bitonic_median", "bitonic_sort_shares",
    "decode_fixed", "drop_site", "encode_fixed", "keep_bits", "keep_bits_keyed",
    "normalize_rows", "oblivious_compact", "oblivious_median", "secure_row_max",
    "synthetic_attention", "synthetic_scores", "traces_equal",
    "verify_partition_trace",
]
