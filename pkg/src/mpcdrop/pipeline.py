"""Toy transformer layer (plaintext reference) and the staged cost model.

The cost model prices one secure inference as a walk over per-layer stages
{qkv, attn_scores, softmax, attn_apply, out_proj, layernorm, ffn_in, gelu,
ffn_out} whose costs scale with the token count m (linearly for the
projection/FFN stages, quadratically for the attention-shaped ones).  A
calibration table fixes the relative stage weights at a reference length;
the default ciphertext table puts 34% of the cost in the three post-attention
linear stages, with the softmax exponential phase dominating its stage.

Three schemes are compared:
  baseline   never drops tokens;
  post_drop  halves the token count after attention output (benefits start
             at the output projection);
  pre_drop   halves before softmax: the value projection, softmax, and
             attention-apply stages already run at half width.

The drop machinery itself (scoring, median selection, compaction) is not
modeled analytically: it is executed on synthetic shares and its measured
ledger is converted to time under the same network profile.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import erf

from .errors import DomainError
from .ledger import Counts
from .median import MedianConfig, oblivious_median
from .protocol import Protocol
from .ring import RingParams
from .scoring import synthetic_attention
from .tokendrop import DropPlan, drop_site, keep_bits_keyed, oblivious_compact

# -- plaintext reference -------------------------------------------------------

LINEAR_STAGES = ("qkv", "out_proj", "ffn_in", "ffn_out")
QUADRATIC_STAGES = ("attn_scores", "softmax", "attn_apply")
TOKEN_LINEAR_STAGES = ("layernorm", "gelu")
STAGE_ORDER = ("qkv", "attn_scores", "softmax", "attn_apply", "out_proj",
               "layernorm", "ffn_in", "gelu", "ffn_out")
LATE_LINEAR = ("out_proj", "ffn_in", "ffn_out")


@dataclass
class LayerWeights:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    ln1: tuple
    ln2: tuple


def init_weights(rng, d_model=32, d_ff=None):
    d_ff = d_ff or 4 * d_model
    s = 1.0 / np.sqrt(d_model)
    return LayerWeights(
        wq=rng.normal(0, s, (d_model, d_model)),
        wk=rng.normal(0, s, (d_model, d_model)),
        wv=rng.normal(0, s, (d_model, d_model)),
        wo=rng.normal(0, s, (d_model, d_model)),
        w1=rng.normal(0, s, (d_model, d_ff)),
        w2=rng.normal(0, 1.0 / np.sqrt(d_ff), (d_ff, d_model)),
        ln1=(np.ones(d_model), np.zeros(d_model)),
        ln2=(np.ones(d_model), np.zeros(d_model)),
    )


def softmax_rows(x):
    mx = x.max(axis=-1, keepdims=True)
    e = np.exp(x - mx)
    return e / e.sum(axis=-1, keepdims=True)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def layer_norm(x, gamma, beta, eps=1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    sd = np.sqrt(x.var(axis=-1, keepdims=True) + eps)
    return gamma * (x - mu) / sd + beta


def attention_logits(I, w: LayerWeights, heads):
    """Scaled per-head logits Q K^T / sqrt(d/H), shape (heads, m, m)."""
    m, d = I.shape
    dh = d // heads
    Q = (I @ w.wq).reshape(m, heads, dh).transpose(1, 0, 2)
    K = (I @ w.wk).reshape(m, heads, dh).transpose(1, 0, 2)
    return Q @ K.transpose(0, 2, 1) / np.sqrt(dh)


def plaintext_layer(I, w: LayerWeights, heads=4, keep=None, drop_point="none"):
    """Float reference of one layer; optionally drops tokens at a given point.

    keep: sorted indices of retained tokens, required when drop_point is
    'pre' (filter A, the value input, and the residual before softmax) or
    'post' (filter the attention output and residual before out_proj).
    Returns (output, info) where info carries intermediates for testing.
    """
    if not np.all(np.isfinite(I)):
        raise DomainError("non-finite layer input")
    m, d = I.shape
    dh = d // heads
    A = attention_logits(I, w, heads)
    resid = I
    v_in = I

    if drop_point == "pre":
        A = A[:, keep][:, :, keep]
        v_in = v_in[keep]
        resid = resid[keep]

    P = softmax_rows(A)
    V = (v_in @ w.wv).reshape(len(v_in), heads, dh).transpose(1, 0, 2)
    attn = P @ V                                    # (heads, m', dh)
    attn = attn.transpose(1, 0, 2).reshape(len(v_in), d)

    if drop_point == "post":
        attn = attn[keep]
        resid = resid[keep]

    x = layer_norm(attn @ w.wo + resid, *w.ln1)
    y = layer_norm(gelu(x @ w.w1) @ w.w2 + x, *w.ln2)
    info = {"logits": A, "softmax": P, "attn": attn, "pre_ffn": x}
    return y, info


# -- network profiles and calibration -------------------------------------------

@dataclass(frozen=True)
class NetProfile:
    name: str
    bandwidth: float  # bits per second
    latency: float    # one-way seconds

    def __post_init__(self):
        if self.bandwidth <= 0 or self.latency < 0:
            raise DomainError("profile needs positive bandwidth, nonneg latency")


PROFILES = {
    "lan": NetProfile("lan", 3e9, 0.8e-3),
    "wan": NetProfile("wan", 200e6, 50e-3),
    "mobile": NetProfile("mobile", 100e6, 80e-3),
}


@dataclass(frozen=True)
class StageSpec:
    name: str
    law: str          # 'linear' or 'quadratic' in the token count
    share: float      # fraction of the reference-layer cost
    comm_frac: float  # fraction of the stage cost that is communication
    rounds: int       # protocol rounds per layer for this stage


DEFAULT_CIPHERTEXT_STAGES = (
    StageSpec("qkv", "linear", 0.13, 0.45, 4),
    StageSpec("attn_scores", "quadratic", 0.12, 0.45, 4),
    StageSpec("softmax", "quadratic", 0.25, 0.70, 96),
    StageSpec("attn_apply", "quadratic", 0.08, 0.45, 4),
    StageSpec("out_proj", "linear", 0.10, 0.45, 4),
    StageSpec("layernorm", "linear", 0.05, 0.70, 64),
    StageSpec("ffn_in", "linear", 0.12, 0.45, 4),
    StageSpec("gelu", "linear", 0.03, 0.70, 48),
    StageSpec("ffn_out", "linear", 0.12, 0.45, 4),
)

# narrative-only: plaintext inference concentrates cost in the linear tail
PLAINTEXT_STAGES = (
    StageSpec("qkv", "linear", 0.05, 0.0, 0),
    StageSpec("attn_scores", "quadratic", 0.05, 0.0, 0),
    StageSpec("softmax", "quadratic", 0.03, 0.0, 0),
    StageSpec("attn_apply", "quadratic", 0.06, 0.0, 0),
    StageSpec("out_proj", "linear", 0.18, 0.0, 0),
    StageSpec("layernorm", "linear", 0.03, 0.0, 0),
    StageSpec("ffn_in", "linear", 0.27, 0.0, 0),
    StageSpec("gelu", "linear", 0.04, 0.0, 0),
    StageSpec("ffn_out", "linear", 0.29, 0.0, 0),
)


@dataclass
class StageCostModel:
    """Analytic per-stage cost as a function of token count.

    ref_seconds and ref_comm_bps anchor the absolute scale at ref_m tokens:
    stage compute = share * (1 - comm_frac) * ref_seconds, stage bytes are
    sized so the stage's communication takes share * comm_frac * ref_seconds
    at the anchor bandwidth.  Only ratios matter downstream.
    """

    stages: tuple = DEFAULT_CIPHERTEXT_STAGES
    ref_m: int = 128
    ref_seconds: float = 450.0
    ref_comm_bps: float = 200e6
    softmax_ph1_share: float = 0.82

    def __post_init__(self):
        total = sum(s.share for s in self.stages)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"stage shares must sum to 1, got {total}")
        self.by_name = {s.name: s for s in self.stages}

    def late_linear_share(self):
        return sum(self.by_name[n].share for n in LATE_LINEAR)

    def stage_cost(self, name, m):
        """(compute_seconds, bytes, rounds) for one layer's stage at m tokens."""
        spec = self.by_name[name]
        f = m / self.ref_m
        scalef = f * f if spec.law == "quadratic" else f
        base = spec.share * self.ref_seconds * scalef
        compute = base * (1.0 - spec.comm_frac)
        nbytes = base * spec.comm_frac * self.ref_comm_bps / 8.0
        return compute, nbytes, spec.rounds

    def stage_time(self, name, m, profile: NetProfile):
        compute, nbytes, rounds = self.stage_cost(name, m)
        return compute + nbytes * 8.0 / profile.bandwidth + rounds * profile.latency


# -- scheme evaluation -----------------------------------------------------------

@dataclass
class StageRow:
    layer: int
    stage: str
    tokens: int
    seconds: float
    cmp: int = 0
    mux: int = 0
    nbytes: int = 0


@dataclass
class SchemeReport:
    scheme: str
    profile: str
    m0: int
    rows: list = field(default_factory=list)
    total_seconds: float = 0.0
    ledger: Optional[dict] = None

    def finish(self):
        self.total_seconds = sum(r.seconds for r in self.rows)
        return self


def measure_drop_machinery(seed, m0, plan: DropPlan, scheme, params: RingParams = None,
                           n_exp=2, offset=8.0, median_cfg: MedianConfig = None,
                           d_model=32, heads=4):
    """Execute the secure drop machinery on synthetic shares per drop layer.

    Returns {layer: {stage_tag: Counts}} measured from a real protocol run;
    profile-independent (counts only), so callers convert to time per profile.
    pre_drop runs scoring + median + compaction of attention/value/residual;
    post_drop reuses softmax-output column sums (free locally) and pays only
    median + compaction of the token-aligned payloads.
    """
    out = {}
    if scheme == "baseline":
        return out
    rng = np.random.default_rng(seed)
    proto = Protocol(params or RingParams(), seed=seed)
    for layer, m in zip(range(1, plan.layers + 1), plan.schedule(m0)):
        if not plan.is_drop_layer(layer):
            continue
        before = {k: Counts(**v.as_dict()) for k, v in proto.ledger.stages.items()}
        A = synthetic_attention(rng, m, d_model, heads)
        tokens = rng.normal(0, 1.0, (m, d_model))
        att_sh = proto.share_fixed(np.clip(A, -15, 15))
        v_sh = proto.share_fixed(tokens)
        r_sh = proto.share_fixed(tokens)
        if scheme == "pre_drop":
            drop_site(proto, att_sh, v_sh, r_sh, n_exp=n_exp, offset=offset,
                      median_cfg=median_cfg)
        else:  # post_drop: column sums of softmax output, summation is local
            scores = softmax_rows(A).sum(axis=(0, 1))
            scores = scores - scores.mean()        # keep fixed-point range small
            sc_sh = proto.share_fixed(scores / max(1.0, np.abs(scores).max()))
            med = oblivious_median(proto, sc_sh, median_cfg)
            bits = keep_bits_keyed(proto, med)
            oblivious_compact(proto, bits, [v_sh, r_sh])
        after = proto.ledger.stages
        delta = {}
        for tag, counts in after.items():
            prev = before.get(tag, Counts())
            d = Counts(counts.cmp - prev.cmp, counts.mux - prev.mux,
                       counts.mul - prev.mul, counts.rounds - prev.rounds,
                       counts.bytes - prev.bytes)
            if d.cmp or d.mux or d.mul or d.rounds or d.bytes:
                delta[tag] = d
        out[layer] = delta
    return out


def _machinery_seconds(counts: Counts, profile: NetProfile):
    return counts.bytes * 8.0 / profile.bandwidth + counts.rounds * profile.latency


def model_scheme_cost(m0, plan: DropPlan, scheme, model: StageCostModel,
                      profile: NetProfile, machinery=None) -> SchemeReport:
    """Walk the layers and price one scheme under one network profile."""
    if scheme not in ("baseline", "post_drop", "pre_drop"):
        raise DomainError(f"unknown scheme {scheme!r}")
    if m0 & (m0 - 1):
        raise DomainError("initial token count must be a power of two")
    machinery = machinery or {}
    report = SchemeReport(scheme=scheme, profile=profile.name, m0=m0)
    m = m0
    for layer in range(1, plan.layers + 1):
        dropping = scheme != "baseline" and plan.is_drop_layer(layer)
        half = m // 2
        for stage in STAGE_ORDER:
            tokens = m
            if dropping:
                if scheme == "pre_drop" and stage in ("softmax", "attn_apply",
                                                      "out_proj", "layernorm",
                                                      "ffn_in", "gelu", "ffn_out"):
                    tokens = half
                if scheme == "post_drop" and stage in ("out_proj", "layernorm",
                                                       "ffn_in", "gelu", "ffn_out"):
                    tokens = half
            if dropping and scheme == "pre_drop" and stage == "qkv":
                # Q and K project the full width; V projects the kept half
                tq = model.stage_time(stage, m, profile) * (2.0 / 3.0)
                tv = model.stage_time(stage, half, profile) * (1.0 / 3.0)
                report.rows.append(StageRow(layer, stage, m, tq + tv))
                continue
            report.rows.append(
                StageRow(layer, stage, tokens, model.stage_time(stage, tokens, profile)))
        if dropping:
            for tag, counts in sorted(machinery.get(layer, {}).items()):
                report.rows.append(StageRow(
                    layer, tag, m, _machinery_seconds(counts, profile),
                    cmp=counts.cmp, mux=counts.mux, nbytes=counts.bytes))
            m = half
    return report.finish()
