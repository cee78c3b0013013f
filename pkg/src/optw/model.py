"""Pointer network policy.

One construction step runs four blocks:

1. embed: static and dynamic node features -> tanh projections, concatenated;
2. set encoder: transformer layers over the node set, self-attention
   restricted to the lookahead graph, keys computed from the previous step's
   encoder output when ``recursion`` is on;
3. sequence encoder: one LSTM step fed with the current node's encoding;
4. pointer: additive attention, logits squashed to [-C, C], inadmissible
   nodes masked out.

All functions work on a batch of B partial routes of the same instance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import core
from .core import Instance
from .features import N_DYNAMIC, N_STATIC, FeatureTensors, dynamic_features_batch, static_features
from .nn import NEG_SENTINEL, ParameterStore, ShapeError, Tensor, ad, linear, lstm_cell, multi_head_attention
from .nn.params import AdamConfig, load_checkpoint, save_checkpoint, xavier_uniform


class GraphMask(str, enum.Enum):
    LOOKAHEAD = "lookahead"
    COMPLETE = "complete"


class NoAdmissibleNode(RuntimeError):
    pass


@dataclass
class ModelConfig:
    d_model: int = 128
    d_ff: int = 256
    layers: int = 2
    heads: int = 8
    clip_c: float = 10.0
    recursion: bool = True
    graph_mask: GraphMask = GraphMask.LOOKAHEAD
    mask_style: str = "neg_inf"

    def __post_init__(self):
        self.graph_mask = GraphMask(self.graph_mask)
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")
        if self.d_model % 2:
            raise ValueError("d_model must be even (static and dynamic halves)")
        if self.clip_c <= 0:
            raise ValueError("clip_c must be positive")
        if self.mask_style not in ("neg_inf", "zero"):
            raise ValueError(f"unknown mask_style {self.mask_style!r}")

    @classmethod
    def full(cls, **kw) -> "ModelConfig":
        return cls(**kw)

    @classmethod
    def desk(cls, **kw) -> "ModelConfig":
        kw.setdefault("d_model", 32)
        kw.setdefault("d_ff", 64)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["graph_mask"] = self.graph_mask.value
        return d


def init_params(cfg: ModelConfig, rng: np.random.Generator, dtype=np.float32) -> ParameterStore:
    d, half = cfg.d_model, cfg.d_model // 2
    store = ParameterStore()

    def weight(name, shape):
        store.add(name, xavier_uniform(shape, rng, dtype))

    def const(name, shape, value):
        store.add(name, np.full(shape, value, dtype=dtype))

    weight("embed.static.W", (N_STATIC, half))
    weight("embed.static.b", (half,))
    weight("embed.dynamic.W", (N_DYNAMIC, half))
    weight("embed.dynamic.b", (half,))
    for layer in range(cfg.layers):
        p = f"enc.{layer}."
        for w in ("Wq", "Wk", "Wv", "Wo"):
            weight(p + w, (d, d))
        const(p + "ln1.g", (d,), 1.0)
        const(p + "ln1.b", (d,), 0.0)
        weight(p + "ff.W1", (d, cfg.d_ff))
        weight(p + "ff.b1", (cfg.d_ff,))
        weight(p + "ff.W2", (cfg.d_ff, d))
        weight(p + "ff.b2", (d,))
        const(p + "ln2.g", (d,), 1.0)
        const(p + "ln2.b", (d,), 0.0)
    weight("lstm.W_ih", (d, 4 * d))
    weight("lstm.W_hh", (d, 4 * d))
    weight("lstm.b", (4 * d,))
    bound = 1.0 / np.sqrt(d)
    store.add("lstm.h0", rng.uniform(-bound, bound, size=(d,)).astype(dtype))
    store.add("lstm.c0", rng.uniform(-bound, bound, size=(d,)).astype(dtype))
    weight("ptr.W1", (d, d))
    weight("ptr.W2", (d, d))
    weight("ptr.w", (d, 1))
    return store


@dataclass
class EncoderState:
    """Recurrent state carried between construction steps (batched)."""

    h_e: Tensor | None
    lstm_h: Tensor
    lstm_c: Tensor
    step: int = 0

    def select(self, rows: np.ndarray) -> "EncoderState":
        """Rows of a no-grad state, e.g. to reorder beams."""
        pick = lambda t: None if t is None else Tensor(t.data[rows])  # noqa: E731
        return EncoderState(pick(self.h_e), pick(self.lstm_h), pick(self.lstm_c), self.step)

    def take(self, rows: np.ndarray) -> "EncoderState":
        """Differentiable row selection."""
        pick = lambda t: None if t is None else t[rows]  # noqa: E731
        return EncoderState(pick(self.h_e), pick(self.lstm_h), pick(self.lstm_c), self.step)


# blocks -------------------------------------------------------------------------

def embed_static(static: np.ndarray, params: ParameterStore) -> Tensor:
    if static.shape[-1] != N_STATIC:
        raise ShapeError(f"expected {N_STATIC} static features, got {static.shape[-1]}")
    st = np.asarray(static, dtype=params.dtype)
    return ad.tanh(linear(st, params["embed.static.W"], params["embed.static.b"]))


def embed(static, dynamic: np.ndarray, params: ParameterStore) -> Tensor:
    """Node embeddings, shape (B, n, d). ``static`` may be raw features or its embedding."""
    if dynamic.shape[-1] != N_DYNAMIC:
        raise ShapeError(f"expected {N_DYNAMIC} dynamic features, got {dynamic.shape[-1]}")
    dyn = np.asarray(dynamic, dtype=params.dtype)
    if dyn.ndim == 2:
        dyn = dyn[None]
    e_dy = ad.tanh(linear(dyn, params["embed.dynamic.W"], params["embed.dynamic.b"]))
    e_st = static if isinstance(static, Tensor) else embed_static(np.asarray(static), params)
    if e_st.ndim == 2:
        e_st = e_st[None]
    b = dyn.shape[0]
    if e_st.shape[0] != b:
        e_st = e_st + np.zeros((b, 1, 1), dtype=params.dtype)
    return ad.concat([e_st, e_dy], axis=-1)


def set_encode(e: Tensor, h_prev: Tensor | None, mask: np.ndarray, params: ParameterStore,
               cfg: ModelConfig) -> Tensor:
    """Transformer encoder over the node set, shape (B, n, d) -> (B, n, d)."""
    if mask.shape[-1] != mask.shape[-2]:
        raise ShapeError("attention mask must be square")
    if mask.ndim == 2:
        mask = mask[None]
    x = e
    key_src = h_prev if (cfg.recursion and h_prev is not None) else None
    for layer in range(cfg.layers):
        p = f"enc.{layer}."
        k_in = key_src if key_src is not None else x
        att = multi_head_attention(x, k_in, x, params[p + "Wq"], params[p + "Wk"], params[p + "Wv"],
                                   params[p + "Wo"], cfg.heads, mask, cfg.mask_style)
        x = ad.layer_norm(x + att, params[p + "ln1.g"], params[p + "ln1.b"])
        ff = linear(ad.relu(linear(x, params[p + "ff.W1"], params[p + "ff.b1"])),
                    params[p + "ff.W2"], params[p + "ff.b2"])
        x = ad.layer_norm(x + ff, params[p + "ln2.g"], params[p + "ln2.b"])
    return x


def initial_encoder_state(params: ParameterStore, batch: int) -> EncoderState:
    zeros = np.zeros((batch, 1), dtype=params.dtype)
    h = params["lstm.h0"] + zeros
    c = params["lstm.c0"] + zeros
    return EncoderState(None, h, c, 0)


def sequence_encode(x: Tensor, enc: EncoderState, params: ParameterStore) -> tuple[Tensor, Tensor]:
    return lstm_cell(x, enc.lstm_h, enc.lstm_c, params["lstm.W_ih"], params["lstm.W_hh"], params["lstm.b"])


def pointer_logits(h_e: Tensor, h_d: Tensor, params: ParameterStore, cfg: ModelConfig) -> Tensor:
    """Clipped logits C * tanh(w . tanh(W1 h_e + W2 h_d)), shape (B, n)."""
    q = ad.matmul(h_d, params["ptr.W2"])
    b, n, _ = h_e.shape
    hidden = ad.tanh(ad.matmul(h_e, params["ptr.W1"]) + q.reshape(b, 1, -1))
    u = ad.matmul(hidden, params["ptr.w"]).reshape(b, n)
    return ad.tanh(u) * cfg.clip_c


def point(h_e: Tensor, h_d: Tensor, admissible: np.ndarray, params: ParameterStore,
          cfg: ModelConfig) -> Tensor:
    """Log-probabilities over nodes; inadmissible nodes get probability 0."""
    admissible = np.atleast_2d(admissible)
    if not admissible.any(axis=-1).all():
        raise NoAdmissibleNode("a batch row has no admissible node")
    logits = pointer_logits(h_e, h_d, params, cfg)
    return ad.log_softmax(ad.masked_fill(logits, admissible, NEG_SENTINEL), axis=-1)


# batched construction step ----------------------------------------------------

@dataclass
class StepOutput:
    log_probs: Tensor          # (B, n)
    admissible: np.ndarray     # (B, n), the true admissible sets
    enc: EncoderState


@dataclass
class PolicyContext:
    """Per-instance constants reused across all steps of a rollout."""

    inst: Instance
    params: ParameterStore
    cfg: ModelConfig
    static_emb: Tensor = field(init=False)

    def __post_init__(self):
        self.static_emb = embed_static(static_features(self.inst), self.params)

    def step(self, enc: EncoderState, current: np.ndarray, times: np.ndarray,
             visited: np.ndarray) -> StepOutput:
        inst, cfg, params = self.inst, self.cfg, self.params
        adm = core.admissible_batch(inst, current, times, visited)
        mask = core.lookahead_batch(inst, current, times, visited, adm,
                                    complete=cfg.graph_mask is GraphMask.COMPLETE)
        dyn = dynamic_features_batch(inst, current, times)
        e = embed(self.static_emb, dyn, params)
        h_prev = e if enc.h_e is None else enc.h_e
        h_e = set_encode(e, h_prev, mask, params, cfg)
        b = len(current)
        x = h_e[np.arange(b), current]
        h, c = sequence_encode(x, enc, params)
        ptr_mask = adm.copy()
        done = current == inst.end_index
        # finished rows point at the end node with probability one
        ptr_mask[done, inst.end_index] = True
        logp = point(h_e, h, ptr_mask, params, cfg)
        return StepOutput(logp, adm, EncoderState(h_e, h, c, enc.step + 1))


def features_for(inst: Instance, state: core.RouteState, cfg: ModelConfig) -> FeatureTensors:
    mask = core.lookahead_adjacency(inst, state, complete=cfg.graph_mask is GraphMask.COMPLETE)
    return FeatureTensors(static_features(inst),
                          dynamic_features_batch(inst, np.array([state.current_node]),
                                                 np.array([state.current_time]))[0], mask)


# rollouts -----------------------------------------------------------------------

@dataclass
class RolloutResult:
    routes: list[list[int]]
    log_prob: Tensor               # (B,) summed log-probabilities of the chosen nodes
    step_probs: list[list[float]]  # probability of each choice, per route
    scores: np.ndarray


def _sample_index(probs: np.ndarray, u: float) -> int:
    cdf = np.cumsum(probs)
    j = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if j >= len(probs):
        j = int(np.flatnonzero(probs > 0)[-1])
    return j


def rollout_batch(inst: Instance, params: ParameterStore, cfg: ModelConfig, batch: int,
                  mode: str = "sample", rng: np.random.Generator | None = None) -> RolloutResult:
    """Construct ``batch`` routes in lock-step, sampling or taking the argmax.

    Rows that reach the end node leave the batch; their summed
    log-probability is scattered back through a constant one-hot matrix.
    """
    if mode not in ("sample", "greedy"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sampling needs an rng")
    ctx = PolicyContext(inst, params, cfg)
    end = inst.end_index
    current = np.full(batch, inst.start_index, dtype=np.int64)
    times = np.full(batch, float(inst.t_start))
    visited = np.zeros((batch, inst.n), dtype=bool)
    visited[:, inst.start_index] = True
    routes = [[inst.start_index] for _ in range(batch)]
    step_probs: list[list[float]] = [[] for _ in range(batch)]
    enc = initial_encoder_state(params, batch)
    total = None
    live = np.arange(batch) if inst.start_index != end else np.arange(0)
    while live.size:
        out = ctx.step(enc, current[live], times[live], visited[live])
        logp = out.log_probs.data
        k = live.size
        choice = np.empty(k, dtype=np.int64)
        for r in range(k):
            if mode == "greedy":
                choice[r] = int(np.argmax(logp[r]))
            else:
                choice[r] = _sample_index(np.exp(logp[r].astype(np.float64)), rng.random())
            if not out.admissible[r, choice[r]]:
                raise core.InfeasibleMove(f"policy chose inadmissible node {choice[r]}")
        chosen = out.log_probs[np.arange(k), choice]
        scatter = np.zeros((batch, k), dtype=params.dtype)
        scatter[live, np.arange(k)] = 1
        part = ad.matmul(scatter, chosen.reshape(k, 1)).reshape(batch)
        total = part if total is None else total + part
        for r, b in enumerate(live.tolist()):
            j = int(choice[r])
            start = max(times[b] + inst.travel[current[b], j], inst.opens[j])
            times[b] = start + inst.durations[j]
            visited[b, j] = True
            routes[b].append(j)
            step_probs[b].append(float(np.exp(np.float64(logp[r, j]))))
            current[b] = j
        keep = np.flatnonzero(choice != end)
        if keep.size and keep.size < k:
            enc = out.enc.take(keep)
        else:
            enc = out.enc
        live = live[keep]
    if total is None:
        total = Tensor(np.zeros(batch, dtype=params.dtype))
    scores = np.array([math.fsum(inst.scores[r]) for r in routes])
    return RolloutResult(routes, total, step_probs, scores)


def rollout(inst: Instance, params: ParameterStore, cfg: ModelConfig, mode: str = "greedy",
            rng: np.random.Generator | None = None):
    """Single route: (route, summed log-probability, per-step probabilities)."""
    res = rollout_batch(inst, params, cfg, 1, mode, rng)
    return res.routes[0], float(res.log_prob.data[0]), res.step_probs[0]


@dataclass
class Policy:
    """Model configuration together with its parameters."""

    params: ParameterStore
    cfg: ModelConfig

    @classmethod
    def create(cls, cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> "Policy":
        return cls(init_params(cfg, np.random.default_rng(seed), dtype), cfg)

    def copy(self) -> "Policy":
        return Policy(self.params.copy(), ModelConfig(**self.cfg.to_dict()))

    def save(self, path, adam: AdamConfig | None = None, extra: dict | None = None) -> Path:
        meta = {"model": self.cfg.to_dict(), **(extra or {})}
        return save_checkpoint(path, self.params, meta, adam)

    @classmethod
    def load(cls, path) -> tuple["Policy", dict, AdamConfig | None]:
        store, meta, adam = load_checkpoint(path)
        return cls(store, ModelConfig(**meta["model"])), meta, adam
