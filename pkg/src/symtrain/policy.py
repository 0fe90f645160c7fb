"""Autoregressive token policy: embedding + single-layer GRU + projection.

The same conditioning format is used for generation and training so that
refinement behaviour can be learned from contrastive pairs: plain generation
conditions on ``BOS x SEP`` and refinement on ``BOS x SEP a_prev SEP``, both
followed by the solution tokens and a terminating EOS.

Two forward paths exist on purpose: a plain numpy path for sampling/scoring
and a taped path for losses.  They share formula and evaluation order, and
the test suite pins their agreement.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from symtrain.autodiff import Array, Tape, Tensor, gru_cell_forward

log = logging.getLogger(__name__)

PAD, BOS, EOS, SEP = "<pad>", "<bos>", "<eos>", "<sep>"
CONTROL_TOKENS = (PAD, BOS, EOS, SEP)

CHECKPOINT_FORMAT = "symtrain-checkpoint"
CHECKPOINT_VERSION = 1

INIT_SCALE = 0.08  # parameters drawn uniform in [-INIT_SCALE, INIT_SCALE]


class CheckpointError(RuntimeError):
    """Checkpoint file is missing, corrupt, or from an incompatible version."""


class Vocab:
    """Token/id bijection; control tokens first, grammar tokens after."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tokens[: len(CONTROL_TOKENS)] != list(CONTROL_TOKENS):
            raise ValueError("vocabulary must start with the control tokens")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self._tokens = tokens
        self._ids = {t: i for i, t in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def sep_id(self) -> int:
        return 3

    def encode(self, tokens: Sequence[str]) -> list[int]:
        try:
            return [self._ids[t] for t in tokens]
        except KeyError as exc:
            raise ValueError(f"token {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self._tokens[i] for i in ids]


def default_vocab() -> Vocab:
    """Shared vocabulary covering all three environment grammars."""
    tokens = list(CONTROL_TOKENS)
    tokens += [str(d) for d in range(10)]
    tokens += [chr(c) for c in range(ord("a"), ord("z") + 1)]
    tokens += [chr(c) for c in range(ord("A"), ord("Z") + 1)]
    tokens += ["+", "-", "*", "/", "%", "(", ")", ";", "=", ",", ".", "?", ":-"]
    tokens += ["fact", "rule", "query", "if", "then",
               "grid", "start", "goal", "wall",
               "sum", "diff", "prod", "quot", "mod", "true", "false"]
    return Vocab(tokens)


@dataclass
class GenerationParams:
    """Sampling knobs: softmax temperature, length cap, candidates per call."""

    temperature: float = 1.0
    max_len: int = 80
    k_samples: int = 5

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")
        if self.k_samples < 1:
            raise ValueError(f"k_samples must be >= 1, got {self.k_samples}")


class PolicyModel:
    """GRU policy with parameter tensors, an embedded rng stream, and hyperparams.

    Gate layout inside the fused weight matrices is ``[update | reset | cand]``
    along the 3h column axis.
    """

    def __init__(self, vocab: Vocab, d: int = 32, h: int = 64, seed: int = 0,
                 context_budget: int = 192):
        self.vocab = vocab
        self.d = d
        self.h = h
        self.rng_seed = seed
        self.context_budget = context_budget
        self.params = self._init_params(seed)
        self.rng = np.random.default_rng(seed)

    def _init_params(self, seed: int) -> dict[str, Tensor]:
        rng = np.random.default_rng(seed)
        v, d, h = len(self.vocab), self.d, self.h

        def uniform(*shape: int) -> Tensor:
            return Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, shape), requires_grad=True)

        return {
            "embed": uniform(v, d),
            "w_x": uniform(d, 3 * h),
            "w_h": uniform(h, 3 * h),
            "b": uniform(1, 3 * h),
            "w_out": uniform(h, v),
            "b_out": uniform(1, v),
        }

    def clone(self) -> "PolicyModel":
        """Deep parameter copy; the rng stream position is copied too."""
        twin = PolicyModel.__new__(PolicyModel)
        twin.vocab = self.vocab
        twin.d, twin.h = self.d, self.h
        twin.rng_seed = self.rng_seed
        twin.context_budget = self.context_budget
        twin.params = {k: Tensor(t.data.copy(), requires_grad=True)
                       for k, t in self.params.items()}
        twin.rng = np.random.default_rng(0)
        twin.rng.bit_generator.state = self.rng.bit_generator.state
        return twin


def reinit(model: PolicyModel, seed: int) -> PolicyModel:
    """Fresh parameters from the init distribution; vocabulary unchanged."""
    return PolicyModel(model.vocab, model.d, model.h, seed, model.context_budget)


# ---------------------------------------------------------------------------
# conditioning

def sample_condition(x: Sequence[str]) -> list[str]:
    return [BOS, *x, SEP]


def refine_condition(x: Sequence[str], a_prev: Sequence[str],
                     context_budget: int) -> tuple[list[str], bool]:
    """BOS x SEP a_prev SEP, truncating a_prev from the left when over budget."""
    frame = len(x) + 3
    keep = max(0, context_budget - frame)
    truncated = len(a_prev) > keep
    a_prev = list(a_prev)[-keep:] if keep else []
    return [BOS, *x, SEP, *a_prev, SEP], truncated


# ---------------------------------------------------------------------------
# plain numpy forward (sampling / scoring)

def _np_arrays(model: PolicyModel) -> dict[str, Array]:
    return {k: t.data for k, t in model.params.items()}


def _np_step(p: Mapping[str, Array], h_row: Array, token_id: int,
             n_hidden: int) -> Array:
    x = p["embed"][token_id:token_id + 1]
    h_new, _ = gru_cell_forward(x, h_row, p["w_x"], p["w_h"], p["b"], n_hidden)
    return h_new


def _np_logits(p: Mapping[str, Array], h_row: Array) -> Array:
    return h_row @ p["w_out"] + p["b_out"]


def _log_softmax_row(logits: Array) -> Array:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def sequence_token_logps(model: PolicyModel, cond_ids: Sequence[int],
                         target_ids: Sequence[int]) -> Array:
    """Log-probability of each target token given the condition prefix."""
    p = _np_arrays(model)
    seq = list(cond_ids) + list(target_ids)
    h_row = np.zeros((1, model.h))
    out = np.empty(len(target_ids))
    k = 0
    for t in range(len(seq) - 1):
        h_row = _np_step(p, h_row, seq[t], model.h)
        if t >= len(cond_ids) - 1:
            logp = _log_softmax_row(_np_logits(p, h_row))
            out[k] = logp[0, seq[t + 1]]
            k += 1
    return out


def _generate(model: PolicyModel, cond_ids: list[int], params: GenerationParams,
              rng: np.random.Generator | None) -> list[int]:
    """Ancestral sampling (or greedy when rng is None); EOS is consumed, not returned."""
    p = _np_arrays(model)
    h_row = np.zeros((1, model.h))
    for t in cond_ids[:-1]:
        h_row = _np_step(p, h_row, t, model.h)
    prev = cond_ids[-1]
    out: list[int] = []
    vocab_size = len(model.vocab)
    for _ in range(params.max_len):
        h_row = _np_step(p, h_row, prev, model.h)
        logits = _np_logits(p, h_row)
        if rng is None:
            token = int(np.argmax(logits[0]))
        else:
            probs = np.exp(_log_softmax_row(logits / params.temperature))[0]
            probs = probs / probs.sum()
            token = int(rng.choice(vocab_size, p=probs))
        if token == model.vocab.eos_id:
            break
        out.append(token)
        prev = token
    return out


def sample(model: PolicyModel, x: Sequence[str], params: GenerationParams,
           seed: int | None = None) -> list[list[str]]:
    """Draw k_samples solutions for input x; deterministic under a given seed."""
    if not x:
        raise ValueError("sample: input x must be non-empty")
    rng = np.random.default_rng(seed) if seed is not None else model.rng
    cond = model.vocab.encode(sample_condition(x))
    return [model.vocab.decode(_generate(model, cond, params, rng))
            for _ in range(params.k_samples)]


def refine(model: PolicyModel, x: Sequence[str], a_prev: Sequence[str],
           params: GenerationParams, seed: int | None = None) -> list[list[str]]:
    """Draw k_samples refinements of a previous solution."""
    if not a_prev:
        raise ValueError("refine: previous solution must be non-empty")
    cond_tokens, truncated = refine_condition(x, a_prev, model.context_budget)
    if truncated:
        log.warning("refine conditioning truncated to context budget %d",
                    model.context_budget)
    rng = np.random.default_rng(seed) if seed is not None else model.rng
    cond = model.vocab.encode(cond_tokens)
    return [model.vocab.decode(_generate(model, cond, params, rng))
            for _ in range(params.k_samples)]


def greedy_decode(model: PolicyModel, condition: Sequence[str],
                  max_len: int = 80) -> list[str]:
    cond = model.vocab.encode([BOS, *condition, SEP])
    gen = GenerationParams(temperature=1.0, max_len=max_len, k_samples=1)
    return model.vocab.decode(_generate(model, cond, gen, rng=None))


def score(model: PolicyModel, condition: Sequence[str], a: Sequence[str]) -> float:
    """Length-normalized sequence log-probability (nats per token).

    The scored sequence runs through the first EOS, which is appended when
    absent, so the terminating decision always contributes; padding after EOS
    is ignored.  The condition is framed as ``BOS condition SEP``.
    """
    a = list(a)
    if not a:
        raise ValueError("score: solution must be non-empty")
    if EOS in a:
        eff = a[: a.index(EOS) + 1]
    else:
        eff = a + [EOS]
    cond_ids = model.vocab.encode([BOS, *condition, SEP])
    logps = sequence_token_logps(model, cond_ids, model.vocab.encode(eff))
    return float(logps.sum() / len(eff))


# ---------------------------------------------------------------------------
# taped forward (losses)

def _taped_step(tape: Tape, model: PolicyModel, ids: Sequence[int],
                h_state: Tensor) -> Tensor:
    x = tape.embedding_lookup(model.params["embed"], ids)
    return tape.gru_cell(x, h_state, model.params["w_x"], model.params["w_h"],
                         model.params["b"], model.h)


def nll(model: PolicyModel, condition: Sequence[str], target: Sequence[str],
        tape: Tape) -> tuple[Tensor, Array]:
    """Summed negative log-likelihood of target after ``BOS condition SEP``.

    The target is taken verbatim; callers append EOS when the terminating
    decision should be part of the loss.
    """
    target = list(target)
    if not target:
        raise ValueError("nll: empty target")
    cond_ids = model.vocab.encode([BOS, *condition, SEP])
    tgt_ids = model.vocab.encode(target)
    loss, per_token = batch_nll(model, tape, [(cond_ids, tgt_ids)])
    return loss, per_token


def batch_nll(model: PolicyModel, tape: Tape,
              examples: Sequence[tuple[list[int], list[int]]],
              ) -> tuple[Tensor, Array]:
    """Joint NLL over encoded (condition_ids, target_ids) examples.

    Sequences are right-padded to a common length; only genuine target
    positions enter the loss.  Per-token log-probs come back in example
    order (use example_token_slices to split them).
    """
    n_batch = len(examples)
    if n_batch == 0:
        raise ValueError("batch_nll: no examples")
    seqs = [list(c) + list(t) for c, t in examples]
    if any(len(t) == 0 for _, t in examples):
        raise ValueError("batch_nll: empty target")
    max_len = max(len(s) for s in seqs)
    pad = model.vocab.pad_id
    ids = np.full((n_batch, max_len), pad, dtype=np.intp)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
    h_state = Tensor(np.zeros((n_batch, model.h)))
    h_steps: list[Tensor] = []
    for t in range(max_len - 1):
        h_state = _taped_step(tape, model, ids[:, t].tolist(), h_state)
        h_steps.append(h_state)
    h_all = tape.concat_rows(h_steps)  # row (t, i) lives at t * n_batch + i
    logits_all = tape.add_bias(tape.matmul(h_all, model.params["w_out"]),
                               model.params["b_out"])
    indices: list[int] = []
    targets: list[int] = []
    for i, (cond, tgt) in enumerate(examples):
        for k in range(len(tgt)):
            step = len(cond) - 1 + k
            indices.append(step * n_batch + i)
            targets.append(tgt[k])
    selected = tape.take_rows(logits_all, indices)
    return tape.log_softmax_nll(selected, targets)


def example_token_slices(examples: Sequence[tuple[list[int], list[int]]],
                         ) -> list[tuple[int, int]]:
    """(start, length) of each example's tokens in batch_nll's flat order."""
    out = []
    start = 0
    for _, tgt in examples:
        out.append((start, len(tgt)))
        start += len(tgt)
    return out


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(model: PolicyModel, path: str | Path,
                    metadata: dict | None = None) -> Path:
    """Write a versioned JSON checkpoint: vocab, hyperparams, params, rng state."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "d": model.d,
        "h": model.h,
        "context_budget": model.context_budget,
        "rng_seed": model.rng_seed,
        "vocab": model.vocab.tokens,
        "params": {k: {"shape": list(t.shape), "values": t.data.reshape(-1).tolist()}
                   for k, t in model.params.items()},
        "rng_state": model.rng.bit_generator.state,
        "metadata": metadata or {},
    }
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True))
    return path


def load_checkpoint(path: str | Path) -> tuple[PolicyModel, dict]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a policy checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {payload.get('version')} unsupported "
            f"(expected {CHECKPOINT_VERSION})")
    try:
        model = PolicyModel(Vocab(payload["vocab"]), payload["d"], payload["h"],
                            payload["rng_seed"], payload["context_budget"])
        for name, rec in payload["params"].items():
            arr = np.asarray(rec["values"], dtype=np.float64)
            shape = tuple(rec["shape"])
            if arr.size != int(np.prod(shape)):
                raise CheckpointError(f"parameter {name}: value count mismatch")
            model.params[name] = Tensor(arr.reshape(shape), requires_grad=True)
        model.rng.bit_generator.state = payload["rng_state"]
        metadata = payload.get("metadata", {})
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    return model, metadata
