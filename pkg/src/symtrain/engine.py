"""The iterative self-training loop and its baseline variants.

One iteration is: explore (sample K solutions per task, optionally refine
each once), grade everything in the environment, self-score, filter each
explored/refined pair, fold survivors into the candidate pool, select
positive-only and positive-negative training sets, and retrain the policy
(from scratch by default).  Everything is a pure function of (config,
dataset): all randomness derives from the config seed.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from symtrain import analysis
from symtrain.autodiff import Tape, TrainingError, collect_grads, sgd_step, zero_grads
from symtrain.environments import EnvKind, TaskInstance, execute
from symtrain.policy import (
    BOS,
    EOS,
    SEP,
    GenerationParams,
    PolicyModel,
    batch_nll,
    default_vocab,
    example_token_slices,
    greedy_decode,
    refine,
    refine_condition,
    reinit,
    sample,
    save_checkpoint,
    score,
    sequence_token_logps,
)
from symtrain.pool import CandidatePool, RankedSets, Trajectory, filter_pair, persist

METHODS = ("envisions", "star_env", "sft_dpo")
TRAIN_MODES = ("scratch", "continual")
ABLATIONS = ("no_self_refine", "no_self_reward", "no_candidate_pool", "no_L2")

# seed-stream domains
_DOM_INIT, _DOM_SAMPLE, _DOM_REFINE, _DOM_SHUFFLE, _DOM_SELECT, _DOM_WARMUP = range(6)


class ConfigError(ValueError):
    """A run configuration is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """All experiment knobs.  The first twelve fields are required in config
    files; the rest default to the documented desk-scale settings."""

    env: str
    method: str
    K: int
    N1: int
    N2: int
    iterations: int
    train_mode: str
    ablations: tuple[str, ...]
    epochs_per_iter: int
    lr: float
    dpo_beta: float
    seed: int
    d: int = 32
    h: int = 64
    temperature: float = 1.0
    max_len: int = 80
    context_budget: int = 192
    batch_size: int = 8
    clip: float = 5.0
    warmup_tasks: int = 20
    warmup_epochs: int = 150
    pool_cap: int = 64
    rescore_pool: bool = False
    seed_pool_with_warmup: bool = True
    eval_with_refine: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "ablations", tuple(self.ablations))
        try:
            EnvKind(self.env)
        except ValueError:
            raise ConfigError(f"unknown env {self.env!r} "
                              f"(valid: {[e.value for e in EnvKind]})") from None
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.train_mode not in TRAIN_MODES:
            raise ConfigError(f"train_mode must be one of {TRAIN_MODES}")
        for name, minimum in (("K", 1), ("N1", 1), ("N2", 0), ("iterations", 1),
                              ("epochs_per_iter", 1), ("batch_size", 1), ("workers", 1)):
            if getattr(self, name) < minimum:
                raise ConfigError(f"{name} must be >= {minimum}")
        for abl in self.ablations:
            if abl not in ABLATIONS:
                raise ConfigError(f"unknown ablation {abl!r} (valid: {ABLATIONS})")
        if self.ablations and self.method != "envisions":
            raise ConfigError("ablations are only valid with method = envisions")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")

    @classmethod
    def required_keys(cls) -> tuple[str, ...]:
        return ("env", "method", "K", "N1", "N2", "iterations", "train_mode",
                "ablations", "epochs_per_iter", "lr", "dpo_beta", "seed")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        for key in cls.required_keys():
            if key not in raw:
                raise ConfigError(f"missing config key {key!r}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["ablations"] = list(self.ablations)
        return out


@dataclass
class TrainingSets:
    """Per-iteration training data: positive-only and positive-negative pairs."""

    u1: list[tuple[tuple[str, ...], tuple[str, ...]]]
    u2: list[tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]]


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    solved_task_ids: tuple[str, ...]
    new_trajectory_count: int
    loss_l1: float
    loss_l2: float
    loss_total: float
    held_in_rate: float
    held_out_rate: float

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "solved_task_ids": list(self.solved_task_ids),
            "new_trajectory_count": self.new_trajectory_count,
            "loss_l1": self.loss_l1,
            "loss_l2": self.loss_l2,
            "loss_total": self.loss_total,
            "held_in_rate": self.held_in_rate,
            "held_out_rate": self.held_out_rate,
        }


@dataclass
class RunResult:
    config: RunConfig
    reports: list[IterationReport]
    series: list[analysis.AnalysisRow]
    model: PolicyModel
    pool: CandidatePool
    warmup_task_ids: tuple[str, ...]


def child_seed(*keys: int) -> int:
    """Deterministic derived seed for an (independent) rng stream."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# exploration

def _score_solution(model: PolicyModel, condition: list[str], a: Sequence[str]) -> float:
    # append the terminator explicitly so empty generations remain scoreable
    return score(model, condition, [*a, EOS])


def explore_task(model: PolicyModel, task: TaskInstance, config: RunConfig,
                 iteration: int, task_index: int,
                 ) -> list[tuple[Trajectory, Trajectory | None]]:
    gen = GenerationParams(config.temperature, config.max_len, config.K)
    refine_gen = GenerationParams(config.temperature, config.max_len, 1)
    refine_on = _self_refine_on(config)
    x = list(task.x)
    samples = sample(model, x, gen,
                     seed=child_seed(config.seed, _DOM_SAMPLE, iteration, task_index))
    pairs: list[tuple[Trajectory, Trajectory | None]] = []
    for k, a in enumerate(samples):
        res = execute(config.env, task, a)
        t = Trajectory(task.id, task.x, task.y, tuple(a), res.b,
                       _score_solution(model, x, a), "explore", iteration, res.status)
        t_tilde = None
        if refine_on and a:  # an empty draft cannot prompt a refinement
            a_ref = refine(model, x, a, refine_gen,
                           seed=child_seed(config.seed, _DOM_REFINE, iteration,
                                           task_index, k))[0]
            res_ref = execute(config.env, task, a_ref)
            cond_ref, _ = refine_condition(x, a, model.context_budget)
            r_ref = score(model, cond_ref[1:-1], [*a_ref, EOS])
            t_tilde = Trajectory(task.id, task.x, task.y, tuple(a_ref), res_ref.b,
                                 r_ref, "refine", iteration, res_ref.status)
        pairs.append((t, t_tilde))
    return pairs


def explore_phase(model: PolicyModel, tasks: Sequence[TaskInstance],
                  config: RunConfig, iteration: int,
                  ) -> list[tuple[Trajectory, Trajectory | None]]:
    """Sample, refine, execute and score candidates for every task.

    Results are identical for any worker count: each task draws from its own
    seed stream and outputs are collected in task order.
    """
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(
                lambda it: explore_task(model, it[1], config, iteration, it[0]),
                enumerate(tasks)))
    else:
        chunks = [explore_task(model, task, config, iteration, i)
                  for i, task in enumerate(tasks)]
    return [pair for chunk in chunks for pair in chunk]


def _self_refine_on(config: RunConfig) -> bool:
    if config.method == "star_env":
        return False
    return "no_self_refine" not in config.ablations


def _l2_on(config: RunConfig) -> bool:
    if config.method == "star_env":
        return False
    return "no_L2" not in config.ablations


# ---------------------------------------------------------------------------
# selection

def select_u1(sets: RankedSets, n1: int, no_self_reward: bool = False,
              rng: np.random.Generator | None = None) -> list[Trajectory]:
    """Top-n1 positives by reward rank, or a seeded random subset when the
    self-reward ranking is ablated."""
    take = min(n1, len(sets.s_plus))
    if take == 0:
        return []
    if not no_self_reward:
        return list(sets.s_plus[:take])
    assert rng is not None
    idx = rng.choice(len(sets.s_plus), size=take, replace=False)
    return [sets.s_plus[int(i)] for i in idx]


def select_u2(sets: RankedSets, n1: int, n2: int, u1: Sequence[Trajectory],
              no_self_reward: bool = False, rng: np.random.Generator | None = None,
              ) -> list[tuple[Trajectory, Trajectory]]:
    """Positive-negative pairs: pair m uses the positive ranked m + |U1| and
    the negative ranked m, for m up to min(n2, |S+| - n1, |S-|)."""
    m_max = min(n2, len(sets.s_plus) - n1, len(sets.s_minus))
    if m_max <= 0:
        return []
    if not no_self_reward:
        return [(sets.s_plus[m + len(u1) - 1], sets.s_minus[m - 1])
                for m in range(1, m_max + 1)]
    assert rng is not None
    used = {t.a for t in u1}
    remaining = [t for t in sets.s_plus if t.a not in used]
    pos_idx = rng.choice(len(remaining), size=m_max, replace=False)
    neg_idx = rng.choice(len(sets.s_minus), size=m_max, replace=False)
    return [(remaining[int(i)], sets.s_minus[int(j)])
            for i, j in zip(pos_idx, neg_idx)]


def build_training_sets(pool: CandidatePool, tasks: Sequence[TaskInstance],
                        config: RunConfig, iteration: int) -> TrainingSets:
    no_reward = "no_self_reward" in config.ablations
    rng = (np.random.default_rng(child_seed(config.seed, _DOM_SELECT, iteration))
           if no_reward else None)
    u1_entries: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    u2_entries: list[tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]] = []
    for task in tasks:
        sets = pool.ranked_sets(task.id)
        u1 = select_u1(sets, config.N1, no_reward, rng)
        assert all(t.b == 1 for t in u1)
        u1_entries += [(t.x, t.a) for t in u1]
        if _l2_on(config) and config.N2 > 0:
            pairs = select_u2(sets, config.N1, config.N2, u1, no_reward, rng)
            assert all(p.b == 1 and n.b == 0 for p, n in pairs)
            u2_entries += [(p.x, p.a, n.a) for p, n in pairs]
    return TrainingSets(u1_entries, u2_entries)


# ---------------------------------------------------------------------------
# training

def _encode_examples(model: PolicyModel, sets: TrainingSets,
                     ) -> list[tuple[str, list[int], list[int]]]:
    vocab = model.vocab
    out: list[tuple[str, list[int], list[int]]] = []
    for x, a_plus in sets.u1:
        cond = vocab.encode([BOS, *x, SEP])
        out.append(("L1", cond, vocab.encode([*a_plus, EOS])))
    for x, a_plus, a_minus in sets.u2:
        cond_tokens, _ = refine_condition(list(x), list(a_minus), model.context_budget)
        out.append(("L2", vocab.encode(cond_tokens), vocab.encode([*a_plus, EOS])))
    return out


def _run_epochs(model: PolicyModel, examples: Sequence[tuple[str, list[int], list[int]]],
                config: RunConfig, shuffle_seed: int, iteration: int,
                epochs: int | None = None) -> tuple[float, float]:
    """Minibatch SGD over the tagged examples; returns final-epoch loss sums."""
    rng = np.random.default_rng(shuffle_seed)
    l1_sum = l2_sum = 0.0
    for _ in range(epochs if epochs is not None else config.epochs_per_iter):
        order = rng.permutation(len(examples))
        l1_sum = l2_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [examples[int(i)] for i in order[start:start + config.batch_size]]
            pairs = [(cond, tgt) for _, cond, tgt in batch]
            tape = Tape()
            loss, per_token = batch_nll(model, tape, pairs)
            if not math.isfinite(float(loss.data)):
                raise TrainingError(f"non-finite loss at iteration {iteration}")
            for (kind, _, _), (tok_start, tok_len) in zip(batch, example_token_slices(pairs)):
                value = -float(per_token[tok_start:tok_start + tok_len].sum())
                if kind == "L1":
                    l1_sum += value
                else:
                    l2_sum += value
            tape.backward(loss)
            grads = collect_grads(model.params)
            sgd_step(model.params, grads, config.lr, config.clip)
            zero_grads(model.params)
    return l1_sum, l2_sum


def train_iteration(model: PolicyModel, sets: TrainingSets, config: RunConfig,
                    iteration: int) -> tuple[PolicyModel, float, float]:
    """Minimize L1 + L2 over the selected sets (fresh parameters when the
    training mode is scratch)."""
    if not sets.u1 and not sets.u2:
        raise ValueError("train_iteration: both training sets are empty")
    if config.train_mode == "scratch":
        model = reinit(model, child_seed(config.seed, _DOM_INIT, iteration))
    examples = _encode_examples(model, sets)
    l1_sum, l2_sum = _run_epochs(model, examples, config,
                                 child_seed(config.seed, _DOM_SHUFFLE, iteration),
                                 iteration)
    return model, l1_sum, l2_sum


def dpo_pair_loss(model: PolicyModel, tape: Tape, cond: list[int], pos: list[int],
                  neg: list[int], ref_margin: float, beta: float):
    """-log sigmoid(beta * ((logp+ - ref+) - (logp- - ref-))) on the tape.

    ref_margin is the frozen reference model's (logp+ - logp-) for the pair.
    """
    nll_pos, _ = batch_nll(model, tape, [(cond, pos)])
    nll_neg, _ = batch_nll(model, tape, [(cond, neg)])
    margin = tape.add(tape.add(tape.mul(nll_pos, -1.0), nll_neg), -ref_margin)
    return tape.mul(tape.log_sigmoid(tape.mul(margin, beta)), -1.0)


def _train_dpo_stage(model: PolicyModel, ref: PolicyModel, sets: TrainingSets,
                     config: RunConfig, iteration: int) -> float:
    vocab = model.vocab
    pairs = []
    for x, a_plus, a_minus in sets.u2:
        cond = vocab.encode([BOS, *x, SEP])
        pos = vocab.encode([*a_plus, EOS])
        neg = vocab.encode([*a_minus, EOS])
        ref_margin = float(sequence_token_logps(ref, cond, pos).sum()
                           - sequence_token_logps(ref, cond, neg).sum())
        pairs.append((cond, pos, neg, ref_margin))
    if not pairs:
        return 0.0
    rng = np.random.default_rng(child_seed(config.seed, _DOM_SHUFFLE, iteration, 1))
    total = 0.0
    for _ in range(config.epochs_per_iter):
        order = rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            tape = Tape()
            batch_loss = None
            for i in order[start:start + config.batch_size]:
                cond, pos, neg, ref_margin = pairs[int(i)]
                loss = dpo_pair_loss(model, tape, cond, pos, neg, ref_margin,
                                     config.dpo_beta)
                batch_loss = loss if batch_loss is None else tape.add(batch_loss, loss)
            assert batch_loss is not None
            if not math.isfinite(float(batch_loss.data)):
                raise TrainingError(f"non-finite DPO loss at iteration {iteration}")
            total += float(batch_loss.data)
            tape.backward(batch_loss)
            grads = collect_grads(model.params)
            sgd_step(model.params, grads, config.lr, config.clip)
            zero_grads(model.params)
    return total


# ---------------------------------------------------------------------------
# evaluation

def solve_task(model: PolicyModel, task: TaskInstance, env: str, max_len: int,
               with_refine: bool = False) -> bool:
    a = greedy_decode(model, list(task.x), max_len)
    if execute(env, task, a).b == 1:
        return True
    if with_refine and a:
        cond_tokens, _ = refine_condition(list(task.x), a, model.context_budget)
        a2 = greedy_decode(model, cond_tokens[1:-1], max_len)
        if execute(env, task, a2).b == 1:
            return True
    return False


def evaluate(model: PolicyModel, tasks: Sequence[TaskInstance], env: str,
             max_len: int = 80, with_refine: bool = False) -> tuple[float, set[str]]:
    """Greedy solve rate plus the set of solved task ids."""
    solved = {t.id for t in tasks
              if solve_task(model, t, env, max_len, with_refine)}
    rate = len(solved) / len(tasks) if tasks else 0.0
    return rate, solved


# ---------------------------------------------------------------------------
# the loop

def run(config: RunConfig, dataset: Sequence[TaskInstance],
        witnesses: dict[str, list[str]], out_dir: str | Path | None = None,
        progress: Callable[[str], None] | None = None) -> RunResult:
    """Warmup, then iterate explore/filter/select/train/evaluate.

    Writes reports.jsonl (streamed per iteration), summary.json, the final
    checkpoint and pool, and the analysis exports when out_dir is given.
    """
    held_in = [t for t in dataset if t.split == "held_in"]
    held_out = [t for t in dataset if t.split == "held_out"]
    if not held_in:
        raise ValueError("dataset has no held_in tasks")
    n_warm = min(config.warmup_tasks, len(held_in))
    warmup = held_in[:n_warm]
    eval_held_in = held_in[n_warm:]
    missing = [t.id for t in warmup if t.id not in witnesses]
    if missing:
        raise ValueError(f"missing witness solutions for warmup tasks: {missing[:3]}")

    out_path = Path(out_dir) if out_dir is not None else None
    reports_fh = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        reports_fh = (out_path / "reports.jsonl").open("w")

    def emit(report: IterationReport) -> None:
        reports.append(report)
        if reports_fh is not None:
            reports_fh.write(json.dumps(report.as_dict(), sort_keys=True) + "\n")
            reports_fh.flush()
        if progress is not None:
            progress(f"iter={report.iteration} held_in={report.held_in_rate:.4f} "
                     f"held_out={report.held_out_rate:.4f} "
                     f"new_traj={report.new_trajectory_count}")

    reports: list[IterationReport] = []
    series: list[analysis.AnalysisRow] = []
    try:
        model = PolicyModel(default_vocab(), config.d, config.h,
                            seed=child_seed(config.seed, _DOM_INIT, 0),
                            context_budget=config.context_budget)
        pool = CandidatePool(config.pool_cap)

        # warmup: behaviour-clone the witness solutions of the seed tasks
        warm_sets = TrainingSets([(t.x, tuple(witnesses[t.id])) for t in warmup], [])
        warm_examples = _encode_examples(model, warm_sets)
        warm_l1, _ = _run_epochs(model, warm_examples, config,
                                 child_seed(config.seed, _DOM_WARMUP), 0,
                                 epochs=config.warmup_epochs)
        seeded = 0
        if config.seed_pool_with_warmup:
            witness_trajs = []
            for t in warmup:
                a = tuple(witnesses[t.id])
                res = execute(config.env, t, a)
                witness_trajs.append(Trajectory(
                    t.id, t.x, t.y, a, res.b, _score_solution(model, list(t.x), a),
                    "explore", 0, res.status))
            seeded = pool.update(witness_trajs)

        held_in_rate, solved = evaluate(model, eval_held_in, config.env,
                                        config.max_len, config.eval_with_refine)
        held_out_rate, _ = evaluate(model, held_out, config.env,
                                    config.max_len, config.eval_with_refine)
        universe = {t.id for t in eval_held_in}
        solved_history = [solved]
        emit(IterationReport(0, tuple(sorted(solved)), seeded,
                             warm_l1, 0.0, warm_l1, held_in_rate, held_out_rate))
        series.append(analysis.AnalysisRow(
            0, held_in_rate, held_out_rate,
            analysis.exploratory_ability(solved, set(), universe), None, None,
            analysis.diversity(pool)))

        probe: list[tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]] = []
        for iteration in range(1, config.iterations + 1):
            pairs = explore_phase(model, held_in, config, iteration)
            filtered = [filter_pair(t, t_tilde) for t, t_tilde in pairs]
            if "no_candidate_pool" in config.ablations:
                pool = CandidatePool(config.pool_cap)
            new_count = pool.update(filtered)
            if config.rescore_pool:
                pool.rescore(lambda t: _score_solution(model, list(t.x), list(t.a)))
            sets = build_training_sets(pool, held_in, config, iteration)
            if not probe and sets.u2:
                # freeze the margin probe at the first iteration with pairs
                probe = list(sets.u2)

            if not sets.u1 and not sets.u2:
                l1_sum = l2_sum = 0.0
            elif config.method == "sft_dpo":
                # continual two-stage training: SFT on positives, then DPO
                # against the SFT checkpoint as the frozen reference
                sft_only = TrainingSets(sets.u1, [])
                examples = _encode_examples(model, sft_only)
                l1_sum, _ = _run_epochs(model, examples, config,
                                        child_seed(config.seed, _DOM_SHUFFLE, iteration),
                                        iteration)
                ref = model.clone()
                l2_sum = _train_dpo_stage(model, ref, sets, config, iteration)
            else:
                model, l1_sum, l2_sum = train_iteration(model, sets, config, iteration)

            held_in_rate, solved = evaluate(model, eval_held_in, config.env,
                                            config.max_len, config.eval_with_refine)
            held_out_rate, _ = evaluate(model, held_out, config.env,
                                        config.max_len, config.eval_with_refine)
            solved_before = set().union(*solved_history)
            emit(IterationReport(iteration, tuple(sorted(solved)), new_count,
                                 l1_sum, l2_sum, l1_sum + l2_sum,
                                 held_in_rate, held_out_rate))
            series.append(analysis.AnalysisRow(
                iteration, held_in_rate, held_out_rate,
                analysis.exploratory_ability(solved, solved_before, universe),
                analysis.stability(solved, solved_history[-1]),
                analysis.delta_logp(model, probe),
                analysis.diversity(pool)))
            solved_history.append(solved)
    finally:
        if reports_fh is not None:
            reports_fh.close()

    warmup_ids = tuple(t.id for t in warmup)
    if out_path is not None:
        save_checkpoint(model, out_path / "checkpoint.json",
                        metadata={"warmup_task_ids": list(warmup_ids),
                                  "method": config.method, "seed": config.seed})
        persist(pool, out_path / "pool.jsonl")
        stem = f"analysis_{config.method}_{config.seed}"
        analysis.export_series(series, out_path / f"{stem}.csv", "csv")
        analysis.export_series(series, out_path / f"{stem}.json", "json")
        summary = {
            "config": config.as_dict(),
            "method": config.method,
            "seed": config.seed,
            "iterations": config.iterations,
            "warmup_task_ids": list(warmup_ids),
            "n_held_in": len(held_in),
            "n_eval_held_in": len(eval_held_in),
            "n_held_out": len(held_out),
            "final_held_in_rate": reports[-1].held_in_rate,
            "final_held_out_rate": reports[-1].held_out_rate,
            "final_diversity": series[-1].diversity,
        }
        (out_path / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                          indent=2) + "\n")
    return RunResult(config, reports, series, model, pool, warmup_ids)


def run_star_env(config: RunConfig, dataset: Sequence[TaskInstance],
                 witnesses: dict[str, list[str]], out_dir: str | Path | None = None,
                 progress: Callable[[str], None] | None = None) -> RunResult:
    """Positive-only behaviour cloning baseline: no refinement, no pair loss."""
    if config.method != "star_env":
        raise ConfigError("run_star_env requires method = star_env")
    return run(config, dataset, witnesses, out_dir, progress)


def run_sft_dpo(config: RunConfig, dataset: Sequence[TaskInstance],
                witnesses: dict[str, list[str]], out_dir: str | Path | None = None,
                progress: Callable[[str], None] | None = None) -> RunResult:
    """Two-stage baseline: SFT on positives, DPO on pairs, continual updates."""
    if config.method != "sft_dpo":
        raise ConfigError("run_sft_dpo requires method = sft_dpo")
    return run(config, dataset, witnesses, out_dir, progress)
