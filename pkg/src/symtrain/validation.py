"""Input validation helpers shared by the estimator, engine and CLI."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

from symtrain.engine import ConfigError, RunConfig
from symtrain.environments import EnvKind, TaskInstance


def check_tasks(X) -> list[TaskInstance]:
    """Coerce a task collection (TaskInstance objects or plain dicts) and
    enforce unique ids and a single environment."""
    tasks: list[TaskInstance] = []
    for i, item in enumerate(X):
        if isinstance(item, TaskInstance):
            tasks.append(item)
        elif isinstance(item, Mapping):
            try:
                x = item["x"]
                tasks.append(TaskInstance(
                    id=item["id"],
                    x=tuple(x.split()) if isinstance(x, str) else tuple(x),
                    y=item["y"],
                    split=item.get("split", "held_in"),
                    env=item.get("env", EnvKind.EXPR_MATH.value),
                ))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"task #{i}: {exc}") from exc
        else:
            raise TypeError(f"task #{i}: expected TaskInstance or mapping, "
                            f"got {type(item).__name__}")
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate task ids: {dupes[:5]}")
    envs = {t.env for t in tasks}
    if len(envs) > 1:
        raise ValueError(f"tasks mix environments: {sorted(envs)}")
    return tasks


def check_witnesses(witnesses, tasks: Sequence[TaskInstance]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for task_id, a in (witnesses or {}).items():
        out[task_id] = a.split() if isinstance(a, str) else list(a)
    known = {t.id for t in tasks}
    unknown = sorted(set(out) - known)
    if unknown:
        raise ValueError(f"witnesses reference unknown task ids: {unknown[:5]}")
    return out


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a JSON run configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return RunConfig.from_dict(raw)
