"""Single-task and joint training mixtures.

A mixture keeps every instance of the main task and subsamples each
auxiliary task's pool, uniformly without replacement, down to the main
task's size.  All randomness is derived from the plan seed, so equal
(plan, pools) inputs produce byte-identical mixtures.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from typing import IO, Mapping, Sequence

from elqa.core import QAInstance, Split, Task
from elqa.errors import SamplingError

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class SamplingPlan:
    main_task: Task
    auxiliary_tasks: tuple[Task, ...] = ()
    seed: int = 0
    resample_each_epoch: bool = False

    def __post_init__(self):
        object.__setattr__(self, "auxiliary_tasks", tuple(self.auxiliary_tasks))
        if self.main_task in self.auxiliary_tasks:
            raise SamplingError(
                f"main task {self.main_task.value} listed among auxiliary tasks"
            )
        if len(set(self.auxiliary_tasks)) != len(self.auxiliary_tasks):
            raise SamplingError("duplicate auxiliary tasks")
        if not -(1 << 63) <= self.seed <= _SEED_MASK:
            raise SamplingError(f"seed {self.seed} does not fit in 64 bits")


@dataclass(frozen=True)
class JointDataset:
    instances: tuple[QAInstance, ...]
    provenance: dict[Task, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if sum(self.provenance.values()) != len(self.instances):
            raise SamplingError("provenance counts do not sum to the mixture size")

    def __len__(self) -> int:
        return len(self.instances)


def _derived_rng(seed: int, *labels: str) -> random.Random:
    key = "|".join([str(seed & _SEED_MASK), *labels]).encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def build_mixture(
    plan: SamplingPlan, pools: Mapping[Task, Sequence[QAInstance]]
) -> JointDataset:
    """Main-task pool in full, each auxiliary pool subsampled to match it."""
    main_pool = list(pools.get(plan.main_task) or [])
    if not main_pool:
        raise SamplingError(f"empty or missing main-task pool for {plan.main_task.value}")
    for task, pool in pools.items():
        for inst in pool:
            if inst.split is not Split.TRAIN:
                raise SamplingError(
                    f"pool for {task.value} contains non-train instance "
                    f"{inst.instance_id!r}"
                )
    combined = list(main_pool)
    provenance = {plan.main_task: len(main_pool)}
    for task in plan.auxiliary_tasks:
        pool = pools.get(task)
        if pool is None:
            raise SamplingError(f"auxiliary task {task.value} missing from pools")
        k = min(len(pool), len(main_pool))
        sample = _derived_rng(plan.seed, "aux", task.value).sample(list(pool), k)
        combined.extend(sample)
        provenance[task] = k
    ids = [inst.instance_id for inst in combined]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise SamplingError(f"duplicate instance ids in mixture: {dup[:5]}")
    _derived_rng(plan.seed, "shuffle").shuffle(combined)
    return JointDataset(tuple(combined), provenance)


def resample(
    plan: SamplingPlan, pools: Mapping[Task, Sequence[QAInstance]], epoch: int
) -> JointDataset:
    """Per-epoch remix; epoch 0 reproduces build_mixture exactly."""
    if not plan.resample_each_epoch:
        raise SamplingError("resample called on a plan with resample_each_epoch=False")
    if epoch < 0:
        raise SamplingError(f"negative epoch {epoch}")
    seed = plan.seed if epoch == 0 else _derived_rng(plan.seed, "epoch", str(epoch)).getrandbits(63)
    return build_mixture(replace(plan, seed=seed), pools)


def pools_by_task(
    instances: Sequence[QAInstance], split: Split = Split.TRAIN
) -> dict[Task, list[QAInstance]]:
    """Group one split's instances by task, preserving input order."""
    pools: dict[Task, list[QAInstance]] = {}
    for inst in instances:
        if inst.split is split:
            pools.setdefault(inst.task, []).append(inst)
    return pools


_PLAN_FIELDS = {"main_task", "auxiliary_tasks", "seed", "resample_each_epoch"}


def plan_from_dict(obj: dict) -> SamplingPlan:
    unknown = set(obj) - _PLAN_FIELDS
    if unknown:
        raise SamplingError(f"unknown sampling-plan fields {sorted(unknown)}")
    if "main_task" not in obj:
        raise SamplingError("sampling plan needs a main_task")
    try:
        return SamplingPlan(
            main_task=Task(obj["main_task"]),
            auxiliary_tasks=tuple(Task(t) for t in obj.get("auxiliary_tasks", ())),
            seed=int(obj.get("seed", 0)),
            resample_each_epoch=bool(obj.get("resample_each_epoch", False)),
        )
    except ValueError as exc:
        raise SamplingError(str(exc)) from exc


def load_plan(stream: IO[str]) -> SamplingPlan:
    try:
        obj = json.load(stream)
    except json.JSONDecodeError as exc:
        raise SamplingError(f"plan file is not valid JSON: {exc.msg}") from exc
    return plan_from_dict(obj)


def best_known_plan(main_task: Task, seed: int = 0) -> SamplingPlan:
    """Mixtures that worked best in validation: sluice+VPE, and VPE+everything."""
    if main_task is Task.SLUICE:
        return SamplingPlan(Task.SLUICE, (Task.VPE,), seed=seed)
    if main_task is Task.VPE:
        return SamplingPlan(
            Task.VPE,
            (Task.SLUICE, Task.COREF_ONTONOTES, Task.COREF_WIKICOREF, Task.SQUAD),
            seed=seed,
        )
    return SamplingPlan(main_task, (), seed=seed)
