"""Ingestion and featurization of engagement records into discrete choices.

Raw engagement counters (views, comments, likes, dislikes) are mapped to a
binary popularity state and a six-level engagement action; per-segment
action-selection policies and priors are estimated by maximum likelihood.

Action encoding (comment level x sentiment):
    1 low/negative   2 low/neutral   3 low/positive
    4 high/negative  5 high/neutral  6 high/positive

Boundary convention (documented, configurable): popularity requires strictly
more views than the threshold; a like-dislike difference inside the closed
band [-s, s] is neutral; a comment count >= the comment threshold is high.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

STATES = (1, 2)
ACTIONS = (1, 2, 3, 4, 5, 6)


class IngestionError(ValueError):
    """Malformed or incomplete raw record."""


class UndefinedPolicyRowError(ValueError):
    """A declared state has no observations, so its policy row is 0/0."""

    def __init__(self, states):
        self.states = tuple(states)
        super().__init__(f"undefined policy row for states {self.states}")


@dataclass(frozen=True)
class FeaturizeConfig:
    view_threshold: int = 10_000
    sentiment_band: int = 25
    comment_threshold: int = 100

    def __post_init__(self):
        if self.view_threshold <= 0 or self.sentiment_band <= 0 or self.comment_threshold <= 0:
            raise ValueError("featurization thresholds must be positive")


@dataclass(frozen=True)
class RawRecord:
    item_id: str
    viewcount_d1: int
    comments_d2: int
    likes: int
    dislikes: int
    category: int
    frame: int | None = None

    def __post_init__(self):
        for name in ("viewcount_d1", "comments_d2", "likes", "dislikes"):
            v = getattr(self, name)
            if v is None:
                raise IngestionError(f"missing required field {name!r}")
            if v < 0:
                raise IngestionError(f"negative count in field {name!r}: {v}")
        if self.category is None:
            raise IngestionError("missing required field 'category'")


@dataclass(frozen=True)
class ChoiceRecord:
    """One discrete observation: state, action and its (frame, problem) segment."""

    x: int
    a: int
    frame: int
    problem: int
    item_id: str = ""

    @property
    def segment(self) -> tuple[int, int]:
        return (self.frame, self.problem)


def featurize(raw: RawRecord, config: FeaturizeConfig = FeaturizeConfig()) -> ChoiceRecord:
    """Map one raw record to its (state, action) pair.

    State is 1 when the day-1 viewcount strictly exceeds the threshold, else 2.
    The action combines comment level (low/high) with sentiment of the
    like-dislike difference (negative / neutral / positive).
    """
    x = 1 if raw.viewcount_d1 > config.view_threshold else 2
    diff = raw.likes - raw.dislikes
    if diff < -config.sentiment_band:
        sentiment = 0
    elif diff > config.sentiment_band:
        sentiment = 2
    else:
        sentiment = 1
    high = raw.comments_d2 >= config.comment_threshold
    a = (3 if high else 0) + sentiment + 1
    return ChoiceRecord(
        x=x,
        a=a,
        frame=raw.frame if raw.frame is not None else 0,
        problem=raw.category,
        item_id=raw.item_id,
    )


@dataclass
class DecisionProblem:
    """Estimated prior, row-stochastic policy, and action set for one segment."""

    mu: np.ndarray
    policy: np.ndarray
    actions: tuple[int, ...]
    states: tuple[int, ...] = STATES
    counts: np.ndarray | None = None
    label: object = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.policy = np.asarray(self.policy, dtype=float)
        if self.policy.shape != (len(self.states), len(self.actions)):
            raise ValueError("policy shape must be |states| x |actions|")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.policy))):
            raise ValueError("prior and policy must be finite")
        if abs(self.mu.sum() - 1.0) > 1e-12:
            raise ValueError("prior must sum to 1 within 1e-12")
        if np.any(self.mu < 0) or np.any(self.policy < 0):
            raise ValueError("probabilities must be non-negative")
        row_sums = self.policy.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-12):
            raise ValueError("policy rows must sum to 1 within 1e-12")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def joint(self) -> np.ndarray:
        """Joint p(x, a) = mu(x) * pi(a|x)."""
        return self.mu[:, None] * self.policy

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "states": list(self.states),
            "actions": list(self.actions),
            "mu": self.mu.tolist(),
            "policy": self.policy.tolist(),
        }


def estimate_problem(
    records,
    segment=None,
    states: tuple[int, ...] = STATES,
    actions: tuple[int, ...] = ACTIONS,
    smoothing: float = 0.0,
) -> DecisionProblem:
    """Maximum-likelihood prior/policy estimate over a segment's records.

    ``smoothing`` adds a Laplace pseudo-count to every (state, action) cell of
    the policy estimate (the prior is never smoothed).  Without smoothing, a
    declared state with no observations raises UndefinedPolicyRowError.
    """
    recs = [r for r in records if segment is None or r.segment == tuple(segment)]
    if not recs:
        raise ValueError("no records in segment")
    s_index = {s: i for i, s in enumerate(states)}
    a_index = {a: j for j, a in enumerate(actions)}
    counts = np.zeros((len(states), len(actions)))
    for r in recs:
        if r.x not in s_index:
            raise ValueError(f"state {r.x} outside declared state space {states}")
        if r.a not in a_index:
            raise ValueError(f"action {r.a} outside declared action space {actions}")
        counts[s_index[r.x], a_index[r.a]] += 1
    state_totals = counts.sum(axis=1)
    mu = state_totals / len(recs)
    if smoothing > 0:
        smoothed = counts + smoothing
        policy = smoothed / smoothed.sum(axis=1, keepdims=True)
    else:
        missing = [states[i] for i in range(len(states)) if state_totals[i] == 0]
        if missing:
            raise UndefinedPolicyRowError(missing)
        policy = counts / state_totals[:, None]
    return DecisionProblem(
        mu=mu, policy=policy, actions=tuple(actions), states=tuple(states),
        counts=counts, label=segment,
    )


def split_dataset(records, ratio: float, seed: int):
    """Deterministic shuffled train/test split; the larger part goes to train."""
    if not records:
        raise ValueError("cannot split an empty dataset")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    records = list(records)
    order = np.random.default_rng(seed).permutation(len(records))
    n_train = int(np.floor(ratio * len(records) + 0.5))
    n_train = min(max(n_train, 1), len(records) - 1)
    train = [records[i] for i in order[:n_train]]
    test = [records[i] for i in order[n_train:]]
    return train, test


# ---------------------------------------------------------------------------
# file interfaces: raw CSV in, canonical JSON out
# ---------------------------------------------------------------------------

RAW_COLUMNS = ("item_id", "viewcount_d1", "comments_d2", "likes", "dislikes", "category")


def read_raw_csv(path) -> list[RawRecord]:
    """Read raw engagement records; the ``frame`` column is optional."""
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise IngestionError(f"{path}: empty file")
        missing = set(RAW_COLUMNS) - set(reader.fieldnames)
        if missing:
            raise IngestionError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(
                    RawRecord(
                        item_id=row["item_id"],
                        viewcount_d1=int(row["viewcount_d1"]),
                        comments_d2=int(row["comments_d2"]),
                        likes=int(row["likes"]),
                        dislikes=int(row["dislikes"]),
                        category=int(row["category"]),
                        frame=int(row["frame"]) if row.get("frame") not in (None, "",) else None,
                    )
                )
            except (KeyError, ValueError) as e:
                raise IngestionError(f"{path}:{lineno}: {e}") from e
    return out


def read_frame_assignments(path) -> dict[str, int]:
    """Read an item_id -> frame mapping (the clustering pipeline's output)."""
    frames = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        need = {"item_id", "frame"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise IngestionError(f"{path}: expected columns item_id, frame")
        for row in reader:
            frames[row["item_id"]] = int(row["frame"])
    return frames


def featurize_all(
    raws,
    config: FeaturizeConfig = FeaturizeConfig(),
    frames: dict[str, int] | None = None,
    problem_one_categories: set[int] | None = None,
) -> list[ChoiceRecord]:
    """Featurize raw records, optionally attaching frames from a frame file.

    With ``frames`` given, each record's segment becomes (frame, problem)
    where the problem index is 1 when the category belongs to
    ``problem_one_categories``, else 2.  Otherwise segments are (0, category).
    """
    out = []
    for raw in raws:
        if frames is not None:
            if raw.item_id not in frames:
                raise IngestionError(f"no frame assignment for item {raw.item_id!r}")
            raw = RawRecord(
                item_id=raw.item_id,
                viewcount_d1=raw.viewcount_d1,
                comments_d2=raw.comments_d2,
                likes=raw.likes,
                dislikes=raw.dislikes,
                category=raw.category,
                frame=frames[raw.item_id],
            )
        rec = featurize(raw, config)
        if frames is not None:
            problem = 1 if (problem_one_categories and raw.category in problem_one_categories) else 2
            rec = ChoiceRecord(x=rec.x, a=rec.a, frame=rec.frame, problem=problem,
                               item_id=rec.item_id)
        out.append(rec)
    return out


def dump_dataset_json(records, path, config: FeaturizeConfig | None = None):
    payload = {
        "schema": "bayesrp-dataset-v1",
        "featurize_config": asdict(config) if config else None,
        "records": [
            {"item_id": r.item_id, "x": r.x, "a": r.a, "frame": r.frame, "problem": r.problem}
            for r in records
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_dataset_json(path) -> list[ChoiceRecord]:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != "bayesrp-dataset-v1":
        raise IngestionError(f"{path}: not a canonical dataset file")
    return [
        ChoiceRecord(x=r["x"], a=r["a"], frame=r["frame"], problem=r["problem"],
                     item_id=r.get("item_id", ""))
        for r in payload["records"]
    ]


def segments_of(records) -> list[tuple[int, int]]:
    """Distinct segments in first-appearance-stable sorted order."""
    return sorted({r.segment for r in records})
