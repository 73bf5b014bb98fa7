"""First-order interaction prediction and idle-time prefetching.

The predictor weighs each signal by recency-decayed use frequency
(weight = sum of alpha^(now - tick) over that signal's history; uniform over
bound signals while the history is empty) and spreads a signal's mass
uniformly over its candidate next values. Sliders propose current +- k*step
neighbors, selects and radios every other option; free-text regex inputs
propose nothing (unbounded value space).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .specmodel import RadioBind, SelectBind, SignalDef, SliderBind, TextRegexBind

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Prediction:
    signal: str
    value: object
    probability: float


@dataclass
class PrefetchTask:
    signal: str
    value: object
    priority: float  # the prediction's probability, in (0, 1]

    def __post_init__(self):
        if not (0 < self.priority <= 1):
            raise ValueError("priority must be in (0, 1]")


@dataclass
class InteractionPredictor:
    signals: list[SignalDef]
    alpha: float = 0.5
    neighbors: int = 2  # slider candidates: current +- k*step, k in 1..neighbors
    top_k: int = 8
    history: list[tuple[str, object, int]] = field(default_factory=list)
    current: dict = field(default_factory=dict)
    _tick: int = 0

    def __post_init__(self):
        for s in self.signals:
            self.current.setdefault(s.name, s.value)

    def record(self, signal: str, value) -> None:
        self._tick += 1
        self.history.append((signal, value, self._tick))
        self.current[signal] = value

    def candidates(self, s: SignalDef) -> list:
        cur = self.current.get(s.name, s.value)
        if isinstance(s.bind, SliderBind):
            out = []
            for k in range(1, self.neighbors + 1):
                for direction in (-1.0, 1.0):
                    v = float(cur) + direction * k * s.bind.step
                    if s.bind.min <= v <= s.bind.max and v != cur and v not in out:
                        out.append(v)
            return sorted(out)
        if isinstance(s.bind, (SelectBind, RadioBind)):
            return [o for o in s.bind.options if o != cur]
        # TextRegexBind and unbound signals propose nothing
        return []

    def predict(self) -> list[Prediction]:
        now = self._tick + 1
        eligible = []
        for s in self.signals:
            if s.bind is None or isinstance(s.bind, TextRegexBind):
                continue
            cands = self.candidates(s)
            if cands:
                eligible.append((s, cands))
        if not eligible:
            return []
        weights = {}
        for s, _c in eligible:
            weights[s.name] = sum(self.alpha ** (now - tick) for sig, _v, tick in self.history if sig == s.name)
        total = sum(weights.values())
        if total == 0:
            weights = {s.name: 1.0 for s, _c in eligible}
            total = float(len(eligible))
        out: list[Prediction] = []
        for s, cands in eligible:
            mass = weights[s.name] / total
            if mass == 0:
                continue
            per = mass / len(cands)
            for v in cands:
                out.append(Prediction(s.name, v, per))
        out.sort(key=lambda p: (-p.probability, p.signal, str(p.value)))
        out = out[: self.top_k]
        norm = sum(p.probability for p in out)
        return [Prediction(p.signal, p.value, p.probability / norm) for p in out]


class Prefetcher:
    """Executes prefetch tasks in priority order while a session is idle.

    ``fetch`` is the session's loader for one (signal, value); a user request
    preempts the queue at task boundaries via ``interrupt``. Driver failures
    are logged and skipped; prefetching must never fail a session.
    """

    def __init__(self, fetch):
        self._fetch = fetch
        self.queue: list[PrefetchTask] = []
        self._interrupted = False
        self.completed: list[tuple[str, object]] = []

    def plan(self, predictions: list[Prediction]) -> None:
        self.queue = [PrefetchTask(p.signal, p.value, p.probability) for p in predictions]
        self._interrupted = False

    def interrupt(self) -> None:
        """Drop queued tasks; the in-flight one (if any) completes."""
        self._interrupted = True

    def run_pending(self, max_tasks: int | None = None) -> int:
        done = 0
        while self.queue and not self._interrupted:
            if max_tasks is not None and done >= max_tasks:
                break
            task = self.queue.pop(0)
            try:
                self._fetch(task.signal, task.value)
                self.completed.append((task.signal, task.value))
            except Exception:  # noqa: BLE001 - prefetch is best-effort
                log.warning("prefetch of %s=%r failed", task.signal, task.value, exc_info=True)
            done += 1
        if self._interrupted:
            self.queue.clear()
        return done
