"""Dispatch strategies for distributing one long convolution over workers.

Three strategies share the same engine interface:

* uncoded: both operands are chunked and every chunk pair is assigned to
  exactly one worker, so every worker must answer.
* traditional: one operand is erasure-coded up front with a fixed number
  of redundant rows, so the fastest subset of workers suffices.
* dynamic: coded pieces are cut on demand from a stack and paced per
  worker by an online estimate of its turnaround, so redundancy adapts
  to observed behaviour instead of being fixed in advance.

Each strategy returns a StrategyOutcome; completion_time is the arrival
time of the last needed result, or the horizon when the episode gave up.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .coding import (
    CodedPiece,
    DecodeFailure,
    as_vector,
    convolve_fft,
    make_encoding_matrix,
    mds_decode,
    mds_encode,
    overlap_add,
    partition,
)

# Stack budget headroom for the dynamic strategy: enough fresh rows that
# pacing alone never starves the stack before the horizon does.
_MIN_EXTRA_ROWS = 64
_EXTRA_ROWS_PER_WORKER = 8
# Default piece-count target when no piece length is configured; 16 pieces
# keeps the real-valued decode well inside its float64 conditioning range.
_DEFAULT_PIECE_TARGET = 16


@dataclass
class StrategyOutcome:
    success: bool
    completion_time: float
    pieces_dispatched: int
    redundancy_used: int
    per_worker_results: dict
    params: dict = field(default_factory=dict)
    result: np.ndarray | None = None


def _failed(horizon, dispatched, redundancy, per_worker, params) -> StrategyOutcome:
    # Unfinished episodes are charged the full horizon (inf when uncapped).
    return StrategyOutcome(False, horizon, dispatched, redundancy,
                           dict(per_worker), params, None)


# -- chunk-length selection for the traditional strategy ----------------------


def chunk_score(s: int, n1: int, n2: int, p: int, profiles, coeff: float = 1.0) -> float:
    """Expected wasted-work fraction for chunk length s (more negative is worse).

    Combines the worker-count slack of the (p*s/n2 - n1/s + 1) grid term
    with each worker's chance of finishing a chunk of work
    2*coeff*s*log2(2s) in unit time under its shifted-exponential profile.
    """
    if s < 1:
        raise ValueError("chunk length must be >= 1")
    slack = p * s / n2 - n1 / s + 1.0
    work = 2.0 * coeff * s * math.log2(2.0 * s)
    total = 0.0
    for prof in profiles:
        total += slack * (prof.mu ** prof.alpha) / (p * work ** prof.alpha)
    return -total


def select_s(n1: int, n2: int, p: int, profiles, coeff: float = 1.0) -> int:
    """Chunk length maximizing |chunk_score| over the feasible range.

    Feasible lengths run from ceil(sqrt(n1*n2/p)) (enough chunk pairs for
    every worker) up to min(n1, n2); ties pick the smallest length.
    """
    if p < 1:
        raise ValueError("need at least one worker")
    hi = min(n1, n2)
    lo = min(hi, math.ceil(math.sqrt(n1 * n2 / p)))
    best_s, best_score = lo, -1.0
    for s in range(lo, hi + 1):
        score = abs(chunk_score(s, n1, n2, p, profiles, coeff))
        if score > best_score:
            best_s, best_score = s, score
    return best_s


# -- uncoded -------------------------------------------------------------------


def run_uncoded(a, x, eng, horizon: float = math.inf) -> StrategyOutcome:
    """Chunk both operands and assign every chunk pair to one worker.

    No redundancy: the episode succeeds only if every pair comes back.
    """
    a = as_vector(a)
    x = as_vector(x)
    p = eng.n_workers
    s = max(1, round(math.sqrt(len(a) * len(x) / p)))
    ap = partition(a, s)
    xp = partition(x, s)
    pairs = [(i, j) for i in range(ap.count) for j in range(xp.count)]
    params = {"s": s, "rows": ap.count, "columns": xp.count}
    per_worker = defaultdict(int)
    roster = eng.initial_roster()
    if not roster:
        return _failed(horizon, 0, 0, per_worker, params)
    for k, pair in enumerate(pairs):
        eng.send(roster[k % len(roster)], row=k, n_in=2 * s, n_out=2 * s - 1,
                 load_pair=(s, s), data=pair)

    got = {}
    completion = horizon
    for ev in eng.events(until=horizon):
        if ev.kind != "result_arrives":
            continue
        i, j = ev.data
        got[(i, j)] = convolve_fft(ap.pieces[i], xp.pieces[j])
        per_worker[ev.worker] += 1
        if len(got) == len(pairs):
            completion = ev.time
            break
    if len(got) < len(pairs):
        return _failed(horizon, len(pairs), 0, per_worker, params)

    columns = []
    for j in range(xp.count):
        parts = [got[(i, j)] for i in range(ap.count)]
        columns.append(overlap_add(parts, s, len(a) + s - 1))
    result = overlap_add(columns, s, len(a) + len(x) - 1)
    return StrategyOutcome(True, completion, len(pairs), 0, dict(per_worker),
                           params, result)


# -- traditional coded ---------------------------------------------------------


def run_traditional_coded(a, x, eng, horizon: float = math.inf,
                          s: int | None = None) -> StrategyOutcome:
    """Erasure-code one operand's chunks with fixed up-front redundancy.

    Convolution commutes, so the longer operand is the one that gets
    encoded; with the score-optimal chunk length that leaves a single
    chunk of the short operand and the whole worker budget goes into
    redundant rows of the long one.  Each column of chunk pairs decodes
    independently as soon as enough of its rows are back.
    """
    a = as_vector(a)
    x = as_vector(x)
    n1, n2 = len(a), len(x)
    swapped = False
    if len(x) > len(a):
        a, x = x, a
        swapped = True
    p = eng.n_workers
    if s is None:
        s = select_s(len(a), len(x), p, eng.profiles, eng.compute_coeff)
    ap = partition(a, s)
    xp = partition(x, s)
    m = ap.count
    ncols = xp.count
    rows = max(m, p // ncols)
    matrix = make_encoding_matrix(rows, m)
    params = {"s": s, "pieces": m, "rows": rows, "columns": ncols,
              "swapped": swapped}
    per_worker = defaultdict(int)
    roster = eng.initial_roster()
    if not roster:
        return _failed(horizon, 0, 0, per_worker, params)

    coded_rows: dict[int, np.ndarray] = {}

    def coded_a(i: int) -> np.ndarray:
        if i not in coded_rows:
            coded_rows[i] = mds_encode(ap, matrix, i).values
        return coded_rows[i]

    pairs = [(i, j) for i in range(rows) for j in range(ncols)]
    for k, (i, j) in enumerate(pairs):
        eng.send(roster[k % len(roster)], row=i, n_in=2 * s, n_out=2 * s - 1,
                 load_pair=(s, s), data=(i, j))

    col_results: dict[int, list[CodedPiece]] = defaultdict(list)
    done_cols: dict[int, np.ndarray] = {}
    completion = horizon
    for ev in eng.events(until=horizon):
        if ev.kind != "result_arrives":
            continue
        i, j = ev.data
        per_worker[ev.worker] += 1
        if j in done_cols:
            continue
        value = convolve_fft(coded_a(i), xp.pieces[j])
        col_results[j].append(CodedPiece(i, value))
        if len(col_results[j]) == m:
            try:
                pieces = mds_decode(col_results[j], matrix)
            except DecodeFailure:
                # Numerically unusable system: count the episode as failed
                # rather than aborting the whole experiment.
                return _failed(horizon, len(pairs), 0, per_worker, params)
            done_cols[j] = overlap_add(list(pieces), s, len(a) + s - 1)
            if len(done_cols) == ncols:
                completion = ev.time
                break
    if len(done_cols) < ncols:
        return _failed(horizon, len(pairs), 0, per_worker, params)

    result = overlap_add([done_cols[j] for j in range(ncols)], s, n1 + n2 - 1)
    return StrategyOutcome(True, completion, len(pairs), 0, dict(per_worker),
                           params, result)


# -- dynamic coded --------------------------------------------------------------


class DispatchEstimator:
    """Per-worker turnaround estimate from master-visible timestamps only.

    For each returned piece the worker's compute-finish instant is placed
    inside the observed round trip in proportion to the payload split:
    t_finish = t_recv - rtt * n_out / (n_in + n_out).  The worker's
    accumulated idle time grows only for a dispatch made while it has no
    outstanding piece (with work queued it cannot go idle before the new
    piece lands); the increment is the gap between finishing the previous
    piece and the new piece reaching it, which in master-side terms is
    rtt - (t_recv_prev - t_send_new), clamped at zero.  Each increment is
    booked when that piece's own result returns, so the accumulator never
    runs ahead of t_finish.  The expected per-piece time is then
    (t_finish_last - idle_total) / results, and the dispatch interval is
    the smaller of that and the last whole-service time, falling back to
    the service time when the expectation is not yet meaningful.
    """

    def __init__(self):
        self._stats: dict[int, dict] = {}

    def _entry(self, worker: int) -> dict:
        return self._stats.setdefault(worker, {
            "count": 0, "in_flight": 0, "t_recv": None, "t_finish": 0.0,
            "idle": 0.0, "pending_idle": [], "rtt": 0.0, "service": 0.0,
        })

    def record_send(self, worker: int, t_send: float) -> None:
        st = self._entry(worker)
        increment = 0.0
        if st["in_flight"] == 0 and st["t_recv"] is not None:
            increment = max(0.0, st["rtt"] - (st["t_recv"] - t_send))
        st["pending_idle"].append(increment)
        st["in_flight"] += 1

    def record_result(self, worker: int, t_sent: float, t_recv: float,
                      rtt: float, n_in: int, n_out: int) -> None:
        st = self._entry(worker)
        st["count"] += 1
        st["in_flight"] = max(0, st["in_flight"] - 1)
        if st["pending_idle"]:
            st["idle"] += st["pending_idle"].pop(0)
        share = n_out / (n_in + n_out)
        st["t_finish"] = t_recv - share * rtt
        st["service"] = t_recv - t_sent
        st["rtt"] = rtt
        st["t_recv"] = t_recv

    def results_seen(self, worker: int) -> int:
        return self._entry(worker)["count"]

    def interval(self, worker: int) -> float | None:
        """Estimated send-to-send spacing; None before the first result."""
        st = self._entry(worker)
        if st["count"] == 0:
            return None
        expected = (st["t_finish"] - st["idle"]) / st["count"]
        if expected <= 0.0:
            return st["service"]
        return min(st["service"], expected)


def default_piece_length(n2: int, p: int) -> int:
    """Piece length giving min(2p, 16) pieces; decode stays well conditioned."""
    target = min(2 * p, _DEFAULT_PIECE_TARGET)
    return max(1, math.ceil(n2 / target))


def run_dynamic(a, x, eng, horizon: float = math.inf,
                b: int | None = None) -> StrategyOutcome:
    """Cut coded pieces on demand and pace each worker by its own estimate.

    A stack of encoding-matrix row indices holds the not-yet-dispatched
    pieces; whenever it is about to empty a fresh redundant row is pushed,
    so redundancy grows only as fast as results fail to arrive.  Every
    worker gets one piece up front, then another one per estimated
    turnaround interval, re-checked via wakeups.
    """
    a = as_vector(a)
    x = as_vector(x)
    p = eng.n_workers
    if b is None:
        b = default_piece_length(len(x), p)
    xp = partition(x, b)
    m = xp.count
    budget = m + max(_MIN_EXTRA_ROWS, _EXTRA_ROWS_PER_WORKER * p)
    matrix = make_encoding_matrix(budget, m, budget=budget)
    params = {"b": b, "pieces": m, "budget": budget}
    per_worker = defaultdict(int)

    stack = list(range(m + 1))
    next_row = m + 1
    redundancy = 1
    dispatched = 0
    est = DispatchEstimator()
    t_send_last: dict[int, float] = {}
    live = set(eng.initial_roster())

    def pop_row() -> int | None:
        nonlocal next_row, redundancy
        if len(stack) <= 1 and next_row < budget:
            stack.append(next_row)
            next_row += 1
            redundancy += 1
        return stack.pop() if stack else None

    def dispatch(worker: int) -> bool:
        nonlocal dispatched
        row = pop_row()
        if row is None:
            return False
        coded = mds_encode(xp, matrix, row)
        est.record_send(worker, eng.now)
        t_send_last[worker] = eng.now
        eng.send(worker, row=row, n_in=b, n_out=len(a) + b - 1,
                 load_pair=(len(a), b), data=coded.values)
        dispatched += 1
        return True

    def pace(worker: int) -> None:
        """Send now if the worker's next piece is due, else book a wakeup."""
        if worker not in live:
            return
        interval = est.interval(worker)
        if interval is None:
            return
        due = t_send_last.get(worker, -math.inf) + interval
        if eng.now >= due:
            if dispatch(worker):
                eng.schedule_wakeup(eng.now + interval, worker)
        else:
            eng.schedule_wakeup(due, worker)

    for worker in sorted(live):
        dispatch(worker)

    results: list[CodedPiece] = []
    rows_got = set()
    completion = horizon
    success = False
    for ev in eng.events(until=horizon):
        if ev.kind == "worker_leaves":
            live.discard(ev.worker)
        elif ev.kind == "worker_joins":
            live.add(ev.worker)
            dispatch(ev.worker)
        elif ev.kind == "wakeup":
            pace(ev.worker)
        elif ev.kind == "result_arrives":
            est.record_result(ev.worker, ev.t_sent, ev.time, ev.rtt,
                              ev.n_in, ev.n_out)
            per_worker[ev.worker] += 1
            if ev.row not in rows_got:
                rows_got.add(ev.row)
                results.append(CodedPiece(ev.row, convolve_fft(a, ev.data)))
                if len(results) == m:
                    completion = ev.time
                    success = True
                    break
            pace(ev.worker)
    if not success:
        return _failed(horizon, dispatched, redundancy, per_worker, params)

    try:
        pieces = mds_decode(results, matrix)
    except DecodeFailure:
        return _failed(horizon, dispatched, redundancy, per_worker, params)
    result = overlap_add(list(pieces), b, len(a) + len(x) - 1)
    return StrategyOutcome(True, completion, dispatched, redundancy,
                           dict(per_worker), params, result)


STRATEGIES = {
    "uncoded": run_uncoded,
    "traditional": run_traditional_coded,
    "dynamic": run_dynamic,
}
