"""Timing of the incremental checker against the elimination baseline."""

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .circuits import benchmark_suite
from .equivalence import check_states, check_states_k, check_states_naive

DEFAULT_NAIVE_MAX_N = 16


@dataclass
class BenchRow:
    name: str
    n: int
    verdict: bool
    fast_s: float
    naive_s: Optional[float]
    naive_verdict: Optional[bool]
    expected: Optional[bool]

    @property
    def speedup(self):
        if self.naive_s is None or self.fast_s == 0:
            return None
        return self.naive_s / self.fast_s

    @property
    def agree(self):
        return self.naive_verdict is None or self.naive_verdict == self.verdict


def _fast(case):
    if case.k is None:
        return check_states(case.machine, case.rho_s, case.rho_t)
    return check_states_k(case.machine, case.rho_s, case.rho_t, case.k)


def _naive(case):
    return check_states_naive(case.machine, case.rho_s, case.rho_t, k=case.k)


def time_call(fn, case, repeat):
    """Median wall time of ``fn(case)`` over ``repeat`` runs, with the last result."""
    times = []
    result = None
    for _ in range(max(1, repeat)):
        t0 = time.perf_counter()
        result = fn(case)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def run_case(case, repeat=3, naive_max_n=DEFAULT_NAIVE_MAX_N):
    fast_s, fast = time_call(_fast, case, repeat)
    naive_s = naive_verdict = None
    if case.n <= naive_max_n:
        naive_s, naive = time_call(_naive, case, repeat)
        naive_verdict = naive.equivalent
    return BenchRow(case.name, case.n, fast.equivalent, fast_s, naive_s, naive_verdict, case.expected)


def _run(args):
    return run_case(*args)


def run_bench(name_filter=None, repeat=3, naive_max_n=DEFAULT_NAIVE_MAX_N, workers=1):
    """Run the benchmark suite and return one :class:`BenchRow` per case."""
    cases = [c for c in benchmark_suite() if not name_filter or name_filter in c.name]
    jobs = [(c, repeat, naive_max_n) for c in cases]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run, jobs))
    return [_run(j) for j in jobs]


def format_table(rows):
    head = f"{'test':<20} {'n':>3} {'verdict':<14} {'naive s':>10} {'fast s':>10} {'speedup':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        verdict = "equivalent" if r.verdict else "not equiv."
        if not r.agree:
            verdict += " !"
        naive = "-" if r.naive_s is None else f"{r.naive_s:.4f}"
        speed = "-" if r.speedup is None else f"{r.speedup:.1f}x"
        lines.append(f"{r.name:<20} {r.n:>3} {verdict:<14} {naive:>10} {r.fast_s:>10.4f} {speed:>8}")
    return "\n".join(lines)


def format_csv(rows):
    lines = ["test,n,verdict,naive_s,fast_s,speedup"]
    for r in rows:
        lines.append(",".join([
            r.name, str(r.n), "equivalent" if r.verdict else "not_equivalent",
            "" if r.naive_s is None else f"{r.naive_s:.6f}",
            f"{r.fast_s:.6f}",
            "" if r.speedup is None else f"{r.speedup:.3f}",
        ]))
    return "\n".join(lines)
