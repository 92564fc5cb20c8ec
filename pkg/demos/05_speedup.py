"""Incremental span tracking against rebuilding the elimination each step."""

from qmealy.bench import format_table, run_bench

print(format_table(run_bench("gen_n", repeat=1, naive_max_n=8)))
