# src/utils/run_log.py
import os

from src.helpers import append_csv

LOG_COLUMNS = ("iter", "cost", "psi", "step", "residual")


class IterationLog:
    """
    Optimizer sink: one CSV row per accepted iteration, plus a status line
    every `every` iterations. An existing log at `path` is replaced.
    """

    def __init__(self, path, every=10, quiet=False):
        self.path = path
        self.every = max(1, int(every))
        self.quiet = quiet
        self.records = 0
        if os.path.exists(path):
            os.remove(path)

    def __call__(self, record):
        append_csv({k: record[k] for k in LOG_COLUMNS}, self.path)
        self.records += 1
        if not self.quiet and record["iter"] % self.every == 0:
            print(
                f"⚙️ iter {record['iter']:4d} | cost {record['cost']:.8e} | "
                f"Psi {record['psi']:.6f} | step {record['step']:.3e}"
            )


def print_sink(every=10):
    """Status lines only, for runs that write no files."""
    def sink(record):
        if record["iter"] % every == 0:
            print(f"⚙️ iter {record['iter']:4d} | cost {record['cost']:.8e} | Psi {record['psi']:.6f}")
    return sink
