import math

# All logarithms are natural. The constant c is only consistent with the
# 2^{-s} <-> n^{-c log 2} bookkeeping under the natural log.
LOG_BASE = "natural"
C_CONST = 1.0 / (100.0 * math.log(2.0))
A_CONST = 1e-4 * C_CONST


def log(x):
    return math.log(x)


def check_log_base(log_base):
    if log_base != LOG_BASE:
        raise ValueError(f"unsupported log base {log_base!r}; only 'natural' is supported")
