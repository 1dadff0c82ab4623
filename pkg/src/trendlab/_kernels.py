"""Compiled inner loops shared by the indicator, strategy and backtest modules.

All kernels release the GIL so grid cells can be evaluated from a thread pool.
"""
import numpy as np
from numba import njit

SMA_RESYNC = 4096


@njit(cache=True, nogil=True)
def rolling_mean(x, window, resync):
    n = x.size
    out = np.full(n, np.nan)
    s = 0.0
    for i in range(window):
        s += x[i]
    out[window - 1] = s / window
    for i in range(window, n):
        lo = i - window + 1
        if lo % resync == 0:
            # recompute from scratch to bound accumulated rounding
            s = 0.0
            for j in range(lo, i + 1):
                s += x[j]
        else:
            s += x[i] - x[i - window]
        out[i] = s / window
    return out


@njit(cache=True, nogil=True)
def exp_mean(x, window):
    alpha = 2.0 / (window + 1.0)
    out = np.empty(x.size)
    out[0] = x[0]
    for i in range(1, x.size):
        out[i] = alpha * x[i] + (1.0 - alpha) * out[i - 1]
    return out


@njit(cache=True, nogil=True)
def crossover(short, long, start, entry_on_start, rtol):
    n = short.size
    out = np.zeros(n, dtype=np.int8)
    state = 0
    for i in range(start, n):
        d = short[i] - long[i]
        tol = rtol * abs(long[i])
        if d > tol:
            cur = 1
        elif d < -tol:
            cur = -1
        else:
            continue
        if cur != state:
            if state != 0 or entry_on_start:
                out[i] = cur
            state = cur
    return out


@njit(cache=True, nogil=True)
def simulate(closes, signals, cash0):
    n = closes.size
    equity = np.empty(n)
    t_index = np.empty(n, dtype=np.int64)
    t_side = np.empty(n, dtype=np.int8)
    t_price = np.empty(n)
    t_units = np.empty(n)
    k = 0
    cash = cash0
    units = 0.0
    long = False
    in_market = 0
    for i in range(n):
        s = signals[i]
        p = closes[i]
        if s == 1 and not long:
            units = cash / p
            cash = 0.0
            long = True
            t_index[k] = i
            t_side[k] = 1
            t_price[k] = p
            t_units[k] = units
            k += 1
        elif s == -1 and long:
            cash = units * p
            t_index[k] = i
            t_side[k] = -1
            t_price[k] = p
            t_units[k] = units
            k += 1
            units = 0.0
            long = False
        if long:
            equity[i] = units * p
            in_market += 1
        else:
            equity[i] = cash
    return equity, t_index[:k], t_side[:k], t_price[:k], t_units[:k], in_market
