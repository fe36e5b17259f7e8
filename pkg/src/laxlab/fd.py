"""Central finite differences with one Richardson extrapolation.

Used everywhere a derivative of an exactly-evaluable (or quadrature-noise
limited) scalar function is needed: tau log-derivatives, boundary
operators, residual checkers.
"""

import numpy as np

_STENCILS = {
    1: {1.0: 0.5, -1.0: -0.5},
    2: {1.0: 1.0, 0.0: -2.0, -1.0: 1.0},
    3: {2.0: 0.5, 1.0: -1.0, -1.0: 1.0, -2.0: -0.5},
    4: {2.0: 1.0, 1.0: -4.0, 0.0: 6.0, -1.0: -4.0, -2.0: 1.0},
}


def central_diff(g, order, h, richardson=True, levels=1):
    """Order-th derivative of g at 0 via central differences.

    The plain stencil has O(h^2) error; each Richardson level (halving h
    and eliminating the leading error term) gains two orders.
    """

    def stencil(step):
        total = 0.0
        for offset, coeff in _STENCILS[order].items():
            total += coeff * g(offset * step)
        return total / step ** order

    if not richardson:
        levels = 0
    row = [stencil(h / 2.0 ** i) for i in range(levels + 1)]
    for j in range(1, levels + 1):
        factor = 4.0 ** j
        row = [
            (factor * row[i + 1] - row[i]) / (factor - 1.0)
            for i in range(len(row) - 1)
        ]
    return row[0]


def mixed_partial(f, x0, orders, h=1e-2, richardson=True, levels=1):
    """Mixed partial derivative of f: R^n -> R at x0.

    ``orders`` maps axis index -> derivative order; the total order of all
    axes must stay <= 4 for the stencils to make sense.  Evaluations are
    memoized on the integer stencil offsets, so shared points are reused.
    """
    x0 = np.asarray(x0, dtype=float)
    axes = sorted(k for k, v in orders.items() if v > 0)
    cache = {}

    def call(shift):
        key = tuple(sorted(shift.items()))
        if key not in cache:
            x = x0.copy()
            for axis, delta in shift.items():
                x[axis] += delta
            cache[key] = f(x)
        return cache[key]

    def recurse(remaining, shift):
        if not remaining:
            return call(shift)
        axis = remaining[0]
        rest = remaining[1:]

        def g(delta):
            sub = dict(shift)
            sub[axis] = sub.get(axis, 0.0) + delta
            return recurse(rest, sub)

        return central_diff(
            g, orders[axis], h, richardson=richardson, levels=levels
        )

    return recurse(axes, {})
