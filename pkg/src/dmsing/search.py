"""One-dimensional bracketed searches."""
import math

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_min(f, a, b, tol=1e-10, max_iter=500):
    """Minimise a unimodal ``f`` on [a, b] by golden-section search.

    Returns ``(x, f(x), iterations)``; stops once the bracket is shorter
    than ``tol``.
    """
    if b < a:
        a, b = b, a
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, it


def golden_section_max(f, a, b, tol=1e-10, max_iter=500):
    x, fx, it = golden_section_min(lambda t: -f(t), a, b, tol, max_iter)
    return x, -fx, it
