"""Quadrature rules in barycentric form; weights sum to one."""
import numpy as np

# Dunavant's 6-point rule, exact for polynomials of total degree 4.
_A1 = 0.445948490915964886318329253883
_W1 = 0.223381589678011465944760527945
_A2 = 0.091576213509770743459571463402
_W2 = 0.109951743655321867388572805388


def _orbit(a):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


TRI_POINTS = np.array(_orbit(_A1) + _orbit(_A2))
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)
TRI_DEGREE = 4

# 3-point Gauss-Legendre on [0, 1], exact to degree 5.
_g = np.sqrt(3.0 / 5.0)
LINE_POINTS = 0.5 * (1.0 + np.array([-_g, 0.0, _g]))
LINE_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0
