"""Averaging identities on heat balls and the two-sided estimate.

A pole-weighted caloric field equals its weighted ball average around any
pole-axis center, at every scale: the constant field pins the normalization,
and quotients of caloric polynomials by the pole weight give nontrivial
closed-form fixtures.  The scale derivative of the underlying functional is a
bulk integral of the weighted heat operator, checked here against a
difference quotient, and the bottom-slice average of a nonnegative weighted
caloric field is controlled by its infimum over the inner ball, uniformly in
the scale.
"""

import numpy as np

import parcap as pc
from parcap.averaging import harnack_check, mean_value, phi, phi_prime, subparabolic_gap
from parcap.geometry import HeatBall

lo = pc.lower_context(1, gamma=[1.0])
ball = HeatBall(lo, -0.25, 1.0)

# mean value: constant field and a weighted caloric quotient
print("mean of constant field      :", mean_value(lambda x, t: 1.0, ball.center, 1.0, lo))

def u_quad(x, t):
    v = float(np.sum((x - lo.gamma) ** 2)) + 2.0 * t
    return v / pc.h_tilde(pc.point(x, t), lo)

center_val = u_quad(ball.center.x, ball.center.t)
got = mean_value(u_quad, ball.center, 1.0, lo)
print("weighted caloric quotient   :", got, "center value:", center_val)

# the scale functional is flat in the scale exactly for such fields
a = phi(u_quad, 0.5, ball.center, lo).value
b = phi(u_quad, 1.0, ball.center, lo).value
print("scale functional at c=.5, 1 :", a, b)

# derivative identity vs a difference quotient, for a non-caloric field
u_t = lambda x, t: t
pp = phi_prime(u_t, 1.0, ball.center, lo, hu_operator=lambda x, t: 1.0).value
h = 0.02
fd = (phi(u_t, 1.0 + h, ball.center, lo).value - phi(u_t, 1.0 - h, ball.center, lo).value) / (2 * h)
print("\nscale derivative            :", pp)
print("difference quotient         :", fd)

# gap inequality for a strictly sub-caloric weighted field
gamma0 = pc.lower_context(1)
ball0 = HeatBall(gamma0, -0.25, 1.0)
u_sub = lambda x, t: -(t + 0.25)
print("\ngap inequality (lhs >= C * rhs):")
for c in (0.25, 0.5, 1.0):
    res = subparabolic_gap(u_sub, c, ball0.center, gamma0, hu_operator=lambda x, t: -1.0)
    print(f"  c={c:<5} lhs={res.lhs:.5f} rhs={res.rhs:.5f} fitted constant={res.fitted_constant:.4f}")

# two-sided estimate: slice average against the inner-ball infimum
big = HeatBall(gamma0, -0.25, 4.0)
src = pc.point([0.3], big.time_window[0] - 1.0)
u_src = lambda x, t: pc.kernel_ratio(pc.point(x, t), src, gamma0)
print("\ntwo-sided estimate ratios over scales:")
for c in (0.5, 1.0, 2.0):
    res = harnack_check(u_src, ball0.center, c, gamma0)
    print(f"  c={c:<4} average={res.average:.5f} infimum={res.infimum:.5f} ratio={res.ratio:.3f}")
