"""
Slot calculus for the iterated tractor operator
===============================================

Iterate the slot rules from the splitting operator, compare with the closed
form, and read off Q, G and L at the critical weight.
"""

from fractions import Fraction

from detourlab import tractor_sym as ts

n, k = 6, 1

# the splitting operator: Z = (n - 2k)/k, X = delta
print(ts.apply_M(n, k))

# one step of the recursion
print(ts.iterate_LL(n, k, 1))

# the closed form agrees with the iterate for every p we try
for p in range(1, 5):
    print(p, ts.verify_formula(n, k, p).equal)

# at p = (n - 2k)/2 the Y slot is gone and (Z, X) carry L_k and G_k
f = ts.extract_operator_formulas(n, k)
print("Q =", f.Q)
print("G =", f.G)
print("L =", f.L)
print(f.checks)

# the single factor of L_k for n = 6 shifts by 2/3 J
assert f.L == ts.delta_ * ts.d_ * (ts.delta_ * ts.d_ + ts.J_ * Fraction(2, 3))
