"""
answercheck - semantic comparison of single-variable answer expressions.

A symbolic normalizer decides the easy cases; a randomized pointwise check on
the floating-point grid decides the rest and reports a bound on the chance
that its verdict is wrong.
"""
__version__ = "1.0.0"
