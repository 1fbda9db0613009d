"""Closed-form scores of an ideal interpolating predictor.

A predictor that perfectly fits convex input/label mixtures is linear
between training points, so the integral of f_y along a segment to a
neighbor is exactly 1 when the labels match and 1/2 when they don't,
making the full score 1/2 + matches/(2L). This lets the clean/noisy
separation question be settled by exhaustive enumeration over
neighbor-label count vectors.
"""

from fractions import Fraction

from innscore import oracle

print("per-segment values:", oracle.oracle_segment_value(3, 3), oracle.oracle_segment_value(3, 7))
print("score with 4 of 10 matches:", oracle.oracle_inn(1, [1, 1, 1, 1, 0, 0, 2, 2, 3, 3]))

print("\ncondition: neighbor labels have a strict unique plurality at the true class")
for K in (2, 3, 4, 5, 6):
    rep = oracle.verify_separation(K, 10, "majority")
    print(f"  K={K} L=10: min clean {float(rep.min_clean):.3f}, "
          f"max noisy {float(rep.max_noisy):.3f}, gap {float(rep.gap):+.3f}, "
          f"separation {'holds' if rep.separation_holds else 'FAILS'}")
print("  -> only K=2 separates under the bare plurality condition;")
print("     the witnessing count vectors:")
rep3 = oracle.verify_separation(3, 10, "majority")
print(f"     clean minimum at {rep3.witness_min_clean}")
print(f"     noisy maximum at {rep3.witness_max_noisy}")

print("\ncondition: all L neighbors carry the true label")
for K in (2, 4, 6):
    rep = oracle.verify_separation(K, 12, "pure")
    assert rep.gap == Fraction(1, 2)
    print(f"  K={K} L=12: gap exactly 1/2")

print("\ncondition: at least L/K neighbors carry the true label")
rep = oracle.verify_separation(4, 12, "count")
print(f"  K=4 L=12: min clean {float(rep.min_clean):.3f}, max noisy {float(rep.max_noisy):.3f}, "
      f"separation {'holds' if rep.separation_holds else 'FAILS'}")

print("\nthe often-quoted uniform gap of 1/(2K) under the plurality condition:")
for K in (2, 3, 4):
    rep = oracle.verify_separation(K, 10, "majority")
    print(f"  K={K}: gap {float(rep.gap):+.3f} vs claimed {float(rep.claimed_gap):.3f} "
          f"-> {'meets' if rep.gap_meets_claim else 'does not meet'} the claim")
