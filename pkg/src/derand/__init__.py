"""derand: deterministic derandomization toolkit.

Small probability spaces that fool GF(2) Fourier characters and neighborhoods,
conditional-expectation optimizers for sums of juntas driven by
partial-expectation oracles, a deterministic Moser-Tardos solver, and
end-to-end coloring applications, all with brute-force verifiers at desk scale.
"""

from derand.gf2 import BitVec, FieldElem, MonomialIndex, rank_gf2, field_mul, eval_monomial

__version__ = "0.1.0"

__all__ = [
    "BitVec",
    "FieldElem",
    "MonomialIndex",
    "rank_gf2",
    "field_mul",
    "eval_monomial",
    "__version__",
]
