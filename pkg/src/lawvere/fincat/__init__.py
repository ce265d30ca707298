"""Finite categories, presheaves, limits, ends and Kan extensions."""

from .core import (
    CategoryError,
    FinCategory,
    FinFunctor,
    Isomorphism,
    NatTransformation,
    Presheaf,
    Violation,
    check_category,
    constant_presheaf,
    coproduct_presheaf,
    discrete_category,
    empty_presheaf,
    function_category,
    functor_to_terminal,
    identity_functor,
    identity_nat,
    poset_category,
    product_category,
    product_presheaf,
    representable,
    restrict,
    terminal_category,
    terminal_presheaf,
    witness_iso,
)
from .homs import count_homs, find_iso, homs, iter_homs
from .kan import KanResult, lan, ran
from .limits import (
    Bifunctor,
    Colimit,
    Diagram,
    Limit,
    colimit,
    coend_of,
    end_of,
    limit,
    presheaf_colimit,
    presheaf_limit,
    twisted_arrow,
    twisted_codiagram,
    twisted_diagram,
)
