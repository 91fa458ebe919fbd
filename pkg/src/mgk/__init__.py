"""Exact-rational workbench for finite stochastic coalgebras.

Finite measurable spaces, the probability/powerset/upper-closed monads,
coalgebra morphisms and bisimulations, a probabilistic modal-logic model
checker, and a game-logic evaluator over stochastic effectivity
functions, with brute-force oracles backing every derived shortcut.
"""

from .space import (EquivRelation, FinMeasurableSpace, InputError, MeasurableMap,
                    PreconditionError, check_measurable, derive_sigma, factor,
                    kernel_of, pi_lambda_closure, sigma_close)
from .prob import (BoundedFunction, FinMeasure, LinPred, MarkovKernel, beta,
                   dirac, image_measure, integral_transport, integrate,
                   kleisli_compose, lift_kernel)
from .monad import (DISCRETE_PROB, INSTANCES, POWERSET, UPPER_CLOSED,
                    KleisliInstance, UpperClosedFamily, check_monad_laws,
                    functor_action, kleisli_compose_generic, lift_discrete_prob,
                    lift_powerset, lift_upper)
from .coalgebra import (Coalgebra, SpanLeg, StochRelationPair, check_bisimulation,
                        check_congruence, check_morphism, check_stochastic_span,
                        check_subsystem, mediator_structure, product_mediator)
from .logic import (KripkeModel, behavioral_witness, check_smallness,
                    equivalence_partition, factor_model, format_formula,
                    logically_equivalent, parse_formula, validity_set)
from .effectivity import (CharacteristicRelation, EffectivityFunction, Portfolio,
                          QLinFamily, char_rel_of, check_satisfy_implement,
                          eff_from_kernel, eff_from_transition, kernel_from_eff,
                          measure_from_char, t_measurability_report,
                          validate_char_rel)
from .intervals import QInterval
from .game import (GameModel, ThresholdFunction, eval_game_formula, format_game,
                   normalize, oracle_eval, parse_game, parse_game_formula,
                   qualitative_effect, threshold_eval)

__version__ = "0.1.0"
