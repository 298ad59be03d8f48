"""Finite-dimensional Wiener chaos calculus: kernels, chaos expansions,
Malliavin matrices, absolute-continuity criteria and distance estimators."""

from .algebra import (ACVerdict, DependenceCrossCheck, DependenceVerdict, SmallBallFit, Verdict,
                      absolute_continuity_verdict, algebraic_dependence, cross_check_dependence,
                      find_annihilator, jacobian_rank, small_ball_exponent, witness_degree_bound)
from .chaos_model import (ChaosElement, ChaosVector, delta_of_D, eval_multiple_integral, evaluate,
                          from_polynomial, ou_generator, sample_moments, to_polynomial)
from .distances import (DistanceReport, EmpiricalLaw, estimate_fm, estimate_tv, fortet_mourier_lp,
                        inequality_probe, tv_fm_gamma_bound)
from .errors import ChaosCalcError
from .harness import (RunResult, scenario_pairwise_independent, scenario_peccati_tudor,
                      scenario_second_chaos_pair, verify_identities)
from .malliavin import (MalliavinGradient, cauchy_binet_det, cov_of_squares, covariance_matrix,
                        det_gamma, expected_det_gamma_order1, expected_det_gamma_order2,
                        expected_det_gamma_mc, expected_det_gamma_second_chaos, gamma_at,
                        gamma_limit_matrix, gradient, truncated_gamma_det)
from .polynomial import Polynomial
from .rng import MCEstimate, Rng
from .tensor_core import (RawTensor, SymmetricKernel, contract, contract_sym, hermite, inner,
                          symmetrize)

__version__ = "0.1.0"
