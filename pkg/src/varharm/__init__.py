"""Desk-scale laboratory for rho-variation operators of approximate
identities on weighted spaces: operators, norms, sparse domination, and a
batch experiment harness."""

from .atoms import (Atom, AtomConstructionError, AtomReport, Ball,
                    FarFieldReport, SgnAtomResult, SupportError,
                    far_field_maximal_bound_check, make_atom, sgn_atom,
                    validate_atom)
from .grid import (Domain1D, GridFunction, KernelSpec, ResolutionError,
                   ScaleFamily, convolve, convolve_family, eval_kernel_dilated,
                   hardy_norm, lp_norm, smooth_maximal, weak_l1_norm)
from .harness import (ExperimentConfig, RatioTable, battery_generate,
                      parse_config, run_experiment)
from .lattice import (AlignmentError, Cube, DyadicLattice, cube_domain_ranges,
                      default_lattices, hl_maximal, lattices_for_domain,
                      m_half, max_aligned_depth)
from .oscillation import (EquivalenceReport, TailNormReport,
                          WitnessPlacementError, WitnessResult, bmo_norm,
                          bmo_nu_equivalence, bmo_nu_norm, cal_bmo_omega_norm,
                          is_median, local_mean_oscillation, median,
                          oscillation_witness)
from .sparse import (DominationReport, SparseConstructionError, SparseFamily,
                     SparseReport,
                     build_sparse_family, domination_check, sparse_commutator,
                     sparse_commutator_star, sparse_operator, validate_sparse)
from .variation import (VariationProfile, commutator_family,
                        commutator_family_direct, commutator_variation,
                        grand_maximal_variation, kernel_difference_variation,
                        seq_variation_bruteforce, seq_variation_dp,
                        variation_operator)
from .weights import (Weight, WeightConstants, a1_constant, ainf_constant,
                      ap_constant, bloom_weight, compute_constants,
                      critical_index_estimate, power_weight,
                      truncated_tail_integral)

__version__ = "0.1.0"
