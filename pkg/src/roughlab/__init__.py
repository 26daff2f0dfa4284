"""Schauder decompositions along refining partitions, p-th variation and roughness diagnostics."""
from .partition import (PartitionCertificate, PartitionError, PartitionSequence, certify,
                        check_balanced, check_complete_refining, check_finitely_refining,
                        check_refining, estimate_convergent_ratio, from_levels, make_badic,
                        make_dyadic, make_random_refining)
from .schauder import (SampledPath, SchauderCoefficients, ShapeError, coefficient, decompose,
                       haar_eval, schauder_eval, synthesize)
from .variation import (dyadic_even_p, dyadic_quadratic, eta_seq, pth_variation,
                        variation_index_estimate, variation_norm, xi_seq)
from .ciesielski import (NormBundle, alpha_sup_norm, discontinuity_probe, forward_bound_check,
                         p_norm, xp_bound_check)

__version__ = "0.1.0"
