"""Spectral approximation of symmetric pcf fractals by weighted graphs and metric graphs."""
from ._kernels import BACKEND
from .errors import FracspecError
from .graph import (GraphStats, WeightedGraph, apply_laplacian, build_graph, energy, laplacian,
                    spectrum, stats)
from .manifold import (ManifoldPlan, eps_threshold, mfd_delta, mfd_frac_delta, mfd_scaling,
                       mfd_table)
from .metric import (FemDiscretization, MetricGraph, ScalingPlan, assign_lengths, fem_discretize,
                     harmonic_partition, kirchhoff_spectrum, subdivide, weighted_star_lambda2)
from .pcf import (LevelGraph, PcfSystem, harmonic_extension, level_graph, preset,
                  verify_compatibility)
from .que import (IdentificationPair, QueReport, build_identification, compose_delta,
                  delta_general, delta_metric_graph, form_to_op, measure_quasi_unitarity,
                  spectral_compare)

__version__ = "0.1.0"
