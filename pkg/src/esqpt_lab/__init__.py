"""Exact diagonalization and semiclassics for excited-state quantum phase
transitions in two-level bosonic and fermionic pairing models."""

from .analysis import (AsymptoticFit, Cluster, ScalingRecord, ScanTable,
                       critical_index, degeneracy_scan, fit_asymptotics,
                       gap_at_offset, gap_profile, order_parameter,
                       order_parameter_fh, scaling_exponent, scaling_study,
                       spectrum_scan, wavefunction_map, xi_derivatives)
from .backend import backend_name, set_backend
from .eigen import (SpectrumBlock, eig_all, eig_indices, eig_window,
                    eigenvector, solve_block, sturm_count)
from .errors import (ConvergenceError, DivergenceError, DomainError,
                     EmptyBlockError, EsqptError, FitError, NoEsqptError,
                     OutOfSpectrumError, WindowOverflowError)
from .models import (BlockBasis, ModelSpec, TridiagonalOperator,
                     build_quasispin_hamiltonian,
                     build_transitional_hamiltonian,
                     build_vibron_fock_hamiltonian, enumerate_block,
                     multipole_pairing_shift, pair_annihilation_amplitude,
                     quasispin_lowering_amplitude)
from .semiclassics import (ClassicalSystem, action, action_energy_derivative,
                           barrier_curvature, classical_density,
                           esqpt_energy_estimate, esqpt_gap_estimate,
                           esqpt_gap_log_asymptote, lambert_w,
                           potential_terms, semiclassical_gap,
                           turning_points, wkb_contour, wkb_level)

from .fock import verify_operator_identity

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
