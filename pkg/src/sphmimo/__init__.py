"""Acoustic MIMO systems built from spherical loudspeaker and microphone arrays.

Free-field and shoebox-room transfer matrices in the spherical-harmonic
domain, SH-domain rotation/mirror operators, effective-rank analysis and
regularized sound-field reproduction, with a CLI for reproducible runs.
"""

__version__ = "0.1.0"

from .errors import DomainError, FormatError, ValidationError
from .sph_special import (RadialContext, cap_coeff, mode_strength, sh_eval,
                          sh_num_coeffs, sh_pack, sh_unpack, sph_bessel,
                          sph_bessel_deriv, sph_hankel1, sph_hankel1_deriv)
from .sph_sampling import (SphGrid, grid_from_points, make_grid, read_grid_csv,
                           sft_forward, sft_inverse, steering_matrix,
                           steering_vector, write_grid_csv)
from .sh_transforms import (ShOperator, apply_left, apply_right, mirror_plane_matrix,
                            mirror_xz_matrix, parity_mirror_matrix, wigner_d_matrix)
from .mimo_freefield import (FarFieldWarning, SceneGeometry, ShMatrix, SphArraySpec,
                             cap_diag, elements_to_sh, freefield_system_elements,
                             freefield_system_sh, mode_strength_diag,
                             nearfield_pressure_open, planewave_amplitude,
                             propagation_diag)
from .room_image import (ImageSource, RirTensor, RoomSpec, WallReflection,
                         enumerate_images, room_system_sh, synthesize_rir,
                         system_from_images)
from .analysis import (ErankCurve, ReproductionReport, effective_rank,
                       erank_vs_window, multibeam_target, regularized_pinv,
                       reproduce_field, singular_spectrum, windowed_system)
