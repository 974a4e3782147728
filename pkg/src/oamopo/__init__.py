"""Injected optical parametric oscillator in the first-order mode subspace.

Simulates the coupled pump/signal/idler dynamics of a resonant OPO seeded
with a first-order transverse mode, the Poincare-sphere geometry of the
down-converted beams, geometric phase conjugation under cyclic adiabatic
injection, and the resulting rotation of the mutual interference pattern.
"""

from .dynamics import (
    FiveModeState,
    InjectionDrive,
    IntegrationError,
    OpoParams,
    RotatedState,
    Trajectory,
    constant_drive,
    from_rotated_basis,
    integrate,
    rhs_lg_basis,
    rhs_rotated,
    to_rotated_basis,
    turn_on_state,
)
from .geometry import (
    SpherePath,
    berry_connection_phase,
    conjugation_pair,
    equator_path,
    geometric_phase,
    lune_path,
    mirror_path,
    octant_path,
    preset_path,
    solid_angle,
)
from .interference import (
    FieldMap,
    IntensityMap,
    intensity,
    mutual_interference,
    pattern_rotation,
    render_cycle,
    synthesize_field,
)
from .modes import (
    GridSpec,
    ModeVector,
    SpherePoint,
    StokesVector,
    hg_field,
    lg_field,
    mode_from_sphere,
    project_intensity,
    sphere_from_stokes,
    stokes_from_mode,
    stokes_from_projections,
)
from .steady import (
    FreeRunFamily,
    QuinticCoeffs,
    SteadySolution,
    downconverted_stokes,
    free_running_steady,
    injected_steady,
    quintic_real_roots,
    select_stable,
    threshold,
)
from .sweep import (
    SweepRecord,
    SweepSchedule,
    adiabaticity_error,
    relative_phase_after_cycle,
    run_sweep,
)

__version__ = "0.1.0"
