"""Molecular shape descriptors by Kähler quantization of the van der Waals surface."""

from .distance import (
    AlignmentResult,
    MinimizerOptions,
    NonPDError,
    descriptor_distance,
    min_distance,
    raw_distance,
    sanitize,
    scale_optimum,
    sym_power_rep,
)
from .domain import PlanarDomain, PlanarRegion, build_domain
from .mobius import MobiusMap, disc_image
from .molecule import (
    BONDI_RADII,
    MacrocycleError,
    MoleculeError,
    MoleculeRecord,
    SDFParseError,
    SphereSet,
    build_sphere_set,
    parse_sdf,
    read_sdf,
)
from .potential import PotentialData, evaluate_phi, solve_potential
from .quantize import (
    QuadratureConfig,
    QuantizeError,
    ShapeDescriptor,
    descriptor_from_molecule,
    descriptor_from_spheres,
    quantize,
)
from .similarity import SimilarityScore, score, screen
from .surface import SurfaceGeometry, build_surface, surface_area

__version__ = "0.1.0"
