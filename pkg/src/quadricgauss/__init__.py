"""Gauss maps of hypersurfaces in the unit sphere as Lagrangian submanifolds of the complex quadric."""

__version__ = "0.1.0"

from .catalog import CatalogEntry, catalog_list, parse_entry
from .gaussmap import (AngleSpectrum, angle_difference_invariant, angle_spectrum, canonical_lift,
                       check_lagrangian, gauge_shift_check, gauss_differential, gauss_lift, gauss_map,
                       lift_parallel, verify_theorem1)
from .quadric import (ProductStructureChoice, QuadricPoint, QuadricTangent, StiefelPoint,
                      check_lemma1, check_lemma2, curvature_R, sectional_curvature)
from .reconstruct import (LagrangianPatch, choose_t, horizontalize, lift_family,
                          reconstruct_hypersurface, split_lift)
from .sphere import (HypersurfacePatch, immersion_margin, parallel_patch, principal_data,
                     unit_normal)

__all__ = [
    "AngleSpectrum", "CatalogEntry", "HypersurfacePatch", "LagrangianPatch", "ProductStructureChoice",
    "QuadricPoint", "QuadricTangent", "StiefelPoint", "angle_difference_invariant", "angle_spectrum",
    "canonical_lift", "catalog_list", "check_lagrangian", "check_lemma1", "check_lemma2", "choose_t",
    "curvature_R", "gauge_shift_check", "gauss_differential", "gauss_lift", "gauss_map", "horizontalize",
    "immersion_margin", "lift_family", "lift_parallel", "parallel_patch", "parse_entry", "principal_data",
    "reconstruct_hypersurface", "sectional_curvature", "split_lift", "unit_normal", "verify_theorem1",
]
