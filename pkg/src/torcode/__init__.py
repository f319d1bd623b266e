"""Toroidal-distance message codes for Kyber.CPA and their decryption failure rates."""
from ._accel import backend_name
from .codebooks import (Codebook, build, build_baseline, build_gtd4, build_gtd8, build_minal, build_mld,
                        decode, encode, gamma_star, minal_dmin_formula)
from .torus import TorusVector, mod_pm, min_toroidal_distance, toroidal_distance

__version__ = "0.1.0"

__all__ = [
    "Codebook", "TorusVector", "backend_name", "build", "build_baseline", "build_gtd4", "build_gtd8",
    "build_minal", "build_mld", "decode", "encode", "gamma_star", "minal_dmin_formula", "mod_pm",
    "min_toroidal_distance", "toroidal_distance",
]
