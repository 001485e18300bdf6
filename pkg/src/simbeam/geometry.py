"""Physical layout of the antenna array and the stacked metasurface layers.

All positions live in a right-handed frame whose x-axis is the stacking
(boresight) axis: the antenna plane sits at x = 0, metasurface layer l at
x = l * layer_spacing.  In-plane atom coordinates follow the quarter-spaced
lattice u_n = [0, mod(n-1, N_r) * d_x / 2, floor((n-1) / N_r) * d_y / 2],
with an optional full-pitch variant (``lattice_step="full"``).

Atom, layer and antenna indices are 1-based throughout this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Fixed so wavelengths (and everything derived) are bit-reproducible.
SPEED_OF_LIGHT = 2.998e8  # m/s


class PropagationMetrics(NamedTuple):
    distance: float
    cos_incidence: float


@dataclass(frozen=True)
class SimGeometry:
    """Immutable layout of M antennas and L layers of N meta-atoms each.

    Attributes:
        M: number of transmit antennas.
        N: meta-atoms per layer.
        N_r: atoms per lattice row (N_r divides N).
        L: number of metasurface layers.
        wavelength: carrier wavelength in meters.
        d_x, d_y: atom width / height in meters.
        thickness: total stack thickness in meters.
        layer_spacing: thickness / L, also the antenna-to-layer-1 gap.
        atom_positions: (L, N, 3) array, metres; layer l occupies row l-1.
        antenna_positions: (M, 3) array, metres.
    """

    M: int
    N: int
    N_r: int
    L: int
    wavelength: float
    d_x: float
    d_y: float
    thickness: float
    layer_spacing: float
    atom_positions: np.ndarray
    antenna_positions: np.ndarray


def atom_lattice(N: int, N_r: int, d_x: float, d_y: float,
                 lattice_step: str = "half") -> np.ndarray:
    """In-plane lattice coordinates (N, 3) with x = 0 for one layer."""
    if lattice_step not in ("half", "full"):
        raise ValueError(f"lattice_step must be 'half' or 'full', got {lattice_step!r}")
    step = 0.5 if lattice_step == "half" else 1.0
    n = np.arange(N)
    pos = np.zeros((N, 3))
    pos[:, 1] = np.mod(n, N_r) * d_x * step
    pos[:, 2] = (n // N_r) * d_y * step
    return pos


def build_geometry(*, M: int, N: int, N_r: int, L: int, f_carrier: float,
                   d_x: float, d_y: float, thickness: float,
                   antenna_layout: str = "ula_y",
                   lattice_step: str = "half") -> SimGeometry:
    """Build the full transmitter-side geometry.

    The antenna array is a uniform linear array along the in-plane y-axis
    with half-wavelength spacing, centred on the layer-1 lattice centroid,
    one layer_spacing behind layer 1.

    Raises:
        ValueError: if N_r does not divide N, or any dimension is nonpositive.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if M < 1 or N < 1 or N_r < 1:
        raise ValueError("M, N and N_r must be positive")
    if N % N_r != 0:
        raise ValueError(f"N_r must divide N (got N={N}, N_r={N_r})")
    if f_carrier <= 0:
        raise ValueError(f"f_carrier must be positive, got {f_carrier}")
    if d_x <= 0 or d_y <= 0 or thickness <= 0:
        raise ValueError("d_x, d_y and thickness must be positive")
    if antenna_layout != "ula_y":
        raise ValueError(f"unknown antenna_layout {antenna_layout!r}")

    wavelength = SPEED_OF_LIGHT / f_carrier
    spacing = thickness / L

    plane = atom_lattice(N, N_r, d_x, d_y, lattice_step)
    atoms = np.zeros((L, N, 3))
    for layer in range(1, L + 1):
        atoms[layer - 1] = plane
        atoms[layer - 1, :, 0] = layer * spacing

    centroid = plane.mean(axis=0)
    antennas = np.zeros((M, 3))
    antennas[:, 1] = centroid[1] + (np.arange(M) - (M - 1) / 2) * wavelength / 2
    antennas[:, 2] = centroid[2]

    atoms.setflags(write=False)
    antennas.setflags(write=False)
    return SimGeometry(M=M, N=N, N_r=N_r, L=L, wavelength=wavelength,
                       d_x=d_x, d_y=d_y, thickness=thickness,
                       layer_spacing=spacing, atom_positions=atoms,
                       antenna_positions=antennas)


def _atom_position(geom: SimGeometry, layer: int, atom: int) -> np.ndarray:
    if not 1 <= layer <= geom.L:
        raise ValueError(f"layer {layer} out of range 1..{geom.L}")
    if not 1 <= atom <= geom.N:
        raise ValueError(f"atom {atom} out of range 1..{geom.N}")
    return geom.atom_positions[layer - 1, atom - 1]


def propagation_metrics(geom: SimGeometry, source: tuple, target: tuple) -> PropagationMetrics:
    """Distance and incidence cosine for one propagation hop.

    Args:
        geom: geometry to query.
        source: ("antenna", k) or ("atom", layer, n), 1-based indices.
        target: ("atom", layer, n); for an atom source the target layer
            must be the source layer + 1, for an antenna source it must be 1.

    Returns:
        PropagationMetrics(distance, cos_incidence) where cos_incidence is
        the axial component of the unit propagation vector.
    """
    if target[0] != "atom":
        raise ValueError(f"target must be an atom, got {target!r}")
    to_layer, to_atom = target[1], target[2]

    if source[0] == "antenna":
        k = source[1]
        if not 1 <= k <= geom.M:
            raise ValueError(f"antenna {k} out of range 1..{geom.M}")
        if to_layer != 1:
            raise ValueError("antenna sources radiate onto layer 1 only")
        src = geom.antenna_positions[k - 1]
    elif source[0] == "atom":
        from_layer, from_atom = source[1], source[2]
        if to_layer != from_layer + 1:
            raise ValueError(
                f"layers must be adjacent (source layer {from_layer}, target layer {to_layer})")
        src = _atom_position(geom, from_layer, from_atom)
    else:
        raise ValueError(f"unknown source kind {source!r}")

    dst = _atom_position(geom, to_layer, to_atom)
    diff = dst - src
    distance = float(np.linalg.norm(diff))
    return PropagationMetrics(distance, float(diff[0] / distance))
