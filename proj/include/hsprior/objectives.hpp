#pragma once

#include <cstddef>

#include "hsprior/cube.hpp"
#include "hsprior/tape.hpp"

namespace hsprior {

// Data-fidelity energies E(x, x0). All are means rather than sums, so the
// same learning rate behaves alike across image sizes.

/// Mean squared difference over every element.
double energy_l2(const HyperCube& x, const HyperCube& x0);
/// Mean squared difference over the positions where the mask is 1, i.e.
/// ||(x - x0) o m||^2 / count(m = 1). Throws Error for an all-zero mask.
double energy_masked(const HyperCube& x, const HyperCube& x0, const Mask& m);
/// Per-band alpha x alpha block averaging; the band count is untouched.
HyperCube degrade_downsample(const HyperCube& x, std::size_t alpha);
/// energy_l2(degrade_downsample(x, alpha), x0_lowres).
double energy_sr(const HyperCube& x, const HyperCube& x0_lowres, std::size_t alpha);

// The same energies as graph nodes over [C, H, W] maps. `target` and `mask`
// are normally constant nodes.

NodeId l2_energy(Tape& tape, NodeId x, NodeId target);
NodeId masked_energy(Tape& tape, NodeId x, NodeId target, NodeId mask);
NodeId block_downsample(Tape& tape, NodeId x, std::size_t alpha);
NodeId sr_energy(Tape& tape, NodeId x, NodeId target_lowres, std::size_t alpha);

}  // namespace hsprior
