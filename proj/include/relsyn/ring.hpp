#pragma once

#include "relsyn/structure.hpp"
#include "relsyn/youla.hpp"

namespace relsyn {

/// n first-order integrators on a ring, x+ = x + u + w, each node measuring
/// x_j - x_{j-1}; z = [(1-gamma) Cbar x; gamma u] with Cbar = I - 11^T/n.
struct RingModel {
  int n;
  double gamma;
  Plant plant;
  MeasurementStructure ms;
  InfoStructure q_structure;
  InfoStructure k_structure;
  StateSpace r_nom;
};

IntMatrix ring_adjacency(int n);
/// Row j measures x_j - x_{j-1 mod n}; n = 2 has the single row x_0 - x_1.
Matrix ring_c2(int n);
Matrix consensus_projector(int n);

/// Throws DomainError for n < 2 or gamma outside [0, 1].
RingModel make_ring(int n, double gamma);

}  // namespace relsyn
