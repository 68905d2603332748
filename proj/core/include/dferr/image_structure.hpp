#pragma once

#include "dferr/dirichlet_structure.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace dferr {

struct ImageOptions {
  /// Target number of cells; with q outputs each axis gets floor(bins^(1/q)).
  int bins = 64;
  std::size_t samples = 200000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Image of an input structure through a smooth map Phi: R^p -> R^q. The
/// conditional expectations given Phi(X) = y are cell averages over
/// equal-count bins of the output.
class ImageStructure {
 public:
  struct Cells;

  const DirichletStructure& structure() const { return structure_; }
  int cell_count() const;
  int cell_of(const Vector& y) const;
  std::size_t missing_cells() const;
  std::size_t samples_in(int cell) const;

  /// Cell averages of Gamma_in[Phi_i, Phi_j]; nullopt for an empty cell.
  std::optional<Matrix> diffusion_at(const Vector& y) const;
  /// Cell averages of A~_in[Phi_i]; nullopt for an empty cell.
  std::optional<Vector> drift_at(const Vector& y) const;

  /// Gamma_out[u](y) and A~_out[u](y); nullopt for an empty cell.
  std::optional<double> square_field(const TestFunction& u, const Vector& y) const;
  std::optional<double> generator(const TestFunction& u, const Vector& y) const;

 private:
  friend ImageStructure image_structure(const DirichletStructure&, std::span<const TestFunction>,
                                        const ImageOptions&);
  std::shared_ptr<const Cells> cells_;
  DirichletStructure structure_;
};

/// Throws when Phi is empty or its components disagree with the input
/// dimension.
ImageStructure image_structure(const DirichletStructure& in, std::span<const TestFunction> phi,
                               const ImageOptions& options = {});

}  // namespace dferr
