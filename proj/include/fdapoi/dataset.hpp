#ifndef FDAPOI_DATASET_HPP
#define FDAPOI_DATASET_HPP

#include <optional>
#include <string>

#include <Eigen/Core>

#include "fdapoi/errors.hpp"
#include "fdapoi/grid.hpp"

namespace fdapoi {

/// n curves sampled on a shared equidistant grid, plus optional responses.
/// Row i of `curves` is X_i evaluated on the grid.
struct FunctionalDataset {
  Grid grid;
  Eigen::MatrixXd curves;                  // n x p
  std::optional<Eigen::VectorXd> responses;  // length n
  bool centered = false;

  int n() const { return static_cast<int>(curves.rows()); }
  int p() const { return static_cast<int>(curves.cols()); }

  void validate() const {
    if (curves.cols() != grid.p)
      throw data_error("dataset: curve matrix has " + std::to_string(curves.cols()) +
                       " columns but grid has " + std::to_string(grid.p) + " points");
    if (!curves.allFinite()) throw data_error("dataset: non-finite curve value");
    if (responses) {
      if (responses->size() != curves.rows())
        throw data_error("dataset: " + std::to_string(responses->size()) +
                         " responses for " + std::to_string(curves.rows()) + " curves");
      if (!responses->allFinite()) throw data_error("dataset: non-finite response");
    }
  }

  const Eigen::VectorXd& require_responses(const char* where) const {
    if (!responses) throw data_error(std::string(where) + ": response column required");
    return *responses;
  }
};

}  // namespace fdapoi

#endif  // FDAPOI_DATASET_HPP
