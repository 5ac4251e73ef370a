#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace serml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Lookup tables (embeddings) keep one entity per contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Named flat view over one parameter tensor. Used by the optimizer, the
// gradient checker and checkpoint serialization.
struct TensorView {
  std::string name;
  std::span<double> values;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

using TensorList = std::vector<TensorView>;

template <typename Derived>
void add_tensor(TensorList& out, std::string name, Eigen::PlainObjectBase<Derived>& t) {
  out.push_back(TensorView{std::move(name),
                           std::span<double>(t.data(), static_cast<std::size_t>(t.size())),
                           t.rows(), t.cols()});
}

}  // namespace serml
