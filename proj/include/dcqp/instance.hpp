#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcqp/linalg.hpp"

namespace dcqp {

// Objective: x'Qx + 2 d'x + offset.
struct QpInstance {
  std::string name;
  Mat Q;
  Vec d;
  double offset = 0.0;
  Mat A_ineq;
  Vec b_ineq;
  Mat A_eq;
  Vec b_eq;
  std::optional<Vec> lower;
  std::optional<Vec> upper;

  Eigen::Index n() const { return d.size(); }
  Eigen::Index m() const { return A_ineq.rows(); }
  Eigen::Index m_eq() const { return A_eq.rows(); }
  double objective(const Vec& x) const { return x.dot(Q * x) + 2.0 * d.dot(x) + offset; }

  // Throws DimensionError / NumericalError; symmetrizes Q in place.
  void validate_and_symmetrize();
};

enum class RowKind { inequality, normalization, equality_upper, equality_lower, lower_bound, upper_bound, cut };

const char* to_string(RowKind k);

struct RowTag {
  RowKind kind = RowKind::inequality;
  int source = 0;  // index into the originating list (row, variable, or cut number)
};

// Pure inequality form {A x <= b}, bounded and nonempty.
struct ReducedInstance {
  std::string name;
  Mat Q;
  Vec d;
  double offset = 0.0;
  Mat A;
  Vec b;
  std::vector<RowTag> provenance;
  double radius = 0.0;

  Eigen::Index n() const { return d.size(); }
  Eigen::Index rows() const { return A.rows(); }
  double objective(const Vec& x) const { return x.dot(Q * x) + 2.0 * d.dot(x) + offset; }

  ReducedInstance with_row(const Vec& a, double rhs, RowTag tag) const;
};

enum class InstanceFormat { canonical, dense_text };

QpInstance load_instance(const std::filesystem::path& path, InstanceFormat format = InstanceFormat::canonical);
QpInstance parse_canonical(std::istream& in, std::string name = {});
QpInstance parse_dense_text(std::istream& in, std::string name = {});

void write_canonical(std::ostream& out, const QpInstance& inst);
// Writes to a sibling temporary then renames over `path`.
void save_instance(const std::filesystem::path& path, const QpInstance& inst);

ReducedInstance reduce(const QpInstance& inst);

// Radius of a centered ball containing {A x <= b}.
double radius_bound(const Mat& A, const Vec& b);

enum class Distribution { normal, uniform };

struct SyntheticSpec {
  Eigen::Index n = 30;
  Eigen::Index m_ineq = 20;
  Eigen::Index m_eq = 0;
  Distribution distribution = Distribution::uniform;
  double density = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticDraw {
  QpInstance instance;
  Vec interior;  // strictly feasible for the inequalities, exact for the equalities
};

SyntheticDraw draw_synthetic(const SyntheticSpec& spec);
inline QpInstance generate_synthetic(const SyntheticSpec& spec) { return draw_synthetic(spec).instance; }

// "qp_<dist>_<meq>_<density>_<index>"; density printed as 10x its fraction.
std::string synthetic_name(const SyntheticSpec& spec, int index);

}  // namespace dcqp
