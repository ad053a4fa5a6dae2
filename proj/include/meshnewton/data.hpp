#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace meshnewton {

enum class LabelKind { regression, classification };

/// Dense sample matrix (one row per sample) with labels. Classification
/// labels are stored as {0, 1}.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  LabelKind kind = LabelKind::regression;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Throws InvalidArgument if `ds` is empty, shapes disagree, or classification
/// labels fall outside {0, 1}.
void validate(const Dataset& ds);

struct Partition {
  std::vector<Dataset> shards;
  /// Rows discarded so that every shard has the same size.
  Eigen::Index dropped = 0;

  int num_agents() const { return static_cast<int>(shards.size()); }
  Eigen::Index shard_size() const { return shards.empty() ? 0 : shards.front().size(); }
  Eigen::Index dim() const { return shards.empty() ? 0 : shards.front().dim(); }
  Eigen::Index total_size() const { return shard_size() * num_agents(); }
};

enum class LabelMode {
  /// Classification iff every label is in {-1, +1} (mapped to {0, 1}) or in
  /// {0, 1} with both values present; regression otherwise.
  detect,
  regression,
  classification,
};

/// Parses LIBSVM text: "<label> <idx>:<val> ...", 1-based ascending indices,
/// '#' starts a comment. Throws ParseError carrying the 1-based line number.
Dataset parse_libsvm(std::istream& is, std::optional<Eigen::Index> d_hint = std::nullopt,
                     LabelMode mode = LabelMode::detect);

/// Writes zero-skipping LIBSVM text with 17 significant digits.
void write_libsvm(std::ostream& os, const Dataset& ds);

/// Shuffles rows with a seeded generator and splits into m equal shards of
/// floor(N/m) rows; the remainder is dropped and reported.
Partition partition(const Dataset& ds, int m, std::uint64_t seed);

struct SyntheticProblem {
  Partition partition;
  Eigen::VectorXd x_star;
};

/// Linear model with controlled similarity: A_1 has standard normal rows,
/// A_i = A_1 + E_i with E_i rows ~ N(0, sigma I) (sigma is a variance),
/// b_i = A_i x* + eps with eps ~ N(0, noise_std^2).
SyntheticProblem synthetic_ridge(int m, int n, int d, double sigma, double noise_std,
                                 std::uint64_t seed);

/// Standard normal features, labels 1 iff <a, x*> >= 0. When `x_star` is
/// given it replaces the random ground truth.
SyntheticProblem synthetic_logistic(int m, int n, int d, std::uint64_t seed,
                                    const std::optional<Eigen::VectorXd>& x_star = std::nullopt);

/// Regression set built from the Mackey-Glass delay equation
///   x'(t) = 0.2 x(t-17) / (1 + x(t-17)^10) - 0.1 x(t),
/// with `dim` lagged values as features (each scaled to [-1, 1]) and the
/// value `horizon` steps ahead as label. Stands in for the LIBSVM "mg" file
/// when that file is not at hand; defaults match its shape (1385 x 6).
Dataset mackey_glass(Eigen::Index samples = 1385, int dim = 6, int lag = 6, int horizon = 6);

}  // namespace meshnewton
