#include "meshnewton/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "meshnewton/error.hpp"

namespace meshnewton {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_index(std::string_view tok, long long& out) {
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && p == end;
}

struct SparseRow {
  double label;
  std::vector<std::pair<Eigen::Index, double>> entries;
};

// Fisher-Yates with a 64-bit engine; modulo bias is below 2^-40 at our sizes.
std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              double stddev) {
  std::normal_distribution<double> nd(0.0, stddev);
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = nd(rng);
  return a;
}

Eigen::VectorXd normal_vector(std::mt19937_64& rng, Eigen::Index n, double stddev) {
  return normal_matrix(rng, n, 1, stddev).col(0);
}

}  // namespace

void validate(const Dataset& ds) {
  if (ds.size() < 1) throw InvalidArgument("dataset is empty");
  if (ds.labels.size() != ds.size())
    throw InvalidArgument("dataset has mismatched label count");
  if (ds.kind == LabelKind::classification) {
    for (double y : ds.labels)
      if (y != 0.0 && y != 1.0) throw InvalidArgument("classification labels must be 0 or 1");
  }
}

Dataset parse_libsvm(std::istream& is, std::optional<Eigen::Index> d_hint, LabelMode mode) {
  std::vector<SparseRow> rows;
  std::vector<std::size_t> line_of;
  Eigen::Index dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;

    SparseRow row{};
    std::size_t pos = 0;
    bool first = true;
    long long last_index = 0;
    while (pos < body.size()) {
      const auto end = std::min(body.find_first_of(" \t", pos), body.size());
      const std::string_view tok = body.substr(pos, end - pos);
      pos = body.find_first_not_of(" \t", end);
      if (pos == std::string_view::npos) pos = body.size();
      if (first) {
        if (!parse_double(tok, row.label))
          throw ParseError(lineno, "non-numeric label '" + std::string(tok) + "'");
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(lineno, "expected idx:val, got '" + std::string(tok) + "'");
      long long index = 0;
      double value = 0.0;
      if (!parse_index(tok.substr(0, colon), index) || index <= 0)
        throw ParseError(lineno, "feature index must be a positive integer");
      if (index <= last_index) throw ParseError(lineno, "feature indices must ascend");
      if (!parse_double(tok.substr(colon + 1), value))
        throw ParseError(lineno, "bad feature value '" + std::string(tok.substr(colon + 1)) + "'");
      last_index = index;
      row.entries.emplace_back(static_cast<Eigen::Index>(index - 1), value);
    }
    dim = std::max<Eigen::Index>(dim, static_cast<Eigen::Index>(last_index));
    rows.push_back(std::move(row));
    line_of.push_back(lineno);
  }
  if (rows.empty()) throw ParseError(lineno, "no samples");
  if (d_hint) dim = std::max(dim, *d_hint);

  Dataset ds;
  ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    ds.labels(i) = rows[r].label;
    for (const auto& [j, v] : rows[r].entries) ds.features(i, j) = v;
  }

  const auto all_in = [&](double a, double b) {
    return (ds.labels.array() == a || ds.labels.array() == b).all();
  };
  const bool pm_one = all_in(-1.0, 1.0);
  const bool zero_one = all_in(0.0, 1.0);
  bool classify = false;
  switch (mode) {
    case LabelMode::regression: break;
    case LabelMode::classification:
      if (!pm_one && !zero_one) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const double y = rows[r].label;
          if (y != 1.0 && y != -1.0 && y != 0.0)
            throw ParseError(line_of[r], "classification label must be -1, 0 or +1");
        }
        throw ParseError(line_of.back(), "labels mix -1 and 0");
      }
      classify = true;
      break;
    case LabelMode::detect:
      classify = pm_one || (zero_one && (ds.labels.array() == 0.0).any() &&
                            (ds.labels.array() == 1.0).any());
      break;
  }
  if (classify) {
    ds.kind = LabelKind::classification;
    ds.labels = (ds.labels.array() > 0.0).cast<double>();
  }
  return ds;
}

void write_libsvm(std::ostream& os, const Dataset& ds) {
  const auto old = os.precision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    os << ds.labels(i);
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      if (ds.features(i, j) != 0.0) os << ' ' << (j + 1) << ':' << ds.features(i, j);
    }
    os << '\n';
  }
  os.precision(old);
}

Partition partition(const Dataset& ds, int m, std::uint64_t seed) {
  validate(ds);
  if (m < 1) throw InvalidArgument("partition: m must be >= 1");
  if (ds.size() < m)
    throw InvalidArgument("partition: " + std::to_string(ds.size()) + " samples for " +
                          std::to_string(m) + " agents");
  const auto order = shuffled_indices(ds.size(), seed);
  const Eigen::Index n = ds.size() / m;
  Partition p;
  p.dropped = ds.size() - n * m;
  p.shards.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    Dataset shard;
    shard.kind = ds.kind;
    shard.features.resize(n, ds.dim());
    shard.labels.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto src = order[static_cast<std::size_t>(a * n + r)];
      shard.features.row(r) = ds.features.row(src);
      shard.labels(r) = ds.labels(src);
    }
    p.shards.push_back(std::move(shard));
  }
  return p;
}

SyntheticProblem synthetic_ridge(int m, int n, int d, double sigma, double noise_std,
                                 std::uint64_t seed) {
  if (m < 1 || n < 1 || d < 1) throw InvalidArgument("synthetic_ridge: m, n, d must be >= 1");
  if (!(sigma >= 0.0) || !(noise_std >= 0.0))
    throw InvalidArgument("synthetic_ridge: sigma and noise_std must be >= 0");
  std::mt19937_64 rng(seed);
  SyntheticProblem out;
  out.x_star = normal_vector(rng, d, 1.0);
  const Eigen::MatrixXd a1 = normal_matrix(rng, n, d, 1.0);
  for (int i = 0; i < m; ++i) {
    Dataset shard;
    shard.features = a1;
    if (sigma > 0.0) shard.features += normal_matrix(rng, n, d, std::sqrt(sigma));
    shard.labels = shard.features * out.x_star;
    if (noise_std > 0.0) shard.labels += normal_vector(rng, n, noise_std);
    out.partition.shards.push_back(std::move(shard));
  }
  return out;
}

SyntheticProblem synthetic_logistic(int m, int n, int d, std::uint64_t seed,
                                    const std::optional<Eigen::VectorXd>& x_star) {
  if (m < 1 || n < 1 || d < 1)
    throw InvalidArgument("synthetic_logistic: m, n, d must be >= 1");
  if (x_star && x_star->size() != d) throw InvalidArgument("synthetic_logistic: x* has wrong size");
  std::mt19937_64 rng(seed);
  SyntheticProblem out;
  out.x_star = normal_vector(rng, d, 1.0);
  if (x_star) out.x_star = *x_star;
  for (int i = 0; i < m; ++i) {
    Dataset shard;
    shard.kind = LabelKind::classification;
    shard.features = normal_matrix(rng, n, d, 1.0);
    shard.labels = ((shard.features * out.x_star).array() >= 0.0).cast<double>();
    out.partition.shards.push_back(std::move(shard));
  }
  return out;
}

Dataset mackey_glass(Eigen::Index samples, int dim, int lag, int horizon) {
  if (samples < 1 || dim < 1 || lag < 1 || horizon < 0)
    throw InvalidArgument("mackey_glass: bad shape");
  constexpr int kSubsteps = 10;
  constexpr double kDelay = 17.0;
  constexpr double kStep = 1.0 / kSubsteps;
  constexpr int kBurnIn = 500;
  const auto delay = static_cast<std::size_t>(kDelay * kSubsteps);
  const auto span = static_cast<std::size_t>(samples + (dim - 1) * lag + horizon + 1);

  // Forward Euler on a constant history x = 1.2, sampled at integer times.
  std::vector<double> fine(delay + (kBurnIn + span) * kSubsteps + 1, 1.2);
  for (std::size_t k = delay; k + 1 < fine.size(); ++k) {
    const double past = fine[k - delay];
    fine[k + 1] = fine[k] + kStep * (0.2 * past / (1.0 + std::pow(past, 10)) - 0.1 * fine[k]);
  }
  std::vector<double> series(span);
  for (std::size_t t = 0; t < span; ++t) series[t] = fine[delay + (kBurnIn + t) * kSubsteps];

  Dataset ds;
  ds.features.resize(samples, dim);
  ds.labels.resize(samples);
  for (Eigen::Index i = 0; i < samples; ++i) {
    const auto t = static_cast<std::size_t>(i + (dim - 1) * lag);
    for (int j = 0; j < dim; ++j) ds.features(i, j) = series[t - static_cast<std::size_t>(j * lag)];
    ds.labels(i) = series[t + static_cast<std::size_t>(horizon)];
  }
  for (int j = 0; j < dim; ++j) {
    auto col = ds.features.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi > lo) col = ((col.array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
  }
  return ds;
}

}  // namespace meshnewton
