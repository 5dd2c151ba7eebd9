#pragma once

// Seeded Monte Carlo runs of the path construction and their reports.
//
// Trial i draws from its own generator seeded with trial_seed(master, i), the
// splitmix64 output for counter i:
//
//   z = master + (i + 1) * 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   seed_i = z ^ (z >> 31)
//
// so results depend on the trial index only, never on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "io.hpp"
#include "pathbuilder.hpp"
#include "variety.hpp"

namespace rankpath {

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class RankPairStrategy { AllStrataGrid, TopStratumOnly, Adversarial };

inline const char* to_string(RankPairStrategy s) {
  switch (s) {
    case RankPairStrategy::AllStrataGrid: return "AllStrataGrid";
    case RankPairStrategy::TopStratumOnly: return "TopStratumOnly";
    case RankPairStrategy::Adversarial: return "Adversarial";
  }
  return "?";
}

inline RankPairStrategy strategy_from_string(const std::string& s) {
  if (s == "AllStrataGrid") return RankPairStrategy::AllStrataGrid;
  if (s == "TopStratumOnly") return RankPairStrategy::TopStratumOnly;
  if (s == "Adversarial") return RankPairStrategy::Adversarial;
  throw std::invalid_argument("unknown strategy '" + s + "' (AllStrataGrid, TopStratumOnly, Adversarial)");
}

struct TrialConfig {
  VarietyDescriptor descriptor;
  int pairs = 100;
  std::uint64_t master_seed = 0;
  RankPairStrategy rank_pair_strategy = RankPairStrategy::AllStrataGrid;
  std::pair<double, double> radius_range{0.5, 2.0};

  void validate() const {
    descriptor.validate();
    if (pairs < 1) throw std::invalid_argument("pairs must be at least 1");
    if (!(radius_range.first > 0.0) || radius_range.first > radius_range.second)
      throw std::invalid_argument("radius_range must satisfy 0 < min <= max");
  }

  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  int rank_p = 0;
  int rank_q = 0;
  double outer = 0.0;
  double length = 0.0;
  double ratio = 1.0;
  double certified_bound = 1.0;
  BranchTrace branch_trace;
  double max_residual = 0.0;
  std::string error;  // empty unless the trial threw

  bool fallback() const { return has_fallback(branch_trace); }
  bool violates() const { return error.empty() && !fallback() && ratio > certified_bound + 1e-9; }

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct TrialReport {
  TrialConfig config;
  std::vector<TrialRecord> records;
  double max_ratio = 0.0;
  int bound_violations = 0;
  int fallback_count = 0;
  int failures = 0;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

// ---------------------------------------------------------------------------
// Adversarial pairs

enum class AdversarialKind { Coincident, NearCoincident, NearOrthogonal, Scaled, CrossStrata, TinyInner };
inline constexpr int kAdversarialKinds = 6;

inline const char* to_string(AdversarialKind k) {
  switch (k) {
    case AdversarialKind::Coincident: return "coincident";
    case AdversarialKind::NearCoincident: return "near-coincident";
    case AdversarialKind::NearOrthogonal: return "near-orthogonal";
    case AdversarialKind::Scaled: return "scaled";
    case AdversarialKind::CrossStrata: return "cross-strata";
    case AdversarialKind::TinyInner: return "tiny-inner";
  }
  return "?";
}

namespace detail {

/// p = G H of rank r with <p, q> = target * |p| |q| (approximately, for
/// small targets): the component of H along G* q is prescribed.
template <class Rng>
Matrix pair_with_inner(const VarietyDescriptor& d, int r, const Matrix& q, double target, double radius, Rng& rng) {
  DenseMatrix g = gaussian_matrix(d.m, r, d.field, rng);
  DenseMatrix h = gaussian_matrix(r, d.n, d.field, rng);
  const DenseMatrix b = g.adjoint() * q.dense();
  const double bb = b.squaredNorm();
  if (bb > 0.0) {
    const Scalar along = b.reshaped().dot(h.reshaped()) / bb;  // <h, b> / <b, b>
    h -= along * b;
    const double c = target * (g * h).norm() * q.frobenius_norm();
    h += (c / bb) * b;
  }
  DenseMatrix p = g * h;
  p *= radius / p.norm();
  return Matrix(std::move(p), d.field);
}

}  // namespace detail

/// One adversarial pair of the given kind, deterministic in seed.
inline std::pair<Matrix, Matrix> adversarial_pair(const VarietyDescriptor& d, AdversarialKind kind,
                                                  std::uint64_t seed, double radius = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int top = d.t - 1;
  if (top == 0) return {Matrix::zeros(d.m, d.n, d.field), Matrix::zeros(d.m, d.n, d.field)};
  std::uniform_int_distribution<int> any_rank(1, top);

  switch (kind) {
    case AdversarialKind::Coincident: {
      Matrix p = sample_stratum_with(d, any_rank(rng), radius, rng);
      return {p, p};
    }
    case AdversarialKind::NearCoincident: {
      Matrix p = sample_stratum_with(d, any_rank(rng), radius, rng);
      DenseMatrix delta = gaussian_matrix(d.m, d.n, d.field, rng);
      delta *= 1e-6 * radius / delta.norm();
      return {p, project(p + Matrix(std::move(delta), d.field), d)};
    }
    case AdversarialKind::NearOrthogonal: {
      Matrix q = sample_stratum_with(d, any_rank(rng), radius, rng);
      return {detail::pair_with_inner(d, any_rank(rng), q, 1e-12, radius, rng), q};
    }
    case AdversarialKind::Scaled: {
      Matrix p = sample_stratum_with(d, any_rank(rng), radius, rng);
      const double lambda = 0.1 + 2.9 * unit(rng);
      return {p, p * lambda};
    }
    case AdversarialKind::CrossStrata: {
      const int rq = top >= 2 ? std::uniform_int_distribution<int>(1, top - 1)(rng) : 0;
      Matrix p = sample_stratum_with(d, top, radius, rng);
      Matrix q = sample_stratum_with(d, rq, radius * (0.5 + unit(rng)), rng);
      return {p, q};
    }
    case AdversarialKind::TinyInner: {
      Matrix q = sample_stratum_with(d, any_rank(rng), radius, rng);
      return {detail::pair_with_inner(d, any_rank(rng), q, 3.0 * BuildOptions{}.orth_tol, radius, rng), q};
    }
  }
  throw std::logic_error("unreachable");
}

/// Endless cycle through the adversarial kinds; item k uses trial_seed(seed, k).
class AdversarialStream {
 public:
  AdversarialStream(VarietyDescriptor d, std::uint64_t seed, double radius = 1.0)
      : d_(std::move(d)), seed_(seed), radius_(radius) {}

  AdversarialKind next_kind() const { return static_cast<AdversarialKind>(index_ % kAdversarialKinds); }

  std::pair<Matrix, Matrix> next() {
    const AdversarialKind kind = next_kind();
    auto out = adversarial_pair(d_, kind, trial_seed(seed_, index_), radius_);
    ++index_;
    return out;
  }

 private:
  VarietyDescriptor d_;
  std::uint64_t seed_;
  double radius_;
  std::uint64_t index_ = 0;
};

inline AdversarialStream adversarial_pairs(const VarietyDescriptor& d, std::uint64_t seed) {
  return AdversarialStream(d, seed);
}

// ---------------------------------------------------------------------------
// Trials

/// Sample the pair for trial `index`.
inline std::pair<Matrix, Matrix> trial_pair(const TrialConfig& cfg, std::uint64_t index, std::uint64_t seed) {
  const VarietyDescriptor& d = cfg.descriptor;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(cfg.radius_range.first, cfg.radius_range.second);
  const auto t = static_cast<std::uint64_t>(d.t);
  switch (cfg.rank_pair_strategy) {
    case RankPairStrategy::AllStrataGrid: {
      const int rp = static_cast<int>(index % t);
      const int rq = static_cast<int>((index / t) % t);
      const double ra = radius(rng);
      const double rb = radius(rng);
      Matrix p = sample_stratum_with(d, rp, ra, rng);
      Matrix q = sample_stratum_with(d, rq, rb, rng);
      return {std::move(p), std::move(q)};
    }
    case RankPairStrategy::TopStratumOnly: {
      const double ra = radius(rng);
      const double rb = radius(rng);
      Matrix p = sample_stratum_with(d, d.t - 1, ra, rng);
      Matrix q = sample_stratum_with(d, d.t - 1, rb, rng);
      return {std::move(p), std::move(q)};
    }
    case RankPairStrategy::Adversarial: {
      const auto kind = static_cast<AdversarialKind>(index % kAdversarialKinds);
      return adversarial_pair(d, kind, seed, radius(rng));
    }
  }
  throw std::logic_error("unreachable");
}

inline TrialRecord run_trial(const TrialConfig& cfg, std::uint64_t index) {
  TrialRecord rec;
  rec.seed = trial_seed(cfg.master_seed, index);
  try {
    auto [p, q] = trial_pair(cfg, index, rec.seed);
    rec.rank_p = numerical_rank(p);
    rec.rank_q = numerical_rank(q);
    const BuiltPath b = build_path(p, q, cfg.descriptor);
    rec.outer = b.certificate.outer_distance;
    rec.length = b.certificate.length;
    rec.ratio = b.certificate.ratio;
    rec.certified_bound = b.certificate.certified_bound;
    rec.branch_trace = b.certificate.branch_trace;
    rec.max_residual = b.certificate.max_relative_residual;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

/// Worker count: RANKPATH_THREADS if set and positive, else hardware threads.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("RANKPATH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline TrialReport aggregate(TrialConfig cfg, std::vector<TrialRecord> records) {
  TrialReport rep;
  rep.config = std::move(cfg);
  rep.records = std::move(records);
  for (const auto& r : rep.records) {
    if (!r.error.empty()) {
      ++rep.failures;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    if (r.fallback()) ++rep.fallback_count;
    if (r.violates()) ++rep.bound_violations;
  }
  return rep;
}

inline TrialReport run_trials(const TrialConfig& cfg, unsigned threads = default_thread_count()) {
  cfg.validate();
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.pairs));
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.pairs)));
  if (threads == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) records[i] = run_trial(cfg, i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) records[i] = run_trial(cfg, i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return aggregate(cfg, std::move(records));
}

// ---------------------------------------------------------------------------
// Report I/O

inline Json to_json(const TrialConfig& c) {
  return Json{{"descriptor", to_json(c.descriptor)},
              {"pairs", c.pairs},
              {"master_seed", c.master_seed},
              {"rank_pair_strategy", to_string(c.rank_pair_strategy)},
              {"radius_range", Json::array({c.radius_range.first, c.radius_range.second})}};
}

inline TrialConfig trial_config_from_json(const Json& j) {
  TrialConfig c;
  c.descriptor = descriptor_from_json(j.at("descriptor"));
  c.pairs = j.at("pairs").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.rank_pair_strategy = strategy_from_string(j.at("rank_pair_strategy").get<std::string>());
  if (j.contains("radius_range"))
    c.radius_range = {j.at("radius_range").at(0).get<double>(), j.at("radius_range").at(1).get<double>()};
  c.validate();
  return c;
}

inline Json to_json(const TrialRecord& r) {
  Json j{{"seed", r.seed},
         {"rank_p", r.rank_p},
         {"rank_q", r.rank_q},
         {"outer", r.outer},
         {"length", r.length},
         {"ratio", r.ratio},
         {"certified_bound", r.certified_bound},
         {"branch_trace", to_json(r.branch_trace)},
         {"max_residual", r.max_residual}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline Json to_json(const TrialReport& rep) {
  Json recs = Json::array();
  for (const auto& r : rep.records) recs.push_back(to_json(r));
  return Json{{"config", to_json(rep.config)},
              {"records", std::move(recs)},
              {"max_ratio", rep.max_ratio},
              {"bound_violations", rep.bound_violations},
              {"fallback_count", rep.fallback_count},
              {"failures", rep.failures}};
}

inline TrialReport trial_report_from_json(const Json& j) {
  TrialReport rep;
  rep.config = trial_config_from_json(j.at("config"));
  for (const auto& r : j.at("records")) {
    TrialRecord t;
    t.seed = r.at("seed").get<std::uint64_t>();
    t.rank_p = r.at("rank_p").get<int>();
    t.rank_q = r.at("rank_q").get<int>();
    t.outer = r.at("outer").get<double>();
    t.length = r.at("length").get<double>();
    t.ratio = r.at("ratio").get<double>();
    t.certified_bound = r.at("certified_bound").get<double>();
    t.branch_trace = trace_from_json(r.at("branch_trace"));
    t.max_residual = r.at("max_residual").get<double>();
    if (r.contains("error")) t.error = r.at("error").get<std::string>();
    rep.records.push_back(std::move(t));
  }
  rep.max_ratio = j.at("max_ratio").get<double>();
  rep.bound_violations = j.at("bound_violations").get<int>();
  rep.fallback_count = j.at("fallback_count").get<int>();
  rep.failures = j.value("failures", 0);
  return rep;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string branches_label(const BranchTrace& trace) {
  std::string s;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) s += '|';
    s += std::string(to_string(trace[i].kind)) + "(" + std::to_string(trace[i].depth) + ")";
  }
  return s;
}

inline std::string report_csv(const TrialReport& rep) {
  std::string out = "seed,rank_p,rank_q,outer,length,ratio,certified_bound,branches,max_residual\n";
  for (const auto& r : rep.records) {
    out += std::to_string(r.seed) + "," + std::to_string(r.rank_p) + "," + std::to_string(r.rank_q) + "," +
           format_g17(r.outer) + "," + format_g17(r.length) + "," + format_g17(r.ratio) + "," +
           format_g17(r.certified_bound) + "," + (r.error.empty() ? branches_label(r.branch_trace) : "error") +
           "," + format_g17(r.max_residual) + "\n";
  }
  return out;
}

enum class ReportFormat { JSON, CSV };

inline void emit_report(const TrialReport& rep, ReportFormat format, const std::string& path) {
  if (format == ReportFormat::JSON) write_json_file(path, to_json(rep));
  else write_text_file(path, report_csv(rep));
}

inline TrialReport load_report(const std::string& path) { return trial_report_from_json(read_json_file(path)); }

}  // namespace rankpath
