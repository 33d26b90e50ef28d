#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cretok/backend_config.hpp"
#include "cretok/io.hpp"
#include "cretok/toy_encoder.hpp"

namespace cretok::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return CRETOK_SOURCE_DIR; }
fs::path data_dir() { return source_dir() / "data"; }
fs::path test_data_dir() { return source_dir() / "tests" / "data"; }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cretok_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

encoders::EncoderSet default_encoders() { return encoders::default_toy_encoders(); }

encoders::EncoderSet random_encoders(Rng& rng) {
  encoders::EncoderSet set;
  for (const char* name : {"toy-a", "toy-b"}) {
    encoders::ToyEncoderConfig c;
    c.name = name;
    c.embed_dim = 3 + rng.index(14);
    c.pooled_dim = 2 + rng.index(10);
    c.seed = rng.next_u64();
    c.gain = 0.5 + 2.5 * rng.uniform();
    c.bias_scale = 0.3 * rng.uniform();
    set.add(std::make_unique<encoders::ToyEncoder>(c));
  }
  return set;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

ReferenceRanks load_reference_ranks(const fs::path& path) {
  const auto table = io::read_csv(path);
  ReferenceRanks ref;
  ref.methods.assign(table.header.begin() + 1, table.header.end());
  for (const auto& row : table.rows) {
    std::map<std::string, double> means;
    for (std::size_t i = 0; i < ref.methods.size(); ++i) means[ref.methods[i]] = std::stod(row.at(i + 1));
    ref.per_pair.push_back(std::move(means));
  }
  return ref;
}

namespace {

// Adjusts per-participant permutations by swapping two methods' ranks
// until every method's rank total hits its target. Restarts from a fresh
// random arrangement when no swap makes progress.
std::vector<std::vector<int>> fit_totals(const std::vector<long>& targets, std::size_t participants,
                                         std::mt19937_64& engine) {
  const std::size_t m = targets.size();
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<std::vector<int>> ranks(participants, std::vector<int>(m));
    std::vector<long> totals(m, 0);
    for (auto& r : ranks) {
      std::iota(r.begin(), r.end(), 1);
      std::shuffle(r.begin(), r.end(), engine);
      for (std::size_t k = 0; k < m; ++k) totals[k] += r[k];
    }
    for (;;) {
      bool done = true, moved = false;
      for (std::size_t hi = 0; hi < m && !moved; ++hi) {
        if (totals[hi] == targets[hi]) continue;
        done = false;
        if (totals[hi] < targets[hi]) continue;
        for (std::size_t lo = 0; lo < m && !moved; ++lo) {
          if (totals[lo] >= targets[lo]) continue;
          const long room = std::min(totals[hi] - targets[hi], targets[lo] - totals[lo]);
          std::uniform_int_distribution<std::size_t> pick(0, participants - 1);
          const std::size_t offset = pick(engine);
          for (std::size_t q = 0; q < participants && !moved; ++q) {
            auto& r = ranks[(q + offset) % participants];
            const long gap = r[hi] - r[lo];
            if (gap > 0 && gap <= room) {
              std::swap(r[hi], r[lo]);
              totals[hi] -= gap;
              totals[lo] += gap;
              moved = true;
            }
          }
        }
      }
      if (done) return ranks;
      if (!moved) break;
    }
  }
  throw std::runtime_error("rank synthesis did not reach the targets");
}

}  // namespace

std::vector<eval::RankingRecord> synthesize_rankings(const ReferenceRanks& ref, std::size_t participants,
                                                     std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<eval::RankingRecord> out;
  for (std::size_t pair = 0; pair < ref.per_pair.size(); ++pair) {
    std::vector<long> targets;
    for (const auto& method : ref.methods) {
      const double scaled = ref.per_pair[pair].at(method) * static_cast<double>(participants);
      targets.push_back(std::lround(scaled));
      if (std::abs(scaled - static_cast<double>(targets.back())) > 1e-6)
        throw std::runtime_error("mean is not reachable with this many participants");
    }
    const auto ranks = fit_totals(targets, participants, engine);
    const std::string suffix = (pair + 1 < 10 ? "0" : "") + std::to_string(pair + 1);
    for (std::size_t p = 0; p < participants; ++p) {
      eval::RankingRecord rec;
      rec.participant = "participant-" + std::to_string(p + 1);
      rec.pair_first = "p" + suffix;
      rec.pair_second = "q" + suffix;
      for (std::size_t k = 0; k < ref.methods.size(); ++k) rec.ranks[ref.methods[k]] = ranks[p][k];
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace cretok::testing
