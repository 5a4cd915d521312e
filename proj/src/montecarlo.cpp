#include "tbinfo/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "tbinfo/errors.hpp"
#include "tbinfo/parallel.hpp"

namespace tbinfo {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void SimConfig::validate() const {
  channel.validate();
  jitter.validate();
  if (deadtime.md < 0) throw std::invalid_argument("dead-time must be >= 0");
  if (frame_size < 1) throw std::invalid_argument("frame size must be >= 1");
  if (n_frames < 1) throw std::invalid_argument("need at least one frame");
  if (chunk_frames < 1) throw std::invalid_argument("chunk_frames must be >= 1");
  if (max_stored_clicks < 0) throw std::invalid_argument("max_stored_clicks must be >= 0");
}

int SimConfig::warmup_bins() const {
  return jitter.max_jump() + (deadtime.md > 0 ? 16 * (deadtime.md + 1) : 0);
}

std::uint64_t SimResult::count(int x, int y) const {
  const auto it = class_counts.find({x, y});
  return it == class_counts.end() ? 0 : it->second;
}

void SimResult::merge(const SimResult& o) {
  n_frames += o.n_frames;
  for (const auto& [k, v] : o.class_counts) class_counts[k] += v;
  for (int i = 0; i < 4; ++i) bin_joint[i] += o.bin_joint[i];
  if (cells11.size() < o.cells11.size()) cells11.resize(o.cells11.size(), 0);
  for (std::size_t i = 0; i < o.cells11.size(); ++i) cells11[i] += o.cells11[i];
  for (const auto& [cls, pairs] : o.pattern_pairs) {
    auto& dst = pattern_pairs[cls];
    for (const auto& [k, v] : pairs) dst[k] += v;
  }
}

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Samples per-bin activity: photon pairs and dark counts.
class BinSampler {
 public:
  explicit BinSampler(const SimConfig& cfg) : ch_(cfg.channel) {
    const SourceModel& s = cfg.source;
    std::vector<double> tail;  // P_s(m) for m >= 1
    if (s.kind() == SourceKind::poissonian) {
      const double lam = s.mean();
      p_any_ = -std::expm1(-lam);
      if (lam > 0.0) {
        double term = std::exp(-lam);
        double acc = 0.0;
        for (std::size_t m = 1;; ++m) {
          term *= lam / static_cast<double>(m);
          tail.push_back(term);
          acc += term;
          if (static_cast<double>(m) > lam && term < 1e-17 * acc) break;
        }
      }
    } else {
      const auto pmf = s.support();
      for (std::size_t m = 1; m < pmf.size(); ++m) tail.push_back(pmf[m]);
      p_any_ = 0.0;
      for (double v : tail) p_any_ += v;
    }
    double acc = 0.0;
    for (double v : tail) {
      acc += v;
      cdf_.push_back(acc);
    }
    const double log_idle = std::log1p(-p_any_) + std::log1p(-ch_.qA) + std::log1p(-ch_.qB);
    p_act_ = -std::expm1(log_idle);
    log_inactive_ = std::log1p(-p_act_);
    p_pairs_given_active_ = p_act_ > 0.0 ? p_any_ / p_act_ : 0.0;
    const double pd = ch_.qA + ch_.qB - ch_.qA * ch_.qB;
    p_dark_a_given_dark_ = pd > 0.0 ? ch_.qA / pd : 0.0;

    const auto& j = cfg.jitter.j;
    max_jump_ = cfg.jitter.max_jump();
    double c = 0.0;
    for (int n = 0; n <= max_jump_; ++n) {
      c += j[static_cast<std::size_t>(n)];
      jump_cdf_.push_back(c);
    }
  }

  bool idle() const { return !(p_act_ > 0.0); }

  /// Inactive bins before the next active one.
  double skip(std::mt19937_64& rng) const {
    if (p_act_ >= 1.0) return 0.0;
    const double u = 1.0 - u01(rng);  // (0, 1]
    return std::floor(std::log(u) / log_inactive_);
  }

  int pairs(std::mt19937_64& rng) const {
    const double u = u01(rng) * p_any_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto m = static_cast<int>(it - cdf_.begin()) + 1;
    return std::min(m, static_cast<int>(cdf_.size()));
  }

  int jump(std::mt19937_64& rng) const {
    if (max_jump_ == 0) return 0;
    const double u = u01(rng);
    for (int n = 0; n < max_jump_; ++n) {
      if (u < jump_cdf_[static_cast<std::size_t>(n)]) return n;
    }
    return max_jump_;
  }

  /// Fills one active bin at index t of the buffers.
  void active_bin(std::mt19937_64& rng, std::size_t t, std::vector<std::uint8_t>& a,
                  std::vector<std::uint8_t>& b) const {
    const std::size_t w = a.size();
    bool dark_a = false;
    bool dark_b = false;
    if (u01(rng) < p_pairs_given_active_) {
      const int m = pairs(rng);
      for (int i = 0; i < m; ++i) {
        if (ch_.etaA >= 1.0 || u01(rng) < ch_.etaA) {
          const std::size_t s = t + static_cast<std::size_t>(jump(rng));
          if (s < w) a[s] = 1;
        }
        if (ch_.etaB >= 1.0 || u01(rng) < ch_.etaB) {
          const std::size_t s = t + static_cast<std::size_t>(jump(rng));
          if (s < w) b[s] = 1;
        }
      }
      dark_a = u01(rng) < ch_.qA;
      dark_b = u01(rng) < ch_.qB;
    } else if (u01(rng) < p_dark_a_given_dark_) {
      dark_a = true;
      dark_b = u01(rng) < ch_.qB;
    } else {
      dark_b = true;
    }
    if (dark_a) a[t] = 1;
    if (dark_b) b[t] = 1;
  }

 private:
  ChannelConfig ch_;
  double p_any_ = 0.0;
  double p_act_ = 0.0;
  double log_inactive_ = 0.0;
  double p_pairs_given_active_ = 0.0;
  double p_dark_a_given_dark_ = 0.0;
  std::vector<double> cdf_;
  std::vector<double> jump_cdf_;
  int max_jump_ = 0;
};

void apply_deadtime(std::vector<std::uint8_t>& x, int md) {
  if (md <= 0) return;
  long last = -static_cast<long>(md) - 1;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!x[t]) continue;
    const long tt = static_cast<long>(t);
    if (tt - last >= md + 1) {
      last = tt;
    } else {
      x[t] = 0;
    }
  }
  // hard check: no two surviving clicks within md bins
  last = -static_cast<long>(md) - 1;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!x[t]) continue;
    if (static_cast<long>(t) - last <= md) throw std::logic_error("dead-time violated in simulated stream");
    last = static_cast<long>(t);
  }
}

std::uint64_t frames_in_chunk(const SimConfig& cfg, std::uint64_t chunk) {
  const std::uint64_t start = chunk * cfg.chunk_frames;
  return std::min(cfg.chunk_frames, cfg.n_frames - start);
}

/// Simulates warm-up plus the chunk's frames; returns the full buffers.
void run_chunk(const SimConfig& cfg, const BinSampler& sampler, std::uint64_t chunk, std::vector<std::uint8_t>& a,
               std::vector<std::uint8_t>& b) {
  const std::size_t warm = static_cast<std::size_t>(cfg.warmup_bins());
  const std::size_t w = warm + static_cast<std::size_t>(frames_in_chunk(cfg, chunk)) * cfg.frame_size;
  a.assign(w, 0);
  b.assign(w, 0);
  if (!sampler.idle()) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(chunk)));
    std::size_t t = 0;
    for (;;) {
      const double k = sampler.skip(rng);
      if (k >= static_cast<double>(w - t)) break;
      t += static_cast<std::size_t>(k);
      sampler.active_bin(rng, t, a, b);
      if (++t >= w) break;
    }
  }
  apply_deadtime(a, cfg.deadtime.md);
  apply_deadtime(b, cfg.deadtime.md);
}

}  // namespace

std::uint64_t chunk_count(const SimConfig& cfg) { return (cfg.n_frames + cfg.chunk_frames - 1) / cfg.chunk_frames; }

ChunkClicks simulate_chunk(const SimConfig& cfg, std::uint64_t chunk) {
  cfg.validate();
  if (chunk >= chunk_count(cfg)) throw std::out_of_range("chunk index beyond the configured frames");
  const BinSampler sampler(cfg);
  ChunkClicks out;
  run_chunk(cfg, sampler, chunk, out.a, out.b);
  const auto warm = static_cast<std::ptrdiff_t>(cfg.warmup_bins());
  out.a.erase(out.a.begin(), out.a.begin() + warm);
  out.b.erase(out.b.begin(), out.b.begin() + warm);
  out.first_bin = chunk * cfg.chunk_frames * static_cast<std::uint64_t>(cfg.frame_size);
  return out;
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  const BinSampler sampler(cfg);
  const int N = cfg.frame_size;
  const bool store_patterns = N <= 64;
  const bool store_cells = N <= cfg.max_cell_frame;
  const std::uint64_t chunks = chunk_count(cfg);
  std::vector<SimResult> parts(chunks);

  parallel_for(
      chunks,
      [&](std::size_t c) {
        std::vector<std::uint8_t> a, b;
        run_chunk(cfg, sampler, c, a, b);
        SimResult& r = parts[c];
        r.frame_size = N;
        r.n_frames = frames_in_chunk(cfg, c);
        if (store_cells) r.cells11.assign(static_cast<std::size_t>(N) * N, 0);
        const std::size_t warm = static_cast<std::size_t>(cfg.warmup_bins());
        for (std::uint64_t f = 0; f < r.n_frames; ++f) {
          const std::size_t base = warm + static_cast<std::size_t>(f) * N;
          int ka = 0, kb = 0, first_a = -1, first_b = -1;
          std::uint64_t ma = 0, mb = 0;
          for (int i = 0; i < N; ++i) {
            const int ca = a[base + i];
            const int cb = b[base + i];
            r.bin_joint[static_cast<std::size_t>(2 * ca + cb)] += 1;
            if (ca) {
              if (ka == 0) first_a = i;
              ++ka;
              if (store_patterns) ma |= std::uint64_t{1} << i;
            }
            if (cb) {
              if (kb == 0) first_b = i;
              ++kb;
              if (store_patterns) mb |= std::uint64_t{1} << i;
            }
          }
          r.class_counts[{ka, kb}] += 1;
          if (ka == 1 && kb == 1 && store_cells) {
            r.cells11[static_cast<std::size_t>(first_a) * N + first_b] += 1;
          }
          if (store_patterns && ka <= cfg.max_stored_clicks && kb <= cfg.max_stored_clicks) {
            r.pattern_pairs[{ka, kb}][{ma, mb}] += 1;
          }
        }
      },
      cfg.threads);

  SimResult total;
  total.frame_size = N;
  for (const SimResult& p : parts) total.merge(p);
  return total;
}

void write_tags(const SimConfig& cfg, std::ostream& out, TagFormat format) {
  cfg.validate();
  if (format == TagFormat::csv) out << "side,bin\n";
  const BinSampler sampler(cfg);
  const std::uint64_t chunks = chunk_count(cfg);
  const std::size_t warm = static_cast<std::size_t>(cfg.warmup_bins());
  auto emit = [&](std::uint8_t side, std::uint64_t bin) {
    if (format == TagFormat::csv) {
      out << (side == 0 ? 'A' : 'B') << ',' << bin << '\n';
      return;
    }
    char rec[9];
    rec[0] = static_cast<char>(side);
    for (int i = 0; i < 8; ++i) rec[1 + i] = static_cast<char>((bin >> (8 * i)) & 0xFFu);
    out.write(rec, 9);
  };
  std::vector<std::uint8_t> a, b;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    run_chunk(cfg, sampler, c, a, b);
    const std::uint64_t first = c * cfg.chunk_frames * static_cast<std::uint64_t>(cfg.frame_size);
    for (std::size_t t = warm; t < a.size(); ++t) {
      if (a[t]) emit(0, first + (t - warm));
      if (b[t]) emit(1, first + (t - warm));
    }
  }
}

CondMiEstimate estimate_cond_mi(const SimResult& result, int x, int y, std::uint64_t seed, int resamples) {
  const std::uint64_t n = result.count(x, y);
  if (n < 1000) {
    throw InsufficientSamples("class (" + std::to_string(x) + "," + std::to_string(y) + ") has " + std::to_string(n) +
                              " frames; at least 1000 are needed");
  }
  const auto it = result.pattern_pairs.find({x, y});
  if (it == result.pattern_pairs.end()) {
    throw DomainError("pattern pairs for class (" + std::to_string(x) + "," + std::to_string(y) + ") were not stored");
  }
  // index the observed cells once
  std::map<std::uint64_t, std::size_t> ra, rb;
  std::vector<std::size_t> ia, ib;
  std::vector<std::uint64_t> counts;
  for (const auto& [k, v] : it->second) {
    ra.emplace(k.first, ra.size());
    rb.emplace(k.second, rb.size());
    ia.push_back(ra.at(k.first));
    ib.push_back(rb.at(k.second));
    counts.push_back(v);
  }
  auto mi = [&](const std::vector<std::uint64_t>& c, double& plugin) {
    std::vector<double> ma(ra.size(), 0.0), mb(rb.size(), 0.0);
    double tot = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      ma[ia[i]] += static_cast<double>(c[i]);
      mb[ib[i]] += static_cast<double>(c[i]);
      tot += static_cast<double>(c[i]);
    }
    double h = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 0) continue;
      ++cells;
      const double v = static_cast<double>(c[i]);
      h += v * std::log(v * tot / (ma[ia[i]] * mb[ib[i]]));
    }
    const auto nz = [](const std::vector<double>& m) {
      return static_cast<double>(std::count_if(m.begin(), m.end(), [](double v) { return v > 0.0; }));
    };
    plugin = h / tot / kLn2;
    const double corr = ((nz(ma) - 1.0) + (nz(mb) - 1.0) - (static_cast<double>(cells) - 1.0)) / (2.0 * tot * kLn2);
    return plugin + corr;
  };

  CondMiEstimate est;
  est.samples = n;
  est.bits = mi(counts, est.plugin);

  std::mt19937_64 rng(splitmix64(seed));
  std::vector<std::uint64_t> draw(counts.size());
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < resamples; ++r) {
    std::uint64_t left = n;
    double p_left = 1.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double p = static_cast<double>(counts[i]) / static_cast<double>(n);
      if (left == 0 || i + 1 == counts.size()) {
        draw[i] = left;
      } else {
        const double q = std::clamp(p / p_left, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> bin(left, q);
        draw[i] = bin(rng);
      }
      left -= draw[i];
      p_left -= p;
    }
    double ignored = 0.0;
    const double v = mi(draw, ignored);
    s1 += v;
    s2 += v * v;
  }
  if (resamples > 1) {
    const double mean = s1 / resamples;
    est.stderr_bits = std::sqrt(std::max(0.0, (s2 - resamples * mean * mean) / (resamples - 1)));
  }
  return est;
}

}  // namespace tbinfo
