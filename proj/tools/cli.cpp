#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tbinfo/deadtime.hpp"
#include "tbinfo/detection.hpp"
#include "tbinfo/errors.hpp"
#include "tbinfo/frames.hpp"
#include "tbinfo/jitter.hpp"
#include "tbinfo/montecarlo.hpp"
#include "tbinfo/parallel.hpp"

namespace tbinfo::cli {
namespace {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json defaults() {
  return {
      {"preset", ""},
      {"lambda", 5.33e-5},
      {"pmf", json::array()},
      {"etaA", 0.7},
      {"etaB", 0.7},
      {"qA", 6.53e-8},
      {"qB", 6.53e-8},
      {"jitter", {1.0}},
      {"md", 0},
      {"N", 1000},
      {"N_start", 0},
      {"N_stop", 0},
      {"N_step", 1},
      {"N_log_count", 0},
      {"classes", {{1, 1}, {2, 2}}},
      {"objective", "11"},
      {"format", "csv"},
      {"output", ""},
      {"seed", 1},
      {"frames", 1000000},
      {"chunk_frames", 65536},
      {"resamples", 200},
      {"threads", 0},
      {"tags", ""},
      {"tag_format", "csv"},
  };
}

json preset(const std::string& name) {
  if (name == "spad") {
    return {{"etaA", 0.7}, {"etaB", 0.7}, {"qA", 6.53e-8}, {"qB", 6.53e-8}, {"jitter", {0.9, 0.1}}, {"md", 230}};
  }
  if (name == "nanowire") {
    return {{"etaA", 0.9}, {"etaB", 0.9}, {"qA", 1.3e-10}, {"qB", 1.3e-10}, {"jitter", {0.97, 0.03}}, {"md", 154}};
  }
  throw ConfigError("unknown preset '" + name + "' (known: spad, nanowire)");
}

template <class T>
T get(const json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

// ------------------------------------------------------------------ model

struct Model {
  SourceModel source = SourceModel::poissonian(0.0);
  ChannelConfig channel;
  JitterProfile jitter;
  int md = 0;
  BinProbabilities bins;
  PairRates rates;
  std::vector<FrameClass> classes;
  unsigned threads = 0;

  bool jittered() const { return jitter.max_jump() > 0; }
};

Model make_model(const json& cfg) {
  Model m;
  const auto pmf = get<std::vector<double>>(cfg, "pmf");
  const double lambda = get<double>(cfg, "lambda");
  try {
    m.source = pmf.empty() ? SourceModel::poissonian(lambda) : SourceModel::generic(pmf);
    m.channel = {get<double>(cfg, "etaA"), get<double>(cfg, "etaB"), get<double>(cfg, "qA"), get<double>(cfg, "qB")};
    m.channel.validate();
    m.jitter = JitterProfile{get<std::vector<double>>(cfg, "jitter")};
    m.jitter.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  m.md = get<int>(cfg, "md");
  if (m.md < 0) throw ConfigError("md must be >= 0");
  for (const auto& c : get<std::vector<std::vector<int>>>(cfg, "classes")) {
    if (c.size() != 2 || c[0] < 0 || c[1] < 0) throw ConfigError("classes must be [x, y] pairs with x, y >= 0");
    m.classes.push_back({c[0], c[1]});
  }
  if (m.classes.empty()) throw ConfigError("at least one frame class is required");
  const int threads = get<int>(cfg, "threads");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  m.threads = static_cast<unsigned>(threads);
  m.bins = bin_probs(m.source, m.channel);
  m.rates = pair_rates(m.source.mean(), m.channel);
  return m;
}

std::vector<int> frame_sizes(const json& cfg) {
  const long stop = get<long>(cfg, "N_stop");
  if (stop == 0) {
    const int N = get<int>(cfg, "N");
    if (N < 1) throw ConfigError("N must be >= 1");
    return {N};
  }
  const long start = get<long>(cfg, "N_start");
  const long step = get<long>(cfg, "N_step");
  const int count = get<int>(cfg, "N_log_count");
  if (start < 1 || stop < start) throw ConfigError("sweep range needs 1 <= N_start <= N_stop");
  if (stop > std::numeric_limits<int>::max()) throw ConfigError("N_stop too large");
  std::vector<int> Ns;
  if (count > 0) {
    for (int k = 0; k < count; ++k) {
      const double t = count == 1 ? 0.0 : k / (count - 1.0);
      const int N = static_cast<int>(std::lround(start * std::pow(static_cast<double>(stop) / start, t)));
      if (Ns.empty() || N != Ns.back()) Ns.push_back(N);
    }
  } else {
    if (step < 1) throw ConfigError("N_step must be >= 1");
    for (long N = start; N <= stop; N += step) Ns.push_back(static_cast<int>(N));
  }
  return Ns;
}

void check_classes(const Model& m, int smallest_N) {
  for (const auto& c : m.classes) {
    if (c.x > smallest_N || c.y > smallest_N) {
      throw ConfigError("class (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") is invalid for N=" +
                        std::to_string(smallest_N));
    }
  }
}

// (1,1) bits per detected pair under the configured jitter
JitterEvents events(const Model& m) { return jitter_events(m.bins, m.jitter, false); }

double bits11(const Model& m, int N) {
  if (m.jittered()) return h_d_jitter(N, events(m), m.rates, true);
  if (m.md > 0) return bits_per_pair_deadtime_11(N, m.bins, m.rates, m.md).detected;
  return bits_per_pair_11(N, m.bins, m.rates).detected;
}

double pclass11(const Model& m, int N) {
  if (m.jittered()) {
    double p = 0.0;
    for (const auto& c : pattern_probs_exact(N, events(m))) p += c.multiplicity * c.prob;
    return p;
  }
  return p_kk(N, 1, 1, m.bins);
}

double bits22(const Model& m, int N) {
  if (m.md > 0) {
    if (allowed_two_click_count(N, m.md) == 0) return kNaN;
    return bits_per_pair_deadtime_22(N, m.bins, m.rates, m.md).detected;
  }
  return N < 4 ? kNaN : bits_per_pair_22(N, m.bins, m.rates).detected;
}

double pclass22(const Model& m, int N) {
  if (N < 2) return 0.0;
  if (m.md > 0) return deadtime_class_prob(N, 2, 2, overlap_counts_22(N, m.md), m.bins, m.md);
  return p_kk(N, 2, 2, m.bins);
}

double bits_class(const Model& m, int N, FrameClass c) {
  if (c.x == 1 && c.y == 1) return bits11(m, N);
  if (c.x == 2 && c.y == 2) return bits22(m, N);
  if (m.md > 0) {
    const auto counts = overlap_counts(N, c.x, c.y, m.md);
    const double p = deadtime_class_prob(N, c.x, c.y, counts, m.bins, m.md);
    if (p == 0.0) return 0.0;
    return p * cond_mi_deadtime(c.x, c.y, counts, m.bins) / (N * m.rates.detected);
  }
  return bits_per_pair(N, c, m.bins, m.rates).detected;
}

double objective(const Model& m, int N, const std::string& which) {
  if (which == "11") return bits11(m, N);
  if (which == "22") return bits22(m, N);
  double total = 0.0;
  for (const auto& c : m.classes) total += bits_class(m, N, c);
  return total;
}

// ------------------------------------------------------------------ tables

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << csv_field(t.header[i]);
  os << "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) os << format_double(v);
            else if constexpr (std::is_same_v<T, long long>) os << v;
            else os << csv_field(v);
          },
          row[i]);
    }
    os << "\r\n";
  }
}

void write_json(const Table& t, const json& cfg, std::ostream& os) {
  json doc;
  doc["config"] = cfg;
  doc["rows"] = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) r[t.header[i]] = v;
              else r[t.header[i]] = nullptr;
            } else {
              r[t.header[i]] = v;
            }
          },
          row[i]);
    }
    doc["rows"].push_back(std::move(r));
  }
  os << doc.dump(2) << '\n';
}

void emit(const Table& t, const json& cfg, std::ostream& out) {
  const auto format = get<std::string>(cfg, "format");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  const auto path = get<std::string>(cfg, "output");
  std::ofstream file;
  std::ostream* os = &out;
  if (!path.empty()) {
    file.open(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output file " + path);
    os = &file;
  }
  if (format == "csv") write_csv(t, *os);
  else write_json(t, cfg, *os);
}

std::string u128_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

// ------------------------------------------------------------------ commands

Table cmd_bin_probs(const json& cfg) {
  const Model m = make_model(cfg);
  const auto& b = m.bins;
  Table t{{"p00", "p0c", "pc0", "pcc", "pA0", "pAc", "pB0", "pBc", "pairs_generated", "pairs_detected"}, {}};
  t.rows.push_back({b.p00, b.p0c, b.pc0, b.pcc, b.pA0, b.pAc, b.pB0, b.pBc, m.rates.generated, m.rates.detected});
  return t;
}

const std::vector<std::string> kSweepHeader{"N",      "bits_11_detected", "bits_22_detected", "bits_total",
                                            "h_kk",   "pClass_11",        "pClass_22"};

std::vector<Cell> sweep_row(const Model& m, int N) {
  double total = 0.0;
  for (const auto& c : m.classes) total += bits_class(m, N, c);
  return {static_cast<long long>(N), bits11(m, N), bits22(m, N), total, h_kk(N, m.bins).joint, pclass11(m, N),
          pclass22(m, N)};
}

Table cmd_sweep(const json& cfg, bool single) {
  const Model m = make_model(cfg);
  std::vector<int> Ns = frame_sizes(cfg);
  if (single) Ns = {get<int>(cfg, "N")};
  check_classes(m, *std::min_element(Ns.begin(), Ns.end()));
  Table t{kSweepHeader, std::vector<std::vector<Cell>>(Ns.size())};
  parallel_for(Ns.size(), [&](std::size_t i) { t.rows[i] = sweep_row(m, Ns[i]); }, m.threads);
  return t;
}

struct Optimum {
  int N = 0;
  double bits = 0.0;
  bool at_boundary = false;
};

Optimum optimize(const Model& m, std::vector<int> grid, const std::string& which) {
  auto evaluate = [&](const std::vector<int>& Ns) {
    std::vector<double> v(Ns.size());
    parallel_for(Ns.size(), [&](std::size_t i) { v[i] = objective(m, Ns[i], which); }, m.threads);
    return v;
  };
  // strict improvement keeps the smaller N on ties
  auto best_of = [](const std::vector<double>& v) {
    std::size_t k = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[k] || (std::isnan(v[k]) && !std::isnan(v[i]))) k = i;
    return k;
  };
  const int first = grid.front();
  const int last = grid.back();
  for (;;) {
    const auto v = evaluate(grid);
    const std::size_t k = best_of(v);
    const int lo = grid[k == 0 ? 0 : k - 1];
    const int hi = grid[k + 1 == grid.size() ? k : k + 1];
    std::vector<int> next;
    if (hi - lo <= 512) {
      for (int N = lo; N <= hi; ++N) next.push_back(N);
      const auto w = evaluate(next);
      const std::size_t j = best_of(w);
      return {next[j], w[j], next[j] == first || next[j] == last};
    }
    for (int i = 0; i <= 128; ++i) {
      const int N = lo + static_cast<int>(std::lround((hi - lo) * (i / 128.0)));
      if (next.empty() || N != next.back()) next.push_back(N);
    }
    grid = std::move(next);
  }
}

Table cmd_optimize(const json& cfg, std::ostream& err) {
  const Model m = make_model(cfg);
  const auto which = get<std::string>(cfg, "objective");
  if (which != "11" && which != "22" && which != "total") throw ConfigError("objective must be 11, 22 or total");
  const auto grid = frame_sizes(cfg);
  check_classes(m, grid.front());
  const Optimum o = optimize(m, grid, which);
  if (o.at_boundary) {
    err << "warning: optimum N=" << o.N << " lies on the sweep boundary; the objective may keep rising outside it\n";
  }
  return {{"objective", "N_star", "bits_per_detected_pair", "at_boundary"},
          {{which, static_cast<long long>(o.N), o.bits, static_cast<long long>(o.at_boundary)}}};
}

Table cmd_deadtime(const json& cfg) {
  const Model m = make_model(cfg);
  const auto Ns = frame_sizes(cfg);
  Table t{{"N", "md", "allowed_2click_patterns", "pClass_22", "cond_mi_22", "bits_22_detected", "bits_22_md0",
           "bits_11_detected"},
          std::vector<std::vector<Cell>>(Ns.size())};
  parallel_for(Ns.size(), [&](std::size_t i) {
    const int N = Ns[i];
    const u128 V = allowed_two_click_count(N, m.md);
    const bool ok = V > 0;
    const double b0 = N >= 4 ? bits_per_pair_22(N, m.bins, m.rates).detected : kNaN;
    const double b11 = N > m.md && N >= 2 ? bits_per_pair_deadtime_11(N, m.bins, m.rates, m.md).detected : kNaN;
    t.rows[i] = {static_cast<long long>(N),
                 static_cast<long long>(m.md),
                 u128_string(V),
                 ok ? pclass22(m, N) : 0.0,
                 ok ? cond_mi_deadtime_22(N, m.bins, m.md) : kNaN,
                 ok ? bits_per_pair_deadtime_22(N, m.bins, m.rates, m.md).detected : kNaN,
                 b0,
                 b11};
  }, m.threads);
  return t;
}

Table cmd_jitter(const json& cfg) {
  const Model m = make_model(cfg);
  const auto Ns = frame_sizes(cfg);
  const auto ev = events(m);
  Table t{{"N", "J0", "bits_11_exact", "bits_11_approx", "bits_11_no_jitter", "pClass_11"},
          std::vector<std::vector<Cell>>(Ns.size())};
  parallel_for(Ns.size(), [&](std::size_t i) {
    const int N = Ns[i];
    double p = 0.0;
    for (const auto& c : pattern_probs_exact(N, ev)) p += c.multiplicity * c.prob;
    t.rows[i] = {static_cast<long long>(N), m.jitter.J(0), h_d_jitter(N, ev, m.rates, true),
                 N >= 6 ? h_d_jitter(N, ev, m.rates, false) : kNaN, bits_per_pair_11(N, m.bins, m.rates).detected, p};
  }, m.threads);
  return t;
}

Table cmd_jitter_compare(const json& cfg) {
  const Model m = make_model(cfg);
  const auto Ns = frame_sizes(cfg);
  if (Ns.front() < 6) throw ConfigError("jitter-compare needs N >= 6");
  Table t{{"N", "H_exact", "H_approx", "pct_diff"}, {}};
  for (const auto& r : jitter_compare(Ns, events(m), m.rates))
    t.rows.push_back({static_cast<long long>(r.N), r.exact, r.approx, r.pct_diff});
  return t;
}

SimConfig sim_config(const Model& m, const json& cfg) {
  SimConfig s;
  s.source = m.source;
  s.channel = m.channel;
  s.jitter = m.jitter;
  s.deadtime.md = m.md;
  s.frame_size = get<int>(cfg, "N");
  s.n_frames = get<std::uint64_t>(cfg, "frames");
  s.seed = get<std::uint64_t>(cfg, "seed");
  s.chunk_frames = get<std::uint64_t>(cfg, "chunk_frames");
  s.threads = m.threads;
  int most = 0;
  for (const auto& c : m.classes) most = std::max({most, c.x, c.y});
  s.max_stored_clicks = std::max(3, most);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

Table cmd_simulate(const json& cfg, std::ostream& err) {
  const Model m = make_model(cfg);
  const SimConfig s = sim_config(m, cfg);
  check_classes(m, s.frame_size);
  const int resamples = get<int>(cfg, "resamples");
  if (resamples < 2) throw ConfigError("resamples must be >= 2");

  const auto tags = get<std::string>(cfg, "tags");
  if (!tags.empty()) {
    const auto tf = get<std::string>(cfg, "tag_format");
    if (tf != "csv" && tf != "binary") throw ConfigError("tag_format must be csv or binary");
    std::ofstream f(tags, std::ios::binary);
    if (!f) throw ConfigError("cannot open tag file " + tags);
    write_tags(s, f, tf == "csv" ? TagFormat::csv : TagFormat::binary);
  }

  const SimResult r = simulate(s);
  const int N = s.frame_size;
  const double n = static_cast<double>(r.n_frames);
  // analytic side only where the closed forms describe the simulated process
  const bool plain = !m.jittered() && m.md == 0;
  const bool jitter_bins = m.jittered() && m.md == 0 && m.jitter.max_jump() <= 1;

  Table t{{"quantity", "observed", "expected", "stderr", "z"}, {}};
  auto add = [&](const std::string& name, double obs, double want, double se) {
    t.rows.push_back({name, obs, want, se, se > 0 && std::isfinite(want) ? (obs - want) / se : kNaN});
  };
  auto freq = [&](const std::string& name, double count, double trials, double p) {
    const double obs = count / trials;
    const double se = std::isfinite(p) ? std::sqrt(p * (1 - p) / trials) : std::sqrt(obs * (1 - obs) / trials);
    add(name, obs, p, se);
  };

  double bins[4] = {kNaN, kNaN, kNaN, kNaN};
  if (plain) {
    bins[0] = m.bins.p00, bins[1] = m.bins.p0c, bins[2] = m.bins.pc0, bins[3] = m.bins.pcc;
  } else if (jitter_bins) {
    const auto ev = events(m);
    bins[3] = ev.p11;
    bins[2] = ev.alice.p1 - ev.p11;
    bins[1] = ev.bob.p1 - ev.p11;
    bins[0] = 1.0 - ev.alice.p1 - ev.bob.p1 + ev.p11;
  }
  const char* names[4] = {"P00", "P0c", "Pc0", "Pcc"};
  for (int i = 0; i < 4; ++i) freq(names[i], static_cast<double>(r.bin_joint[i]), n * N, bins[i]);

  for (int x = 0; x <= std::min(3, N); ++x)
    for (int y = 0; y <= std::min(3, N); ++y)
      freq("pClass_" + std::to_string(x) + "_" + std::to_string(y), static_cast<double>(r.count(x, y)), n,
           plain ? p_kk(N, x, y, m.bins) : kNaN);

  for (const auto& c : m.classes) {
    CondMiEstimate e;
    try {
      e = estimate_cond_mi(r, c.x, c.y, s.seed, resamples);
    } catch (const InsufficientSamples& ex) {
      throw InsufficientSamples("class (" + std::to_string(c.x) + "," + std::to_string(c.y) + "): " + ex.what());
    }
    const double want = plain && p_kk(N, c.x, c.y, m.bins) > 0 ? cond_mi(N, c.x, c.y, m.bins) : kNaN;
    add("cond_mi_" + std::to_string(c.x) + "_" + std::to_string(c.y), e.bits, want, e.stderr_bits);
  }
  if (!plain) err << "note: expected values are shown only where the closed forms describe the simulated process\n";
  return t;
}

// ------------------------------------------------------------------ parsing

void add_common(CLI::App* sub, json& flags) {
  auto num = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<double>(flag, [&flags, key](const double& v) { flags[key] = v; }, help);
  };
  auto integer = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<long long>(flag, [&flags, key](const long long& v) { flags[key] = v; }, help);
  };
  auto text = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  text("--preset", "preset", "named detector preset: spad or nanowire");
  num("--lambda", "lambda", "mean pairs per bin (Poissonian source)");
  sub->add_option_function<std::vector<double>>(
      "--pmf", [&flags](const std::vector<double>& v) { flags["pmf"] = v; }, "explicit pair-number PMF p0 p1 ...");
  sub->add_option_function<double>(
      "--eta", [&flags](const double& v) { flags["etaA"] = v, flags["etaB"] = v; }, "detection efficiency, both sides");
  num("--etaA", "etaA", "Alice detection efficiency");
  num("--etaB", "etaB", "Bob detection efficiency");
  sub->add_option_function<double>(
      "--q", [&flags](const double& v) { flags["qA"] = v, flags["qB"] = v; }, "dark-count probability, both sides");
  num("--qA", "qA", "Alice dark-count probability per bin");
  num("--qB", "qB", "Bob dark-count probability per bin");
  sub->add_option_function<double>(
      "--J0", [&flags](const double& v) { flags["jitter"] = {v, 1.0 - v}; }, "two-point jitter: stay probability");
  sub->add_option_function<std::vector<double>>(
      "--jitter", [&flags](const std::vector<double>& v) { flags["jitter"] = v; }, "jitter profile J0 J1 ...");
  integer("--md", "md", "dead-time in bins");
  integer("--N", "N", "frame size");
  integer("--N-start", "N_start", "sweep start");
  integer("--N-stop", "N_stop", "sweep stop (0: single N)");
  integer("--N-step", "N_step", "linear sweep step");
  integer("--N-log-count", "N_log_count", "log-spaced sweep points (0: linear)");
  sub->add_option_function<std::string>(
      "--classes",
      [&flags](const std::string& v) {
        json cls = json::array();
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ';')) {
          int x = 0, y = 0;
          char comma = 0;
          std::stringstream is(item);
          if (!(is >> x >> comma >> y) || comma != ',') throw CLI::ValidationError("--classes", "expected x,y;x,y...");
          cls.push_back({x, y});
        }
        flags["classes"] = cls;
      },
      "frame classes, e.g. \"1,1;2,2\"");
  text("--objective", "objective", "optimize target: 11, 22 or total");
  text("--format", "format", "csv or json");
  text("--output", "output", "output file (default stdout)");
  integer("--seed", "seed", "Monte Carlo seed");
  integer("--frames", "frames", "Monte Carlo frames");
  integer("--chunk-frames", "chunk_frames", "frames per Monte Carlo chunk");
  integer("--resamples", "resamples", "bootstrap resamples");
  integer("--threads", "threads", "worker threads (0: TBINFO_THREADS or hardware)");
  text("--tags", "tags", "write the click tag stream to this file");
  text("--tag-format", "tag_format", "tag stream format: csv or binary");
}

json resolve(const std::string& config_path, const json& flags) {
  json file = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path);
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + config_path + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold one JSON object");
  }
  json cfg = defaults();
  for (const json* src : {static_cast<const json*>(&file), &flags})
    for (const auto& [k, v] : src->items())
      if (!cfg.contains(k)) throw ConfigError("unknown config key '" + k + "'");

  std::string name = flags.value("preset", file.value("preset", std::string()));
  if (!name.empty()) {
    const json p = preset(name);
    for (const auto& [k, v] : p.items()) cfg[k] = v;
  }
  for (const json* src : {static_cast<const json*>(&file), &flags})
    for (const auto& [k, v] : src->items()) cfg[k] = v;
  cfg["preset"] = name;
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-bin entanglement information calculator"};
  app.require_subcommand(1);
  json flags = json::object();
  std::string config_path;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"bin-probs", "joint and marginal click probabilities of one bin"},
      {"frame-info", "information report for one frame size"},
      {"sweep", "bits per pair over a range of frame sizes"},
      {"optimize", "frame size maximising bits per detected pair"},
      {"deadtime", "(2,2) information with and without dead-time"},
      {"jitter", "(1,1) information with jitter"},
      {"jitter-compare", "exact against approximate jittered (1,1) information"},
      {"simulate", "Monte Carlo run with analytic side-by-side"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "JSON config file with flat keys");
    add_common(sub, flags);
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? Exit::ok : Exit::config_error;
    }
    const json cfg = resolve(config_path, flags);
    const std::string cmd = app.get_subcommands().front()->get_name();
    Table t;
    if (cmd == "bin-probs") t = cmd_bin_probs(cfg);
    else if (cmd == "frame-info") t = cmd_sweep(cfg, true);
    else if (cmd == "sweep") t = cmd_sweep(cfg, false);
    else if (cmd == "optimize") t = cmd_optimize(cfg, err);
    else if (cmd == "deadtime") t = cmd_deadtime(cfg);
    else if (cmd == "jitter") t = cmd_jitter(cfg);
    else if (cmd == "jitter-compare") t = cmd_jitter_compare(cfg);
    else t = cmd_simulate(cfg, err);
    emit(t, cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return Exit::domain_error;
  } catch (const InsufficientSamples& e) {
    err << "insufficient samples: " << e.what() << '\n';
    return Exit::insufficient_samples;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return Exit::config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return Exit::ok;
}

}  // namespace tbinfo::cli
