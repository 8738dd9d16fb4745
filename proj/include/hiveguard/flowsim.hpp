#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hiveguard/errors.hpp"
#include "hiveguard/label.hpp"
#include "hiveguard/rng.hpp"

// Synthetic traffic traces. Legitimate requests arrive as a homogeneous
// Poisson process over the whole capture; a DDoS trace adds a second, much
// denser Poisson stream after the attack onset, drawn from a small source
// pool with a skewed country distribution.

namespace hiveguard {

enum class RequestKind { Legitimate, Attack };

inline const char* to_string(RequestKind k) {
  return k == RequestKind::Attack ? "attack" : "legitimate";
}

enum class Split { Train, Val };

inline const char* to_string(Split s) { return s == Split::Train ? "train" : "val"; }

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  throw FormatError("unknown split '" + std::string(s) + "'");
}

constexpr int kCountryCount = 64;

/// Fixed registry of synthetic two-letter country codes ("AA", "AB", ...).
inline std::string country_code(int index) {
  if (index < 0 || index >= kCountryCount)
    throw ConfigError("country index out of range: " + std::to_string(index));
  return {static_cast<char>('A' + index / 26), static_cast<char>('A' + index % 26)};
}

inline int parse_country_code(std::string_view code) {
  if (code.size() != 2 || code[0] < 'A' || code[0] > 'Z' || code[1] < 'A' || code[1] > 'Z')
    throw FormatError("bad country code '" + std::string(code) + "'");
  const int idx = (code[0] - 'A') * 26 + (code[1] - 'A');
  if (idx >= kCountryCount)
    throw FormatError("country code '" + std::string(code) + "' outside the registry");
  return idx;
}

struct FlowRecord {
  double timestamp = 0.0;  // seconds since capture start
  uint32_t src_ip = 0;
  int country = 0;  // index into the registry
  RequestKind kind = RequestKind::Legitimate;
};

struct TraceConfig {
  uint64_t seed = 1;
  Label label = Label::Normal;
  double capture_duration = 8.0;  // seconds
  double normal_rate = 6.0;       // mean requests/second
  double attack_rate = 60.0;      // mean requests/second after onset
  double attack_onset = 2.0;      // seconds
  int ip_pool_normal = 48;
  int ip_pool_attack = 6;
  double country_concentration = 0.7;  // (0,1]; higher = more skew

  void validate() const {
    if (capture_duration <= 0.0) throw ConfigError("trace: capture_duration must be positive");
    if (normal_rate < 0.0 || attack_rate < 0.0)
      throw ConfigError("trace: rates must be non-negative");
    if (attack_onset < 0.0 || attack_onset >= capture_duration)
      throw ConfigError("trace: attack_onset must lie in [0, capture_duration)");
    if (label == Label::DDoS && attack_rate <= normal_rate)
      throw ConfigError("trace: a DDoS trace needs attack_rate > normal_rate");
    if (ip_pool_normal < 1 || ip_pool_attack < 1)
      throw ConfigError("trace: IP pools must be non-empty");
    if (country_concentration <= 0.0 || country_concentration > 1.0)
      throw ConfigError("trace: country_concentration must be in (0,1]");
  }
};

namespace detail {

// Sub-seed streams of a trace seed.
enum : uint64_t {
  kStreamNormalArrivals = 1,
  kStreamAttackArrivals = 2,
  kStreamNormalPool = 3,
  kStreamAttackPool = 4,
  kStreamNormalPick = 5,
  kStreamAttackPick = 6,
  kStreamCountryPerm = 7,
  kStreamCountryMap = 8,
  kStreamJitter = 9,
  kStreamSplitAssign = 10,
};

/// Country of an IP under this trace's seed.
inline int seeded_country(uint64_t seed, uint32_t ip) {
  return static_cast<int>(mix_seed(mix_seed(seed, kStreamCountryMap), ip) %
                          static_cast<uint64_t>(kCountryCount));
}

/// Zipf CDF over a permuted country registry; exponent grows with the
/// configured concentration.
struct CountrySkew {
  std::array<int, kCountryCount> order;
  std::array<double, kCountryCount> cdf;

  CountrySkew(uint64_t seed, double concentration) {
    for (int i = 0; i < kCountryCount; ++i) order[static_cast<size_t>(i)] = i;
    std::vector<int> perm(order.begin(), order.end());
    Rng rng(mix_seed(seed, kStreamCountryPerm));
    rng.shuffle(perm);
    std::copy(perm.begin(), perm.end(), order.begin());
    const double s = 3.0 * concentration;
    double total = 0.0;
    for (int i = 0; i < kCountryCount; ++i) {
      total += std::pow(static_cast<double>(i + 1), -s);
      cdf[static_cast<size_t>(i)] = total;
    }
    for (double& v : cdf) v /= total;
  }

  int sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const size_t i = std::min(static_cast<size_t>(it - cdf.begin()),
                              static_cast<size_t>(kCountryCount - 1));
    return order[i];
  }
};

}  // namespace detail

/// Deterministic labeled trace, sorted by timestamp.
inline std::vector<FlowRecord> generate_trace(const TraceConfig& cfg) {
  cfg.validate();
  std::vector<FlowRecord> records;

  struct PoolEntry {
    uint32_t ip;
    int country;
  };

  // Legitimate stream over the whole capture.
  if (cfg.normal_rate > 0.0) {
    Rng pool_rng(mix_seed(cfg.seed, detail::kStreamNormalPool));
    std::vector<PoolEntry> pool(static_cast<size_t>(cfg.ip_pool_normal));
    for (PoolEntry& e : pool) {
      e.ip = static_cast<uint32_t>(pool_rng.next_u64());
      e.country = detail::seeded_country(cfg.seed, e.ip);
    }
    Rng arrivals(mix_seed(cfg.seed, detail::kStreamNormalArrivals));
    Rng pick(mix_seed(cfg.seed, detail::kStreamNormalPick));
    double t = 0.0;
    for (;;) {
      t += arrivals.exponential(cfg.normal_rate);
      if (t >= cfg.capture_duration) break;
      const PoolEntry& e = pool[static_cast<size_t>(pick.uniform_u64(pool.size()))];
      records.push_back({t, e.ip, e.country, RequestKind::Legitimate});
    }
  }

  // Attack stream after onset, from a small concentrated pool.
  if (cfg.label == Label::DDoS) {
    Rng pool_rng(mix_seed(cfg.seed, detail::kStreamAttackPool));
    const detail::CountrySkew skew(cfg.seed, cfg.country_concentration);
    std::vector<PoolEntry> pool(static_cast<size_t>(cfg.ip_pool_attack));
    for (PoolEntry& e : pool) {
      e.ip = static_cast<uint32_t>(pool_rng.next_u64());
      e.country = skew.sample(pool_rng);
    }
    Rng arrivals(mix_seed(cfg.seed, detail::kStreamAttackArrivals));
    Rng pick(mix_seed(cfg.seed, detail::kStreamAttackPick));
    double t = cfg.attack_onset;
    for (;;) {
      t += arrivals.exponential(cfg.attack_rate);
      if (t >= cfg.capture_duration) break;
      const PoolEntry& e = pool[static_cast<size_t>(pick.uniform_u64(pool.size()))];
      records.push_back({t, e.ip, e.country, RequestKind::Attack});
    }
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const FlowRecord& a, const FlowRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return records;
}

struct TraceSpec {
  std::string name;
  TraceConfig cfg;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<TraceSpec> entries;
};

/// Per-class trace specs with jittered rates/onset and a seeded, stratified
/// train/val split. Exactly n_per_class specs per label.
inline DatasetManifest generate_dataset(int n_per_class, const TraceConfig& base,
                                        double split_fraction) {
  if (n_per_class < 2) throw ConfigError("dataset: need at least 2 traces per class");
  if (split_fraction <= 0.0 || split_fraction >= 1.0)
    throw ConfigError("dataset: split fraction must lie in (0,1)");
  const int n_train = static_cast<int>(std::llround(n_per_class * split_fraction));
  if (n_train <= 0 || n_train >= n_per_class)
    throw ConfigError("dataset: split leaves an empty train or val partition");
  base.validate();

  DatasetManifest out;
  for (Label label : {Label::Normal, Label::DDoS}) {
    const uint64_t label_id = label == Label::DDoS ? 1 : 0;
    std::vector<int> order(static_cast<size_t>(n_per_class));
    for (int i = 0; i < n_per_class; ++i) order[static_cast<size_t>(i)] = i;
    Rng split_rng(mix_seed(base.seed, detail::kStreamSplitAssign, label_id));
    split_rng.shuffle(order);
    std::vector<Split> split_of(static_cast<size_t>(n_per_class), Split::Val);
    for (int i = 0; i < n_train; ++i)
      split_of[static_cast<size_t>(order[static_cast<size_t>(i)])] = Split::Train;

    for (int i = 0; i < n_per_class; ++i) {
      TraceConfig cfg = base;
      cfg.label = label;
      cfg.seed = mix_seed(base.seed, label_id, static_cast<uint64_t>(i));
      Rng jitter(mix_seed(cfg.seed, detail::kStreamJitter));
      cfg.normal_rate = base.normal_rate * jitter.uniform(0.7, 1.3);
      cfg.attack_rate = base.attack_rate * jitter.uniform(0.7, 1.3);
      if (label == Label::DDoS) {
        cfg.attack_onset = jitter.uniform(0.2, 0.6) * base.capture_duration;
        // keep the volumetric invariant after independent jitter
        cfg.attack_rate = std::max(cfg.attack_rate, cfg.normal_rate * 1.25);
      }
      char name[32];
      std::snprintf(name, sizeof(name), "%s_%04d", label == Label::DDoS ? "ddos" : "normal", i);
      out.entries.push_back({name, cfg, split_of[static_cast<size_t>(i)]});
    }
  }
  return out;
}

// ---- trace and manifest files ----

inline std::string format_ipv4(uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (ip >> 24) & 0xFF, (ip >> 16) & 0xFF,
                (ip >> 8) & 0xFF, ip & 0xFF);
  return buf;
}

inline uint32_t parse_ipv4(std::string_view s) {
  unsigned a, b, c, d;
  char tail;
  if (std::sscanf(std::string(s).c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 ||
      a > 255 || b > 255 || c > 255 || d > 255)
    throw FormatError("bad IPv4 address '" + std::string(s) + "'");
  return (a << 24) | (b << 16) | (c << 8) | d;
}

inline void write_trace(const std::filesystem::path& path,
                        const std::vector<FlowRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open trace file for writing: " + path.string());
  char line[96];
  for (const FlowRecord& r : records) {
    std::snprintf(line, sizeof(line), "%.6f\t%s\t%s\t%s\n", r.timestamp,
                  format_ipv4(r.src_ip).c_str(), country_code(r.country).c_str(),
                  to_string(r.kind));
    out << line;
  }
  if (!out) throw IoError("failed writing trace file: " + path.string());
}

inline std::vector<FlowRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  std::vector<FlowRecord> records;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    size_t start = 0, field = 0;
    const std::string_view sv(line);
    for (; field < 4; ++field) {
      const size_t tab = sv.find('\t', start);
      if (tab == std::string_view::npos) {
        if (field != 3) break;
        fields[field] = sv.substr(start);
        ++field;
        break;
      }
      fields[field] = sv.substr(start, tab - start);
      start = tab + 1;
    }
    if (field != 4)
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
    FlowRecord r;
    try {
      r.timestamp = std::stod(std::string(fields[0]));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad timestamp");
    }
    r.src_ip = parse_ipv4(fields[1]);
    r.country = parse_country_code(fields[2]);
    if (fields[3] == "attack")
      r.kind = RequestKind::Attack;
    else if (fields[3] == "legitimate")
      r.kind = RequestKind::Legitimate;
    else
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad request kind");
    records.push_back(r);
  }
  return records;
}

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  Label label = Label::Normal;
  Split split = Split::Train;
};

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open manifest for writing: " + path.string());
  for (const ManifestEntry& e : entries)
    out << e.path << '\t' << to_string(e.label) << '\t' << to_string(e.split) << '\n';
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string_view sv(line);
    const size_t t1 = sv.find('\t');
    const size_t t2 = t1 == std::string_view::npos ? t1 : sv.find('\t', t1 + 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 3 tab-separated fields");
    ManifestEntry e;
    e.path = std::string(sv.substr(0, t1));
    e.label = parse_label(sv.substr(t1 + 1, t2 - t1 - 1));
    e.split = parse_split(sv.substr(t2 + 1));
    entries.push_back(e);
  }
  return entries;
}

/// Materialize a dataset: one trace file per spec plus `manifest.tsv`.
inline std::filesystem::path write_dataset(const DatasetManifest& dataset,
                                           const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (ec) throw IoError("cannot create dataset directory: " + (dir / "traces").string());
  std::vector<ManifestEntry> entries;
  for (const TraceSpec& spec : dataset.entries) {
    const std::string rel = "traces/" + spec.name + ".trace";
    write_trace(dir / rel, generate_trace(spec.cfg));
    entries.push_back({rel, spec.cfg.label, spec.split});
  }
  const fs::path manifest = dir / "manifest.tsv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace hiveguard
