#pragma once

// Embedding pools: in-memory model, class prototypes, cosine similarities,
// the synthetic benchmark generator and the on-disk directory format.
//
// On-disk layout of a pool directory:
//   pool.json         manifest (format_version, n, d, k, class_names, dtype,
//                     files, optional checksums)
//   embeddings.f32    n x d float32, row-major, little-endian
//   similarities.f32  n x k float32
//   labels.i32        n int32
//   prototypes.f32    k x d float32 (optional)
// Checksums, when present, are "fnv1a64:<16 hex digits>" over the file bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sae/checkpoint.hpp"  // little-endian host check
#include "sae/numerics.hpp"

namespace sae {

inline constexpr int kPoolFormatVersion = 1;
inline constexpr double kUnitNormTolerance = 1e-5;
inline constexpr double kSimilaritySlack = 1e-6;

struct EmbeddingPool {
  std::size_t n = 0, d = 0, k = 0;
  std::vector<std::string> class_names;
  Matrix embeddings;    // n x d
  Matrix similarities;  // n x k
  std::vector<int> labels;
  std::optional<Matrix> prototypes;  // k x d

  friend bool operator==(const EmbeddingPool&, const EmbeddingPool&) = default;
};

// Mean of L2-normalized description embeddings; the mean itself is not
// re-normalized. `degenerate` is set when the mean is (numerically) zero.
inline Vector prototype_from_descriptions(std::span<const Vector> descriptions,
                                          bool* degenerate = nullptr) {
  if (descriptions.empty()) throw InvalidArgument("prototype_from_descriptions: empty list");
  const std::size_t d = descriptions.front().size();
  Vector mean(d, 0.0);
  for (const auto& v : descriptions) {
    if (v.size() != d) throw InvalidArgument("prototype_from_descriptions: dimension mismatch");
    const double norm = l2_norm(v);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw InvalidArgument("prototype_from_descriptions: zero or non-finite embedding");
    for (std::size_t j = 0; j < d; ++j) mean[j] += v[j] / norm;
  }
  for (double& m : mean) m /= static_cast<double>(descriptions.size());
  if (degenerate) *degenerate = l2_norm(mean) < 1e-12;
  return mean;
}

// s[i, c] = <x_i, prototype_c>
inline Matrix compute_similarities(const Matrix& embeddings, const Matrix& prototypes) {
  if (embeddings.cols() != prototypes.cols())
    throw InvalidArgument("compute_similarities: embedding dimension " +
                          std::to_string(embeddings.cols()) + " != prototype dimension " +
                          std::to_string(prototypes.cols()));
  Matrix s;
  matmul_abt(embeddings, prototypes, s);
  return s;
}

inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void quantize_f32(Matrix& m) {
  for (double& v : m.values()) v = to_f32(v);
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct SyntheticPoolConfig {
  std::size_t k = 5;
  std::size_t d = 64;
  // Per-class pool counts; a single entry is broadcast to every class.
  std::vector<std::size_t> n_per_class{400};
  std::vector<std::size_t> test_per_class{100};
  double intra_sigma = 0.35;  // per-coordinate std of sample noise
  double proto_noise = 0.15;  // per-coordinate std of prototype misalignment
  std::size_t descriptions_per_class = 1;
  std::uint64_t seed = 0;
};

struct SyntheticPools {
  EmbeddingPool pool;
  EmbeddingPool test;
  Matrix directions;  // k x d ground-truth class directions
  bool orthonormal = true;
  double max_pairwise_cosine = 0.0;
};

namespace detail {

inline std::size_t class_count(const std::vector<std::size_t>& counts, std::size_t c) {
  return counts.size() == 1 ? counts[0] : counts.at(c);
}

inline EmbeddingPool sample_split(const SyntheticPoolConfig& cfg, const Matrix& directions,
                                  const Matrix& prototypes,
                                  const std::vector<std::size_t>& counts, Rng& rng) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < cfg.k; ++c)
    labels.insert(labels.end(), class_count(counts, c), static_cast<int>(c));
  rng.shuffle(labels);
  EmbeddingPool p;
  p.n = labels.size();
  p.d = cfg.d;
  p.k = cfg.k;
  for (std::size_t c = 0; c < cfg.k; ++c) p.class_names.push_back("class_" + std::to_string(c));
  p.embeddings = Matrix(p.n, p.d);
  for (std::size_t i = 0; i < p.n; ++i) {
    auto row = p.embeddings.row(i);
    const auto dir = directions.row(static_cast<std::size_t>(labels[i]));
    for (std::size_t j = 0; j < p.d; ++j) row[j] = dir[j] + rng.normal(0.0, cfg.intra_sigma);
    const double norm = l2_norm(row);
    for (double& v : row) v /= norm;
  }
  quantize_f32(p.embeddings);
  p.similarities = compute_similarities(p.embeddings, prototypes);
  quantize_f32(p.similarities);
  p.labels = std::move(labels);
  p.prototypes = prototypes;
  return p;
}

}  // namespace detail

inline SyntheticPools generate_synthetic_pool(const SyntheticPoolConfig& cfg) {
  if (cfg.k < 2) throw InvalidArgument("generate_synthetic_pool: k must be >= 2");
  if (cfg.d < 2) throw InvalidArgument("generate_synthetic_pool: d must be >= 2");
  if (cfg.n_per_class.empty() || (cfg.n_per_class.size() != 1 && cfg.n_per_class.size() != cfg.k))
    throw InvalidArgument("generate_synthetic_pool: n_per_class needs 1 or k entries");
  if (cfg.test_per_class.empty() ||
      (cfg.test_per_class.size() != 1 && cfg.test_per_class.size() != cfg.k))
    throw InvalidArgument("generate_synthetic_pool: test_per_class needs 1 or k entries");
  if (cfg.intra_sigma < 0.0 || cfg.proto_noise < 0.0 || cfg.descriptions_per_class == 0)
    throw InvalidArgument("generate_synthetic_pool: invalid noise or description settings");

  Rng rng(cfg.seed);
  SyntheticPools out;
  out.orthonormal = cfg.k <= cfg.d;
  Matrix dirs(cfg.k, cfg.d);
  for (std::size_t c = 0; c < cfg.k; ++c) {
    auto row = dirs.row(c);
    for (double& v : row) v = rng.normal();
    if (out.orthonormal) {
      // Gram-Schmidt against earlier directions (applied twice for stability).
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t p = 0; p < c; ++p) {
          const double proj = dot(row, dirs.row(p));
          for (std::size_t j = 0; j < cfg.d; ++j) row[j] -= proj * dirs(p, j);
        }
    }
    const double norm = l2_norm(row);
    for (double& v : row) v /= norm;
  }
  for (std::size_t a = 0; a < cfg.k; ++a)
    for (std::size_t b = a + 1; b < cfg.k; ++b)
      out.max_pairwise_cosine = std::max(out.max_pairwise_cosine, dot(dirs.row(a), dirs.row(b)));

  Matrix protos(cfg.k, cfg.d);
  for (std::size_t c = 0; c < cfg.k; ++c) {
    std::vector<Vector> descs(cfg.descriptions_per_class, Vector(cfg.d));
    for (auto& desc : descs)
      for (std::size_t j = 0; j < cfg.d; ++j) desc[j] = dirs(c, j) + rng.normal(0.0, cfg.proto_noise);
    const Vector proto = prototype_from_descriptions(descs);
    std::copy(proto.begin(), proto.end(), protos.row(c).begin());
  }
  quantize_f32(protos);

  Rng pool_rng = rng.split(1), test_rng = rng.split(2);
  out.pool = detail::sample_split(cfg, dirs, protos, cfg.n_per_class, pool_rng);
  out.test = detail::sample_split(cfg, dirs, protos, cfg.test_per_class, test_rng);
  out.directions = std::move(dirs);
  return out;
}

// Fraction of samples whose most similar prototype is their own class.
inline double zero_shot_accuracy(const EmbeddingPool& p) {
  if (p.n == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < p.n; ++i)
    hits += static_cast<int>(argmax(p.similarities.row(i))) == p.labels[i];
  return static_cast<double>(hits) / static_cast<double>(p.n);
}

// ---------------------------------------------------------------------------
// Directory I/O

inline std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string checksum_string(std::span<const char> bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace detail {

namespace fs = std::filesystem;

// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const fs::path& path, std::span<const char> bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(tmp.string(), "cannot open for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

inline std::vector<char> read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError(path.filename().string(), 0, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::vector<char> encode_f32(const Matrix& m) {
  std::vector<char> out(m.size() * 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const float f = static_cast<float>(m.values()[i]);
    std::memcpy(out.data() + 4 * i, &f, 4);
  }
  return out;
}

inline std::vector<char> encode_i32(std::span<const int> v) {
  std::vector<char> out(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::int32_t x = v[i];
    std::memcpy(out.data() + 4 * i, &x, 4);
  }
  return out;
}

inline void expect_size(const std::string& file, const std::vector<char>& bytes,
                        std::uint64_t expected) {
  if (bytes.size() != expected)
    throw LoadError(file, std::min<std::uint64_t>(bytes.size(), expected),
                    "expected " + std::to_string(expected) + " bytes, found " +
                        std::to_string(bytes.size()));
}

inline Matrix decode_f32(const std::string& file, const std::vector<char>& bytes,
                         std::size_t rows, std::size_t cols) {
  expect_size(file, bytes, std::uint64_t{rows} * cols * 4);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + 4 * i, 4);
    if (!std::isfinite(f)) throw LoadError(file, 4 * i, "non-finite value");
    m.values()[i] = f;
  }
  return m;
}

}  // namespace detail

inline nlohmann::json pool_manifest(const EmbeddingPool& p) {
  nlohmann::json files = {{"embeddings", "embeddings.f32"},
                          {"similarities", "similarities.f32"},
                          {"labels", "labels.i32"}};
  if (p.prototypes) files["prototypes"] = "prototypes.f32";
  return {{"format_version", kPoolFormatVersion},
          {"n", p.n},
          {"d", p.d},
          {"k", p.k},
          {"class_names", p.class_names},
          {"dtype", "f32le"},
          {"files", files}};
}

inline void save_pool(const EmbeddingPool& p, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  nlohmann::json manifest = pool_manifest(p);
  nlohmann::json checksums = nlohmann::json::object();
  auto put = [&](const std::string& name, const std::vector<char>& bytes) {
    detail::write_file_atomic(dir / name, bytes);
    checksums[name] = checksum_string(bytes);
  };
  put("embeddings.f32", detail::encode_f32(p.embeddings));
  put("similarities.f32", detail::encode_f32(p.similarities));
  put("labels.i32", detail::encode_i32(p.labels));
  if (p.prototypes) put("prototypes.f32", detail::encode_f32(*p.prototypes));
  manifest["checksums"] = checksums;
  const std::string text = manifest.dump(2) + "\n";
  detail::write_file_atomic(dir / "pool.json", std::span(text.data(), text.size()));
}

inline EmbeddingPool load_pool(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const std::string mf = "pool.json";
  nlohmann::json m;
  {
    const auto bytes = detail::read_file(dir / mf);
    try {
      m = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(mf, 0, std::string("manifest is not valid JSON: ") + e.what());
    }
  }
  EmbeddingPool p;
  std::map<std::string, std::string> files, checksums;
  try {
    if (m.at("format_version").get<int>() != kPoolFormatVersion)
      throw LoadError(mf, 0, "unsupported format_version");
    if (m.at("dtype").get<std::string>() != "f32le")
      throw LoadError(mf, 0, "unsupported dtype (expected f32le)");
    p.n = m.at("n").get<std::size_t>();
    p.d = m.at("d").get<std::size_t>();
    p.k = m.at("k").get<std::size_t>();
    p.class_names = m.at("class_names").get<std::vector<std::string>>();
    files = m.at("files").get<std::map<std::string, std::string>>();
    if (m.contains("checksums")) checksums = m.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(mf, 0, std::string("malformed manifest: ") + e.what());
  }
  if (p.n == 0 || p.d == 0 || p.k < 2) throw LoadError(mf, 0, "n, d must be >= 1 and k >= 2");
  if (p.class_names.size() != p.k) throw LoadError(mf, 0, "class_names length differs from k");
  for (const char* role : {"embeddings", "similarities", "labels"})
    if (!files.contains(role)) throw LoadError(mf, 0, std::string("files.") + role + " missing");

  // Byte length is validated before the checksum so truncation reports sizes.
  auto read_role = [&](const std::string& role, std::uint64_t expected_bytes) {
    const std::string& name = files.at(role);
    if (name.find('/') != std::string::npos || name.find('\\') != std::string::npos)
      throw LoadError(mf, 0, "file names must be plain names inside the pool directory");
    auto bytes = detail::read_file(dir / name);
    detail::expect_size(name, bytes, expected_bytes);
    if (auto it = checksums.find(name); it != checksums.end() && it->second != checksum_string(bytes))
      throw LoadError(name, 0, "checksum mismatch (manifest " + it->second + ", file " +
                                   checksum_string(bytes) + ")");
    return std::pair(name, std::move(bytes));
  };

  {
    auto [name, bytes] = read_role("embeddings", std::uint64_t{p.n} * p.d * 4);
    p.embeddings = detail::decode_f32(name, bytes, p.n, p.d);
    for (std::size_t i = 0; i < p.n; ++i)
      if (std::abs(l2_norm(p.embeddings.row(i)) - 1.0) > kUnitNormTolerance)
        throw LoadError(name, std::uint64_t{i} * p.d * 4,
                        "row " + std::to_string(i) + " is not L2-normalized");
  }
  {
    auto [name, bytes] = read_role("similarities", std::uint64_t{p.n} * p.k * 4);
    p.similarities = detail::decode_f32(name, bytes, p.n, p.k);
    for (std::size_t i = 0; i < p.similarities.size(); ++i)
      if (std::abs(p.similarities.values()[i]) > 1.0 + kSimilaritySlack)
        throw LoadError(name, 4 * i, "similarity outside [-1, 1]");
  }
  {
    auto [name, bytes] = read_role("labels", std::uint64_t{p.n} * 4);
    p.labels.resize(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
      std::int32_t v;
      std::memcpy(&v, bytes.data() + 4 * i, 4);
      if (v < 0 || static_cast<std::size_t>(v) >= p.k)
        throw LoadError(name, 4 * i, "label out of range: " + std::to_string(v));
      p.labels[i] = v;
    }
  }
  if (files.contains("prototypes")) {
    auto [name, bytes] = read_role("prototypes", std::uint64_t{p.k} * p.d * 4);
    p.prototypes = detail::decode_f32(name, bytes, p.k, p.d);
  }
  return p;
}

}  // namespace sae
