#include <progshot/retrieval.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <numeric>
#include <random>

#if defined(__linux__)
#include <sys/mman.h>
#endif

#include <progshot/annotator.hpp>
#include <progshot/corpus.hpp>
#include <progshot/error.hpp>

#include "common/util.hpp"

namespace progshot {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::most_similar: return "most_similar";
    case Strategy::random: return "random";
    case Strategy::least_similar: return "least_similar";
  }
  return "most_similar";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "most_similar" || s == "most") return Strategy::most_similar;
  if (s == "random") return Strategy::random;
  if (s == "least_similar" || s == "least") return Strategy::least_similar;
  throw Error(ErrorCode::config_error, "unknown strategy '" + std::string(s) + "'");
}

namespace {

constexpr std::size_t kLanes = 16;

template <bool>
inline __attribute__((always_inline)) float dot_lanes(const float* a, const float* b, std::size_t n) {
  float acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] += a[i + j] * b[i + j];
  }
  for (std::size_t j = 0; i < n; ++i, ++j) acc[j] += a[i] * b[i];
  float total = 0.0f;
  for (float x : acc) total += x;
  return total;
}

#if defined(__x86_64__) && defined(__GNUC__)
__attribute__((target("avx2"))) float dot_avx2(const float* a, const float* b, std::size_t n) {
  return dot_lanes<true>(a, b, n);
}

using DotFn = float (*)(const float*, const float*, std::size_t);

DotFn pick_dot() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return dot_avx2;
  return dot_lanes<false>;
}

const DotFn kDot = pick_dot();
#endif

}  // namespace

namespace detail {

void* row_alloc(std::size_t bytes) {
  constexpr std::size_t kHuge = std::size_t{1} << 21;
  if (bytes < kHuge) {
    if (void* p = std::malloc(bytes ? bytes : 1)) return p;
    throw std::bad_alloc();
  }
  const std::size_t rounded = (bytes + kHuge - 1) / kHuge * kHuge;
  void* p = std::aligned_alloc(kHuge, rounded);
  if (!p) throw std::bad_alloc();
#if defined(__linux__)
  madvise(p, rounded, MADV_HUGEPAGE);
#endif
  return p;
}

void row_free(void* p) noexcept { std::free(p); }

}  // namespace detail

float dot(const float* a, const float* b, std::size_t n) {
#if defined(__x86_64__) && defined(__GNUC__)
  return kDot(a, b, n);
#else
  return dot_lanes<false>(a, b, n);
#endif
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const double nu = std::sqrt(static_cast<double>(dot(u.data(), u.data(), u.size())));
  const double nv = std::sqrt(static_cast<double>(dot(v.data(), v.data(), v.size())));
  if (!(nu > 0.0) || !(nv > 0.0)) throw Error(ErrorCode::zero_vector, "cosine of a zero vector");
  const double d = dot(u.data(), v.data(), u.size());
  // Unit inputs return the raw dot product, matching index scores bit for bit.
  if (std::fabs(nu - 1.0) < 1e-6 && std::fabs(nv - 1.0) < 1e-6) return d;
  return std::clamp(d / (nu * nv), -1.0, 1.0);
}

VectorIndex::VectorIndex(EmbeddingSpec spec, std::size_t dim) : spec_(std::move(spec)), dim_(dim) {}

void VectorIndex::add(std::string id, std::span<const float> vec) {
  if (vec.size() != dim_) {
    throw Error(ErrorCode::dimension_mismatch,
                "index dim " + std::to_string(dim_) + ", vector dim " + std::to_string(vec.size()));
  }
  if (by_id_.contains(id)) throw Error(ErrorCode::malformed_record, "duplicate index id " + id);
  by_id_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> VectorIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

void VectorIndex::scores(std::span<const float> query, std::vector<float>& out) const {
  if (query.size() != dim_) {
    throw Error(ErrorCode::dimension_mismatch,
                "index dim " + std::to_string(dim_) + ", query dim " + std::to_string(query.size()));
  }
  out.resize(ids_.size());
  const float* q = query.data();
  const float* row = data_.data();
  for (std::size_t i = 0; i < ids_.size(); ++i, row += dim_) out[i] = dot(row, q, dim_);
}

namespace {

constexpr char kMagic[4] = {'P', 'S', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

void put_str(std::string& out, std::string_view s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  std::string_view buf;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n) {
    if (buf.size() - pos < n) throw Error(ErrorCode::malformed_record, path + ": truncated index");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    return static_cast<T>(v);
  }
  std::string str() {
    const auto n = le<std::uint32_t>();
    need(n);
    std::string s(buf.substr(pos, n));
    pos += n;
    return s;
  }
};

}  // namespace

void VectorIndex::save(const std::filesystem::path& path) const {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put_le<std::uint64_t>(out, ids_.size());
  put_str(out, spec_.model_id);
  put_str(out, to_string(spec_.provider));
  out.reserve(out.size() + data_.size() * 4);
  for (float f : data_) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  for (const auto& id : ids_) put_str(out, id);
  detail::write_file(path, out);
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  Reader r{bytes, 0, path.string()};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::malformed_record, path.string() + ": not an index file");
  }
  r.pos = 4;
  if (r.le<std::uint32_t>() != kVersion) {
    throw Error(ErrorCode::malformed_record, path.string() + ": unsupported index version");
  }
  const auto dim = r.le<std::uint32_t>();
  const auto count = r.le<std::uint64_t>();
  EmbeddingSpec spec;
  spec.model_id = r.str();
  spec.provider = embedding_provider_from_string(r.str());
  VectorIndex idx(spec, dim);
  if (count > 0 && dim > 0 && count > (bytes.size() / 4) / dim) {
    throw Error(ErrorCode::malformed_record, path.string() + ": truncated index");
  }
  r.need(count * dim * 4);
  idx.data_.resize(count * dim);
  for (auto& f : idx.data_) f = std::bit_cast<float>(r.le<std::uint32_t>());
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.str();
    idx.by_id_.emplace(id, idx.ids_.size());
    idx.ids_.push_back(std::move(id));
  }
  if (r.pos != bytes.size()) {
    throw Error(ErrorCode::malformed_record, path.string() + ": trailing bytes in index");
  }
  return idx;
}

VectorIndex build_index(const AnnotationStore& store, const Corpus& corpus, Gateway& gateway,
                        const EmbeddingSpec& spec, std::size_t batch_size) {
  if (store.examples().empty()) throw Error(ErrorCode::empty_store, "nothing to index");
  if (spec.provider != gateway.config().embedding_provider) {
    throw Error(ErrorCode::provider_mismatch,
                "index wants " + std::string(to_string(spec.provider)) + ", gateway provides " +
                    std::string(to_string(gateway.config().embedding_provider)));
  }
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::optional<VectorIndex> index;
  const auto& examples = store.examples();
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    EmbeddingRequest req;
    req.model_id = spec.model_id;
    const std::size_t end = std::min(examples.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      req.inputs.push_back(corpus.at(examples[i].problem_id).question);
    }
    auto resp = gateway.embed(req);
    for (std::size_t i = start; i < end; ++i) {
      auto& v = resp.vectors[i - start];
      if (!index) index.emplace(spec, v.size());
      index->add(examples[i].problem_id, v);
    }
  }
  return std::move(*index);
}

namespace {

// Unbiased draw from [0, n) by rejection; avoids implementation-defined distributions.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<ScoredExemplar> retrieve(const VectorIndex& index, std::span<const float> query,
                                     const RetrievalConfig& cfg, std::string_view query_id) {
  if (index.empty()) throw Error(ErrorCode::empty_index, "index has no records");
  if (cfg.M < 1) throw Error(ErrorCode::config_error, "M must be >= 1");
  std::vector<float> scores;
  index.scores(query, scores);

  std::vector<std::uint32_t> eligible;
  eligible.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& id = index.id(i);
    if (cfg.exclude_self && !query_id.empty() && id == query_id) continue;
    if (!cfg.exclude_ids.empty() && cfg.exclude_ids.contains(id)) continue;
    eligible.push_back(static_cast<std::uint32_t>(i));
  }
  const std::size_t m = std::min(cfg.M, eligible.size());

  switch (cfg.strategy) {
    case Strategy::most_similar:
    case Strategy::least_similar: {
      const bool most = cfg.strategy == Strategy::most_similar;
      auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return most ? scores[a] > scores[b] : scores[a] < scores[b];
        return index.id(a) < index.id(b);
      };
      std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(m),
                        eligible.end(), better);
      break;
    }
    case Strategy::random: {
      std::mt19937_64 rng(mix(cfg.random_seed ^ mix(detail::fnv1a64(query_id))));
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + bounded(rng, eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
      }
      break;
    }
  }

  std::vector<ScoredExemplar> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({index.id(eligible[i]), static_cast<double>(scores[eligible[i]])});
  }
  return out;
}

}  // namespace progshot
