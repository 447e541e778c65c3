#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <progshot/gateway.hpp>

namespace progshot {

class AnnotationStore;
class Corpus;

enum class Strategy { most_similar, random, least_similar };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct RetrievalConfig {
  std::size_t M = 8;
  Strategy strategy = Strategy::most_similar;
  std::uint64_t random_seed = 0;
  std::unordered_set<std::string> exclude_ids;
  // Drops the query's own record when the query id is present in the index.
  bool exclude_self = true;
};

struct ScoredExemplar {
  std::string problem_id;
  double score = 0.0;
  friend bool operator==(const ScoredExemplar&, const ScoredExemplar&) = default;
};

// Which embedder produced an index. Queries must use the same one.
struct EmbeddingSpec {
  EmbeddingProvider provider = EmbeddingProvider::local;
  std::string model_id = "hashing-v1";
  friend bool operator==(const EmbeddingSpec&, const EmbeddingSpec&) = default;
};

float dot(const float* a, const float* b, std::size_t n);

namespace detail {
void* row_alloc(std::size_t bytes);
void row_free(void* p) noexcept;

// Large row buffers are 2 MiB aligned and advised for transparent huge pages,
// which cuts TLB misses during the exhaustive scan.
template <typename T>
struct RowAllocator {
  using value_type = T;
  RowAllocator() = default;
  template <typename U>
  RowAllocator(const RowAllocator<U>&) {}  // NOLINT
  T* allocate(std::size_t n) { return static_cast<T*>(row_alloc(n * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { row_free(p); }
  friend bool operator==(const RowAllocator&, const RowAllocator&) { return true; }
};
}  // namespace detail

// Throws DimensionMismatch or ZeroVector.
double cosine(std::span<const float> u, std::span<const float> v);

// Row-major float32 matrix of unit vectors plus an id table.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(EmbeddingSpec spec, std::size_t dim);

  // Throws DimensionMismatch, or MalformedRecord for a duplicate id.
  void add(std::string id, std::span<const float> vec);

  const EmbeddingSpec& spec() const { return spec_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::optional<std::size_t> find(std::string_view id) const;

  // Fills out[i] = dot(row(i), query) for every row.
  void scores(std::span<const float> query, std::vector<float>& out) const;

  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

  friend bool operator==(const VectorIndex& a, const VectorIndex& b) {
    return a.spec_ == b.spec_ && a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_ == b.data_;
  }

 private:
  EmbeddingSpec spec_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float, detail::RowAllocator<float>> data_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Embeds every stored example's question (in store order, batched). Throws EmptyStore.
VectorIndex build_index(const AnnotationStore& store, const Corpus& corpus, Gateway& gateway,
                        const EmbeddingSpec& spec, std::size_t batch_size = 64);

// Returns min(M, eligible) exemplars. most_similar is descending by score,
// least_similar ascending, random in draw order; ties go to the smaller id.
std::vector<ScoredExemplar> retrieve(const VectorIndex& index, std::span<const float> query,
                                     const RetrievalConfig& cfg, std::string_view query_id = {});

}  // namespace progshot
