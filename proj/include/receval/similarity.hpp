#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace receval {

struct ProviderError : std::runtime_error {
    explicit ProviderError(const std::string& reason) : std::runtime_error(reason) {}
};

/// Kernel weights for the composite similarity score. The four named
/// configs A-D all sum to one.
struct SimilarityWeights {
    double alpha = 0.3;  // levenshtein ratio
    double beta = 0.2;   // token-sort similarity
    double gamma = 0.1;  // LCS ratio
    double delta = 0.4;  // embedding cosine

    /// Throws std::invalid_argument unless each weight is in [0,1] and
    /// they sum to 1 within 1e-9.
    void validate() const;

    /// Named configs: A (optimal), B (equal), C (lexical only, delta=0),
    /// D (no levenshtein).
    static SimilarityWeights named_config(char tag);
    static SimilarityWeights named_config(std::string_view tag);
};

/// 1 - editdistance(a,b) / max(|a|,|b|); both empty -> 1. Byte-level on
/// pre-normalized text.
double levenshtein_ratio(std::string_view a, std::string_view b);

/// Levenshtein ratio of the whitespace tokens sorted and rejoined.
double token_sort_similarity(std::string_view a, std::string_view b);

/// |LCS(a,b)| / max(|a|,|b|); both empty -> 1.
double lcs_ratio(std::string_view a, std::string_view b);

/// Text embedding backend. Implementations must be deterministic and
/// return unit-norm vectors of a fixed dimension; empty text maps to
/// the zero vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

/// Offline fallback: hashed character-trigram counts, L2-normalized.
/// Dependency-free and deterministic across platforms.
class TrigramProvider final : public EmbeddingProvider {
public:
    explicit TrigramProvider(std::size_t dim = 512) : dim_(dim) {}
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "offline-trigram"; }

private:
    std::size_t dim_;
};

/// Remote provider speaking the common POST <base>/v1/embeddings shape.
/// Vectors are re-normalized client side. Throws ProviderError when the
/// endpoint is unreachable or replies with garbage.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, std::string model,
                          int timeout_ms = 20000, std::size_t batch_size = 64);
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "http:" + model_; }

private:
    std::string base_url_;
    std::string model_;
    int timeout_ms_;
    std::size_t batch_size_;
    std::size_t dim_ = 0;
    std::mutex mutex_;
};

/// Decorator counting embed() invocations; used to assert providers are
/// not touched when delta = 0.
class CountingProvider final : public EmbeddingProvider {
public:
    explicit CountingProvider(EmbeddingProvider& inner) : inner_(inner) {}
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.embed(texts);
    }
    std::size_t dimension() const override { return inner_.dimension(); }
    std::string name() const override { return inner_.name(); }
    long calls() const { return calls_.load(std::memory_order_relaxed); }

private:
    EmbeddingProvider& inner_;
    std::atomic<long> calls_{0};
};

/// Memoizing decorator, thread-safe; keeps remote providers affordable
/// during corpus evaluation.
class CachingProvider final : public EmbeddingProvider {
public:
    explicit CachingProvider(EmbeddingProvider& inner) : inner_(inner) {}
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return inner_.dimension(); }
    std::string name() const override { return inner_.name(); }

private:
    EmbeddingProvider& inner_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::vector<float>> memo_;
};

/// clamp(cosine(embed(a), embed(b)), 0, 1). Identical texts score 1
/// without touching the provider; an empty side scores 0.
double semantic_similarity(std::string_view a, std::string_view b,
                           EmbeddingProvider& provider);

/// Weighted sum of the four kernels on normalize_text'd input. Kernels
/// with zero weight are never evaluated, so delta = 0 never calls the
/// provider (which may then be null).
double composite_similarity(std::string_view a, std::string_view b,
                            const SimilarityWeights& w,
                            EmbeddingProvider* provider);

}  // namespace receval
