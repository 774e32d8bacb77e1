#include "receval/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "receval/http.hpp"
#include "receval/schema.hpp"

#include "json.hpp"

namespace receval {

void SimilarityWeights::validate() const {
    for (double w : {alpha, beta, gamma, delta}) {
        if (!(w >= 0.0 && w <= 1.0))
            throw std::invalid_argument("similarity weight outside [0,1]");
    }
    double sum = alpha + beta + gamma + delta;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("similarity weights must sum to 1");
}

SimilarityWeights SimilarityWeights::named_config(char tag) {
    switch (tag) {
        case 'A': case 'a': return {0.3, 0.2, 0.1, 0.4};
        case 'B': case 'b': return {0.25, 0.25, 0.25, 0.25};
        case 'C': case 'c': return {0.4, 0.3, 0.3, 0.0};
        case 'D': case 'd': return {0.0, 0.3, 0.3, 0.4};
        default: throw std::invalid_argument("unknown weight config tag");
    }
}

SimilarityWeights SimilarityWeights::named_config(std::string_view tag) {
    if (tag.size() != 1) throw std::invalid_argument("unknown weight config tag");
    return named_config(tag[0]);
}

// ---------------------------------------------------------------------------
// Lexical kernels

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;

    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t saved = row[j];
            std::size_t subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, subst});
            diag = saved;
        }
    }
    return row[b.size()];
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return 0;

    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string sorted_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    std::sort(tokens.begin(), tokens.end());
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) joined.push_back(' ');
        joined += tokens[i];
    }
    return joined;
}

}  // namespace

double levenshtein_ratio(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t longest = std::max(a.size(), b.size());
    return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

double token_sort_similarity(std::string_view a, std::string_view b) {
    return levenshtein_ratio(sorted_tokens(a), sorted_tokens(b));
}

double lcs_ratio(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t longest = std::max(a.size(), b.size());
    return static_cast<double>(lcs_length(a, b)) / static_cast<double>(longest);
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void l2_normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm <= 0.0) return;
    float inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (float& x : v) x *= inv;
}

}  // namespace

std::vector<std::vector<float>> TrigramProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<float> vec(dim_, 0.0f);
        if (!text.empty()) {
            if (text.size() < 3) {
                vec[fnv1a64(text) % dim_] += 1.0f;
            } else {
                for (std::size_t i = 0; i + 3 <= text.size(); ++i)
                    vec[fnv1a64(std::string_view(text).substr(i, 3)) % dim_] += 1.0f;
            }
            l2_normalize(vec);
        }
        out.push_back(std::move(vec));
    }
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string model,
                                             int timeout_ms, std::size_t batch_size)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      timeout_ms_(timeout_ms),
      batch_size_(batch_size == 0 ? 1 : batch_size) {}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        std::size_t end = std::min(texts.size(), start + batch_size_);
        nlohmann::json body = {
            {"model", model_},
            {"input", std::vector<std::string>(texts.begin() + start, texts.begin() + end)},
        };
        std::string response =
            http_post_json(base_url_, "/v1/embeddings", body.dump(), timeout_ms_);
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(response);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("embedding response not parseable: ") + e.what());
        }
        if (!parsed.contains("data") || !parsed["data"].is_array() ||
            parsed["data"].size() != end - start)
            throw ProviderError("embedding response missing data rows");
        for (const auto& row : parsed["data"]) {
            if (!row.contains("embedding") || !row["embedding"].is_array())
                throw ProviderError("embedding row missing vector");
            std::vector<float> vec = row["embedding"].get<std::vector<float>>();
            if (dim_ == 0) dim_ = vec.size();
            if (vec.size() != dim_)
                throw ProviderError("embedding dimension changed mid-stream");
            l2_normalize(vec);
            out.push_back(std::move(vec));
        }
    }
    return out;
}

std::vector<std::vector<float>> CachingProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out(texts.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_at;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = memo_.find(texts[i]);
            if (it != memo_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(texts[i]);
                missing_at.push_back(i);
            }
        }
    }
    if (!missing.empty()) {
        auto fresh = inner_.embed(missing);
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t k = 0; k < missing.size(); ++k) {
            memo_[missing[k]] = fresh[k];
            out[missing_at[k]] = std::move(fresh[k]);
        }
    }
    return out;
}

double semantic_similarity(std::string_view a, std::string_view b,
                           EmbeddingProvider& provider) {
    if (a == b) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    auto vecs = provider.embed({std::string(a), std::string(b)});
    if (vecs.size() != 2 || vecs[0].size() != vecs[1].size())
        throw ProviderError("provider returned mismatched vectors");
    double dot = 0.0;
    for (std::size_t i = 0; i < vecs[0].size(); ++i)
        dot += static_cast<double>(vecs[0][i]) * static_cast<double>(vecs[1][i]);
    return std::clamp(dot, 0.0, 1.0);
}

double composite_similarity(std::string_view a, std::string_view b,
                            const SimilarityWeights& w,
                            EmbeddingProvider* provider) {
    std::string na = normalize_text(a);
    std::string nb = normalize_text(b);
    double score = 0.0;
    if (w.alpha != 0.0) score += w.alpha * levenshtein_ratio(na, nb);
    if (w.beta != 0.0) score += w.beta * token_sort_similarity(na, nb);
    if (w.gamma != 0.0) score += w.gamma * lcs_ratio(na, nb);
    if (w.delta != 0.0) {
        if (provider == nullptr)
            throw ProviderError("semantic weight is nonzero but no provider is set");
        score += w.delta * semantic_similarity(na, nb, *provider);
    }
    return std::clamp(score, 0.0, 1.0);
}

}  // namespace receval
