#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salam/http.hpp"

namespace salam::embed {

// Unit-normalized sentence embedding.
class Embedding {
public:
    // L2-normalizes `values`; throws invalid_argument on a zero or empty vector.
    static Embedding normalized(std::vector<double> values);

    // Accepts values that are already unit-norm (within 1e-6), e.g. when
    // loading a saved store. Values are kept bit-for-bit.
    static Embedding from_unit(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return values_.size(); }

    bool operator==(const Embedding&) const = default;

private:
    explicit Embedding(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

// dot(a, b); throws dimension_mismatch when dims differ.
double cosine(const Embedding& a, const Embedding& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Throws empty_text when `text` is blank.
    virtual Embedding embed(std::string_view text) const = 0;
    virtual std::size_t dim() const noexcept = 0;
    virtual std::string id() const = 0;
};

// Offline provider: each lowercase whitespace token is hashed with FNV-1a
// into one of `dim` buckets with a sign taken from the hash's top bit; the
// signed counts are L2-normalized. Similarity tracks lexical overlap.
class HashingEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDim = 256;

    explicit HashingEmbedder(std::size_t dim = kDefaultDim);

    Embedding embed(std::string_view text) const override;
    std::size_t dim() const noexcept override { return dim_; }
    std::string id() const override;

private:
    std::size_t dim_;
};

struct RemoteEmbedderConfig {
    std::string url;  // full endpoint, e.g. http://localhost:8080/v1/embeddings
    std::string model;
    std::string api_key;  // usually from SALAM_EMBED_API_KEY
    std::size_t dim = 0;  // expected dimension, required
    std::chrono::milliseconds timeout{60'000};
    int permits = 4;
    http::RetryPolicy retry{};
};

// POST {"input": [texts], "model": name}; reads data[i].embedding and
// re-normalizes client-side.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    Embedding embed(std::string_view text) const override;
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const;
    std::size_t dim() const noexcept override { return dim_; }
    std::string id() const override;

private:
    RemoteEmbedderConfig config_;
    http::Endpoint endpoint_;
    std::size_t dim_;
    mutable std::counting_semaphore<1024> permits_;
};

}  // namespace salam::embed
