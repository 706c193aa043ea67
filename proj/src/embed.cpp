#include "salam/embed.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>

#include "salam/core.hpp"
#include "salam/error.hpp"

namespace salam::embed {

namespace {

double l2_norm(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

void require_text(std::string_view text) {
    if (core::trim(text).empty()) throw Error(ErrorKind::empty_text, "cannot embed empty text");
}

}  // namespace

Embedding Embedding::normalized(std::vector<double> values) {
    const double norm = l2_norm(values);
    if (values.empty() || norm == 0.0 || !std::isfinite(norm)) {
        throw Error(ErrorKind::invalid_argument, "cannot normalize a zero or non-finite vector");
    }
    for (double& x : values) x /= norm;
    return Embedding(std::move(values));
}

Embedding Embedding::from_unit(std::vector<double> values) {
    if (values.empty() || std::abs(l2_norm(values) - 1.0) > 1e-6) {
        throw Error(ErrorKind::invalid_argument, "embedding is not unit-norm");
    }
    return Embedding(std::move(values));
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorKind::dimension_mismatch, "cosine of " + std::to_string(a.dim()) + "-dim and " +
                                                       std::to_string(b.dim()) + "-dim embeddings");
    }
    auto x = a.values();
    auto y = b.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return dot;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error(ErrorKind::invalid_argument, "embedding dim must be positive");
}

Embedding HashingEmbedder::embed(std::string_view text) const {
    require_text(text);
    std::vector<double> signed_counts(dim_, 0.0);
    std::vector<double> counts(dim_, 0.0);
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const auto h = core::fnv1a64(token);
        const auto bucket = static_cast<std::size_t>(h % dim_);
        signed_counts[bucket] += (h >> 63) ? -1.0 : 1.0;
        counts[bucket] += 1.0;
        token.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    // Opposite-signed tokens can cancel to zero; fall back to plain counts.
    if (l2_norm(signed_counts) == 0.0) return Embedding::normalized(std::move(counts));
    return Embedding::normalized(std::move(signed_counts));
}

std::string HashingEmbedder::id() const {
    return "hash:" + std::to_string(dim_);
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)),
      endpoint_(http::parse_url(config_.url)),
      dim_(config_.dim),
      permits_(std::max(1, config_.permits)) {
    if (config_.dim == 0) {
        throw Error(ErrorKind::invalid_argument, "remote embedder needs an explicit dim");
    }
}

std::string RemoteEmbedder::id() const {
    return "remote:" + config_.model + "@" + config_.url;
}

Embedding RemoteEmbedder::embed(std::string_view text) const {
    return embed_batch({std::string(text)}).front();
}

std::vector<Embedding> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    for (const auto& t : texts) require_text(t);
    nlohmann::json body{{"input", texts}, {"model", config_.model}};

    std::string raw;
    {
        permits_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{permits_};
        raw = http::post_json({endpoint_, body.dump(), config_.api_key, config_.timeout}, config_.retry);
    }

    std::vector<Embedding> out;
    try {
        auto reply = nlohmann::json::parse(raw);
        const auto& data = reply.at("data");
        if (data.size() != texts.size()) {
            throw Error(ErrorKind::provider_unavailable, "embedding service returned " +
                                                             std::to_string(data.size()) + " vectors for " +
                                                             std::to_string(texts.size()) + " inputs");
        }
        for (const auto& item : data) {
            auto values = item.at("embedding").get<std::vector<double>>();
            if (values.size() != dim_) {
                throw Error(ErrorKind::dimension_mismatch, "embedding service returned dim " +
                                                               std::to_string(values.size()) + ", expected " +
                                                               std::to_string(dim_));
            }
            out.push_back(Embedding::normalized(std::move(values)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::provider_unavailable, std::string("malformed embedding response: ") + e.what());
    }
    return out;
}

}  // namespace salam::embed
