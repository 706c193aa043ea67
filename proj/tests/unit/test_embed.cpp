#include <cmath>

#include <json.hpp>

#include "check.hpp"
#include "salam/retrieval_kernels.hpp"
#include "stub_server.hpp"

using namespace salam;
using nlohmann::json;

namespace {

// Independent re-derivation of the hashing scheme.
std::vector<double> hashed(const std::string& text, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : tok) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
    double n = 0;
    for (double x : v) n += x * x;
    for (double& x : v) x /= std::sqrt(n);
    return v;
}

}  // namespace

TEST_CASE("hashing embedder matches a re-derived oracle") {
    embed::HashingEmbedder e(64);
    for (const std::string text : {"abc", "The quick brown fox", "Options: (A) yes (B) no", "x y z x y z w"}) {
        auto got = e.embed(text);
        auto want = hashed(text, 64);
        REQUIRE(got.dim() == 64);
        for (std::size_t i = 0; i < 64; ++i) CHECK(got.values()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    CHECK(e.id() == "hash:64");
    CHECK(embed::HashingEmbedder().dim() == 256);
}

TEST_CASE("hashing embedder basics") {
    embed::HashingEmbedder e;
    CHECK(e.embed("Hello World") == e.embed("hello   world"));
    CHECK(embed::cosine(e.embed("a b c"), e.embed("a b c")) == doctest::Approx(1.0));
    CHECK_KIND(e.embed("   "), ErrorKind::empty_text);
    CHECK_KIND(embed::HashingEmbedder(0), ErrorKind::invalid_argument);
}

TEST_CASE("embedding construction") {
    auto v = embed::Embedding::normalized({3.0, 4.0});
    CHECK(v.values()[0] == doctest::Approx(0.6));
    CHECK_KIND(embed::Embedding::normalized({0.0, 0.0}), ErrorKind::invalid_argument);
    CHECK_KIND(embed::Embedding::normalized({}), ErrorKind::invalid_argument);
    CHECK_KIND(embed::Embedding::from_unit({1.0, 1.0}), ErrorKind::invalid_argument);
    CHECK(embed::Embedding::from_unit({0.6, 0.8}).values()[1] == 0.8);
    CHECK_KIND(embed::cosine(embed::Embedding::normalized({1, 0}), embed::Embedding::normalized({1, 0, 0})),
               ErrorKind::dimension_mismatch);
}

TEST_CASE("cosine equals a brute-force dot product") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto a = embed::Embedding::normalized(fixtures::random_unit(rng, 17));
        auto b = embed::Embedding::normalized(fixtures::random_unit(rng, 17));
        double dot = 0.0;
        for (std::size_t i = 0; i < 17; ++i) dot += a.values()[i] * b.values()[i];
        CHECK(embed::cosine(a, b) == dot);
    }
}

TEST_CASE("serial and parallel kernels agree bitwise") {
    std::mt19937_64 rng(11);
    const std::size_t dim = 33, rows = 1000;
    std::vector<double> m;
    for (std::size_t r = 0; r < rows; ++r) {
        auto v = fixtures::random_unit(rng, dim);
        m.insert(m.end(), v.begin(), v.end());
    }
    auto q = fixtures::random_unit(rng, dim);
    std::vector<double> s1(rows), s2(rows);
    kernels::score_rows_serial(m, dim, q, s1);
    kernels::score_rows_parallel(m, dim, q, s2);
    CHECK(s1 == s2);
}

TEST_CASE("select_top orders by score then index") {
    std::vector<double> s{0.5, 0.9, 0.5, 0.1, 0.9};
    auto hits = kernels::select_top(s, kernels::kUnlimited, 0.5);
    std::vector<kernels::Hit> want{{1, 0.9}, {4, 0.9}, {0, 0.5}, {2, 0.5}};
    CHECK(hits == want);
    CHECK(kernels::select_top(s, 2, 0.0).size() == 2);
    CHECK(kernels::select_top(s, 3, 0.95).empty());
}

TEST_CASE("remote embedder posts a batch and normalizes") {
    StubServer server("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        json data = json::array();
        for (std::size_t i = 0; i < body["input"].size(); ++i) {
            data.push_back({{"index", i}, {"embedding", {3.0, 4.0 + static_cast<double>(i)}}});
        }
        CHECK(body["model"] == "emb");
        CHECK(req.get_header_value("Authorization") == "Bearer k");
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    embed::RemoteEmbedderConfig cfg;
    cfg.url = server.url("/v1/embeddings");
    cfg.model = "emb";
    cfg.api_key = "k";
    cfg.dim = 2;
    embed::RemoteEmbedder e(cfg);
    auto v = e.embed("hello");
    CHECK(v.values()[0] == doctest::Approx(0.6));
    auto batch = e.embed_batch({"a", "b"});
    REQUIRE(batch.size() == 2);
    CHECK(batch[1].values()[1] == doctest::Approx(5.0 / std::sqrt(34.0)));

    cfg.dim = 3;
    embed::RemoteEmbedder wrong_dim(cfg);
    CHECK_KIND(wrong_dim.embed("x"), ErrorKind::dimension_mismatch);
    cfg.dim = 0;
    CHECK_KIND(embed::RemoteEmbedder{cfg}, ErrorKind::invalid_argument);
}
