#ifndef TOPICLENS_EMBEDDING_HPP
#define TOPICLENS_EMBEDDING_HPP

#include "common.hpp"
#include "corpus.hpp"
#include "http.hpp"
#include "retry.hpp"
#include "text.hpp"

#include "json.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file embedding.hpp
 *
 * @brief Document embedding matrices, the embedding providers, and the binary
 * embedding file format.
 */

namespace topiclens {

inline constexpr std::size_t default_embedding_dim = 384;
inline constexpr const char* default_embedding_model = "paraphrase-multilingual-MiniLM-L12-v2";

/**
 * n x dim matrix of 32-bit document vectors, row i belonging to doc_ids[i].
 */
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    EmbeddingMatrix(std::vector<std::string> doc_ids, std::size_t dim, std::vector<float> values)
        : ids_(std::move(doc_ids)), vectors_(ids_.size(), dim, std::move(values)) {
        if (dim == 0) {
            throw InvalidArgument("embedding dimension must be positive");
        }
        for (float v : vectors_.values()) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("embedding matrix contains a non-finite entry");
            }
        }
    }

    std::size_t size() const { return vectors_.rows(); }
    std::size_t dim() const { return vectors_.cols(); }
    const std::vector<std::string>& doc_ids() const { return ids_; }
    const Matrix<float>& vectors() const { return vectors_; }
    std::span<const float> row(std::size_t i) const { return vectors_.row(i); }

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::vector<std::string> ids_;
    Matrix<float> vectors_;
};

/**********************************
 ******* Hash test provider *******
 **********************************/

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

/**
 * Deterministic bag-of-tokens embedding: each whitespace token maps (through a seeded
 * hash) to a vector of independent standard normals; the document vector is their
 * L2-normalized sum. Empty text gives the zero vector.
 */
inline std::vector<float> hash_embed(std::string_view text_in, std::uint64_t seed, std::size_t dim) {
    if (dim < 2) {
        throw InvalidArgument("hash_embed needs dim >= 2");
    }
    std::vector<double> acc(dim, 0.0);
    bool any = false;
    for (const auto& token : text::tokenize(text_in)) {
        any = true;
        std::uint64_t mix = seed;
        std::uint64_t state = detail::fnv1a64(token) ^ detail::splitmix64(mix);
        for (std::size_t d = 0; d < dim; d += 2) {
            // Box-Muller on two 53-bit uniforms in (0, 1].
            double u1 = (static_cast<double>(detail::splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
            double u2 = static_cast<double>(detail::splitmix64(state) >> 11) * 0x1.0p-53;
            double r = std::sqrt(-2.0 * std::log(u1));
            acc[d] += r * std::cos(2.0 * std::numbers::pi * u2);
            if (d + 1 < dim) {
                acc[d + 1] += r * std::sin(2.0 * std::numbers::pi * u2);
            }
        }
    }
    std::vector<float> out(dim, 0.0f);
    if (!any) {
        return out;
    }
    double norm = 0;
    for (double v : acc) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0) {
        return out;
    }
    for (std::size_t d = 0; d < dim; ++d) {
        out[d] = static_cast<float>(acc[d] / norm);
    }
    return out;
}

/**********************************
 *********** File format **********
 **********************************/

inline constexpr char embedding_magic[8] = {'E', 'M', 'B', 'M', 'A', 'T', '0', '1'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
        auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace detail

/** CRC32 (IEEE) of a file's contents; used for stage-cache fingerprints. */
inline std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read '" + path.string() + "'");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return detail::crc32_of(bytes);
}

/**
 * Serialized layout: magic `EMBMAT01`, u32 n, u32 dim, n length-prefixed (u32) UTF-8 ids,
 * n*dim f32, then the CRC32 of everything between the magic and the checksum. All
 * integers and floats little-endian.
 */
inline std::string serialize_embeddings(const EmbeddingMatrix& m) {
    std::string payload;
    detail::put_u32(payload, static_cast<std::uint32_t>(m.size()));
    detail::put_u32(payload, static_cast<std::uint32_t>(m.dim()));
    for (const auto& id : m.doc_ids()) {
        detail::put_u32(payload, static_cast<std::uint32_t>(id.size()));
        payload += id;
    }
    for (float v : m.vectors().values()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        detail::put_u32(payload, bits);
    }
    std::string out(embedding_magic, sizeof embedding_magic);
    out += payload;
    detail::put_u32(out, detail::crc32_of(payload));
    return out;
}

inline EmbeddingMatrix deserialize_embeddings(std::string_view bytes) {
    if (bytes.size() < sizeof embedding_magic + 12 ||
        std::memcmp(bytes.data(), embedding_magic, sizeof embedding_magic) != 0) {
        throw CorruptFile("embedding file: bad magic number or truncated header");
    }
    auto payload = bytes.substr(sizeof embedding_magic, bytes.size() - sizeof embedding_magic - 4);
    auto stored_crc = detail::get_u32(reinterpret_cast<const unsigned char*>(bytes.data() + bytes.size() - 4));
    if (detail::crc32_of(payload) != stored_crc) {
        throw CorruptFile("embedding file: checksum mismatch");
    }

    const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
    std::size_t left = payload.size(), off = 0;
    auto need = [&](std::size_t count) {
        if (left - off < count) {
            throw CorruptFile("embedding file: truncated payload");
        }
    };
    need(8);
    std::uint32_t n = detail::get_u32(p), dim = detail::get_u32(p + 4);
    off = 8;
    if (dim == 0) {
        throw CorruptFile("embedding file: zero dimension");
    }
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        need(4);
        auto len = detail::get_u32(p + off);
        off += 4;
        need(len);
        ids.emplace_back(reinterpret_cast<const char*>(p + off), len);
        off += len;
    }
    std::size_t count = static_cast<std::size_t>(n) * dim;
    need(count * 4);
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = detail::get_u32(p + off);
        std::memcpy(&values[i], &bits, sizeof bits);
        off += 4;
    }
    if (off != left) {
        throw CorruptFile("embedding file: trailing bytes after matrix");
    }
    try {
        return EmbeddingMatrix(std::move(ids), dim, std::move(values));
    } catch (const InvalidArgument& e) {
        throw CorruptFile(std::string("embedding file: ") + e.what());
    }
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    auto bytes = serialize_embeddings(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write embedding file '" + path.string() + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

/**
 * Loads an embedding file. With `expected_dim` non-zero, a file of any other width is
 * rejected.
 */
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t expected_dim = 0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read embedding file '" + path.string() + "'");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto m = deserialize_embeddings(bytes);
    if (expected_dim != 0 && m.dim() != expected_dim) {
        throw DimensionMismatch(expected_dim, m.dim(), "embedding file '" + path.string() + "'");
    }
    return m;
}

/**********************************
 *********** Providers ************
 **********************************/

enum class ProviderKind { file, http, hash_test };

inline const char* to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::file: return "file";
        case ProviderKind::http: return "http";
        case ProviderKind::hash_test: return "hash-test";
    }
    return "?";
}

inline ProviderKind parse_provider_kind(std::string_view s) {
    if (s == "file") return ProviderKind::file;
    if (s == "http") return ProviderKind::http;
    if (s == "hash-test") return ProviderKind::hash_test;
    throw InvalidArgument("unknown embedding provider '" + std::string(s) + "' (expected file, http or hash-test)");
}

struct EmbeddingProviderSpec {
    ProviderKind kind = ProviderKind::hash_test;
    /** Path for `file`, base URL for `http`; unused by `hash-test`. */
    std::string location;
    std::string model_name = default_embedding_model;
    std::size_t batch_size = 64;
    std::size_t dim = default_embedding_dim;
    std::uint64_t seed = 0;
    /** Concurrent HTTP batches. */
    int workers = 1;
    RetryPolicy retry;
};

/**
 * Something that maps a batch of texts to vectors. `ids` is aligned with `texts`.
 */
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual std::string identifier() const = 0;
    virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts,
                                                        std::span<const std::string> ids) = 0;
};

class HashEmbeddingProvider : public EmbeddingProvider {
public:
    HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

    std::size_t dim() const override { return dim_; }
    std::string identifier() const override {
        return "hash-test(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")";
    }
    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts,
                                                std::span<const std::string>) override {
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            out.push_back(hash_embed(t, seed_, dim_));
        }
        return out;
    }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/** Looks vectors up by document id in a precomputed embedding file. */
class FileEmbeddingProvider : public EmbeddingProvider {
public:
    FileEmbeddingProvider(const std::filesystem::path& path, std::size_t dim)
        : path_(path), matrix_(load_embeddings(path, dim)) {
        for (std::size_t i = 0; i < matrix_.size(); ++i) {
            index_.emplace(matrix_.doc_ids()[i], i);
        }
    }

    std::size_t dim() const override { return matrix_.dim(); }
    std::string identifier() const override { return "file(" + path_.string() + ")"; }
    std::vector<std::vector<float>> embed_batch(std::span<const std::string>,
                                                std::span<const std::string> ids) override {
        std::vector<std::vector<float>> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = index_.find(id);
            if (it == index_.end()) {
                throw Error("embedding file '" + path_.string() + "' has no vector for document '" + id + "'");
            }
            auto row = matrix_.row(it->second);
            out.emplace_back(row.begin(), row.end());
        }
        return out;
    }

private:
    std::filesystem::path path_;
    EmbeddingMatrix matrix_;
    std::unordered_map<std::string, std::size_t> index_;
};

/**
 * Client for the embedding service: `POST /embed` with `{"texts": [...], "normalize": true}`,
 * answered by `{"dim": d, "vectors": [[...], ...], "model": "..."}`.
 */
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string url, std::size_t dim, std::string model, RetryPolicy retry)
        : url_(std::move(url)), dim_(dim), model_(std::move(model)), retry_(std::move(retry)) {}

    std::size_t dim() const override { return dim_; }
    std::string identifier() const override { return "http(" + url_ + "," + model_ + ")"; }

    std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts,
                                                std::span<const std::string>) override {
        nlohmann::json body;
        body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
        body["normalize"] = true;
        auto payload = body.dump();

        auto endpoint = http::split_url(url_);
        std::string path = endpoint.path;
        if (path.empty() || path == "/") {
            path = "/embed";
        }
        auto response = with_retries(
            retry_,
            [&]() {
                httplib::Client client(endpoint.base);
                client.set_connection_timeout(5);
                client.set_read_timeout(120);
                return http::expect_ok(client.Post(path, payload, "application/json"), "embedding service");
            },
            "embedding service " + url_);

        auto j = nlohmann::json::parse(response, nullptr, false);
        if (j.is_discarded() || !j.contains("vectors") || !j["vectors"].is_array()) {
            throw FormatError("embedding service returned a malformed response");
        }
        if (j.contains("dim") && j["dim"].is_number_integer() && j["dim"].get<std::size_t>() != dim_) {
            throw DimensionMismatch(dim_, j["dim"].get<std::size_t>(), "embedding service response");
        }
        std::vector<std::vector<float>> out;
        for (const auto& row : j["vectors"]) {
            out.push_back(row.get<std::vector<float>>());
        }
        if (out.size() != texts.size()) {
            throw FormatError("embedding service returned " + std::to_string(out.size()) + " vectors for " +
                              std::to_string(texts.size()) + " texts");
        }
        return out;
    }

private:
    std::string url_;
    std::size_t dim_;
    std::string model_;
    RetryPolicy retry_;
};

inline std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec) {
    switch (spec.kind) {
        case ProviderKind::hash_test:
            return std::make_unique<HashEmbeddingProvider>(spec.dim, spec.seed);
        case ProviderKind::file:
            if (spec.location.empty()) {
                throw InvalidArgument("file embedding provider needs a location");
            }
            return std::make_unique<FileEmbeddingProvider>(spec.location, spec.dim);
        case ProviderKind::http:
            if (spec.location.empty()) {
                throw InvalidArgument("http embedding provider needs a URL");
            }
            return std::make_unique<HttpEmbeddingProvider>(spec.location, spec.dim, spec.model_name, spec.retry);
    }
    throw InvalidArgument("unknown provider kind");
}

struct EmbedReport {
    /** Rows that came back as the zero vector (empty text); kept out of clustering. */
    std::vector<std::size_t> zero_rows;
};

/**
 * Embeds every document (clean text, or raw text when `use_raw`) in corpus order.
 * Batches may run concurrently; rows are reassembled in input order.
 */
inline EmbeddingMatrix embed_corpus(const Corpus& corpus, EmbeddingProvider& provider, std::size_t batch_size = 64,
                                    int workers = 1, bool use_raw = false, EmbedReport* report = nullptr) {
    const std::size_t n = corpus.size(), dim = provider.dim();
    if (batch_size == 0) {
        throw InvalidArgument("batch size must be positive");
    }
    std::vector<std::string> texts, ids;
    texts.reserve(n);
    ids.reserve(n);
    for (const auto& d : corpus) {
        texts.push_back(use_raw ? d.raw_text : d.clean_text);
        ids.push_back(d.id);
    }

    std::size_t nbatches = (n + batch_size - 1) / batch_size;
    std::vector<std::vector<std::vector<float>>> results(nbatches);
    auto run_batch = [&](std::size_t b) {
        std::size_t begin = b * batch_size, len = std::min(batch_size, n - begin);
        results[b] = provider.embed_batch(std::span<const std::string>(texts).subspan(begin, len),
                                          std::span<const std::string>(ids).subspan(begin, len));
        if (results[b].size() != len) {
            throw Error("embedding provider returned " + std::to_string(results[b].size()) + " rows for a batch of " +
                        std::to_string(len));
        }
    };
    parallel_for(nbatches, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            run_batch(b);
        }
    });

    std::vector<float> values;
    values.reserve(n * dim);
    EmbedReport local;
    std::size_t row = 0;
    for (const auto& batch : results) {
        for (const auto& vec : batch) {
            if (vec.size() != dim) {
                throw DimensionMismatch(dim, vec.size(), "provider " + provider.identifier() + " row " + std::to_string(row));
            }
            bool zero = true;
            for (float v : vec) {
                if (!std::isfinite(v)) {
                    throw Error("provider " + provider.identifier() + " returned a non-finite value in row " +
                                std::to_string(row));
                }
                zero = zero && v == 0.0f;
            }
            if (zero) {
                local.zero_rows.push_back(row);
            }
            values.insert(values.end(), vec.begin(), vec.end());
            ++row;
        }
    }
    if (!local.zero_rows.empty()) {
        warn(std::to_string(local.zero_rows.size()) + " document(s) embedded to the zero vector");
    }
    if (report) {
        *report = std::move(local);
    }
    return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

inline EmbeddingMatrix embed_corpus(const Corpus& corpus, const EmbeddingProviderSpec& spec, bool use_raw = false,
                                    EmbedReport* report = nullptr) {
    auto provider = make_provider(spec);
    return embed_corpus(corpus, *provider, spec.batch_size, spec.workers, use_raw, report);
}

} // namespace topiclens

#endif
