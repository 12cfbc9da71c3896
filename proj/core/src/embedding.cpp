#include "rectify/embedding.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rectify/errors.hpp"
#include "rectify/text.hpp"

namespace rectify {

namespace {

bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_size(const std::string& text, std::size_t& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

[[noreturn]] void reject(const std::string& path, int line_no, const std::string& what) {
    throw ValidationError("embeddings '" + path + "' line " + std::to_string(line_no) +
                          ": " + what);
}

}  // namespace

EmbeddingStore::EmbeddingStore(std::size_t dimension,
                               std::unordered_map<std::string, std::vector<double>> vectors)
    : dimension_(dimension), vectors_(std::move(vectors)) {}

std::span<const double> EmbeddingStore::lookup(std::string_view token) const {
    auto it = vectors_.find(std::string(token));
    if (it == vectors_.end()) return {};
    return it->second;
}

EmbeddingStore EmbeddingStore::scaled(double factor) const {
    auto copy = vectors_;
    for (auto& [token, vec] : copy) {
        for (double& v : vec) v *= factor;
    }
    return EmbeddingStore(dimension_, std::move(copy));
}

EmbeddingStore load_embeddings(const std::string& path,
                               const std::set<std::string>* restrict_to) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("embeddings: cannot open '" + path + "'");
    }

    std::string line;
    if (!std::getline(in, line)) {
        reject(path, 1, "missing header");
    }
    std::vector<std::string> header = split_words(line);
    std::size_t declared_rows = 0;
    std::size_t dimension = 0;
    if (header.size() != 2 || !parse_size(header[0], declared_rows) ||
        !parse_size(header[1], dimension) || declared_rows == 0 || dimension == 0) {
        reject(path, 1, "malformed header, expected '<rows> <dimension>'");
    }

    std::unordered_map<std::string, std::vector<double>> vectors;
    std::size_t rows_read = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> parts = split_words(line);
        if (parts.empty()) continue;
        ++rows_read;
        if (parts.size() != dimension + 1) {
            reject(path, line_no,
                   "expected 1 token + " + std::to_string(dimension) + " components, found " +
                       std::to_string(parts.size()));
        }
        const std::string& token = parts[0];
        bool keep = restrict_to == nullptr || restrict_to->count(token) > 0;
        std::vector<double> vec;
        vec.reserve(dimension);
        for (std::size_t i = 1; i < parts.size(); ++i) {
            double v = 0.0;
            if (!parse_double(parts[i], v)) {
                reject(path, line_no, "non-numeric component '" + parts[i] + "'");
            }
            vec.push_back(v);
        }
        if (keep) {
            auto [it, inserted] = vectors.emplace(token, std::move(vec));
            if (!inserted) {
                reject(path, line_no, "duplicate token '" + token + "'");
            }
        }
    }
    if (rows_read != declared_rows) {
        reject(path, line_no,
               "header declared " + std::to_string(declared_rows) + " rows, found " +
                   std::to_string(rows_read));
    }
    return EmbeddingStore(dimension, std::move(vectors));
}

}  // namespace rectify
