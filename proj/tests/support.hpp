// Shared test helpers: fixture access, independent oracles, and a
// deterministic generator. The oracles are intentionally naive and
// independent of the library's implementations.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "receval/matching.hpp"
#include "receval/schema.hpp"

namespace testsupport {

inline std::string fixtures_dir() {
    const char* dir = std::getenv("RECEVAL_FIXTURES");
    if (!dir) throw std::runtime_error("RECEVAL_FIXTURES not set");
    return dir;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::string fixture(const std::string& name) {
    return read_file(fixtures_dir() + "/" + name);
}

// Full-matrix Wagner-Fischer edit distance.
inline std::size_t oracle_edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    return d[a.size()][b.size()];
}

// Full-matrix LCS length.
inline std::size_t oracle_lcs_length(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = a[i - 1] == b[j - 1] ? d[i - 1][j - 1] + 1
                                           : std::max(d[i - 1][j], d[i][j - 1]);
    return d[a.size()][b.size()];
}

// Exhaustive minimum assignment cost over all column permutations.
inline double oracle_assignment_min(const receval::CostMatrix& square) {
    std::vector<int> perm(square.rows);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < square.rows; ++i)
            total += square.at(i, static_cast<std::size_t>(perm[i]));
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::string random_token(std::mt19937& rng, int min_len = 1, int max_len = 8) {
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<int> ch(0, 25);
    std::string out;
    int n = len(rng);
    for (int i = 0; i < n; ++i) out.push_back(static_cast<char>('a' + ch(rng)));
    return out;
}

inline std::string random_text(std::mt19937& rng, int max_tokens = 4) {
    std::uniform_int_distribution<int> count(0, max_tokens);
    int n = count(rng);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        out += random_token(rng);
    }
    return out;
}

inline receval::ExtractionRecord golden_record() {
    return receval::parse_record(fixture("golden_record.json"));
}

}  // namespace testsupport
