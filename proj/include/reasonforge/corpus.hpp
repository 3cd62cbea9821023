#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/unicode.hpp"

namespace forge::corpus {

// Canonical statement form used for all fuzzy comparisons: NFC, lowercase,
// whitespace runs collapsed to single spaces, trimmed. Idempotent.
inline std::string normalize_statement(std::string_view statement) {
    const std::string folded = nfc_lower(statement);
    const std::vector<char32_t> cps = utf8_decode(folded);
    std::string out;
    out.reserve(folded.size());
    bool pending_space = false;
    bool seen_content = false;
    for (char32_t cp : cps) {
        if (is_unicode_space(cp)) {
            pending_space = true;
            continue;
        }
        if (pending_space && seen_content) out.push_back(' ');
        pending_space = false;
        seen_content = true;
        utf8_append(out, cp);
    }
    return out;
}

// Levenshtein distance over unicode scalar values, two-row DP.
inline std::size_t levenshtein(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    const std::size_t la = a.size(), lb = b.size();
    if (la == 0) return lb;
    if (lb == 0) return la;
    std::vector<std::size_t> prev(lb + 1), cur(lb + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= la; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= lb; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[lb];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(utf8_decode(a), utf8_decode(b));
}

// Banded variant: exact when the distance is <= max_dist, otherwise returns
// any value > max_dist. Lets dedup skip hopeless pairs cheaply.
inline std::size_t levenshtein_bounded(const std::vector<char32_t>& a,
                                       const std::vector<char32_t>& b,
                                       std::size_t max_dist) {
    const std::size_t la = a.size(), lb = b.size();
    const std::size_t diff = la > lb ? la - lb : lb - la;
    if (diff > max_dist) return max_dist + 1;
    if (la == 0) return lb;
    if (lb == 0) return la;
    const std::size_t inf = max_dist + 1;
    std::vector<std::size_t> prev(lb + 1, inf), cur(lb + 1, inf);
    for (std::size_t j = 0; j <= std::min(lb, max_dist); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= la; ++i) {
        const std::size_t lo = i > max_dist ? i - max_dist : 1;
        const std::size_t hi = std::min(lb, i + max_dist);
        if (lo > hi) return inf;
        std::fill(cur.begin(), cur.end(), inf);
        if (lo == 1) cur[0] = i <= max_dist ? i : inf;
        std::size_t row_min = cur[0];
        for (std::size_t j = lo; j <= hi; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            // values beyond the band are inf = max_dist + 1; min-capping below
            // keeps them from propagating as anything but "too far"
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1, inf});
            row_min = std::min(row_min, cur[j]);
        }
        if (row_min > max_dist) return inf;
        std::swap(prev, cur);
    }
    return std::min(prev[lb], inf);
}

// Normalized edit similarity: 1 - lev(a,b)/max(|a|,|b|). Symmetric, 1.0 iff
// the strings are equal, 0.0 when nothing survives. Inputs are expected to
// be normalized already.
inline double fuzzy_similarity(std::string_view a, std::string_view b) {
    if (a == b) return 1.0;
    const auto ca = utf8_decode(a);
    const auto cb = utf8_decode(b);
    const std::size_t longest = std::max(ca.size(), cb.size());
    if (longest == 0) return 1.0;
    const std::size_t d = levenshtein(ca, cb);
    return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

struct PairScore {
    std::string id_a;  // lexicographically smaller
    std::string id_b;
    double similarity;
};

struct DedupCluster {
    std::string canonical_id;
    std::vector<std::string> member_ids;
    std::vector<PairScore> pairwise_scores;
};

inline json cluster_to_json(const DedupCluster& c) {
    json scores = json::array();
    for (const auto& s : c.pairwise_scores)
        scores.push_back(json::array({s.id_a, s.id_b, s.similarity}));
    return json{{"canonical_id", c.canonical_id},
                {"member_ids", c.member_ids},
                {"pairwise_scores", std::move(scores)}};
}

struct DedupResult {
    std::vector<Question> retained;
    std::vector<DedupCluster> clusters;
};

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void merge(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Candidate pairs for large corpora: all pairs sharing a rare token
// (document frequency < 5%), plus all pairs with byte-identical normalized
// statements so exact duplicates can never be blocked away.
inline std::vector<std::pair<std::size_t, std::size_t>> blocked_candidate_pairs(
    const std::vector<std::string>& normalized) {
    const std::size_t n = normalized.size();
    const double rare_cutoff = 0.05 * static_cast<double>(n);
    std::map<std::string, std::vector<std::size_t>> postings;
    for (std::size_t i = 0; i < n; ++i) {
        std::set<std::string> tokens;
        std::size_t start = 0;
        const std::string& s = normalized[i];
        while (start < s.size()) {
            std::size_t end = s.find(' ', start);
            if (end == std::string::npos) end = s.size();
            if (end > start) tokens.insert(s.substr(start, end - start));
            start = end + 1;
        }
        for (const auto& t : tokens) postings[t].push_back(i);
    }
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [token, ids] : postings) {
        if (static_cast<double>(ids.size()) >= rare_cutoff) continue;
        for (std::size_t x = 0; x < ids.size(); ++x)
            for (std::size_t y = x + 1; y < ids.size(); ++y)
                pairs.emplace(ids[x], ids[y]);
    }
    std::map<std::uint64_t, std::vector<std::size_t>> exact;
    for (std::size_t i = 0; i < n; ++i) exact[fnv1a64(normalized[i])].push_back(i);
    for (const auto& [h, ids] : exact)
        for (std::size_t x = 0; x < ids.size(); ++x)
            for (std::size_t y = x + 1; y < ids.size(); ++y)
                pairs.emplace(ids[x], ids[y]);
    return {pairs.begin(), pairs.end()};
}

}  // namespace detail

constexpr std::size_t kExactPairwiseLimit = 2000;

// Single-linkage clustering over pairs with similarity >= threshold; one
// canonical representative (lexicographically smallest id) retained per
// cluster. Output is sorted by id, so any permutation of the input yields
// identical results.
inline DedupResult dedup(const std::vector<Question>& questions, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw ValidationError("dedup: threshold must be in (0, 1]");

    std::vector<std::size_t> order(questions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return questions[a].id < questions[b].id;
    });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (questions[order[i - 1]].id == questions[order[i]].id)
            throw ValidationError("dedup: duplicate question id '" + questions[order[i]].id + "'");

    const std::size_t n = order.size();
    std::vector<std::string> normalized(n);
    std::vector<std::vector<char32_t>> codepoints(n);
    for (std::size_t i = 0; i < n; ++i) {
        normalized[i] = normalize_statement(questions[order[i]].statement);
        codepoints[i] = utf8_decode(normalized[i]);
    }

    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    if (n <= kExactPairwiseLimit) {
        candidates.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) candidates.emplace_back(i, j);
    } else {
        candidates = detail::blocked_candidate_pairs(normalized);
    }

    detail::UnionFind uf(n);
    std::vector<std::tuple<std::size_t, std::size_t, double>> linked;
    for (const auto& [i, j] : candidates) {
        const std::size_t longest = std::max(codepoints[i].size(), codepoints[j].size());
        double sim;
        if (longest == 0) {
            sim = 1.0;  // both empty after normalization
        } else {
            const auto max_dist =
                static_cast<std::size_t>((1.0 - threshold) * static_cast<double>(longest));
            const std::size_t d = levenshtein_bounded(codepoints[i], codepoints[j], max_dist);
            if (d > max_dist) continue;
            sim = 1.0 - static_cast<double>(d) / static_cast<double>(longest);
        }
        if (sim >= threshold) {
            uf.merge(i, j);
            linked.emplace_back(i, j, sim);
        }
    }

    std::map<std::size_t, DedupCluster> by_root;
    for (std::size_t i = 0; i < n; ++i)
        by_root[uf.find(i)].member_ids.push_back(questions[order[i]].id);
    for (const auto& [i, j, sim] : linked) {
        auto& c = by_root[uf.find(i)];
        c.pairwise_scores.push_back({questions[order[i]].id, questions[order[j]].id, sim});
    }

    DedupResult result;
    for (auto& [root, cluster] : by_root) {
        std::sort(cluster.member_ids.begin(), cluster.member_ids.end());
        cluster.canonical_id = cluster.member_ids.front();
        if (cluster.member_ids.size() >= 2) {
            std::sort(cluster.pairwise_scores.begin(), cluster.pairwise_scores.end(),
                      [](const PairScore& a, const PairScore& b) {
                          return std::tie(a.id_a, a.id_b) < std::tie(b.id_a, b.id_b);
                      });
            result.clusters.push_back(cluster);
        }
    }
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const DedupCluster& a, const DedupCluster& b) {
                  return a.canonical_id < b.canonical_id;
              });

    std::set<std::string> retained_ids;
    for (std::size_t i = 0; i < n; ++i) retained_ids.insert(questions[order[i]].id);
    for (const auto& c : result.clusters)
        for (const auto& id : c.member_ids)
            if (id != c.canonical_id) retained_ids.erase(id);
    for (std::size_t i = 0; i < n; ++i) {
        const Question& q = questions[order[i]];
        if (retained_ids.count(q.id)) result.retained.push_back(q);
    }
    return result;
}

}  // namespace forge::corpus
