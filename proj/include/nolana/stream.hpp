#pragma once

#include "nolana/types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace nolana {

struct Sample {
    Vector features;
    double label = 0.0;
};

// Where the stream comes from and how it is presented: declared (or
// inferred) dimensionality, optional seeded shuffle, and the label policy
// for classification sources.
struct StreamSpec {
    std::string path;
    Index dim = 0;  // 0: infer from the file
    std::optional<std::uint64_t> shuffle_seed;
    Task task = Task::Classification;
    // Raw label mapped to +1; everything else becomes -1. Unset: labels
    // already in {-1,+1} (or {0,1}) pass through, otherwise the most
    // frequent raw label becomes +1.
    std::optional<double> positive_label;
};

namespace detail {

struct SparseLine {
    double label = 0.0;
    std::vector<std::pair<Index, double>> entries;  // 1-based indices
    Index max_index = 0;
};

inline SparseLine parse_sparse_line(const std::string& line, long line_number) {
    SparseLine out;
    std::istringstream in(line);
    std::string token;
    if (!(in >> token))
        throw ParseError("empty line", line_number);

    std::size_t pos = 0;
    try {
        out.label = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw ParseError("malformed label '" + token + "'", line_number);
    }
    if (pos != token.size())
        throw ParseError("malformed label '" + token + "'", line_number);

    Index prev_index = 0;
    while (in >> token) {
        const std::size_t colon = token.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
            throw ParseError("malformed feature token '" + token + "'", line_number);
        Index index = 0;
        double value = 0.0;
        try {
            index = static_cast<Index>(std::stoll(token.substr(0, colon), &pos));
            if (pos != colon) throw std::invalid_argument("");
            const std::string value_text = token.substr(colon + 1);
            value = std::stod(value_text, &pos);
            if (pos != value_text.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("malformed feature token '" + token + "'", line_number);
        }
        if (index < 1)
            throw ParseError("feature index must be >= 1", line_number);
        if (index <= prev_index)
            throw ParseError("feature indices must be strictly increasing", line_number);
        prev_index = index;
        out.entries.emplace_back(index, value);
    }
    out.max_index = prev_index;
    return out;
}

inline Sample densify(const SparseLine& sparse, Index dim, long line_number) {
    if (sparse.max_index > dim)
        throw ParseError("feature index " + std::to_string(sparse.max_index) +
                             " exceeds dimension " + std::to_string(dim),
                         line_number);
    Sample out;
    out.label = sparse.label;
    out.features = Vector::Zero(dim);
    for (const auto& [index, value] : sparse.entries)
        out.features[index - 1] = value;
    if (!out.features.allFinite())
        throw ParseError("non-finite feature value", line_number);
    return out;
}

inline std::uint64_t fnv1a64(const char* data, std::size_t n, std::uint64_t h) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// Parses one `<label> <idx>:<val> ...` record into a dense sample of the
// declared dimension. Indices are 1-based and strictly increasing.
inline Sample parse_libsvm_line(const std::string& line, Index dim,
                                long line_number = 0) {
    if (dim < 1)
        throw std::invalid_argument("parse_libsvm_line: dimension must be >= 1");
    return detail::densify(detail::parse_sparse_line(line, line_number), dim,
                           line_number);
}

inline std::string serialize_libsvm_line(const Sample& sample) {
    std::ostringstream out;
    out.precision(17);
    out << sample.label;
    for (Index i = 0; i < sample.features.size(); ++i)
        if (sample.features[i] != 0.0)
            out << ' ' << (i + 1) << ':' << sample.features[i];
    return out.str();
}

// An ordered in-memory sample sequence. Iteration order is file order, or
// the seeded permutation when the spec carries a shuffle seed; consumers
// make one pass.
class SampleStream {
public:
    static SampleStream from_samples(std::vector<Sample> samples,
                                     const StreamSpec& spec) {
        SampleStream out;
        out.samples_ = std::move(samples);
        if (out.samples_.empty())
            throw IngestionError("stream is empty");
        out.dim_ = out.samples_.front().features.size();
        for (const Sample& s : out.samples_)
            if (s.features.size() != out.dim_)
                throw IngestionError("inconsistent sample dimensionality");
        out.normalize_labels(spec);
        out.make_order(spec);
        return out;
    }

    static SampleStream load(const StreamSpec& spec) {
        std::ifstream in(spec.path, std::ios::binary);
        if (!in)
            throw IngestionError("cannot open dataset '" + spec.path + "'");

        std::vector<detail::SparseLine> lines;
        std::uint64_t digest = 0xcbf29ce484222325ULL;
        std::string line;
        long line_number = 0;
        Index max_index = 0;
        while (std::getline(in, line)) {
            ++line_number;
            digest = detail::fnv1a64(line.data(), line.size(), digest);
            if (line.find_first_not_of(" \t\r\n") == std::string::npos)
                continue;
            lines.push_back(detail::parse_sparse_line(line, line_number));
            max_index = std::max(max_index, lines.back().max_index);
        }
        if (lines.empty())
            throw IngestionError("dataset '" + spec.path + "' has no samples");

        const Index dim = spec.dim > 0 ? spec.dim : max_index;
        if (dim < 1)
            throw IngestionError("dataset '" + spec.path + "' has no features");

        std::vector<Sample> samples;
        samples.reserve(lines.size());
        long n = 0;
        for (const auto& sparse : lines)
            samples.push_back(detail::densify(sparse, dim, ++n));

        SampleStream out = from_samples(std::move(samples), spec);
        out.digest_ = digest;
        return out;
    }

    // Rebuilds the iteration order in place (no seed: file order).
    void reshuffle(std::optional<std::uint64_t> seed) {
        StreamSpec spec;
        spec.shuffle_seed = seed;
        make_order(spec);
    }

    Index size() const { return static_cast<Index>(samples_.size()); }
    Index dim() const { return dim_; }
    std::uint64_t digest() const { return digest_; }
    const std::map<double, double>& label_map() const { return label_map_; }

    // t-th sample in iteration order.
    const Sample& at(Index t) const {
        return samples_[static_cast<std::size_t>(order_[static_cast<std::size_t>(t)])];
    }

    std::vector<double> raw_labels() const {
        std::vector<double> out;
        out.reserve(samples_.size());
        for (const Sample& s : samples_) out.push_back(s.label);
        return out;
    }

private:
    void normalize_labels(const StreamSpec& spec) {
        if (spec.task != Task::Classification) return;

        std::map<double, long> histogram;
        for (const Sample& s : samples_) ++histogram[s.label];

        const bool already_binary =
            histogram.size() <= 2 &&
            std::all_of(histogram.begin(), histogram.end(),
                        [](const auto& kv) { return kv.first == 1.0 || kv.first == -1.0; });

        double positive;
        if (spec.positive_label) {
            positive = *spec.positive_label;
        } else if (already_binary) {
            for (auto& [raw, n] : histogram) label_map_[raw] = raw;
            return;
        } else if (histogram.size() == 2 && histogram.count(0.0) &&
                   histogram.count(1.0)) {
            label_map_[0.0] = -1.0;
            label_map_[1.0] = 1.0;
            for (Sample& s : samples_) s.label = label_map_[s.label];
            return;
        } else {
            // Most frequent raw label becomes the positive class.
            positive = histogram.begin()->first;
            long best = histogram.begin()->second;
            for (const auto& [raw, n] : histogram)
                if (n > best) { positive = raw; best = n; }
        }

        for (const auto& [raw, n] : histogram)
            label_map_[raw] = raw == positive ? 1.0 : -1.0;
        for (Sample& s : samples_) s.label = label_map_[s.label];
    }

    void make_order(const StreamSpec& spec) {
        order_.resize(samples_.size());
        for (std::size_t i = 0; i < order_.size(); ++i)
            order_[i] = static_cast<Index>(i);
        if (!spec.shuffle_seed) return;

        // Seeded Fisher-Yates over an index array; modulo-free bounded
        // draws keep the permutation a pure function of the seed.
        std::uint64_t state = *spec.shuffle_seed;
        auto next_u64 = [&state]() {
            state = splitmix64(state);
            return state;
        };
        for (std::size_t i = order_.size() - 1; i > 0; --i) {
            const std::uint64_t bound = static_cast<std::uint64_t>(i) + 1;
            std::uint64_t x = next_u64();
            __uint128_t wide = static_cast<__uint128_t>(x) * bound;
            std::uint64_t j = static_cast<std::uint64_t>(wide >> 64);
            std::swap(order_[i], order_[static_cast<std::size_t>(j)]);
        }
    }

    std::vector<Sample> samples_;
    std::vector<Index> order_;
    std::map<double, double> label_map_;
    Index dim_ = 0;
    std::uint64_t digest_ = 0;
};

}  // namespace nolana
