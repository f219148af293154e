#pragma once
//---------------------------------------------------------------------------//
//! \file ampest/counts_file.hpp
//! "symbol_id,count" files and probability-vector files.
//---------------------------------------------------------------------------//

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "distributions.hpp"

namespace ampest {

class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace detail

struct SymbolCount
{
    std::string symbol;
    std::uint64_t count = 0;
};

//! Parse counts, one "symbol_id,count" per line with an optional
//! "symbol,count" header. Blank lines are skipped.
inline std::vector<SymbolCount> read_counts(std::istream& in, const std::string& source = "counts")
{
    std::vector<SymbolCount> out;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = detail::trim(line);
        if (body.empty())
            continue;
        const auto where = source + ":" + std::to_string(line_no) + ": ";
        const auto comma = body.find(',');
        if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos)
            throw FormatError(where + "expected 'symbol_id,count'");
        const std::string_view symbol = detail::trim(body.substr(0, comma));
        const std::string_view count_text = detail::trim(body.substr(comma + 1));
        if (first && symbol == "symbol" && count_text == "count") {
            first = false;
            continue;
        }
        first = false;
        if (symbol.empty())
            throw FormatError(where + "empty symbol id");
        std::uint64_t count = 0;
        const auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
        if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count == 0)
            throw FormatError(where + "count must be a positive integer, got '" + std::string(count_text) + "'");
        if (!seen.insert(std::string(symbol)).second)
            throw FormatError(where + "duplicate symbol id '" + std::string(symbol) + "'");
        out.push_back({std::string(symbol), count});
    }
    return out;
}

inline std::vector<SymbolCount> read_counts_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open counts file '" + path + "'");
    return read_counts(in, path);
}

//! Assigns dense indices to symbol ids. With `numeric` set, ids must be
//! nonnegative integers and are used as indices directly.
class SymbolIndex
{
  public:
    explicit SymbolIndex(bool numeric) : numeric_(numeric) {}

    std::size_t operator()(const std::string& symbol)
    {
        if (numeric_) {
            std::size_t x = 0;
            const auto [ptr, ec] = std::from_chars(symbol.data(), symbol.data() + symbol.size(), x);
            if (ec != std::errc() || ptr != symbol.data() + symbol.size())
                throw FormatError("symbol id '" + symbol + "' is not an integer index");
            return x;
        }
        auto [it, inserted] = ids_.emplace(symbol, ids_.size());
        return it->second;
    }

  private:
    bool numeric_;
    std::map<std::string, std::size_t> ids_;
};

inline Histogram to_histogram(const std::vector<SymbolCount>& counts, SymbolIndex& index)
{
    std::map<std::size_t, std::uint64_t> dense;
    for (const auto& c : counts)
        dense[index(c.symbol)] += c.count;
    return Histogram::from_map(dense);
}

//! Probabilities separated by newlines and/or commas.
inline std::vector<double> read_probabilities(std::istream& in, const std::string& source = "probabilities")
{
    std::vector<double> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = line;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view field = detail::trim(rest.substr(0, comma));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            if (field.empty())
                continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(std::string(field), &used);
                if (used != field.size())
                    throw std::invalid_argument("trailing characters");
                out.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(source + ":" + std::to_string(line_no) + ": bad probability '"
                                  + std::string(field) + "'");
            }
        }
    }
    return out;
}

inline std::vector<double> read_probabilities_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open probability file '" + path + "'");
    return read_probabilities(in, path);
}

} // namespace ampest
