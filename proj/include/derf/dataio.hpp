#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "derf/kernel.hpp"
#include "derf/rng.hpp"

namespace derf {

/// Points plus integer class labels in [0, class_count).
struct LabeledDataset {
    PointSet points;
    std::vector<int> labels;
    int class_count = 0;
    std::vector<std::string> class_names; // factorization order
};

enum class Regime { Normal, Sphere, Heterogen };

inline Regime parse_regime(const std::string& name) {
    if (name == "normal") return Regime::Normal;
    if (name == "sphere") return Regime::Sphere;
    if (name == "heterogen") return Regime::Heterogen;
    throw ConfigError("unknown regime '" + name + "'");
}

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Normal: return "normal";
        case Regime::Sphere: return "sphere";
        case Regime::Heterogen: return "heterogen";
    }
    return "?";
}

struct RegimeSpec {
    Regime regime = Regime::Normal;
    double sigma = 1.0;
    Index l = 64;
    Index d = 8;
};

/// Synthetic sampling regimes:
///   normal    - x, y ~ N(0, sigma^2 I)
///   sphere    - x, y uniform on the radius-sigma sphere
///   heterogen - x ~ N(0, sigma^2 I), y ~ N(sigma*1, sigma^2 I)
inline std::pair<PointSet, PointSet> synth_regime(const RegimeSpec& spec, RngStream& rng) {
    if (!(spec.sigma > 0.0)) throw ConfigError("synth_regime: sigma must be positive");
    if (spec.l < 1 || spec.d < 1) throw ConfigError("synth_regime: l and d must be >= 1");
    auto gaussian_block = [&](Index rows) {
        Matrix m(rows, spec.d);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < spec.d; ++j) m(i, j) = rng.next_gaussian();
        return m;
    };
    Matrix x = gaussian_block(spec.l);
    Matrix y = gaussian_block(spec.l);
    switch (spec.regime) {
        case Regime::Normal:
            x *= spec.sigma;
            y *= spec.sigma;
            break;
        case Regime::Sphere:
            for (Index i = 0; i < spec.l; ++i) {
                x.row(i) *= spec.sigma / x.row(i).norm();
                y.row(i) *= spec.sigma / y.row(i).norm();
            }
            break;
        case Regime::Heterogen:
            x *= spec.sigma;
            y = (spec.sigma * y).array() + spec.sigma;
            break;
    }
    return {PointSet{std::move(x)}, PointSet{std::move(y)}};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "': empty file");
    t.header = split_csv_line(line);
    for (auto& h : t.header) h = trim(h);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw ParseError("'" + path + "': row " + std::to_string(t.rows.size() + 1) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
    const std::string s = trim(raw);
    double value = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError("malformed numeric cell at row " + std::to_string(row) + ", column \"" +
                         col + "\"");
    return value;
}

} // namespace detail

/// Loads a header-first CSV of numeric columns as a point set.
inline PointSet load_csv(const std::string& path) {
    const auto t = detail::read_csv(path);
    const Index d = static_cast<Index>(t.header.size());
    Matrix pts(static_cast<Index>(t.rows.size()), d);
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.header.size(); ++j)
            pts(static_cast<Index>(i), static_cast<Index>(j)) =
                detail::parse_cell(t.rows[i][j], i + 1, t.header[j]);
    return PointSet{std::move(pts)};
}

/// Loads a CSV with one label column (addressed by name, factorized to class
/// indices in first-appearance order); the remaining columns are features.
inline LabeledDataset load_csv(const std::string& path, const std::string& label_column) {
    const auto t = detail::read_csv(path);
    const auto it = std::find(t.header.begin(), t.header.end(), label_column);
    if (it == t.header.end())
        throw MissingLabelColumn("'" + path + "': no column named \"" + label_column + "\"");
    const std::size_t label_idx = static_cast<std::size_t>(it - t.header.begin());
    LabeledDataset ds;
    const Index d = static_cast<Index>(t.header.size()) - 1;
    Matrix pts(static_cast<Index>(t.rows.size()), d);
    ds.labels.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        Index col = 0;
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            if (j == label_idx) continue;
            pts(static_cast<Index>(i), col++) = detail::parse_cell(t.rows[i][j], i + 1, t.header[j]);
        }
        const std::string label = detail::trim(t.rows[i][label_idx]);
        auto found = std::find(ds.class_names.begin(), ds.class_names.end(), label);
        if (found == ds.class_names.end()) {
            ds.class_names.push_back(label);
            found = std::prev(ds.class_names.end());
        }
        ds.labels.push_back(static_cast<int>(found - ds.class_names.begin()));
    }
    ds.points = PointSet{std::move(pts)};
    ds.class_count = static_cast<int>(ds.class_names.size());
    if (ds.class_count < 2) throw ConfigError("'" + path + "': needs at least 2 classes");
    return ds;
}

/// Index partition of a shuffled 90/5/5 split.
struct Split {
    std::vector<Index> train, val, test;
};

/// Shuffled split with sizes floor(0.9 L), floor(0.05 L) and the remainder.
/// Deterministic per stream, so one shared seed fixes the split across all
/// feature mechanisms.
inline Split split_905_5(const LabeledDataset& ds, RngStream& rng) {
    const Index l = ds.points.size();
    if (l < 20) throw TooSmall("split_905_5: needs at least 20 rows");
    std::vector<Index> idx(static_cast<std::size_t>(l));
    std::iota(idx.begin(), idx.end(), Index{0});
    // Fisher-Yates on the explicit stream.
    for (Index i = l - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    const auto n_train = static_cast<std::size_t>(0.9 * static_cast<double>(l));
    const auto n_val = static_cast<std::size_t>(0.05 * static_cast<double>(l));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

inline PointSet select_rows(const PointSet& ps, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), ps.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = ps.points.row(rows[i]);
    return PointSet{std::move(out)};
}

} // namespace derf
