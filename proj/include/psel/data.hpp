#pragma once

#include <psel/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace psel {

namespace detail {

inline std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

/// Parses a whole cell as a finite or infinite double; nullopt on any junk.
inline std::optional<double> parse_number(std::string_view text)
{
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_record(std::string_view line)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    for (auto& f : fields) f = std::string(trim(f));
    return fields;
}

/// Reads a CSV file into header + records. Blank lines are skipped; a UTF-8
/// byte-order mark is dropped. Each record remembers its 1-based line number.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column_index(std::string_view name) const
    {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file '" + path + "'");

    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_csv_record(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw DataError(path + ": missing header row");
    return table;
}

inline bool is_identifier(std::string_view s)
{
    if (s.empty()) return false;
    const auto head = static_cast<unsigned char>(s.front());
    if (!(std::isalpha(head) || s.front() == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '_' || c == '.';
    });
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Immutable observation table: one response column and named numeric covariates.
class Dataset {
public:
    static Dataset create(std::string response_name,
                          std::vector<double> response,
                          std::vector<std::string> covariate_names,
                          std::vector<std::vector<double>> covariates,
                          std::vector<std::string> row_labels = {})
    {
        if (response.empty()) throw DataError("dataset has no observations");
        if (covariate_names.size() != covariates.size())
            throw DataError("covariate name/column count mismatch");
        const auto n = response.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(response[i]))
                throw DataError("response '" + response_name + "' is not finite at row " +
                                std::to_string(i + 1));
        }
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            const auto& name = covariate_names[j];
            if (name.empty()) throw DataError("covariate name is empty");
            if (name == response_name)
                throw DataError("covariate '" + name + "' duplicates the response column");
            if (std::count(covariate_names.begin(), covariate_names.end(), name) > 1)
                throw DataError("duplicate covariate name '" + name + "'");
            if (covariates[j].size() != n)
                throw DataError("covariate '" + name + "' has " +
                                std::to_string(covariates[j].size()) + " values, expected " +
                                std::to_string(n));
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(covariates[j][i]))
                    throw DataError("covariate '" + name + "' is not finite at row " +
                                    std::to_string(i + 1));
            }
        }
        if (!row_labels.empty() && row_labels.size() != n)
            throw DataError("row label count does not match observation count");

        Dataset d;
        d.response_name_ = std::move(response_name);
        d.response_ = std::move(response);
        d.names_ = std::move(covariate_names);
        d.columns_ = std::move(covariates);
        d.row_labels_ = std::move(row_labels);
        return d;
    }

    std::size_t n() const noexcept { return response_.size(); }
    const std::string& response_name() const noexcept { return response_name_; }
    const std::vector<double>& response() const noexcept { return response_; }
    const std::vector<std::string>& covariate_names() const noexcept { return names_; }
    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }

    bool has_covariate(std::string_view name) const
    {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    const std::vector<double>& covariate(std::string_view name) const
    {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw DataError("unknown covariate '" + std::string(name) + "'");
        return columns_[static_cast<std::size_t>(it - names_.begin())];
    }

    Eigen::VectorXd response_vector() const
    {
        return Eigen::Map<const Eigen::VectorXd>(response_.data(),
                                                 static_cast<Eigen::Index>(response_.size()));
    }

    bool response_is_counts() const
    {
        return std::all_of(response_.begin(), response_.end(),
                           [](double y) { return y >= 0.0 && std::floor(y) == y; });
    }

private:
    Dataset() = default;

    std::string response_name_;
    std::vector<double> response_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<std::string> row_labels_;
};

/// Loads a header-first CSV. A column in which no cell is numeric is a text
/// column (the first one becomes the row labels) and is not a covariate; in
/// every other column each cell must parse as a finite number.
inline Dataset load_dataset(const std::string& path, const std::string& response_column)
{
    const auto table = detail::read_csv(path);
    const auto response_idx = table.column_index(response_column);
    if (!response_idx)
        throw DataError(path + ": response column '" + response_column + "' not in header");
    if (table.rows.empty()) throw DataError(path + ": no data rows");

    const auto ncol = table.header.size();
    std::vector<bool> numeric(ncol);
    for (std::size_t j = 0; j < ncol; ++j) {
        if (table.header[j].empty())
            throw DataError(path + ": column " + std::to_string(j + 1) + " has an empty name");
        numeric[j] = std::any_of(table.rows.begin(), table.rows.end(), [j](const auto& row) {
            return detail::parse_number(row[j]).has_value();
        });
    }
    if (!numeric[*response_idx]) numeric[*response_idx] = true; // reported below with location

    std::vector<std::vector<double>> values(ncol);
    std::vector<std::string> labels;
    std::optional<std::size_t> label_col;
    for (std::size_t j = 0; j < ncol; ++j) {
        if (!numeric[j] && !label_col) label_col = j;
    }

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t j = 0; j < ncol; ++j) {
            if (!numeric[j]) continue;
            const auto v = detail::parse_number(row[j]);
            if (!v || !std::isfinite(*v)) {
                throw DataError(path + ": row " + std::to_string(r + 1) + " (line " +
                                std::to_string(table.line_numbers[r]) + "), column '" +
                                table.header[j] + "': non-numeric value '" + row[j] + "'");
            }
            values[j].push_back(*v);
        }
        if (label_col) labels.push_back(row[*label_col]);
    }

    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    for (std::size_t j = 0; j < ncol; ++j) {
        if (!numeric[j] || j == *response_idx) continue;
        names.push_back(table.header[j]);
        columns.push_back(std::move(values[j]));
    }
    return Dataset::create(response_column, std::move(values[*response_idx]), std::move(names),
                           std::move(columns), std::move(labels));
}

// ---------------------------------------------------------------------------
// Model specifications
// ---------------------------------------------------------------------------

struct Term {
    std::string covariate;
    int degree = 1;

    std::string label() const { return degree == 1 ? covariate : covariate + "^" + std::to_string(degree); }

    auto operator<=>(const Term&) const = default;
};

/// One candidate linear predictor: an implicit intercept plus an ordered set of
/// (covariate, degree) terms. Terms are kept sorted by name then degree.
class ModelSpec {
public:
    ModelSpec() = default;

    explicit ModelSpec(std::vector<Term> terms) : terms_(std::move(terms))
    {
        for (const auto& t : terms_) {
            if (t.degree != 1 && t.degree != 2)
                throw DataError("term '" + t.covariate + "' has unsupported degree " +
                                std::to_string(t.degree));
            if (!detail::is_identifier(t.covariate))
                throw DataError("invalid covariate name '" + t.covariate + "'");
        }
        std::sort(terms_.begin(), terms_.end());
        const auto dup = std::adjacent_find(terms_.begin(), terms_.end());
        if (dup != terms_.end()) throw DataError("duplicate term '" + dup->label() + "'");
    }

    const std::vector<Term>& terms() const noexcept { return terms_; }

    /// Intercept included, so the null model has one parameter.
    std::size_t parameter_count() const noexcept { return 1 + terms_.size(); }

    /// Canonical formula; "1" for the intercept-only model.
    std::string label() const
    {
        if (terms_.empty()) return "1";
        std::string out;
        for (const auto& t : terms_) {
            if (!out.empty()) out += " + ";
            out += t.label();
        }
        return out;
    }

    bool contains(const Term& t) const { return std::binary_search(terms_.begin(), terms_.end(), t); }

    /// True when every term of this spec also appears in `other`.
    bool nested_in(const ModelSpec& other) const
    {
        return std::includes(other.terms_.begin(), other.terms_.end(), terms_.begin(), terms_.end());
    }

    bool operator==(const ModelSpec&) const = default;

private:
    std::vector<Term> terms_;
};

/// Parses `a + b + b^2`. Whitespace is ignored, the intercept is implicit (an
/// explicit `1` is accepted), and the empty string is the intercept-only model.
/// `b^2` does not imply `b`.
inline ModelSpec parse_model_formula(std::string_view text)
{
    std::vector<Term> terms;
    std::string compact;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
    }
    if (compact.empty()) return {};

    std::string_view rest = compact;
    while (true) {
        const auto plus = rest.find('+');
        const auto token = rest.substr(0, plus);
        if (token.empty())
            throw DataError("malformed formula '" + std::string(text) + "': empty term");
        if (token != "1") {
            Term term;
            const auto caret = token.find('^');
            term.covariate = std::string(token.substr(0, caret));
            if (caret != std::string_view::npos) {
                if (token.substr(caret + 1) != "2")
                    throw DataError("malformed term '" + std::string(token) +
                                    "': only ^2 is supported");
            }
            if (!detail::is_identifier(term.covariate))
                throw DataError("malformed term '" + std::string(token) + "'");
            term.degree = caret == std::string_view::npos ? 1 : 2;
            terms.push_back(std::move(term));
        }
        if (plus == std::string_view::npos) break;
        rest.remove_prefix(plus + 1);
    }
    return ModelSpec(std::move(terms));
}

/// As above, additionally rejecting covariates that are not in `known_covariates`.
inline ModelSpec parse_model_formula(std::string_view text,
                                     std::span<const std::string> known_covariates)
{
    auto spec = parse_model_formula(text);
    for (const auto& t : spec.terms()) {
        if (std::find(known_covariates.begin(), known_covariates.end(), t.covariate) ==
            known_covariates.end())
            throw DataError("unknown covariate '" + t.covariate + "' in formula '" +
                            std::string(text) + "'");
    }
    return spec;
}

namespace detail {

template <class Parse>
std::vector<ModelSpec> read_model_list(std::istream& in, const std::string& source, Parse&& parse)
{
    std::vector<ModelSpec> specs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (!body.empty() && body.front() == '#') continue;
        if (body.empty()) continue;
        try {
            specs.push_back(parse(body));
        } catch (const DataError& e) {
            throw DataError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t k = 0; k + 1 < specs.size(); ++k) {
            if (specs[k] == specs.back())
                throw DataError(source + ": line " + std::to_string(line_no) +
                                ": duplicate model '" + specs.back().label() + "'");
        }
    }
    return specs;
}

} // namespace detail

/// Reads a model-list file: one formula per line, '#' starts a comment line.
/// Blank lines are skipped, so the intercept-only model is written as `1`.
inline std::vector<ModelSpec> load_model_list(const std::string& path,
                                              std::span<const std::string> known_covariates)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model list '" + path + "'");
    return detail::read_model_list(in, path, [&](std::string_view f) {
        return parse_model_formula(f, known_covariates);
    });
}

inline std::vector<ModelSpec> load_model_list(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model list '" + path + "'");
    return detail::read_model_list(in, path, [](std::string_view f) { return parse_model_formula(f); });
}

/// Every combination in which each covariate is absent, linear, or linear plus
/// quadratic: 3^k specs, ordered by (parameter count, label).
inline std::vector<ModelSpec> enumerate_hierarchical_models(std::span<const std::string> covariates)
{
    if (covariates.empty()) throw UsageError("model enumeration needs at least one covariate");
    std::size_t total = 1;
    for (std::size_t i = 0; i < covariates.size(); ++i) total *= 3;

    std::vector<ModelSpec> specs;
    specs.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<Term> terms;
        auto c = code;
        for (const auto& name : covariates) {
            const auto level = c % 3;
            c /= 3;
            if (level >= 1) terms.push_back({name, 1});
            if (level == 2) terms.push_back({name, 2});
        }
        specs.emplace_back(std::move(terms));
    }
    std::sort(specs.begin(), specs.end(), [](const ModelSpec& a, const ModelSpec& b) {
        if (a.parameter_count() != b.parameter_count())
            return a.parameter_count() < b.parameter_count();
        return a.label() < b.label();
    });
    return specs;
}

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

struct ColumnScaling {
    double mean = 0.0;
    double scale = 1.0;
};

/// Intercept column of ones followed by one column per term. When standardized,
/// `scaling[j]` holds the (mean, sd) that was removed from column j+1.
class DesignMatrix {
public:
    /// Wraps an explicit matrix whose first column is the intercept; no scaling.
    explicit DesignMatrix(Eigen::MatrixXd x)
        : DesignMatrix(std::move(x), {}, {}, false)
    {
    }

    DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> names,
                 std::vector<ColumnScaling> scaling, bool standardized)
        : x_(std::move(x)), names_(std::move(names)), scaling_(std::move(scaling)),
          standardized_(standardized)
    {
        if (x_.cols() < 1 || x_.rows() < 1) throw DataError("design matrix is empty");
        if (!(x_.col(0).array() == 1.0).all())
            throw DataError("first design column must be the intercept (all ones)");
        const auto k = static_cast<std::size_t>(x_.cols());
        if (names_.empty()) {
            names_.push_back("(Intercept)");
            for (std::size_t j = 1; j < k; ++j) names_.push_back("x" + std::to_string(j));
        }
        if (scaling_.empty()) scaling_.assign(k - 1, ColumnScaling{});
        if (names_.size() != k || scaling_.size() != k - 1)
            throw DataError("design matrix metadata does not match its column count");
    }

    const Eigen::MatrixXd& matrix() const noexcept { return x_; }
    Eigen::Index rows() const noexcept { return x_.rows(); }
    Eigen::Index cols() const noexcept { return x_.cols(); }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    const std::vector<ColumnScaling>& scaling() const noexcept { return scaling_; }
    bool standardized() const noexcept { return standardized_; }

    /// Maps coefficients on the design's scale back to raw covariate units.
    Eigen::VectorXd to_raw_scale(const Eigen::VectorXd& beta) const
    {
        Eigen::VectorXd raw = beta;
        for (Eigen::Index j = 1; j < beta.size(); ++j) {
            const auto& s = scaling_[static_cast<std::size_t>(j - 1)];
            raw[j] = beta[j] / s.scale;
            raw[0] -= beta[j] * s.mean / s.scale;
        }
        return raw;
    }

private:
    Eigen::MatrixXd x_;
    std::vector<std::string> names_;
    std::vector<ColumnScaling> scaling_;
    bool standardized_ = false;
};

/// Sample mean and n-1 standard deviation.
inline ColumnScaling column_moments(const Eigen::VectorXd& v)
{
    ColumnScaling s;
    const auto n = static_cast<double>(v.size());
    s.mean = v.mean();
    s.scale = v.size() > 1 ? std::sqrt((v.array() - s.mean).square().sum() / (n - 1.0)) : 0.0;
    return s;
}

/// Quadratic columns square the raw covariate; standardization (if requested)
/// happens after squaring and never touches the intercept.
inline DesignMatrix build_design_matrix(const Dataset& data, const ModelSpec& spec, bool standardize)
{
    const auto n = static_cast<Eigen::Index>(data.n());
    const auto k = static_cast<Eigen::Index>(spec.parameter_count());
    Eigen::MatrixXd x(n, k);
    x.col(0).setOnes();
    std::vector<std::string> names{"(Intercept)"};
    std::vector<ColumnScaling> scaling;

    Eigen::Index j = 1;
    for (const auto& term : spec.terms()) {
        const auto& raw = data.covariate(term.covariate);
        auto col = x.col(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = raw[static_cast<std::size_t>(i)];
            col[i] = term.degree == 2 ? v * v : v;
        }
        ColumnScaling s;
        if (standardize) {
            s = column_moments(col);
            if (!(s.scale > 1e-12 * std::max(1.0, std::abs(s.mean))))
                throw DataError("column '" + term.label() +
                                "' has zero variance and cannot be standardized");
            col = (col.array() - s.mean) / s.scale;
        }
        scaling.push_back(s);
        names.push_back(term.label());
        ++j;
    }
    return DesignMatrix(std::move(x), std::move(names), std::move(scaling), standardize);
}

} // namespace psel
