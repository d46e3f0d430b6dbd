#include "fate/data_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fate/error.hpp"

namespace fate {

StudyDataset::StudyDataset(const std::vector<SampleRecord>& records) {
    if (records.empty()) throw DegenerateDatasetError("dataset has no records");
    p_ = records.front().x.size();
    x_.reserve(records.size() * p_);
    a_.reserve(records.size());
    y_.reserve(records.size());
    g_.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.x.size() != p_)
            throw SchemaError("record " + std::to_string(i) + " has " + std::to_string(r.x.size()) +
                              " covariates, expected " + std::to_string(p_));
        if (r.g != 0 && r.g != 1) throw SchemaError("record " + std::to_string(i) + ": g must be 0 or 1");
        if (r.a && *r.a != 0 && *r.a != 1)
            throw SchemaError("record " + std::to_string(i) + ": a must be 0 or 1");
        if (r.g == 1 && (!r.a || !r.y))
            throw SchemaError("record " + std::to_string(i) + ": source records need both a and y");
        if (r.y && !std::isfinite(*r.y)) throw SchemaError("record " + std::to_string(i) + ": y is not finite");
        x_.insert(x_.end(), r.x.begin(), r.x.end());
        a_.push_back(r.a);
        y_.push_back(r.y);
        g_.push_back(r.g);
        n_source_ += static_cast<std::size_t>(r.g);
    }
    if (n_source_ == 0 || n_source_ == records.size())
        throw DegenerateDatasetError("all records have g = " + std::to_string(records.front().g) +
                                     "; both source and target data are required");
}

SampleRecord StudyDataset::owned_record(std::size_t i) const {
    auto xs = x(i);
    return {std::vector<double>(xs.begin(), xs.end()), a_[i], y_[i], g_[i]};
}

std::vector<SampleRecord> StudyDataset::records() const {
    std::vector<SampleRecord> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(owned_record(i));
    return out;
}

StudyDataset StudyDataset::subset(std::span<const std::size_t> rows) const {
    std::vector<SampleRecord> recs;
    recs.reserve(rows.size());
    for (auto r : rows) recs.push_back(owned_record(r));
    return StudyDataset(recs);
}

StudyDataset standardized(const StudyDataset& d) {
    const std::size_t n = d.size(), p = d.p();
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) mean[j] += d.x(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) sd[j] += (d.x(i, j) - mean[j]) * (d.x(i, j) - mean[j]);
    for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));
    auto recs = d.records();
    for (auto& r : recs)
        for (std::size_t j = 0; j < p; ++j) r.x[j] = sd[j] > 0 ? (r.x[j] - mean[j]) / sd[j] : 0.0;
    return StudyDataset(recs);
}

EifForm eif_form(Structure s) {
    switch (s) {
        case Structure::XAYControlsOnly: return EifForm::V;
        case Structure::XAYUnconfounded: return EifForm::VI;
        default: return EifForm::I;
    }
}

const char* roman(Structure s) {
    switch (s) {
        case Structure::XOnly: return "I";
        case Structure::XA: return "II";
        case Structure::XY: return "III";
        case Structure::XAY: return "IV";
        case Structure::XAYControlsOnly: return "V";
        case Structure::XAYUnconfounded: return "VI";
    }
    return "?";
}

Structure parse_roman(const std::string& s) {
    std::string r = s;
    if (!r.empty() && r.back() == '*') r.pop_back();
    static const std::unordered_map<std::string, Structure> table{
        {"I", Structure::XOnly},          {"II", Structure::XA},
        {"III", Structure::XY},           {"IV", Structure::XAY},
        {"V", Structure::XAYControlsOnly}, {"VI", Structure::XAYUnconfounded}};
    auto it = table.find(r);
    if (it == table.end()) throw ConfigError("unknown setting '" + s + "' (expected I..VI or I*..VI*)");
    return it->second;
}

bool target_has_a(Structure s) { return s != Structure::XOnly && s != Structure::XY; }
bool target_has_y(Structure s) { return s != Structure::XOnly && s != Structure::XA; }

DriftSpec DriftSpec::linear(double eps0, double eps1) {
    if (eps0 == 1.0 && eps1 == 1.0) return identity();
    DriftSpec d;
    d.kind = DriftKind::Linear;
    d.eps0 = eps0;
    d.eps1 = eps1;
    return d;
}

DriftSpec DriftSpec::custom(std::function<double(double)> psi0, std::function<double(double)> m0,
                            std::function<double(double)> psi1, std::function<double(double)> m1) {
    DriftSpec d;
    d.kind = DriftKind::Custom;
    d.psi0_fn = std::move(psi0);
    d.m0_fn = std::move(m0);
    d.psi1_fn = std::move(psi1);
    d.m1_fn = std::move(m1);
    return d;
}

double DriftSpec::psi(int arm, double u) const {
    switch (kind) {
        case DriftKind::Identity: return u;
        case DriftKind::Linear: return (arm == 1 ? eps1 : eps0) * u;
        case DriftKind::Custom: return arm == 1 ? psi1_fn(u) : psi0_fn(u);
    }
    return u;
}

double DriftSpec::m(int arm, double u) const {
    switch (kind) {
        case DriftKind::Identity: return 1.0;
        case DriftKind::Linear: return arm == 1 ? eps1 : eps0;
        case DriftKind::Custom: return arm == 1 ? m1_fn(u) : m0_fn(u);
    }
    return 1.0;
}

std::string DriftSpec::label() const {
    switch (kind) {
        case DriftKind::Identity: return "identity";
        case DriftKind::Linear: return "linear(" + format_double(eps0) + "," + format_double(eps1) + ")";
        case DriftKind::Custom: return "custom";
    }
    return "?";
}

std::string SettingSpec::name() const { return std::string(roman(structure)) + (starred() ? "*" : ""); }

SettingSpec parse_setting(const std::string& name, const DriftSpec& drift) {
    const bool star = !name.empty() && name.back() == '*';
    if (star && drift.is_identity())
        throw ConfigError("setting " + name + " needs a non-identity posterior drift (--eps0/--eps1)");
    return {parse_roman(name), star ? drift : DriftSpec::identity()};
}

std::vector<Violation> validate_dataset(const StudyDataset& d, const SettingSpec& s) {
    std::vector<Violation> out;
    const bool need_a = target_has_a(s.structure), need_y = target_has_y(s.structure);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.g(i) != 0) continue;
        if (need_a && !d.a(i)) out.push_back({i, "structure " + std::string(roman(s.structure)) + " requires target a"});
        if (need_y && !d.y(i)) out.push_back({i, "structure " + std::string(roman(s.structure)) + " requires target y"});
        if (s.structure == Structure::XAYControlsOnly && d.a(i) && *d.a(i) != 0)
            out.push_back({i, "Assumption 4 (no treated units in the target data) requires a = 0"});
    }
    return out;
}

void require_valid(const StudyDataset& d, const SettingSpec& s) {
    auto v = validate_dataset(d, s);
    if (v.empty()) return;
    std::ostringstream msg;
    msg << v.size() << " record(s) violate setting " << s.name() << ":";
    for (std::size_t k = 0; k < std::min<std::size_t>(v.size(), 5); ++k)
        msg << " [record " << v[k].index << ": " << v[k].rule << "]";
    throw DataError(msg.str());
}

CsvSchema CsvSchema::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("schema file " + path.string() + ": " + e.what());
    }
    CsvSchema s;
    if (j.contains("x")) s.x_columns = j.at("x").get<std::vector<std::string>>();
    if (j.contains("a")) s.a_column = j.at("a").get<std::string>();
    if (j.contains("y")) s.y_column = j.at("y").get<std::string>();
    if (j.contains("g")) s.g_column = j.at("g").get<std::string>();
    return s;
}

namespace {

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            auto f = line.substr(start, i - start);
            while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
            while (!f.empty() && (f.back() == ' ' || f.back() == '"')) f.remove_suffix(1);
            out.push_back(f);
            start = i + 1;
        }
    }
    return out;
}

double parse_number(std::string_view f, std::size_t line, const std::string& col) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size())
        throw ParseError(line, "column '" + col + "': cannot parse '" + std::string(f) + "' as a number");
    return v;
}

}  // namespace

StudyDataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    // Leading "#" lines carry run metadata.
    do {
        if (!std::getline(in, line)) throw SchemaError("empty CSV input");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    } while (!line.empty() && line.front() == '#');
    auto header = split_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < header.size(); ++k) col.emplace(std::string(header[k]), k);

    auto find = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        auto it = col.find(name);
        if (it == col.end()) {
            if (required) throw SchemaError("missing column '" + name + "'");
            return std::nullopt;
        }
        return it->second;
    };

    std::vector<std::string> xnames = schema.x_columns;
    if (xnames.empty())
        for (std::size_t j = 1; col.count("x" + std::to_string(j)); ++j) xnames.push_back("x" + std::to_string(j));
    if (xnames.empty()) throw SchemaError("no covariate columns (expected x1..xp)");
    std::vector<std::size_t> xcols;
    for (const auto& nm : xnames) xcols.push_back(*find(nm, true));
    const auto gcol = *find(schema.g_column, true);
    const auto acol = find(schema.a_column, false);
    const auto ycol = find(schema.y_column, false);

    std::vector<SampleRecord> recs;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_line(line);
        if (f.size() != header.size())
            throw SchemaError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(f.size()));
        SampleRecord r;
        r.x.reserve(xcols.size());
        for (std::size_t j = 0; j < xcols.size(); ++j) {
            if (f[xcols[j]].empty()) throw ParseError(lineno, "covariate '" + xnames[j] + "' is empty");
            r.x.push_back(parse_number(f[xcols[j]], lineno, xnames[j]));
        }
        const double g = parse_number(f[gcol], lineno, schema.g_column);
        if (g != 0.0 && g != 1.0) throw ParseError(lineno, "g must be 0 or 1");
        r.g = static_cast<int>(g);
        if (acol && !f[*acol].empty()) {
            const double a = parse_number(f[*acol], lineno, schema.a_column);
            if (a != 0.0 && a != 1.0) throw ParseError(lineno, "a must be 0 or 1");
            r.a = static_cast<int>(a);
        }
        if (ycol && !f[*ycol].empty()) r.y = parse_number(f[*ycol], lineno, schema.y_column);
        if (r.g == 1 && (!r.a || !r.y)) throw ParseError(lineno, "source rows (g = 1) need a and y");
        recs.push_back(std::move(r));
    }
    return StudyDataset(recs);
}

StudyDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), schema);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string to_csv(const StudyDataset& d) {
    std::string out;
    for (std::size_t j = 0; j < d.p(); ++j) out += "x" + std::to_string(j + 1) + ",";
    out += "a,y,g\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.p(); ++j) out += format_double(d.x(i, j)) + ",";
        if (d.a(i)) out += std::to_string(*d.a(i));
        out += ",";
        if (d.y(i)) out += format_double(*d.y(i));
        out += "," + std::to_string(d.g(i)) + "\n";
    }
    return out;
}

void save_csv(const StudyDataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_csv(d);
}

}  // namespace fate
