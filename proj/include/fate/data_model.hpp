#pragma once

// Records, the pooled two-dataset sample, setting declarations and drift
// functions, plus CSV ingestion and structure validation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fate {

/// g = 1 marks the source dataset, g = 0 the target dataset.
struct SampleRecord {
    std::vector<double> x;
    std::optional<int> a;
    std::optional<double> y;
    int g = 0;

    bool operator==(const SampleRecord&) const = default;
};

/// Non-owning view of one record inside a StudyDataset.
struct RecordView {
    std::span<const double> x;
    std::optional<int> a;
    std::optional<double> y;
    int g = 0;
};

/// Immutable pooled sample. Stored column-wise; both groups must be non-empty
/// and every source record must carry a and y.
class StudyDataset {
public:
    StudyDataset() = default;
    explicit StudyDataset(const std::vector<SampleRecord>& records);

    std::size_t size() const { return g_.size(); }
    std::size_t p() const { return p_; }
    double q_hat() const { return static_cast<double>(n_source_) / static_cast<double>(size()); }
    std::size_t n_source() const { return n_source_; }
    std::size_t n_target() const { return size() - n_source_; }

    RecordView record(std::size_t i) const {
        return {std::span<const double>(x_.data() + i * p_, p_), a_[i], y_[i], g_[i]};
    }
    SampleRecord owned_record(std::size_t i) const;
    std::vector<SampleRecord> records() const;

    std::span<const double> x(std::size_t i) const { return {x_.data() + i * p_, p_}; }
    double x(std::size_t i, std::size_t j) const { return x_[i * p_ + j]; }
    const std::optional<int>& a(std::size_t i) const { return a_[i]; }
    const std::optional<double>& y(std::size_t i) const { return y_[i]; }
    int g(std::size_t i) const { return g_[i]; }

    /// Rows subset in the given order (indices may repeat, as in a bootstrap draw).
    StudyDataset subset(std::span<const std::size_t> rows) const;

    bool operator==(const StudyDataset&) const = default;

private:
    std::size_t p_ = 0;
    std::size_t n_source_ = 0;
    std::vector<double> x_;
    std::vector<std::optional<int>> a_;
    std::vector<std::optional<double>> y_;
    std::vector<int> g_;
};

/// Pooled z-scoring of covariates (opt-in; estimators use raw scale by default).
StudyDataset standardized(const StudyDataset& d);

/// Target-data structure. The first four are the observed-data cases; the last
/// two are (A,X,Y) with no treated target units, or with target unconfoundedness.
enum class Structure { XOnly, XA, XY, XAY, XAYControlsOnly, XAYUnconfounded };

/// Which efficient-influence-function family a structure selects.
enum class EifForm { I, V, VI };

EifForm eif_form(Structure s);
const char* roman(Structure s);
Structure parse_roman(const std::string& s);  // "I".."VI", trailing '*' ignored
bool target_has_a(Structure s);
bool target_has_y(Structure s);

enum class DriftKind { Identity, Linear, Custom };

/// Posterior drift: target conditional means are psi_a(source means), m_a = psi_a'.
struct DriftSpec {
    DriftKind kind = DriftKind::Identity;
    double eps0 = 1.0;
    double eps1 = 1.0;
    std::function<double(double)> psi0_fn, psi1_fn, m0_fn, m1_fn;

    static DriftSpec identity() { return {}; }
    /// Linear(1, 1) is the identity map and is returned as Identity.
    static DriftSpec linear(double eps0, double eps1);
    static DriftSpec custom(std::function<double(double)> psi0, std::function<double(double)> m0,
                            std::function<double(double)> psi1, std::function<double(double)> m1);

    double psi(int arm, double u) const;
    double m(int arm, double u) const;
    bool is_identity() const { return kind == DriftKind::Identity; }
    std::string label() const;
};

struct SettingSpec {
    Structure structure = Structure::XOnly;
    DriftSpec drift;

    bool starred() const { return !drift.is_identity(); }
    EifForm form() const { return eif_form(structure); }
    std::string name() const;  // e.g. "VI" or "VI*"
};

/// Parses "I".."VI" or "I*".."VI*"; starred names need a non-identity drift.
SettingSpec parse_setting(const std::string& name, const DriftSpec& drift = DriftSpec::identity());

struct Violation {
    std::size_t index;
    std::string rule;
};

/// Empty result means the target records carry what the structure requires.
std::vector<Violation> validate_dataset(const StudyDataset& d, const SettingSpec& s);
/// Throws DataError summarising the first violations.
void require_valid(const StudyDataset& d, const SettingSpec& s);

/// Column mapping for nonstandard headers. Empty x_columns means x1..xp.
struct CsvSchema {
    std::vector<std::string> x_columns;
    std::string a_column = "a";
    std::string y_column = "y";
    std::string g_column = "g";

    static CsvSchema from_json_file(const std::filesystem::path& path);
};

StudyDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
StudyDataset parse_csv(const std::string& text, const CsvSchema& schema = {});
void save_csv(const StudyDataset& d, const std::filesystem::path& path);
std::string to_csv(const StudyDataset& d);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace fate
