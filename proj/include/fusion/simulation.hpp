#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fusion/data_model.hpp"
#include "fusion/evaluation.hpp"
#include "fusion/matchers.hpp"
#include "fusion/recode_rule.hpp"

namespace fusion {

// ------------------------------------------------------ synthetic population

/// Marginal transform applied to a standard-normal latent variable.
struct Margin {
    enum class Kind { Normal, Lognormal, Categorical };
    Kind kind = Kind::Normal;
    double mu = 0.0;
    double sigma = 1.0;
    std::vector<double> thresholds;  ///< categorical cut points on the latent scale, strictly increasing
    std::vector<int> levels;         ///< categorical codes, thresholds.size() + 1 of them
};

/// Pearson correlation of two transformed margins whose latent normals have
/// correlation `latent`. Defined for normal and lognormal margins.
double pearson_from_latent(const Margin& a, const Margin& b, double latent);

/// Inverse of pearson_from_latent. Throws when the target is unattainable
/// for the pair of margins.
double latent_for_pearson(const Margin& a, const Margin& b, double target);

/// Latent cut points that reproduce the given category shares.
std::vector<double> thresholds_from_shares(const std::vector<double>& shares);

struct LatentVariable {
    std::string name;
    Margin margin;
    bool helper = false;  ///< generated but dropped from the output
};

struct DerivedVariable {
    std::string name;
    std::vector<std::string> sources;  ///< single source for binning / regrouping; none otherwise
    RecodeRule rule;
    bool helper = false;
};

struct PearsonTarget {
    std::string a;
    std::string b;
    double target = 0.0;
};

struct SynthSpec {
    std::size_t n = 0;
    std::vector<LatentVariable> variables;
    Eigen::MatrixXd latent_correlation;  ///< over `variables`, unit diagonal
    std::vector<DerivedVariable> derived;
    std::vector<PearsonTarget> targets;  ///< calibration targets reported after generation
    std::uint64_t seed = 0;
};

SynthSpec load_synth_spec(const std::string& path);
SynthSpec parse_synth_spec(std::string_view json_text);

struct SynthReport {
    struct Achieved {
        std::string a;
        std::string b;
        double target = 0.0;
        double achieved = 0.0;
    };
    std::vector<Achieved> achieved;
    std::vector<std::string> notes;
};

/// Nearest valid correlation matrix by eigenvalue clipping and
/// renormalisation. Accepts matrices whose smallest eigenvalue is at least
/// -1e-6; anything further from PSD throws.
Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& c, std::vector<std::string>* notes = nullptr);

/// Gaussian-copula draw: multivariate standard normal with the latent
/// correlation, margins by quantile map or threshold cut, then derived
/// variables in declaration order.
DataTable synth_population(const SynthSpec& spec, SynthReport* report = nullptr);

// ------------------------------------------------------------- Monte Carlo

struct TrackedPair {
    std::string a;  ///< recipient-side variable (Y or metric X)
    std::string z;  ///< imputed donor-specific variable
    std::string label() const { return a + ":" + z; }
};

struct McConfig {
    std::string scenario = "scenario";
    std::size_t k = 1;
    std::size_t n_recipients = 400;
    std::size_t n_donors = 400;
    std::vector<Method> methods;
    std::uint64_t master_seed = 0;
    std::vector<std::string> targets;  ///< empty: every donor-specific variable
    std::vector<TrackedPair> pairs;    ///< empty: metric Y and metric X against every target
    /// Donor block = recipient block (same sampled rows).
    bool self_fusion = false;
    FuseOptions options;  ///< seeds are replaced per replication
    int threads = 0;      ///< 0: OpenMP default
    double max_failure_rate = 0.05;
};

void validate(const McConfig& config);

/// Targets and pairs with defaults filled in from the schema.
McConfig resolve(const McConfig& config, const FusionSchema& schema);

struct ReplicationResult {
    std::size_t replication = 0;
    /// estimates[method][pair]; NaN where the method failed.
    std::vector<std::vector<double>> estimates;
    std::vector<std::string> errors;  ///< per method, empty on success
};

/// One draw: split, stack, fuse with every method, correlate. All
/// randomness comes from streams derived from (master_seed, rep).
ReplicationResult run_replication(const DataTable& population, const FusionSchema& schema, const McConfig& config,
                                  std::size_t rep);

struct McCell {
    Method method = Method::Pmm;
    TrackedPair pair;
    double true_value = 0.0;
    std::optional<double> cia_value;
    std::vector<double> estimates;  ///< one per replication, NaN if failed
    EstimateSummary summary;        ///< over successful replications
};

struct McResult {
    McConfig config;
    std::vector<McCell> cells;  ///< method-major, then pair
    std::vector<std::string> failures;

    const McCell& cell(Method method, const std::string& a, const std::string& z) const;
};

/// k replications (OpenMP over replications), summarised against the
/// population's own correlations with linear CIA benchmarks attached.
/// Throws when any method fails in more than max_failure_rate of them.
McResult run_mc(const DataTable& population, const FusionSchema& schema, const McConfig& config);

// ---------------------------------------------------------------- scenario

struct Scenario {
    McConfig config;
    FusionSchema schema;
    std::optional<SynthSpec> synth;
    std::optional<std::string> population_csv;
    bool has_seed = false;
};

/// Scenario config (JSON); relative paths resolve against its directory.
Scenario load_scenario(const std::string& path);

/// Schema columns in schema order with the schema's scales. Throws on a
/// missing column, a scale mismatch or a code outside the declared levels.
DataTable conform_to_schema(const DataTable& table, const FusionSchema& schema);

/// The scenario's surrogate population. Synthetic populations are seeded
/// from the master seed so one seed drives the whole run.
DataTable build_population(const Scenario& scenario, SynthReport* report = nullptr);

FuseOptions parse_fuse_options(std::string_view json_text);
FuseOptions load_fuse_options(const std::string& path);

}  // namespace fusion
