#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusion/data_model.hpp"
#include "fusion/regression.hpp"

namespace fusion {

enum class Method { Rhd, Pmm, Gower };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct MatchPair {
    std::size_t recipient = 0;  ///< index within the recipient block
    std::size_t donor = 0;      ///< index within the donor block
    double distance = 0.0;      ///< PMM / Gower
    std::string stratum;        ///< RHD stratum key
    int round = 1;              ///< RHD allocation round; 3 = emergency draw from the full pool
    bool fallback = false;      ///< matched outside the first-round stratification
};

/// One stratification attempt of the hot deck's cap-reduction loop.
struct RhdAttempt {
    int round = 1;
    double c = 3.0;
    double tolerance = 0.0;
    std::size_t cap = 0;
    std::vector<std::string> selected;
    std::size_t recipients = 0;  ///< unassigned recipients entering the attempt
    std::size_t violating = 0;   ///< of those, recipients in strata breaking the donor bound
    bool accepted = false;
};

struct MatchAssignment {
    Method method = Method::Pmm;
    std::vector<std::string> targets;
    std::vector<std::string> selected;
    std::vector<MatchPair> pairs;  ///< pairs[i].recipient == i
    std::vector<RhdAttempt> attempts;
    std::vector<std::string> notes;

    std::size_t fallback_count() const;
};

struct RhdConfig {
    double c_primary = 3.0;
    double c_secondary = 2.0;
    double tolerance = 0.10;
    Criterion criterion = Criterion::Bic;
    /// Upper bound on stratum variables; 0 forces one global stratum.
    std::optional<std::size_t> max_variables;
    std::uint64_t seed = 0;
};

struct PmmConfig {
    Criterion criterion = Criterion::Bic;
    double tie_epsilon = 1e-12;
    std::uint64_t seed = 0;
};

struct GowerConfig {
    /// Empty means every common variable.
    std::vector<std::string> variables;
    double tie_epsilon = 1e-12;
    std::uint64_t seed = 0;
};

void validate(const RhdConfig& config);
void validate(const PmmConfig& config);

/// Per-row key: category codes of `variables` joined with '|'.
std::vector<std::string> build_stratum_keys(const DataTable& table, std::span<const std::size_t> rows,
                                            const std::vector<std::string>& variables);

/// Stratified random hot deck for one donor-specific variable.
///
/// Common variables are categorised with their schema recode rules and
/// backward-selected for `target` on the donor block. Strata are the joint
/// categories of the selection. A stratum l breaks the donor bound when it
/// has no donors or when s_l,rec / s_l,don > c * s_rec / s_don. The
/// selection is accepted when at most tolerance * s_rec recipients sit in
/// such strata; otherwise the size cap drops by one and selection reruns.
/// Accepted strata with donors are served by uniform draws with
/// replacement. The remaining recipients go through a second round
/// (c_secondary, no tolerance); anyone left after that draws from the full
/// donor pool. Both later stages set the fallback flag.
MatchAssignment rhd_match(const StackedFrame& frame, const FusionSchema& schema, const std::string& target,
                          const RhdConfig& config);

/// Multivariate predictive mean matching: per-target backward selection on
/// donors, one joint OLS fit on the union of selected variables, and
/// nearest donor under the Mahalanobis distance weighted by the inverse
/// residual covariance. All targets come from the same donor.
MatchAssignment pmm_match(const StackedFrame& frame, const FusionSchema& schema,
                          const std::vector<std::string>& targets, const PmmConfig& config);

/// Nearest donor under the Gower dissimilarity on the original scales.
MatchAssignment gower_match(const StackedFrame& frame, const FusionSchema& schema, const GowerConfig& config);

/// Recipient block with `targets` copied from each recipient's donor.
DataTable impute(const StackedFrame& frame, const MatchAssignment& assignment,
                 const std::vector<std::string>& targets);

struct FuseOptions {
    RhdConfig rhd;
    PmmConfig pmm;
    GowerConfig gower;
};

struct FusionResult {
    DataTable imputed;
    std::vector<MatchAssignment> assignments;
};

/// Runs one method for all targets. The hot deck matches each target
/// separately with its own seed stream; PMM and Gower use one donor per
/// recipient for every target.
FusionResult fuse(const StackedFrame& frame, const FusionSchema& schema, Method method,
                  const std::vector<std::string>& targets, const FuseOptions& options);

/// Audit CSV: method,target,recipient_id,donor_id,distance,stratum,round,fallback.
std::string format_assignments(const StackedFrame& frame, const std::vector<MatchAssignment>& assignments);

}  // namespace fusion
