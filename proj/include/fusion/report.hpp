#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fusion/evaluation.hpp"
#include "fusion/simulation.hpp"

namespace fusion {

/// One (method, pair) line of a Monte Carlo summary, independent of
/// whether it came from a live run or a summary file.
struct SummaryRow {
    std::string method;
    std::string a;
    std::string z;
    double true_value = 0.0;
    std::optional<double> cia_value;
    EstimateSummary summary;
};

struct McSummary {
    std::string scenario;
    std::size_t k = 0;
    std::size_t n_recipients = 0;
    std::size_t n_donors = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> methods;
    std::vector<SummaryRow> rows;
    std::vector<std::string> failures;
};

McSummary summarize_result(const McResult& result);

/// Long format: scenario,method,pair,replication,estimate.
std::string format_estimates_csv(const McResult& result);
/// scenario,method,pair,true,cia,min,q25,median,q75,max.
std::string format_quantiles_csv(const McSummary& summary);
std::string format_summary_json(const McSummary& summary);
McSummary parse_summary_json(const std::string& text);
McSummary load_summary_json(const std::string& path);

/// Bias and MSE per pair (rows) and method (column pairs), with the true
/// value and the CIA benchmark alongside.
std::string format_bias_mse_table(const McSummary& summary);

/// estimates.csv, summary.json and quantiles.csv under out_dir (created if
/// needed). Returns the paths written.
std::vector<std::string> write_mc_outputs(const McResult& result, const std::string& out_dir);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace fusion
