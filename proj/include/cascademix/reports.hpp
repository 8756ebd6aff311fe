#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cascademix/analysis.hpp"
#include "cascademix/influence.hpp"
#include "cascademix/intervention.hpp"

namespace cascademix {

// Shortest round-trip decimal representation; used for every number we
// persist so reruns with the same seeds are byte-identical.
std::string format_double(double value);

struct ClusterReportRow {
  std::string cascade_id;
  double gamma_true = 0.0;
  CascadeLabel predicted = CascadeLabel::kUnknown;
  CascadeLabel truth = CascadeLabel::kUnknown;
};

void write_cluster_report(const std::vector<ClusterReportRow>& rows,
                          const std::filesystem::path& path);

void write_stats_report(const std::vector<TestResult>& tests, const std::filesystem::path& path);

void write_ecdf(const std::vector<std::pair<double, double>>& cdf,
                const std::filesystem::path& path);

void write_influencers(const InfluencerRanking& ranking, const std::filesystem::path& path);

void write_intervention_report(const std::vector<InterventionReport>& reports,
                               const std::filesystem::path& path);

struct RecoverabilityPoint {
  std::size_t sample_size = 0;
  std::string mixture;  // e.g. "0.5/0.5"
  double mae = 0.0;     // edge-parameter MAE, components aligned
  double pi_mae = 0.0;
};

struct SeparabilityPoint {
  std::size_t sample_size = 0;
  std::string mixture;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct PlotReports {
  std::vector<RecoverabilityPoint> recoverability;
  std::vector<SeparabilityPoint> separability;
  std::vector<InterventionReport> interventions;
  std::map<std::string, std::vector<double>> ecdf_groups;  // group -> raw values
};

// One CSV per figure family (recoverability.csv, separability.csv,
// interventions.csv, ecdf_{group}.csv); empty report sets write nothing.
// Returns the created files.
std::vector<std::filesystem::path> emit_plots_data(const PlotReports& reports,
                                                   const std::filesystem::path& out_dir);

}  // namespace cascademix
