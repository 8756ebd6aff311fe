#include "cascademix/reports.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

namespace cascademix {

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr - buf);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_cluster_report(const std::vector<ClusterReportRow>& rows,
                          const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "cascade_id,gamma_T,predicted,truth\n";
  for (const auto& row : rows) {
    out << row.cascade_id << ',' << format_double(row.gamma_true) << ','
        << to_string(row.predicted) << ',' << to_string(row.truth) << '\n';
  }
}

void write_stats_report(const std::vector<TestResult>& tests,
                        const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "test,statistic,p\n";
  for (const auto& t : tests) {
    // Normal-approximation tests report the z-score as the statistic column,
    // matching how the U test is usually quoted.
    double stat = t.exact || std::isnan(t.z_score) ? t.statistic : t.z_score;
    out << t.name << ',' << format_double(stat) << ',' << format_double(t.p_value) << '\n';
  }
}

void write_ecdf(const std::vector<std::pair<double, double>>& cdf,
                const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "value,F\n";
  for (auto [value, f] : cdf) {
    out << format_double(value) << ',' << format_double(f) << '\n';
  }
}

void write_influencers(const InfluencerRanking& ranking, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "rank,node,marginal_gain,cumulative_sigma\n";
  for (std::size_t i = 0; i < ranking.nodes.size(); ++i) {
    out << (i + 1) << ',' << ranking.nodes[i] << ','
        << format_double(ranking.marginal_gains[i]) << ','
        << format_double(ranking.cumulative_sigma[i]) << '\n';
  }
}

void write_intervention_report(const std::vector<InterventionReport>& reports,
                               const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "strategy,K,mean_reduction_pct,n_eval\n";
  for (const auto& report : reports) {
    for (std::size_t i = 0; i < report.k_values.size(); ++i) {
      out << report.strategy << ',' << report.k_values[i] << ','
          << format_double(report.mean_reduction_pct[i]) << ',' << report.n_eval << '\n';
    }
  }
}

std::vector<std::filesystem::path> emit_plots_data(const PlotReports& reports,
                                                   const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  if (!reports.recoverability.empty()) {
    auto path = out_dir / "recoverability.csv";
    auto out = open_csv(path);
    out << "sample_size,mixture,mae\n";
    for (const auto& p : reports.recoverability) {
      out << p.sample_size << ',' << p.mixture << ',' << format_double(p.mae) << '\n';
    }
    written.push_back(path);

    auto pi_path = out_dir / "recoverability_pi.csv";
    auto pi_out = open_csv(pi_path);
    pi_out << "sample_size,mixture,mae\n";
    for (const auto& p : reports.recoverability) {
      pi_out << p.sample_size << ',' << p.mixture << ',' << format_double(p.pi_mae) << '\n';
    }
    written.push_back(pi_path);
  }
  if (!reports.separability.empty()) {
    auto path = out_dir / "separability.csv";
    auto out = open_csv(path);
    out << "sample_size,mixture,accuracy,f1\n";
    for (const auto& p : reports.separability) {
      out << p.sample_size << ',' << p.mixture << ',' << format_double(p.accuracy) << ','
          << format_double(p.f1) << '\n';
    }
    written.push_back(path);
  }
  if (!reports.interventions.empty()) {
    auto path = out_dir / "interventions.csv";
    auto out = open_csv(path);
    out << "strategy,K,reduction\n";
    for (const auto& report : reports.interventions) {
      for (std::size_t i = 0; i < report.k_values.size(); ++i) {
        out << report.strategy << ',' << report.k_values[i] << ','
            << format_double(report.mean_reduction_pct[i]) << '\n';
      }
    }
    written.push_back(path);
  }
  for (const auto& [group, values] : reports.ecdf_groups) {
    if (values.empty()) continue;
    auto path = out_dir / ("ecdf_" + group + ".csv");
    write_ecdf(empirical_cdf(values), path);
    written.push_back(path);
  }
  if (written.empty()) {
    std::cerr << "emit_plots_data: no reports to write\n";
  }
  return written;
}

}  // namespace cascademix
