#pragma once

#include "plam/samples.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace plam::stats {

/// Per-variable summary: population mean/std plus the magnitude difference
/// coefficient rho = log10(max|X| / min nonzero |X|).
struct ColumnStats {
    double mean = 0.0;
    double std = 0.0;
    double rho = 0.0;
    std::size_t n = 0;
};

ColumnStats summary_stats(std::span<const double> column);

/// q x p matrix of Pearson coefficients between each output (row) and input
/// (column). Zero-variance columns yield NaN entries, flagged via `undefined`.
struct PearsonResult {
    Eigen::MatrixXd matrix;                       // q x p
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> undefined;
};

PearsonResult pearson_matrix(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs);

struct CorrelationReport {
    samples::SampleForm form;
    PearsonResult pearson;
    std::vector<bool> weak_row; // output rows with all |R| < threshold
};

struct FormRanking {
    samples::SampleForm form;
    int weak_rows;
    double dominance; // diagonal-dominance margin of the vd / drf blocks
};

struct ScreeningReport {
    std::vector<std::pair<std::string, ColumnStats>> variable_stats;
    std::vector<CorrelationReport> correlations;
    std::vector<FormRanking> ranking; // best first
};

constexpr double kWeakCorrelationThreshold = 0.01;

/// Summary statistics and input-output correlation matrices for the requested
/// sample forms, ranked by (fewest weak output rows, then strongest diagonal
/// dominance of the vd and drf input blocks).
ScreeningReport form_screening_report(const std::vector<samples::SampleRecord>& dataset,
                                      std::span<const samples::SampleForm> forms,
                                      const samples::BodyParams& body);

/// CSV tables plus a plain-text ranking summary.
void write_screening_report(const ScreeningReport& report, std::ostream& csv_out,
                            std::ostream& summary_out);

} // namespace plam::stats
