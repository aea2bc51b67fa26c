#include "plam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

namespace plam::stats {

ColumnStats summary_stats(std::span<const double> column) {
    if (column.empty()) throw std::domain_error("summary_stats: empty input");
    ColumnStats s;
    s.n = column.size();
    double sum = 0.0;
    for (double v : column) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (double v : column) {
        const double d = v - s.mean;
        sq += d * d;
        const double a = std::abs(v);
        max_abs = std::max(max_abs, a);
        if (a > 0.0) min_abs = std::min(min_abs, a);
    }
    s.std = std::sqrt(sq / static_cast<double>(s.n));
    if (max_abs == 0.0)
        throw std::domain_error("summary_stats: rho undefined for all-zero column");
    s.rho = std::log10(max_abs / min_abs);
    return s;
}

PearsonResult pearson_matrix(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) {
    const auto n = inputs.rows();
    if (n != outputs.rows()) throw std::invalid_argument("pearson_matrix: row count mismatch");
    if (n < 2) throw std::domain_error("pearson_matrix: need at least 2 rows");
    const auto p = inputs.cols();
    const auto q = outputs.cols();

    const Eigen::MatrixXd xc = inputs.rowwise() - inputs.colwise().mean();
    const Eigen::MatrixXd yc = outputs.rowwise() - outputs.colwise().mean();
    const Eigen::VectorXd sx = (xc.colwise().squaredNorm() / double(n)).cwiseSqrt();
    const Eigen::VectorXd sy = (yc.colwise().squaredNorm() / double(n)).cwiseSqrt();

    PearsonResult res;
    res.matrix.resize(q, p);
    res.undefined.setConstant(q, p, false);
    const Eigen::MatrixXd cov = (yc.transpose() * xc) / double(n); // q x p
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (sx[j] == 0.0 || sy[i] == 0.0) {
                res.matrix(i, j) = std::numeric_limits<double>::quiet_NaN();
                res.undefined(i, j) = true;
            } else {
                res.matrix(i, j) = std::clamp(cov(i, j) / (sx[j] * sy[i]), -1.0, 1.0);
            }
        }
    }
    return res;
}

namespace {

using samples::SampleForm;

// Input-column offsets of the vd and drf blocks whose diagonal dominance
// drives the ranking; -1 when the form lacks the block.
void form_blocks(SampleForm form, int& vd_off, int& drf_off) {
    vd_off = -1;
    drf_off = -1;
    switch (form) {
        case SampleForm::dv1_car:
        case SampleForm::dv1_sph: drf_off = 3; break;
        case SampleForm::dv2_car:
        case SampleForm::dv2_sph:
            vd_off = 3;
            drf_off = 6;
            break;
        default: break;
    }
}

double block_dominance(const Eigen::MatrixXd& m, int off) {
    double score = 0.0;
    for (int k = 0; k < 3; ++k) {
        double off_max = 0.0;
        for (int j = 0; j < 3; ++j)
            if (j != k) off_max = std::max(off_max, std::abs(m(k, off + j)));
        score += std::abs(m(k, off + k)) - off_max;
    }
    return score;
}

} // namespace

ScreeningReport form_screening_report(const std::vector<samples::SampleRecord>& dataset,
                                      std::span<const samples::SampleForm> forms,
                                      const samples::BodyParams& body) {
    if (dataset.empty()) throw std::domain_error("form_screening_report: empty dataset");
    const auto n = static_cast<Eigen::Index>(dataset.size());

    ScreeningReport report;

    // Per-variable summaries in both encodings (the Table-2-style view).
    struct Var {
        const char* name;
        std::function<astro::Vec3(const samples::SampleRecord&)> get;
        double scale;
    };
    const double rj = body.radius;
    const std::vector<Var> vars = {
        {"r0", [](const auto& r) { return r.r0; }, rj},
        {"rf", [](const auto& r) { return r.rf; }, rj},
        {"v0", [](const auto& r) { return r.v0; }, 1.0},
        {"vd", [](const auto& r) { return r.vd; }, 1.0},
        {"drf", [](const auto& r) { return r.drf; }, 1.0},
        {"dv0", [](const auto& r) { return r.dv0; }, 1.0},
    };
    std::vector<double> col(dataset.size());
    for (const auto& var : vars) {
        for (int comp = 0; comp < 3; ++comp) {
            static const char* car_comp[] = {"x", "y", "z"};
            for (std::size_t i = 0; i < dataset.size(); ++i)
                col[i] = var.get(dataset[i])[comp] / var.scale;
            report.variable_stats.emplace_back(
                std::string(var.name) + "-Car." + car_comp[comp], summary_stats(col));
        }
        for (int comp = 0; comp < 3; ++comp) {
            static const char* sph_comp[] = {"mag", "az", "el"};
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                const auto s = astro::cart_to_spherical(var.get(dataset[i]) / var.scale);
                col[i] = comp == 0 ? s.magnitude : (comp == 1 ? s.azimuth : s.elevation);
            }
            report.variable_stats.emplace_back(
                std::string(var.name) + "-Sph." + sph_comp[comp], summary_stats(col));
        }
    }
    for (std::size_t i = 0; i < dataset.size(); ++i)
        col[i] = dataset[i].tof / samples::units::kSecondsPerDay;
    report.variable_stats.emplace_back("tof", summary_stats(col));

    // Correlation matrix and ranking per form.
    for (SampleForm form : forms) {
        const int p = samples::form_input_dim(form);
        Eigen::MatrixXd in(n, p);
        Eigen::MatrixXd out(n, samples::kFormOutputDim);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto [x, y] = samples::project_form(dataset[i], form, body);
            in.row(i) = x.transpose();
            out.row(i) = y.transpose();
        }
        CorrelationReport cr;
        cr.form = form;
        cr.pearson = pearson_matrix(in, out);
        for (int r = 0; r < samples::kFormOutputDim; ++r) {
            bool weak = true;
            for (int c = 0; c < p; ++c) {
                const double v = cr.pearson.matrix(r, c);
                if (std::isfinite(v) && std::abs(v) >= kWeakCorrelationThreshold) weak = false;
            }
            cr.weak_row.push_back(weak);
        }

        FormRanking rank;
        rank.form = form;
        rank.weak_rows = static_cast<int>(std::count(cr.weak_row.begin(), cr.weak_row.end(), true));
        int vd_off, drf_off;
        form_blocks(form, vd_off, drf_off);
        rank.dominance = 0.0;
        if (vd_off >= 0) rank.dominance += block_dominance(cr.pearson.matrix, vd_off);
        if (drf_off >= 0) rank.dominance += block_dominance(cr.pearson.matrix, drf_off);
        report.ranking.push_back(rank);
        report.correlations.push_back(std::move(cr));
    }

    std::stable_sort(report.ranking.begin(), report.ranking.end(),
                     [](const FormRanking& a, const FormRanking& b) {
                         if (a.weak_rows != b.weak_rows) return a.weak_rows < b.weak_rows;
                         return a.dominance > b.dominance;
                     });
    return report;
}

void write_screening_report(const ScreeningReport& report, std::ostream& csv_out,
                            std::ostream& summary_out) {
    csv_out << "variable,mean,std,rho,n\n";
    for (const auto& [name, s] : report.variable_stats)
        csv_out << name << ',' << s.mean << ',' << s.std << ',' << s.rho << ',' << s.n << "\n";
    csv_out << "\n";
    for (const auto& cr : report.correlations) {
        csv_out << "form," << samples::form_name(cr.form) << "\n";
        const auto& m = cr.pearson.matrix;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            csv_out << "R" << r;
            for (Eigen::Index c = 0; c < m.cols(); ++c) csv_out << ',' << m(r, c);
            csv_out << (cr.weak_row[static_cast<std::size_t>(r)] ? ",weak" : ",ok") << "\n";
        }
        csv_out << "\n";
    }

    summary_out << "form ranking (best first):\n";
    int place = 1;
    for (const auto& rank : report.ranking)
        summary_out << "  " << place++ << ". " << samples::form_name(rank.form)
                    << "  weak_rows=" << rank.weak_rows << "  dominance=" << rank.dominance
                    << "\n";
}

} // namespace plam::stats
