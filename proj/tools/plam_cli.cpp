#include "plam/bench.hpp"
#include "plam/stats.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace {

using namespace plam;

astro::Vec3 parse_vec3(const std::string& text, const std::string& flag) {
    astro::Vec3 v;
    std::istringstream in(text);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(in, tok, ','))
            throw CLI::ValidationError(flag, "expected three comma-separated numbers");
        try {
            v[i] = std::stod(tok);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "bad number: " + tok);
        }
    }
    if (std::getline(in, tok, ','))
        throw CLI::ValidationError(flag, "expected exactly three components");
    return v;
}

astro::BodyParams resolve_body(const std::string& name, const std::string& catalog) {
    if (!catalog.empty()) {
        const auto bodies = astro::load_body_catalog(catalog);
        const auto it = bodies.find(name);
        if (it == bodies.end())
            throw CLI::ValidationError("--body", "'" + name + "' not in catalog " + catalog);
        return it->second;
    }
    if (name == "jupiter") return astro::jupiter();
    throw CLI::ValidationError("--body", "unknown body '" + name + "' (pass --catalog)");
}

samples::SampleRanges resolve_ranges(const std::string& name) {
    if (name == "table1") return samples::SampleRanges::table1();
    if (name == "extended") return samples::SampleRanges::extended();
    throw CLI::ValidationError("--ranges", "expected 'table1' or 'extended'");
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "bad integer: " + tok);
        }
    }
    if (out.empty()) throw CLI::ValidationError(flag, "empty list");
    return out;
}

struct CommonBodyFlags {
    std::string body = "jupiter";
    std::string catalog;
};

void add_body_flags(CLI::App* cmd, CommonBodyFlags& flags) {
    cmd->add_option("--body", flags.body, "Central body name");
    cmd->add_option("--catalog", flags.catalog, "Body catalog file (name mu radius j2)");
}

int cmd_gen(std::size_t n, std::uint64_t seed, const CommonBodyFlags& bf,
            const std::string& ranges_name, const std::string& out) {
    const auto body = resolve_body(bf.body, bf.catalog);
    const auto ranges = resolve_ranges(ranges_name);
    const auto dataset = samples::generate_dataset(n, seed, ranges, body);
    samples::write_dataset_csv(dataset, out);
    std::cout << "wrote " << dataset.size() << " samples to " << out << "\n";
    return 0;
}

int cmd_stats(const std::string& in, const std::vector<std::string>& form_names,
              const CommonBodyFlags& bf, const std::string& out) {
    const auto body = resolve_body(bf.body, bf.catalog);
    const auto dataset = samples::read_dataset_csv(in);
    std::vector<samples::SampleForm> forms;
    if (form_names.empty())
        forms.assign(std::begin(samples::kAllForms), std::end(samples::kAllForms));
    else
        for (const auto& name : form_names) forms.push_back(samples::form_from_name(name));
    const auto report = stats::form_screening_report(dataset, forms, body);
    std::ofstream csv(out);
    if (!csv) throw std::runtime_error("stats: cannot open " + out);
    stats::write_screening_report(report, csv, std::cout);
    return 0;
}

int cmd_train(const std::string& in, const std::string& form_name,
              const std::string& layers_text, const std::string& hidden_act,
              const std::string& output_act, int epochs, double lr, double lr_decay,
              int batch, std::uint64_t seed, bool raw_magnitudes, bool raw_angles,
              const CommonBodyFlags& bf,
              const std::string& model_out, const std::string& history_out) {
    const auto body = resolve_body(bf.body, bf.catalog);
    const auto form = samples::form_from_name(form_name);
    const auto dataset = samples::read_dataset_csv(in);
    if (dataset.empty()) throw std::runtime_error("train: empty dataset");

    const auto n = static_cast<Eigen::Index>(dataset.size());
    Eigen::MatrixXd inputs(samples::form_input_dim(form), n);
    Eigen::MatrixXd outputs(samples::kFormOutputDim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto [x, y] = samples::project_form(dataset[static_cast<std::size_t>(i)], form, body);
        inputs.col(i) = x;
        outputs.col(i) = y;
    }

    mlp::MlpConfig cfg;
    cfg.input_dim = static_cast<int>(inputs.rows());
    cfg.output_dim = static_cast<int>(outputs.rows());
    cfg.hidden_layers = parse_int_list(layers_text, "--layers");
    cfg.hidden_activation = mlp::activation_from_name(hidden_act);
    cfg.output_activation = mlp::activation_from_name(output_act);
    cfg.init_seed = seed;
    if (!raw_magnitudes) std::tie(cfg.input_log, cfg.output_log) = samples::form_log_mask(form);
    if (!raw_angles)
        std::tie(cfg.input_circular, cfg.output_unit_vector) = samples::form_circular_mask(form);

    mlp::TrainConfig tcfg;
    tcfg.learning_rate = lr;
    tcfg.lr_decay = lr_decay;
    tcfg.max_epochs = epochs;
    tcfg.batch_size = batch;
    tcfg.shuffle_seed = seed + 1;

    auto [model, history] = mlp::train(cfg, tcfg, inputs, outputs);
    mlp::save_model(model, model_out);
    if (!history_out.empty()) mlp::write_history_csv(history, history_out);
    std::cout << "trained " << samples::form_name(form) << " model: best epoch "
              << history.best_epoch << ", val MSE "
              << history.val_mse[static_cast<std::size_t>(history.best_epoch)] << "\n";
    return 0;
}

int cmd_solve(const std::string& r0_text, const std::string& rf_text, double tof, int revs,
              const CommonBodyFlags& bf, const std::string& model_path, bool cold_start,
              const std::string& hint_text) {
    const auto body = resolve_body(bf.body, bf.catalog);
    pipeline::PerturbedLambertQuery q;
    q.r0 = parse_vec3(r0_text, "--r0");
    q.rf = parse_vec3(rf_text, "--rf");
    q.tof = tof;
    q.revs = revs;
    q.body = body;
    if (!hint_text.empty()) q.plane_hint = parse_vec3(hint_text, "--plane-hint");

    mlp::MlpModel model;
    const mlp::MlpModel* model_ptr = nullptr;
    if (!cold_start) {
        if (model_path.empty())
            throw CLI::ValidationError("--model", "required unless --cold-start is given");
        model = mlp::load_model(model_path);
        model_ptr = &model;
    }

    const auto res = pipeline::solve_perturbed_lambert(q, model_ptr);
    std::cout << "v_d (Keplerian guess) km/s: " << res.v_d.transpose() << "\n";
    std::cout << "dv0 correction km/s:       " << res.dnn_correction.transpose() << "\n";
    std::cout << "pre-shooting error km:     " << res.guess_terminal_error << "\n";
    std::cout << "v0 (shooting) km/s:        " << res.shooting.v0.transpose() << "\n";
    std::cout << "terminal error km:         " << res.shooting.terminal_error << "\n";
    std::cout << "iterations:                " << res.shooting.iterations << "\n";
    std::cout << "propagations:              " << res.total_propagations() << "\n";
    std::cout << "converged:                 " << (res.shooting.converged ? "yes" : "no")
              << "\n";
    return res.shooting.converged ? 0 : 1;
}

int cmd_bench(const std::string& mode, const std::string& revs_text, int n,
              std::uint64_t seed, const CommonBodyFlags& bf, const std::string& model_path,
              const std::string& methods, double angle_deg, const std::string& batch_text,
              double one_time_s, const std::string& out) {
    const auto body = resolve_body(bf.body, bf.catalog);
    mlp::MlpModel model;
    const mlp::MlpModel* model_ptr = nullptr;
    if (!model_path.empty()) {
        model = mlp::load_model(model_path);
        model_ptr = &model;
    }

    const auto write_out = [&](const auto& writer) {
        if (out.empty() || out == "-") {
            writer(std::cout);
        } else {
            std::ofstream file(out);
            if (!file) throw std::runtime_error("bench: cannot open " + out);
            writer(file);
        }
    };

    if (mode == "conv") {
        bench::BenchConfig cfg;
        cfg.rev_counts = parse_int_list(revs_text, "--revs");
        cfg.samples_per_rev = n;
        cfg.seed = seed;
        cfg.body = body;
        cfg.run_sn = methods.find("SN") != std::string::npos;
        cfg.run_dnn = methods.find("DNN") != std::string::npos;
        if (!cfg.run_sn && !cfg.run_dnn)
            throw CLI::ValidationError("--methods", "need SN, DNN, or both");
        if (cfg.run_dnn && model_ptr == nullptr)
            throw CLI::ValidationError("--model", "required for the DNN method");
        const auto report = bench::run_convergence_bench(cfg, model_ptr);
        write_out([&](std::ostream& os) { bench::write_bench_csv(report, os); });
        return 0;
    }
    if (mode == "stress") {
        if (angle_deg != 180.0 && angle_deg != 360.0)
            throw CLI::ValidationError("--angle", "stress mode supports 180 or 360 degrees");
        if (model_ptr == nullptr)
            throw CLI::ValidationError("--model", "required for stress mode");
        const auto revs = parse_int_list(revs_text, "--revs");
        const auto report = bench::run_stress_bench(angle_deg * std::numbers::pi / 180.0, revs,
                                                    n, seed, body, model_ptr);
        write_out([&](std::ostream& os) { bench::write_bench_csv(report, os); });
        return 0;
    }
    if (mode == "total") {
        if (model_ptr == nullptr)
            throw CLI::ValidationError("--model", "required for total mode");
        bench::BenchConfig cfg;
        cfg.rev_counts = parse_int_list(revs_text, "--revs");
        cfg.samples_per_rev = n;
        cfg.seed = seed;
        cfg.body = body;
        const auto conv = bench::run_convergence_bench(cfg, model_ptr);
        double sn_time = 0.0, dnn_time = 0.0;
        int sn_rows = 0, dnn_rows = 0;
        for (const auto& row : conv.rows) {
            if (row.method == "SN") {
                sn_time += row.mean_time_s;
                ++sn_rows;
            } else {
                dnn_time += row.mean_time_s;
                ++dnn_rows;
            }
        }
        const auto batch_list = parse_int_list(batch_text, "--batch-sizes");
        std::vector<long> batches(batch_list.begin(), batch_list.end());
        const auto report = bench::run_total_cost_bench(batches, one_time_s,
                                                        sn_time / std::max(1, sn_rows),
                                                        dnn_time / std::max(1, dnn_rows));
        write_out([&](std::ostream& os) { bench::write_total_cost_csv(report, os); });
        return 0;
    }
    throw CLI::ValidationError("--mode", "expected conv, stress, or total");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"J2-perturbed Lambert solver toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Config file mirroring the flags, one [subcommand] section per command "
                   "(explicit flags win)");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a training/evaluation dataset");
    std::size_t gen_n = 1000;
    std::uint64_t gen_seed = 0;
    CommonBodyFlags gen_body;
    std::string gen_ranges = "extended", gen_out = "dataset.csv";
    gen->add_option("--n", gen_n, "Number of samples");
    gen->add_option("--seed", gen_seed, "Dataset seed");
    add_body_flags(gen, gen_body);
    gen->add_option("--ranges", gen_ranges, "Draw ranges: table1 or extended");
    gen->add_option("--out", gen_out, "Output CSV path");

    // stats
    auto* st = app.add_subcommand("stats", "Screen sample forms on a dataset");
    std::string st_in, st_out = "screening.csv";
    std::vector<std::string> st_forms;
    CommonBodyFlags st_body;
    st->add_option("--in", st_in, "Dataset CSV")->required();
    st->add_option("--forms", st_forms, "Sample forms to screen (default: all)");
    add_body_flags(st, st_body);
    st->add_option("--out", st_out, "Report CSV path");

    // train
    auto* tr = app.add_subcommand("train", "Train a correction network");
    std::string tr_in, tr_form = "dv2-Sph", tr_layers = "50,50,50,50";
    std::string tr_hidden = "tanh", tr_output = "identity";
    int tr_epochs = 1000, tr_batch = 256;
    double tr_lr = 0.001;
    std::uint64_t tr_seed = 0;
    CommonBodyFlags tr_body;
    std::string tr_model_out = "model.txt", tr_history_out;
    tr->add_option("--in", tr_in, "Dataset CSV")->required();
    tr->add_option("--form", tr_form, "Sample form (input/output encoding)");
    tr->add_option("--layers", tr_layers, "Hidden layer widths, comma-separated");
    tr->add_option("--activation", tr_output, "Output activation: identity, tanh, relu");
    tr->add_option("--hidden-activation", tr_hidden, "Hidden activation");
    tr->add_option("--epochs", tr_epochs, "Training epochs");
    tr->add_option("--lr", tr_lr, "Adam learning rate");
    double tr_lr_decay = 1.0;
    tr->add_option("--lr-decay", tr_lr_decay, "Per-epoch learning-rate factor (default 1)");
    tr->add_option("--batch", tr_batch, "Mini-batch size");
    tr->add_option("--seed", tr_seed, "Init/shuffle seed");
    bool tr_raw_magnitudes = false;
    tr->add_flag("--raw-magnitudes", tr_raw_magnitudes,
                 "Disable log10 pretreatment of the heavy-tailed magnitude columns");
    bool tr_raw_angles = false;
    tr->add_flag("--raw-angles", tr_raw_angles,
                 "Disable sin/cos input encoding and unit-vector output handling of angles");
    add_body_flags(tr, tr_body);
    tr->add_option("--model-out", tr_model_out, "Model output path");
    tr->add_option("--history-out", tr_history_out, "Optional training-history CSV");

    // solve
    auto* so = app.add_subcommand("solve", "Solve one perturbed Lambert problem");
    std::string so_r0, so_rf, so_model, so_hint;
    double so_tof = 0.0;
    int so_revs = 0;
    bool so_cold = false;
    CommonBodyFlags so_body;
    so->add_option("--r0", so_r0, "Initial position km, 'x,y,z'")->required();
    so->add_option("--rf", so_rf, "Target position km, 'x,y,z'")->required();
    so->add_option("--tof", so_tof, "Time of flight (s)")->required();
    so->add_option("--revs", so_revs, "Whole revolutions");
    add_body_flags(so, so_body);
    so->add_option("--model", so_model, "Trained dv2-Sph model");
    so->add_flag("--cold-start", so_cold, "Skip the network correction");
    so->add_option("--plane-hint", so_hint, "Transfer-plane normal 'x,y,z'");

    // bench
    auto* be = app.add_subcommand("bench", "Run a benchmark study");
    std::string be_mode, be_revs = "0,1,2,3,4,5", be_model, be_methods = "SN,DNN";
    std::string be_batches = "1,10,100,1000,10000,100000", be_out;
    int be_n = 100;
    std::uint64_t be_seed = 0;
    double be_angle = 180.0, be_one_time = 0.0;
    CommonBodyFlags be_body;
    be->add_option("--mode", be_mode, "conv, stress, or total")->required();
    be->add_option("--revs", be_revs, "Rev counts, comma-separated");
    be->add_option("--n", be_n, "Samples per rev count");
    be->add_option("--seed", be_seed, "Benchmark seed");
    add_body_flags(be, be_body);
    be->add_option("--model", be_model, "Trained dv2-Sph model");
    be->add_option("--methods", be_methods, "Subset of SN,DNN (conv mode)");
    be->add_option("--angle", be_angle, "Stress transfer angle in degrees (180 or 360)");
    be->add_option("--batch-sizes", be_batches, "Amortization batch sizes (total mode)");
    be->add_option("--one-time-s", be_one_time,
                   "Measured generation+training cost in seconds (total mode)");
    be->add_option("--out", be_out, "Report CSV path ('-' for stdout)");

    // Let --config appear after the subcommand name as well.
    for (auto* sub : {gen, st, tr, so, be}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return cmd_gen(gen_n, gen_seed, gen_body, gen_ranges, gen_out);
        if (*st) return cmd_stats(st_in, st_forms, st_body, st_out);
        if (*tr)
            return cmd_train(tr_in, tr_form, tr_layers, tr_hidden, tr_output, tr_epochs, tr_lr,
                             tr_lr_decay, tr_batch, tr_seed, tr_raw_magnitudes, tr_raw_angles,
                             tr_body,
                             tr_model_out, tr_history_out);
        if (*so)
            return cmd_solve(so_r0, so_rf, so_tof, so_revs, so_body, so_model, so_cold,
                             so_hint);
        if (*be)
            return cmd_bench(be_mode, be_revs, be_n, be_seed, be_body, be_model, be_methods,
                             be_angle, be_batches, be_one_time, be_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const shooting::SingularJacobianError& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return 1;
    } catch (const astro::PropagationError& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return 1;
    } catch (const lambert::NoSolutionError& e) {
        std::cerr << "solver failed: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
