// gpt_tomo: seeded end-to-end tomography pipeline with file handoff.
//
//   gpt_tomo simulate --config run.json --out dir     counts + frequencies
//   gpt_tomo fit      --out dir                       rank sweep + model
//   gpt_tomo analyze  --out dir                       gauge + geometry report
//   gpt_tomo report   --out dir                       collated summary
//
// Every stage reads only files written by earlier stages plus the manifest,
// so stages can be re-run independently. Outputs are deterministic given
// (config, seed) at any --threads value.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpt/experiment.hpp"
#include "gpt/gauge.hpp"
#include "gpt/geometry.hpp"
#include "gpt/io.hpp"
#include "gpt/lowrank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    std::uint64_t seed = 0;
    std::string design = "fiducial(60)"; // haar(m,n) or fiducial(n_random)
    double rate = 2000.0;                // expected counts per second
    double exposure = 2.0;               // seconds per configuration
    double epsilon = 0.01;               // depolarizing level
    std::vector<int> ranks = {8, 9, 10};
    int rays = 1000;
    int projection_dirs = 500;
    int threads = 1;
    fs::path out = "run";
};

std::vector<int> parse_ranks(const std::string& text) {
    std::vector<int> ranks;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            ranks.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw gpt::config_error("bad rank '" + tok + "' in ranks list");
        }
    }
    return ranks;
}

gpt::Design parse_design(const std::string& text, std::uint64_t seed) {
    int a = 0, b = 0;
    if (std::sscanf(text.c_str(), "haar(%d,%d)", &a, &b) == 2) {
        try {
            return gpt::build_haar_design(a, b, seed);
        } catch (const std::invalid_argument& err) {
            throw gpt::config_error(std::string("bad haar design: ") + err.what());
        }
    }
    if (std::sscanf(text.c_str(), "fiducial(%d)", &a) == 1) {
        if (a < 0) throw gpt::config_error("fiducial design needs n_random >= 0");
        return gpt::build_fiducial_design(a, seed);
    }
    throw gpt::config_error("unrecognized design '" + text +
                            "', expected haar(m,n) or fiducial(n_random)");
}

void validate(const RunConfig& cfg) {
    if (cfg.rate <= 0.0 || cfg.exposure <= 0.0)
        throw gpt::config_error("rate and exposure must be positive");
    if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0)
        throw gpt::config_error("epsilon must be in [0, 1]");
    if (cfg.ranks.empty() || !std::is_sorted(cfg.ranks.begin(), cfg.ranks.end()))
        throw gpt::config_error("ranks must be a nonempty ascending list");
    for (int k : cfg.ranks)
        if (k < 1) throw gpt::config_error("ranks must be positive");
    if (cfg.rays < 1 || cfg.projection_dirs < 4)
        throw gpt::config_error("rays must be >= 1 and projection_dirs >= 4");
    if (cfg.threads < 1) throw gpt::config_error("threads must be >= 1");
    parse_design(cfg.design, cfg.seed); // shape check only
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    json j;
    try {
        j = json::parse(gpt::read_text_file(path));
    } catch (const std::exception& err) {
        throw gpt::config_error("cannot read config " + path.string() + ": " + err.what());
    }
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("design")) cfg.design = j["design"].get<std::string>();
        if (j.contains("rate")) cfg.rate = j["rate"].get<double>();
        if (j.contains("exposure")) cfg.exposure = j["exposure"].get<double>();
        if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
        if (j.contains("ranks")) cfg.ranks = j["ranks"].get<std::vector<int>>();
        if (j.contains("rays")) cfg.rays = j["rays"].get<int>();
        if (j.contains("projection_dirs")) cfg.projection_dirs = j["projection_dirs"].get<int>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
        if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    } catch (const json::exception& err) {
        throw gpt::config_error("bad field in config " + path.string() + ": " + err.what());
    }
}

json config_to_json(const RunConfig& cfg) {
    return {{"seed", cfg.seed},     {"design", cfg.design},
            {"rate", cfg.rate},     {"exposure", cfg.exposure},
            {"epsilon", cfg.epsilon}, {"ranks", cfg.ranks},
            {"rays", cfg.rays},     {"projection_dirs", cfg.projection_dirs}};
}

// The manifest is authoritative for downstream stages; the threads flag is
// execution detail and deliberately kept out so outputs do not depend on it.
void load_manifest(RunConfig& cfg) {
    const fs::path path = cfg.out / "manifest.json";
    if (!fs::exists(path))
        throw gpt::data_error("missing manifest " + path.string() + "; run simulate first");
    const json j = gpt::read_json(path);
    const int threads = cfg.threads;
    apply_config_file(cfg, path);
    cfg.threads = threads;
}

gpt::FrequencyMatrix load_frequencies(const fs::path& dir, const std::string& stem) {
    gpt::FrequencyMatrix fm;
    fm.f = gpt::read_matrix_csv(dir / (stem + "_freq.csv"));
    fm.sigma = gpt::read_matrix_csv(dir / (stem + "_sigma.csv"));
    fm.mask = gpt::read_mask_csv(dir / "mask.csv");
    if (fm.f.rows() != fm.sigma.rows() || fm.f.cols() != fm.sigma.cols() ||
        fm.f.rows() != fm.mask.rows() || fm.f.cols() != fm.mask.cols())
        throw gpt::data_error("shape mismatch between " + stem + " frequency files in " +
                              dir.string());
    return fm;
}

// --- stages ------------------------------------------------------------------

void cmd_simulate(const RunConfig& cfg) {
    const gpt::Design design = parse_design(cfg.design, gpt::derive_seed(cfg.seed, 0xD51));
    gpt::SimOptions opts;
    opts.rate = cfg.rate;
    opts.exposure = cfg.exposure;
    opts.epsilon = cfg.epsilon;

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw gpt::data_error("cannot create output directory " + cfg.out.string());

    const auto write_table = [&](const std::string& stem, std::uint64_t seed) {
        const gpt::CountTable table = gpt::simulate_counts(design, opts, seed);
        gpt::write_matrix_csv(cfg.out / (stem + "_counts0.csv"), table.counts0);
        gpt::write_matrix_csv(cfg.out / (stem + "_counts1.csv"), table.counts1);
        gpt::write_matrix_csv(cfg.out / (stem + "_counts2.csv"), table.counts2);
        const gpt::FrequencyMatrix fm = gpt::counts_to_frequencies(table, design);
        gpt::write_matrix_csv(cfg.out / (stem + "_freq.csv"), fm.f);
        gpt::write_matrix_csv(cfg.out / (stem + "_sigma.csv"), fm.sigma);
    };
    write_table("train", gpt::derive_seed(cfg.seed, 0x7121));
    write_table("test", gpt::derive_seed(cfg.seed, 0x7e57));
    gpt::write_mask_csv(cfg.out / "mask.csv", design.mask);

    // quantum reference for the gauge/geometry stages
    gpt::write_matrix_csv(cfg.out / "s_qutrit.csv", gpt::generator_state_matrix(design));
    gpt::write_matrix_csv(cfg.out / "e_qutrit.csv", gpt::generator_effect_matrix(design));
    gpt::write_matrix_csv(cfg.out / "d_qutrit.csv", gpt::ideal_probability_matrix(design, cfg.epsilon));

    json manifest = config_to_json(cfg);
    manifest["m"] = design.m();
    manifest["n"] = design.n();
    manifest["probed_cells"] = static_cast<long>(design.mask.rightCols(design.n()).count());
    gpt::write_json(cfg.out / "manifest.json", manifest);
    std::printf("simulate: %d states x %d effects -> %s\n", design.m(), design.n(),
                cfg.out.string().c_str());
}

void cmd_fit(const RunConfig& cfg) {
    const gpt::FrequencyMatrix f_train = load_frequencies(cfg.out, "train");
    const gpt::FrequencyMatrix f_test = load_frequencies(cfg.out, "test");
    const json manifest = gpt::read_json(cfg.out / "manifest.json");
    if (f_train.rows() != manifest["m"].get<int>() ||
        f_train.cols() != manifest["n"].get<int>() + 1)
        throw gpt::data_error("training data shape disagrees with manifest");

    gpt::FitOptions opts;
    opts.seed = gpt::derive_seed(cfg.seed, 0xF17);
    const gpt::RankSweepResult sweep = gpt::rank_sweep(f_train, f_test, cfg.ranks, opts);

    json reports = json::array();
    std::string csv = "rank,chi2_train,chi2_test,iterations,converged\n";
    for (const auto& r : sweep.reports) {
        reports.push_back(gpt::fit_report_to_json(r));
        csv += std::to_string(r.rank) + "," + gpt::fmt_double(r.chi2_train) + "," +
               gpt::fmt_double(r.chi2_test) + "," + std::to_string(r.iterations) + "," +
               (r.converged ? "1" : "0") + "\n";
    }
    gpt::write_json(cfg.out / "fit_reports.json", reports);
    gpt::write_text_file(cfg.out / "fit_reports.csv", csv);

    const gpt::GptModel& best = sweep.models[sweep.selected_index];
    gpt::write_matrix_csv(cfg.out / "model_S.csv", best.S);
    gpt::write_matrix_csv(cfg.out / "model_E.csv", best.E);
    gpt::write_json(cfg.out / "fit_selected.json",
                    {{"selected_rank", sweep.selected_rank},
                     {"chi2_train", sweep.reports[sweep.selected_index].chi2_train},
                     {"chi2_test", sweep.reports[sweep.selected_index].chi2_test}});
    std::printf("fit: selected rank %d (test chi2 %.6g)\n", sweep.selected_rank,
                sweep.reports[sweep.selected_index].chi2_test);
}

void cmd_analyze(const RunConfig& cfg) {
    for (const char* name : {"model_S.csv", "model_E.csv", "s_qutrit.csv", "d_qutrit.csv"})
        if (!fs::exists(cfg.out / name))
            throw gpt::data_error(std::string("missing ") + name + " in " + cfg.out.string() +
                                  "; run simulate and fit first");
    gpt::GptModel model;
    model.S = gpt::read_matrix_csv(cfg.out / "model_S.csv");
    model.E = gpt::read_matrix_csv(cfg.out / "model_E.csv");
    model.rank = static_cast<int>(model.S.cols());
    const Eigen::MatrixXd s_qutrit = gpt::read_matrix_csv(cfg.out / "s_qutrit.csv");
    const Eigen::MatrixXd d_qutrit = gpt::read_matrix_csv(cfg.out / "d_qutrit.csv");

    const Eigen::MatrixXd d_realized = model.probabilities();
    auto [s_prime, e_prime] = gpt::initial_decomposition(d_realized, model.rank);
    const gpt::GaugeResult gauge = gpt::fit_gauge(s_prime, s_qutrit, e_prime);
    gpt::write_matrix_csv(cfg.out / "s_realized.csv", gauge.S_realized);
    gpt::write_matrix_csv(cfg.out / "e_realized.csv", gauge.E_realized);
    gpt::write_matrix_csv(cfg.out / "gauge_lambda.csv", gauge.Lambda);

    const gpt::VPolytope s_real = gpt::realized_state_space(gauge.S_realized);
    const gpt::VPolytope e_real = gpt::realized_effect_space(gauge.E_realized);
    const gpt::HPolytope s_cons = gpt::consistent_state_space(gauge.E_realized);

    gpt::RayStats ratio;
    gpt::StraddleResult straddle;
    try {
        ratio = gpt::linear_dimension_ratio(s_real, s_cons, cfg.rays,
                                            gpt::derive_seed(cfg.seed, 0x6e0), cfg.threads);
        straddle = gpt::straddling_check(s_real, s_cons, cfg.rays,
                                         gpt::derive_seed(cfg.seed, 0x6e0), cfg.threads);
    } catch (const gpt::data_error& err) {
        throw gpt::data_error(std::string("analyze: ray statistics failed, the fitted model "
                                          "is likely degenerate: ") +
                              err.what());
    }
    gpt::write_ray_probes_csv(cfg.out / "ray_probes.csv", ratio.probes);

    // residuals of the completed probability matrix against the reference
    const Eigen::MatrixXd resid = d_realized.rightCols(d_realized.cols() - 1) -
                                  d_qutrit.rightCols(d_qutrit.cols() - 1);
    const double resid_mean = resid.mean();
    const double resid_std =
        std::sqrt((resid.array() - resid_mean).square().sum() / (resid.size() - 1.0));

    gpt::write_json(cfg.out / "summary.json",
                    {{"rank", model.rank},
                     {"gauge_chi2_alignment", gauge.chi2_alignment},
                     {"gauge_condition_number", gauge.condition_number},
                     {"ratio_mean", ratio.mean},
                     {"ratio_std", ratio.stddev},
                     {"rays", cfg.rays},
                     {"max_realized_norm", straddle.max_realized_norm},
                     {"min_consistent_norm", straddle.min_consistent_norm},
                     {"straddles", straddle.straddles},
                     {"residual_mean", resid_mean},
                     {"residual_std", resid_std}});

    const std::vector<std::array<int, 3>> triples = {
        {1, 2, 3}, {2, 3, 8}, {3, 4, 6}, {1, 3, 4}, {2, 5, 8},
        {3, 4, 5}, {0, 3, 8}, {0, 1, 3}, {0, 3, 4}, {0, 7, 8}};
    for (const auto& axes : triples) {
        const std::string tag =
            std::to_string(axes[0]) + std::to_string(axes[1]) + std::to_string(axes[2]);
        const auto pv = gpt::project_vpolytope(s_real, axes);
        gpt::write_projection_json(cfg.out / ("proj_state_realized_" + tag + ".json"), pv);
        gpt::write_projection_ply(cfg.out / ("proj_state_realized_" + tag + ".ply"), pv);
        const auto ph = gpt::project_hpolytope(s_cons, axes, cfg.projection_dirs,
                                               gpt::derive_seed(cfg.seed, 0x960, axes[0] * 81 + axes[1] * 9 + axes[2]));
        gpt::write_projection_json(cfg.out / ("proj_state_consistent_" + tag + ".json"), ph);
        gpt::write_projection_ply(cfg.out / ("proj_state_consistent_" + tag + ".ply"), ph);
        const auto pe = gpt::project_vpolytope(e_real, axes);
        gpt::write_projection_json(cfg.out / ("proj_effect_realized_" + tag + ".json"), pe);
        gpt::write_projection_ply(cfg.out / ("proj_effect_realized_" + tag + ".ply"), pe);
    }
    std::printf("analyze: ratio %.4f +- %.4f, straddles=%s -> %s\n", ratio.mean, ratio.stddev,
                straddle.straddles ? "yes" : "no", cfg.out.string().c_str());
}

void cmd_report(const RunConfig& cfg) {
    json report;
    report["manifest"] = gpt::read_json(cfg.out / "manifest.json");
    for (const char* name : {"fit_reports", "fit_selected", "summary"}) {
        const fs::path path = cfg.out / (std::string(name) + ".json");
        if (fs::exists(path)) report[name] = gpt::read_json(path);
    }
    if (!report.contains("fit_selected") || !report.contains("summary"))
        throw gpt::data_error("report: fit and analyze stages must run before report");
    gpt::write_json(cfg.out / "report.json", report);
    std::printf("run %s\n", cfg.out.string().c_str());
    std::printf("  design          %s, seed %llu, epsilon %g\n",
                report["manifest"]["design"].get<std::string>().c_str(),
                static_cast<unsigned long long>(cfg.seed), cfg.epsilon);
    std::printf("  selected rank   %d\n", report["fit_selected"]["selected_rank"].get<int>());
    std::printf("  test chi2       %.6g\n", report["fit_selected"]["chi2_test"].get<double>());
    std::printf("  ratio           %.4f +- %.4f over %d rays\n",
                report["summary"]["ratio_mean"].get<double>(),
                report["summary"]["ratio_std"].get<double>(),
                report["summary"]["rays"].get<int>());
    std::printf("  straddling      max |s_realized| %.4f %s min |s_consistent| %.4f\n",
                report["summary"]["max_realized_norm"].get<double>(),
                report["summary"]["straddles"].get<bool>() ? "<=" : ">",
                report["summary"]["min_consistent_norm"].get<double>());
    std::printf("  residuals       mean %.4g, std %.4g\n",
                report["summary"]["residual_mean"].get<double>(),
                report["summary"]["residual_std"].get<double>());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPT tomography pipeline on synthetic qutrit data"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path, ranks_text, design_text, out_text;
    std::optional<std::uint64_t> seed_flag;
    std::optional<double> epsilon_flag;
    std::optional<int> rays_flag, threads_flag;

    for (const char* name : {"simulate", "fit", "analyze", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed_flag, "RNG seed");
        sub->add_option("--ranks", ranks_text, "comma-separated candidate ranks");
        sub->add_option("--rays", rays_flag, "number of probe rays");
        sub->add_option("--out", out_text, "output directory");
        sub->add_option("--epsilon", epsilon_flag, "depolarizing noise level");
        sub->add_option("--threads", threads_flag, "worker threads for ray probing");
        sub->add_option("--design", design_text, "haar(m,n) or fiducial(n_random)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (!out_text.empty()) cfg.out = out_text;
        const std::string stage = app.get_subcommands().front()->get_name();
        // Downstream stages inherit the manifest; simulate starts fresh.
        if (stage != "simulate") load_manifest(cfg);
        if (seed_flag) cfg.seed = *seed_flag;
        if (!design_text.empty()) cfg.design = design_text;
        if (!ranks_text.empty()) cfg.ranks = parse_ranks(ranks_text);
        if (rays_flag) cfg.rays = *rays_flag;
        if (epsilon_flag) cfg.epsilon = *epsilon_flag;
        if (threads_flag) cfg.threads = *threads_flag;
        validate(cfg);

        if (stage == "simulate") cmd_simulate(cfg);
        else if (stage == "fit") cmd_fit(cfg);
        else if (stage == "analyze") cmd_analyze(cfg);
        else cmd_report(cfg);
    } catch (const gpt::config_error& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return 2;
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return 2;
    } catch (const gpt::data_error& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return 3;
    } catch (const gpt::numerical_error& err) {
        std::fprintf(stderr, "numerical error: %s\n", err.what());
        return 4;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 4;
    }
    return 0;
}
