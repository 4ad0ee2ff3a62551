#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "oscidecay/decayfit.hpp"
#include "oscidecay/error.hpp"
#include "oscidecay/io.hpp"
#include "oscidecay/parallel.hpp"
#include "oscidecay/phase.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oscidecay;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Everything a run depends on. Serialized next to the outputs; loading it back
// with --config reproduces the run.
struct RunConfig {
    std::string command;
    std::string phase = "case-c";  // case-c, case-b, non-degenerate or custom
    std::vector<double> p1;
    std::vector<double> p2;
    double d_const = 1.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int count = 0;
    std::string eps = "auto";
    double delta = 0.5;
    std::string mode;
    std::string model = "pure_power";
    std::uint64_t seed = 0x5EED;
    int base_n = 4;
    int window_points = 21;
    double max_uv_points = 4e7;
    double max_dense_bytes = 2.5e9;
    double max_setup_flops = 2e13;
    double max_apply_flops = 5e10;
    double tol = 1e-9;
    int max_iter = 5000;
    std::string out = "out";
};

json to_json(const RunConfig& c) {
    return json{{"command", c.command},
                {"phase", c.phase},
                {"p1", c.p1},
                {"p2", c.p2},
                {"d_const", c.d_const},
                {"lambda_min", c.lambda_min},
                {"lambda_max", c.lambda_max},
                {"count", c.count},
                {"eps", c.eps},
                {"delta", c.delta},
                {"mode", c.mode},
                {"model", c.model},
                {"seed", c.seed},
                {"base_n", c.base_n},
                {"window_points", c.window_points},
                {"max_uv_points", c.max_uv_points},
                {"max_dense_bytes", c.max_dense_bytes},
                {"max_setup_flops", c.max_setup_flops},
                {"max_apply_flops", c.max_apply_flops},
                {"tol", c.tol},
                {"max_iter", c.max_iter},
                {"out", c.out}};
}

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) {
        try {
            dst = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config field '") + key + "': " + e.what());
        }
    }
}

void merge_config_file(const std::string& path, RunConfig& c) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("cannot parse config " + path + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ValidationError("config " + path + " must hold a JSON object");
    }
    if (j.contains("command") && j.at("command") != c.command) {
        throw ValidationError("config " + path + " was written by '" + j.at("command").get<std::string>() + "'");
    }
    take(j, "phase", c.phase);
    take(j, "p1", c.p1);
    take(j, "p2", c.p2);
    take(j, "d_const", c.d_const);
    take(j, "lambda_min", c.lambda_min);
    take(j, "lambda_max", c.lambda_max);
    take(j, "count", c.count);
    take(j, "eps", c.eps);
    take(j, "delta", c.delta);
    take(j, "mode", c.mode);
    take(j, "model", c.model);
    take(j, "seed", c.seed);
    take(j, "base_n", c.base_n);
    take(j, "window_points", c.window_points);
    take(j, "max_uv_points", c.max_uv_points);
    take(j, "max_dense_bytes", c.max_dense_bytes);
    take(j, "max_setup_flops", c.max_setup_flops);
    take(j, "max_apply_flops", c.max_apply_flops);
    take(j, "tol", c.tol);
    take(j, "max_iter", c.max_iter);
    take(j, "out", c.out);
}

LinearForm linear_from(const std::vector<double>& v) {
    if (v.size() != 2) throw ValidationError("--p1 takes two coefficients p,q");
    return {v[0], v[1]};
}

QuadraticForm quadratic_from(const std::vector<double>& v) {
    if (v.size() != 3) throw ValidationError("--p2 takes three coefficients alpha,beta,gamma");
    return {v[0], v[1], v[2]};
}

// Fills p1/p2 for named phases and returns the spec.
PhaseSpec resolve_phase(RunConfig& c) {
    if (c.phase == "case-c") {
        c.p1 = {1, 0};
        c.p2 = {0, 0, 1};
    } else if (c.phase == "case-b") {
        c.p1 = {1, 0};
        c.p2 = {1, 0, 0};
    } else if (c.phase == "non-degenerate") {
        c.p1 = {1, 0};
        c.p2 = {1, 0, -1};
    } else if (c.phase != "custom") {
        throw ValidationError("unknown phase '" + c.phase + "' (expected case-c, case-b, non-degenerate or custom)");
    }
    return make_phase(linear_from(c.p1), quadratic_from(c.p2)).with_d_const(c.d_const);
}

FitModel parse_model(const std::string& s) {
    if (s == "pure_power") return FitModel::PurePower;
    if (s == "power_with_log") return FitModel::PowerWithLog;
    throw ValidationError("unknown model '" + s + "' (expected pure_power or power_with_log)");
}

SweepConfig sweep_config(const RunConfig& c) {
    SweepConfig s;
    if (c.eps != "auto") {
        double e = 0.0;
        try {
            e = parse_double(c.eps);
        } catch (const Error&) {
            throw ValidationError("--eps takes 'auto' or a number");
        }
        if (!(e > 0.0 && e < 0.5)) throw ValidationError("eps must lie in (0, 1/2)");
        s.eps = e;
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
    if (c.base_n < 1) throw ValidationError("--base-n must be >= 1");
    if (c.window_points < 2) throw ValidationError("--window-points must be >= 2");
    if (!(c.tol > 0.0) || c.max_iter < 1) throw ValidationError("--tol must be > 0 and --max-iter >= 1");
    if (!(c.max_uv_points >= 1.0) || !(c.max_dense_bytes > 0.0) || !(c.max_setup_flops > 0.0) ||
        !(c.max_apply_flops > 0.0)) {
        throw ValidationError("caps must be positive");
    }
    s.delta = c.delta;
    s.seed = c.seed;
    s.witness.base_n = c.base_n;
    s.witness.window_points = c.window_points;
    s.witness.grid.max_points = static_cast<std::size_t>(c.max_uv_points);
    s.direct_max_points = static_cast<std::size_t>(c.max_uv_points);
    s.gram.max_dense_bytes = c.max_dense_bytes;
    s.gram.max_setup_flops = c.max_setup_flops;
    s.gram.max_apply_flops = c.max_apply_flops;
    s.power.tol = c.tol;
    s.power.max_iter = c.max_iter;
    s.power.seed = c.seed;
    return s;
}

void write_outputs_common(const RunConfig& c, const std::vector<SweepRow>& rows, const std::string& title,
                          json& report) {
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    write_text_file((fs::path(c.out) / "sweep.csv").string(), csv.str());

    std::optional<DecayFit> fit;
    std::string fit_error;
    try {
        fit = fit_power_law(rows, parse_model(c.model));
        report["fit"] = *fit;
        if (fit->model == FitModel::PowerWithLog) {
            report["pure_power"] = fit_power_law(rows, FitModel::PurePower);
        }
    } catch (const Error& e) {
        fit_error = e.what();
        report["fit_error"] = fit_error;
    }
    std::size_t ok = 0;
    for (const auto& r : rows) ok += r.ok ? 1 : 0;
    report["rows"] = rows.size();
    report["rows_ok"] = ok;
    write_text_file((fs::path(c.out) / "fit.json").string(), report.dump(2) + "\n");
    write_text_file((fs::path(c.out) / "decay.svg").string(), render_svg(rows, fit, title));
    std::cout << report.dump(2) << "\n";
    if (!fit) {
        throw NumericalError("fit failed: " + fit_error);
    }
}

void prepare_out(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw ValidationError("cannot create output directory " + c.out + ": " + ec.message());
    write_text_file((fs::path(c.out) / "run_config.json").string(), to_json(c).dump(2) + "\n");
}

std::vector<double> resolve_lambdas(const RunConfig& c) {
    const std::vector<double> l = geometric_lambdas(c.lambda_min, c.lambda_max, c.count);
    if (l.size() < 5) throw ValidationError("a sweep needs at least 5 lambda values (--count)");
    return l;
}

int cmd_classify(const RunConfig& c) {
    const PhaseSpec spec = make_phase(linear_from(c.p1), quadratic_from(c.p2));
    std::cout << json(spec).dump(2) << "\n";
    return 0;
}

int cmd_witness(RunConfig c) {
    const PhaseSpec spec = resolve_phase(c);
    const SweepMode mode = parse_sweep_mode(c.mode);
    if (mode == SweepMode::Opnorm) throw ValidationError("witness runs take mode rayleigh, norm_f, pointwise or image");
    parse_model(c.model);
    SweepConfig s = sweep_config(c);
    const auto lambdas = resolve_lambdas(c);
    if (c.eps == "auto") {
        s.eps = resolve_eps(s);
        c.eps = format_double(s.eps);
    }
    prepare_out(c);

    const auto wrows = witness_sweep(spec, lambdas, s);
    std::ostringstream wcsv;
    write_witness_csv(wcsv, wrows);
    write_text_file((fs::path(c.out) / "witness.csv").string(), wcsv.str());

    const auto rows = rows_from_witness(wrows, mode, s);
    json report{{"command", "witness"}, {"mode", to_string(mode)}, {"eps", s.eps}, {"delta", s.delta}};
    write_outputs_common(c, rows, std::string("witness ") + to_string(mode), report);
    return 0;
}

int cmd_norm(RunConfig c) {
    const PhaseSpec spec = resolve_phase(c);
    parse_model(c.model);
    const SweepConfig s = sweep_config(c);
    const auto lambdas = resolve_lambdas(c);
    prepare_out(c);
    const auto rows = sweep(spec, lambdas, SweepMode::Opnorm, s);
    json report{{"command", "norm"}, {"phase", json(spec)}};
    write_outputs_common(c, rows, "operator norm", report);
    return 0;
}

int fail(const char* kind, const std::string& msg, int code) {
    std::cerr << json{{"error", kind}, {"message", msg}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical decay-rate experiments for oscillatory integral operators"};
    app.require_subcommand(1);

    RunConfig ccfg, wcfg, ncfg;
    ccfg.command = "classify";
    wcfg.command = "witness";
    wcfg.lambda_min = 1e2;
    wcfg.lambda_max = 1e5;
    wcfg.count = 10;
    wcfg.mode = "rayleigh";
    ncfg.command = "norm";
    ncfg.lambda_min = 1e2;
    ncfg.lambda_max = 1e4;
    ncfg.count = 8;
    ncfg.mode = "opnorm";
    int threads = 0;
    std::string p1_text, p2_text, config_path;

    auto* classify = app.add_subcommand("classify", "classify (P1, P2) and print the normal-form reduction");
    classify->add_option("--p1", p1_text, "P1 coefficients p,q")->required();
    classify->add_option("--p2", p2_text, "P2 coefficients alpha,beta,gamma")->required();

    auto* witness = app.add_subcommand("witness", "witness chain sweep with f_lambda");
    auto* norm = app.add_subcommand("norm", "operator-norm sweep");
    for (auto* sub : {witness, norm}) {
        const bool is_norm = sub == norm;
        RunConfig& cfg = is_norm ? ncfg : wcfg;
        sub->add_option("--phase", cfg.phase, "case-c, case-b, non-degenerate or custom (with --p1/--p2)");
        sub->add_option("--p1", p1_text, "P1 coefficients p,q (implies --phase custom)");
        sub->add_option("--p2", p2_text, "P2 coefficients alpha,beta,gamma (implies --phase custom)");
        sub->add_option("--d-const", cfg.d_const, "overall phase scale D in (0, 1]");
        sub->add_option("--lambda-min", cfg.lambda_min, "smallest lambda");
        sub->add_option("--lambda-max", cfg.lambda_max, "largest lambda");
        sub->add_option("--count", cfg.count, "number of geometric lambda points");
        sub->add_option("--model", cfg.model, "pure_power or power_with_log");
        sub->add_option("--seed", cfg.seed, "power-iteration seed");
        sub->add_option("--threads", threads, "worker cap (default: OSCIDECAY_THREADS)");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--config", config_path, "run_config.json of an earlier run");
        sub->add_option("--max-uv-points", cfg.max_uv_points, "cap on (u,v) grid points");
        if (is_norm) {
            sub->add_option("--max-dense-bytes", cfg.max_dense_bytes, "memory cap of a dense normal operator");
            sub->add_option("--max-setup-flops", cfg.max_setup_flops, "setup work cap");
            sub->add_option("--max-apply-flops", cfg.max_apply_flops, "work cap per power-iteration step");
            sub->add_option("--tol", cfg.tol, "relative convergence tolerance");
            sub->add_option("--max-iter", cfg.max_iter, "power-iteration limit");
        } else {
            sub->add_option("--eps", cfg.eps, "window half-width, or auto to calibrate from delta");
            sub->add_option("--delta", cfg.delta, "phase-window tolerance used by auto calibration");
            sub->add_option("--mode", cfg.mode, "rayleigh, norm_f, pointwise or image");
            sub->add_option("--base-n", cfg.base_n, "GL order per uv panel");
            sub->add_option("--window-points", cfg.window_points, "window grid points per axis");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("validation", e.what(), kExitValidation);
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        RunConfig& cfg = sub == witness ? wcfg : (sub == norm ? ncfg : ccfg);
        // CLI11 has already written explicit flags into cfg; re-read them on
        // top of the config file so they win.
        if (!config_path.empty()) {
            RunConfig base = cfg;
            merge_config_file(config_path, base);
            for (const CLI::Option* opt : sub->get_options()) {
                if (opt->count() == 0 || opt->get_name() == "--config") continue;
                const std::string name = opt->get_name();
                const std::string val = opt->as<std::string>();
                if (name == "--phase") base.phase = val;
                else if (name == "--d-const") base.d_const = parse_double(val);
                else if (name == "--lambda-min") base.lambda_min = parse_double(val);
                else if (name == "--lambda-max") base.lambda_max = parse_double(val);
                else if (name == "--count") base.count = std::stoi(val);
                else if (name == "--model") base.model = val;
                else if (name == "--seed") base.seed = std::stoull(val);
                else if (name == "--out") base.out = val;
                else if (name == "--max-uv-points") base.max_uv_points = parse_double(val);
                else if (name == "--max-dense-bytes") base.max_dense_bytes = parse_double(val);
                else if (name == "--max-setup-flops") base.max_setup_flops = parse_double(val);
                else if (name == "--max-apply-flops") base.max_apply_flops = parse_double(val);
                else if (name == "--tol") base.tol = parse_double(val);
                else if (name == "--max-iter") base.max_iter = std::stoi(val);
                else if (name == "--eps") base.eps = val;
                else if (name == "--delta") base.delta = parse_double(val);
                else if (name == "--mode") base.mode = val;
                else if (name == "--base-n") base.base_n = std::stoi(val);
                else if (name == "--window-points") base.window_points = std::stoi(val);
            }
            cfg = base;
        }
        if (!p1_text.empty()) cfg.p1 = parse_number_list(p1_text);
        if (!p2_text.empty()) cfg.p2 = parse_number_list(p2_text);
        if (sub != classify && (!p1_text.empty() || !p2_text.empty())) {
            if (p1_text.empty() || p2_text.empty()) throw ValidationError("--p1 and --p2 go together");
            cfg.phase = "custom";
        }

        if (threads <= 0) {
            if (const char* env = std::getenv("OSCIDECAY_THREADS")) {
                try {
                    threads = std::stoi(env);
                } catch (const std::exception&) {
                    throw ValidationError("OSCIDECAY_THREADS must be an integer");
                }
            }
        }
        set_threads(threads);

        if (sub == classify) return cmd_classify(cfg);
        if (sub == witness) return cmd_witness(cfg);
        return cmd_norm(cfg);
    } catch (const ValidationError& e) {
        return fail("validation", e.what(), kExitValidation);
    } catch (const NonConvergenceError& e) {
        return fail("non_convergence", e.what(), kExitNumerical);
    } catch (const NumericalError& e) {
        return fail("numerical", e.what(), kExitNumerical);
    } catch (const std::exception& e) {
        return fail("validation", e.what(), kExitValidation);
    }
}
