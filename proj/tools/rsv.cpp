// Command-line driver: run, sweep, fit, constants, certify.
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rsv/run.hpp"

namespace {

std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

void print_summary(const rsv::RunResult& r)
{
    nlohmann::json j = rsv::to_json(r.verdict);
    j["steps"] = r.steps;
    j["max_energy_drift"] = r.max_energy_drift;
    j["max_mass_drift"] = r.max_mass_drift;
    j["output_dir"] = r.config.output_dir;
    if (r.profile) {
        j["exponent"] = r.profile->exponent;
    }
    std::cout << j.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"regularized Saint-Venant numerical laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string resume_path;
    std::string output_dir;
    auto* run_cmd = app.add_subcommand("run", "simulate one configuration");
    run_cmd->add_option("-c,--config", config_path, "JSON config")->required();
    run_cmd->add_option("--resume", resume_path, "continue from a checkpoint file");
    run_cmd->add_option("-o,--output-dir", output_dir, "override output_dir");

    std::string axis;
    std::string values;
    auto* sweep_cmd = app.add_subcommand("sweep", "run a one-parameter sweep");
    sweep_cmd->add_option("-c,--config", config_path, "base JSON config")->required();
    sweep_cmd->add_option("--axis", axis, "delta | epsilon | n_points | cfl_number")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required();

    std::string run_dir;
    double t_fraction = 0;
    auto* fit_cmd = app.add_subcommand("fit", "refit the blow-up profile of a finished run");
    fit_cmd->add_option("--run-dir", run_dir, "output directory of a run")->required();
    fit_cmd->add_option("--t-fraction", t_fraction, "fit time as a fraction of t_blowup");

    double g = 1, eps = 1, h_star = 1;
    auto* const_cmd = app.add_subcommand("constants", "print the constants ledger");
    const_cmd->add_option("-g", g, "gravity");
    const_cmd->add_option("-e,--epsilon", eps, "regularization");
    const_cmd->add_option("--h-star", h_star, "reference depth");

    auto* cert_cmd = app.add_subcommand("certify", "check the blow-up hypotheses on initial data");
    cert_cmd->add_option("-c,--config", config_path, "JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            rsv::RunConfig cfg = rsv::load_config(config_path);
            if (!output_dir.empty()) {
                cfg.output_dir = output_dir;
            }
            auto const result = resume_path.empty() ? rsv::run(cfg)
                                                    : rsv::Runner::resume(resume_path, cfg).run();
            print_summary(result);
        } else if (*sweep_cmd) {
            rsv::RunConfig const cfg = rsv::load_config(config_path);
            auto const rows = rsv::sweep(cfg, rsv::sweep_axis(axis), parse_values(values));
            for (auto const& r : rows) {
                std::cout << rsv::format_double(r.value) << "  "
                          << (r.ok ? r.mode : "error: " + r.error) << "  t_blowup "
                          << rsv::format_double(r.t_blowup) << "  slope "
                          << rsv::format_double(r.slope_fit) << "  exponent "
                          << rsv::format_double(r.exponent) << "  drift "
                          << rsv::format_double(r.max_energy_drift) << "\n";
            }
        } else if (*fit_cmd) {
            namespace fs = std::filesystem;
            rsv::RunConfig const cfg = rsv::load_config((fs::path(run_dir) / "config.json").string());
            std::ifstream vin(fs::path(run_dir) / "verdict.json");
            if (!vin) {
                throw rsv::Error(rsv::ErrorCode::io_error, "no verdict.json in " + run_dir);
            }
            auto const verdict = nlohmann::json::parse(vin);
            if (verdict.at("mode") != "P_plus_blowup") {
                throw rsv::Error(rsv::ErrorCode::no_blowup_detected,
                                 "run verdict is " + verdict.at("mode").get<std::string>());
            }
            double const frac = t_fraction > 0 ? t_fraction : cfg.fit_time_fraction;
            double const t_fit = frac * verdict.at("t_blowup_extrapolated").get<double>();
            rsv::State const s = rsv::replay_to(cfg, {rsv::initial_state(cfg)}, t_fit);
            auto const fit = rsv::fit_profile(s, cfg.params, cfg.grid(), cfg.profile_window);
            rsv::detail::write_text(fs::path(run_dir) / "profile.json",
                                    rsv::to_json(fit).dump(2) + "\n");
            nlohmann::json j = rsv::to_json(fit);
            j.erase("distance");
            j.erase("magnitude");
            std::cout << j.dump(2) << "\n";
        } else if (*const_cmd) {
            rsv::Params p;
            p.g = g;
            p.epsilon = eps;
            p.h_star = h_star;
            p.validate();
            auto const L = rsv::constants_ledger(p);
            nlohmann::json j = rsv::to_json(L);
            nlohmann::json checks = nlohmann::json::array();
            for (auto const& c : rsv::ledger_inequalities(L, p)) {
                checks.push_back({{"inequality", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
            }
            j["inequalities"] = checks;
            std::cout << j.dump(2) << "\n";
        } else if (*cert_cmd) {
            rsv::RunConfig const cfg = rsv::load_config(config_path);
            auto const rep =
                rsv::certify_hypotheses(rsv::initial_state(cfg), cfg.params, cfg.grid());
            nlohmann::json j = rsv::to_json(rep);
            j["constants"] = rsv::to_json(rep.ledger);
            std::cout << j.dump(2) << "\n";
        }
    } catch (const rsv::Error& e) {
        std::cerr << "rsv: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rsv: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
