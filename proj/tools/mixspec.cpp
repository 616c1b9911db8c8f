// Command-line front end: kernel values, variance theory, Monte Carlo campaigns,
// approximation sweeps and the DoA study, driven by JSON configs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixspec/mixspec.hpp"

namespace fs = std::filesystem;
using namespace mixspec;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct RunContext {
    std::string command;
    std::string config_path;
    std::string config_text;
    fs::path out_dir;
    std::optional<std::uint64_t> seed_override;
    unsigned workers = 1;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_config(RunContext& ctx) {
    ctx.config_text = read_file(ctx.config_path);
    try {
        return json::parse(ctx.config_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ctx.config_path + ": malformed JSON: " + e.what());
    }
}

std::ofstream open_output(RunContext& ctx, const std::string& name) {
    fs::create_directories(ctx.out_dir);
    const fs::path p = ctx.out_dir / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    ctx.outputs.push_back(name);
    return os;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_manifest(RunContext& ctx, std::uint64_t seed) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
    json m{{"command", ctx.command},
           {"config", ctx.config_path},
           {"config_hash", "fnv1a64:" + hex64(fnv1a(ctx.config_text))},
           {"master_seed", seed},
           {"workers", ctx.workers},
           {"tool_version", kVersion},
           {"wall_time_s", wall},
           {"outputs", ctx.outputs}};
    fs::create_directories(ctx.out_dir);
    std::ofstream os(ctx.out_dir / "manifest.json", std::ios::binary);
    os << m.dump(2) << '\n';
}

std::string law_name(const AmplitudeLaw& l) {
    if (l.kind == AmplitudeKind::two_point) return "two_point_" + format_double(l.kurtosis);
    return to_string(l.kind);
}

int cmd_kernel(std::optional<double> gamma, std::optional<double> theta, std::optional<double> T,
               std::optional<double> tail_tol) {
    if (gamma) {
        if (theta || T) throw ConfigError("give either --gamma or --theta with --T");
        const ResolutionProduct g(*gamma);
        const double r = rho(g);
        std::cout << "{\"rho\":" << format_double(r) << ",\"factor_fixed\":" << format_double(r)
                  << ",\"factor_gauss\":" << format_double(g.value() + r);
        if (tail_tol) std::cout << ",\"kernel_sum\":" << format_double(sampled_kernel_sum(g, *tail_tol));
        std::cout << "}\n";
        return 0;
    }
    if (theta && T) {
        std::cout << format_double(fejer(*theta, Duration(*T))) << '\n';
        return 0;
    }
    throw ConfigError("kernel needs --gamma, or --theta together with --T");
}

int cmd_theory(RunContext& ctx) {
    const TheoryConfig c = theory_config_from_json(load_config(ctx));
    auto os = open_output(ctx, "theory.csv");
    os << "T,theory_finite,theory_asymptotic,theory_limit\n";
    json reports = json::array();
    for (double Tv : c.T_grid) {
        const Duration T(Tv);
        VarianceReport r;
        if (c.scenario == Scenario::autocov) {
            r = {autocov_variance(c.x, T), std::numeric_limits<double>::quiet_NaN(), autocov_variance_limit(c.x), Tv};
            try {
                r.asymptotic_surrogate = autocov_variance_asymptotic(c.x, T);
            } catch (const InvalidArgument&) {
            }
        } else {
            r = {crosscov_variance(c.x, *c.y, T), std::numeric_limits<double>::quiet_NaN(),
                 crosscov_variance_limit(c.x, *c.y), Tv};
            try {
                r.asymptotic_surrogate = crosscov_variance_asymptotic(c.x, *c.y, T);
            } catch (const InvalidArgument&) {
            }
        }
        os << format_double(r.T) << ',' << format_double(r.finite_sample) << ',' << format_double(r.asymptotic_surrogate)
           << ',' << format_double(r.limit) << '\n';
        json jr = report_to_json(r);
        if (std::isnan(r.asymptotic_surrogate)) jr["asymptotic_surrogate"] = nullptr;
        reports.push_back(jr);
    }
    auto js = open_output(ctx, "theory.json");
    js << reports.dump(2) << '\n';
    write_manifest(ctx, 0);
    return 0;
}

int cmd_montecarlo(RunContext& ctx) {
    const json raw = load_config(ctx);
    MonteCarloConfig c = montecarlo_config_from_json(raw);
    const std::uint64_t seed = ctx.seed_override.value_or(c.seed);
    for (auto& mc : c.cases) {
        mc.campaign.master_seed = seed;
        mc.campaign.workers = ctx.workers;
        const CampaignResult r = mc.campaign.scenario == Scenario::autocov ? run_autocov_campaign(mc.campaign)
                                                                           : run_crosscov_campaign(mc.campaign);
        auto os = open_output(ctx, mc.name + ".csv");
        write_campaign_csv(os, r);
        json side{{"case", mc.name}, {"master_seed", seed}, {"config", raw}};
        auto js = open_output(ctx, mc.name + ".json");
        js << side.dump(2) << '\n';
    }
    write_manifest(ctx, seed);
    return 0;
}

int cmd_approx(RunContext& ctx) {
    const ApproxConfig c = approx_config_from_json(load_config(ctx));
    const std::uint64_t seed = ctx.seed_override.value_or(c.seed);
    if (c.rule) {
        const double B = c.density->band().bandwidth;
        std::vector<double> gammas;
        if (c.rule->kind == ApproxRule::Kind::fixed_n)
            for (double T : c.grid) gammas.push_back(T * B / c.rule->value);
        else
            gammas = c.grid;
        for (const auto& law : c.laws) {
            ApproxSweep s{*c.density, law, gammas, *c.rule, c.trials, seed, ctx.workers};
            auto os = open_output(ctx, "approx_" + law_name(law) + ".csv");
            write_campaign_csv(os, run_approx_sweep(s));
        }
        const MixedSpectrum dens = MixedSpectrum::density_only(*c.density);
        auto ref = open_output(ctx, "density_reference.csv");
        ref << "T,gamma,theory_finite,theory_asymptotic\n";
        for (double g : gammas) {
            const ApproxPoint pt = approx_point(B, g, *c.rule);
            const Duration T(pt.T);
            ref << format_double(pt.T) << ',' << format_double(g) << ',' << format_double(autocov_variance(dens, T))
                << ',' << format_double(autocov_variance_asymptotic(dens, T)) << '\n';
        }
        auto fac = open_output(ctx, "factors.csv");
        fac << "gamma,rho,factor_fixed,factor_gauss\n";
        for (double g : gammas) {
            const double r = rho(g);
            fac << format_double(g) << ',' << format_double(r) << ',' << format_double(r) << ','
                << format_double(g + r) << '\n';
        }
    }
    if (c.surface_bandwidth) {
        auto os = open_output(ctx, "factor_surface.csv");
        os << "n,T,gamma,factor_fixed,factor_gauss\n";
        for (double n : c.surface_n)
            for (double T : c.surface_T) {
                const double g = T * *c.surface_bandwidth / n;
                const double r = rho(g);
                os << format_double(n) << ',' << format_double(T) << ',' << format_double(g) << ',' << format_double(r)
                   << ',' << format_double(g + r) << '\n';
            }
    }
    write_manifest(ctx, seed);
    return 0;
}

int cmd_doa(RunContext& ctx) {
    DoaConfig c = doa_config_from_json(load_config(ctx));
    if (ctx.seed_override) c.master_seed = *ctx.seed_override;
    c.workers = ctx.workers;
    const DoaResult r = doa_mse_experiment(c);
    auto os = open_output(ctx, "doa.csv");
    write_doa_csv(os, r);
    auto sum = open_output(ctx, "doa_summary.csv");
    sum << "gamma,law,n,snapshots,peak_mse_normalized\n";
    for (const auto& cv : r.curves)
        sum << format_double(cv.gamma) << ',' << cv.law << ',' << cv.n << ',' << cv.snapshots << ','
            << format_double(cv.peak_normalized) << '\n';
    write_manifest(ctx, c.master_seed);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance of covariance estimates for mixed spectra"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::optional<double> gamma, theta, T, tail_tol;
    auto* kernel = app.add_subcommand("kernel", "Fejer kernel value or resolution-product factors");
    kernel->add_option("--gamma", gamma, "Resolution product T B / n");
    kernel->add_option("--theta", theta, "Frequency argument");
    kernel->add_option("--T", T, "Averaging time");
    kernel->add_option("--tail-tol", tail_tol, "Also print the sampled kernel sum to this tail tolerance");

    RunContext ctx;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("--config", ctx.config_path, "JSON config")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Master seed, overrides the config");
        sub->add_option("--workers", ctx.workers, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto* theory = app.add_subcommand("theory", "Theoretical variance over a T grid");
    auto* montecarlo = app.add_subcommand("montecarlo", "Monte Carlo campaigns");
    auto* approx = app.add_subcommand("approx", "Approximation sweeps and factor surfaces");
    auto* doa = app.add_subcommand("doa", "DoA mean-squared-error study");
    for (auto* sub : {theory, montecarlo, approx, doa}) add_run_options(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (kernel->parsed()) return cmd_kernel(gamma, theta, T, tail_tol);
        ctx.out_dir = out_dir;
        for (auto* sub : {theory, montecarlo, approx, doa})
            if (sub->parsed()) {
                ctx.command = sub->get_name();
                if (sub->count("--seed") > 0) ctx.seed_override = seed;
            }
        if (theory->parsed()) return cmd_theory(ctx);
        if (montecarlo->parsed()) return cmd_montecarlo(ctx);
        if (approx->parsed()) return cmd_approx(ctx);
        if (doa->parsed()) return cmd_doa(ctx);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
