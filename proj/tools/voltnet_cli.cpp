#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voltnet/harness.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int paths = 0;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config, "sectioned key=value config file");
    sub->add_option("--seed", flags.seed, "master seed (u64)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--paths", flags.paths, "Monte Carlo path / replica count");
    sub->add_option("--threads", flags.threads, "worker thread count");
    sub->allow_extras();  // any config key doubles as --section.key <value>
}

// remaining tokens are per-key overrides: --section.key value | --section.key=value
void apply_extras(voltnet::RunConfig& cfg, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok.rfind("--", 0) != 0)
            throw std::invalid_argument("unexpected argument '" + tok + "'");
        std::string key = tok.substr(2);
        std::string value;
        auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (++i == extras.size())
                throw std::invalid_argument("missing value for '" + tok + "'");
            value = extras[i];
        }
        voltnet::apply_key(cfg, key, value);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regime-switching Volterra network dynamics"};
    app.require_subcommand(1);

    struct Driver {
        const char* id;
        const char* help;
    };
    const Driver drivers[] = {
        {"exp1", "two-regime switching: burst records and size CCDF"},
        {"exp2", "memory-parameter sweep over (alpha, theta)"},
        {"exp3", "switching-rate phase diagram"},
        {"phase", "alias of exp3"},
        {"exp4", "commuting vs noncommuting excitation comparison"},
        {"exp5", "graph topology and size sweep"},
        {"exp6", "Hawkes micro-macro convergence study"},
        {"kernel-fit", "fit and certify the SOE kernel surrogates"},
        {"simulate", "single trajectory with Lyapunov tracking"},
        {"hawkes-validate", "one-environment Hawkes validation run"},
    };

    CommonFlags flags;
    std::vector<CLI::App*> subs;
    for (const Driver& d : drivers) {
        CLI::App* sub = app.add_subcommand(d.id, d.help);
        add_common(sub, flags);
        subs.push_back(sub);
    }
    CLI::App* report = app.add_subcommand("report", "aggregate a finished run into report.csv");
    std::string report_dir;
    report->add_option("--out", report_dir, "run directory to aggregate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            voltnet::emit_report(report_dir);
            std::printf("%s/report.csv\n", report_dir.c_str());
            return 0;
        }
        for (std::size_t i = 0; i < subs.size(); ++i) {
            CLI::App* sub = subs[i];
            if (!sub->parsed()) continue;
            voltnet::RunConfig cfg;
            if (sub->count("--config")) voltnet::load_config_file(cfg, flags.config);
            if (sub->count("--seed")) cfg.seed = flags.seed;
            if (sub->count("--out")) cfg.out = flags.out;
            if (sub->count("--paths")) cfg.paths = flags.paths;
            if (sub->count("--threads")) cfg.threads = flags.threads;
            apply_extras(cfg, sub->remaining());
            std::string dir = voltnet::run_experiment(drivers[i].id, cfg);
            std::printf("%s\n", dir.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
