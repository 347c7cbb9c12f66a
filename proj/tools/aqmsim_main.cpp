#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "aqmsim/reports.hpp"
#include "aqmsim/scenario.hpp"
#include "aqmsim/sim.hpp"

namespace fs = std::filesystem;
using namespace aqmsim;

namespace {

enum class Report : unsigned {
    Trace = 1u << 0,
    LagMatrix = 1u << 1,
    IdleTail = 1u << 2,
    MarkSpacing = 1u << 3,
    ErrorStats = 1u << 4,
};

struct Job {
    fs::path scenario_path;
    fs::path out_dir;
    Scenario scenario;
};

struct JobResult {
    std::string stdout_text;
    std::string error_text;
    int exit_code = 0;
};

std::optional<unsigned> parse_reports(const std::vector<std::string>& args, std::string& bad) {
    unsigned mask = 0;
    for (const auto& arg : args) {
        std::stringstream ss(arg);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (name.empty()) continue;
            if (name == "Trace") mask |= static_cast<unsigned>(Report::Trace);
            else if (name == "LagMatrix") mask |= static_cast<unsigned>(Report::LagMatrix);
            else if (name == "IdleTail") mask |= static_cast<unsigned>(Report::IdleTail);
            else if (name == "MarkSpacing") mask |= static_cast<unsigned>(Report::MarkSpacing);
            else if (name == "ErrorStats") mask |= static_cast<unsigned>(Report::ErrorStats);
            else {
                bad = name;
                return std::nullopt;
            }
        }
    }
    if (mask == 0) mask = static_cast<unsigned>(Report::Trace);
    return mask;
}

bool write_file(const fs::path& path, const std::string& content, std::string& err) {
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.flush();
    if (!f) {
        err = "cannot write " + path.string();
        return false;
    }
    return true;
}

// The threshold the idle-tail report compares the estimator against: the
// configured controller's own delay target.
TimeNs tail_target(const Scenario& sc) {
    switch (sc.aqm.algorithm) {
        case AqmAlgorithm::Codel: return sc.aqm.codel_target;
        case AqmAlgorithm::Ramp: return sc.aqm.ramp_max_th;
        default: return sc.aqm.pi_target;
    }
}

JobResult run_job(const Job& job, unsigned reports) {
    JobResult res;
    std::error_code ec;
    fs::create_directories(job.out_dir, ec);
    if (ec) {
        res.error_text = "cannot create " + job.out_dir.string() + ": " + ec.message();
        res.exit_code = 2;
        return res;
    }

    const RunResult rr = run(job.scenario);
    std::string werr;

    if (reports & static_cast<unsigned>(Report::Trace)) {
        if (!write_file(job.out_dir / "trace.csv", trace_csv(rr.records), werr)) {
            res.error_text = werr;
            res.exit_code = 2;
            return res;
        }
    }
    if (reports & static_cast<unsigned>(Report::LagMatrix)) {
        TimeNs t_onset = 0;
        if (const auto* s = std::get_if<DrainStep>(&job.scenario.drain)) t_onset = s->t_step;
        const LagMatrix m = lag_matrix(rr.records, job.scenario.report_threshold, t_onset,
                                       job.scenario.min_window_packets);
        if (!write_file(job.out_dir / "lag_matrix.csv", lag_matrix_csv(m), werr)) {
            res.error_text = werr;
            res.exit_code = 2;
            return res;
        }
        res.stdout_text += job.scenario_path.string() + ":\n" + lag_matrix_table(m);
    }
    if (reports & static_cast<unsigned>(Report::IdleTail)) {
        const std::string csv = idle_tail_csv(rr.records, rr.totals, tail_target(job.scenario),
                                              job.scenario.estimator);
        if (!write_file(job.out_dir / "idle_tail.csv", csv, werr)) {
            res.error_text = werr;
            res.exit_code = 2;
            return res;
        }
    }
    if (reports & static_cast<unsigned>(Report::MarkSpacing)) {
        if (!write_file(job.out_dir / "mark_spacing.csv", mark_spacing_csv(rr.records), werr)) {
            res.error_text = werr;
            res.exit_code = 2;
            return res;
        }
    }
    if (reports & static_cast<unsigned>(Report::ErrorStats)) {
        if (!write_file(job.out_dir / "error_stats.csv", error_stats_csv(rr.records), werr)) {
            res.error_text = werr;
            res.exit_code = 2;
            return res;
        }
    }
    return res;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"queue-delay measurement simulator"};
    app.require_subcommand(1);

    auto* cmd = app.add_subcommand("run", "run one or more scenario files");
    std::vector<std::string> scenario_files;
    std::string out_dir = ".";
    std::vector<std::string> report_args;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;

    cmd->add_option("scenarios", scenario_files, "scenario file(s)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--report", report_args,
                    "reports to emit: Trace,LagMatrix,IdleTail,MarkSpacing,ErrorStats");
    cmd->add_option("--set", overrides, "override a scenario key (key=value, repeatable)");
    cmd->add_option("--seed", seed, "override the scenario seed");
    cmd->add_option("--jobs", jobs, "run scenarios in parallel")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    std::string bad_report;
    const auto reports = parse_reports(report_args, bad_report);
    if (!reports) {
        std::cerr << "unknown report: " << bad_report << "\n";
        return 1;
    }

    std::vector<Job> all;
    for (const auto& file : scenario_files) {
        std::ifstream f(file, std::ios::binary);
        std::stringstream buf;
        buf << f.rdbuf();
        if (!f) {
            std::cerr << file << ": cannot read\n";
            return 2;
        }
        auto parsed = parse_scenario(buf.str());
        if (auto* err = std::get_if<ConfigError>(&parsed)) {
            std::cerr << file << ":" << err->line << ": " << err->key << ": " << err->message
                      << "\n";
            return 1;
        }
        Job job;
        job.scenario_path = file;
        job.scenario = std::get<Scenario>(parsed);
        for (const auto& pair : overrides) {
            if (auto err = apply_override(job.scenario, pair)) {
                std::cerr << file << ": --set " << pair << ": " << err->key << ": "
                          << err->message << "\n";
                return 1;
            }
        }
        if (seed) job.scenario.seed = *seed;
        job.out_dir = scenario_files.size() == 1
                          ? fs::path(out_dir)
                          : fs::path(out_dir) / fs::path(file).stem();
        all.push_back(std::move(job));
    }

    std::vector<JobResult> results(all.size());
    if (jobs <= 1 || all.size() <= 1) {
        for (std::size_t i = 0; i < all.size(); ++i) results[i] = run_job(all[i], *reports);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < all.size(); i += jobs)
                    results[i] = run_job(all[i], *reports);
            });
        }
        for (auto& t : pool) t.join();
    }

    int exit_code = 0;
    for (const auto& res : results) {
        if (!res.stdout_text.empty()) std::cout << res.stdout_text;
        if (!res.error_text.empty()) std::cerr << res.error_text << "\n";
        if (res.exit_code != 0 && exit_code == 0) exit_code = res.exit_code;
    }
    return exit_code;
}
